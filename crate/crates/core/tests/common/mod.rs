#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ldrp_core::{resize, DistanceKind, GrayImage, SamplingMode};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Uniform noise image.
pub fn noise_image<R: Rng>(rng: &mut R, width: usize, height: usize, levels: u16) -> GrayImage {
    GrayImage::from_fn(width, height, |_, _| rng.random_range(0..levels) as u8)
}

/// Coarse random grid upsampled to `width x height`, plus a little noise.
pub fn smooth_image<R: Rng>(rng: &mut R, width: usize, height: usize, levels: u16) -> GrayImage {
    let coarse = GrayImage::from_fn(6, 6, |_, _| rng.random_range(0..levels) as u8);
    let up = resize(&coarse, width, height).unwrap();
    let jitter = Normal::new(0.0, 3.0).unwrap();
    let max = f64::from(levels - 1);
    GrayImage::from_fn(width, height, |r, c| {
        (f64::from(up.get(r, c)) + jitter.sample(rng))
            .round()
            .clamp(0.0, max) as u8
    })
}

/// `template` with additive Gaussian noise of deviation `sigma`.
pub fn noised<R: Rng>(template: &GrayImage, rng: &mut R, sigma: f64) -> GrayImage {
    let noise = Normal::new(0.0, sigma).unwrap();
    GrayImage::from_fn(template.width(), template.height(), |r, c| {
        (f64::from(template.get(r, c)) + noise.sample(rng))
            .round()
            .clamp(0.0, 255.0) as u8
    })
}

/// `subjects` templates with `per_subject` noised copies each, labels `0..subjects`.
pub fn synthetic_corpus<R: Rng>(
    rng: &mut R,
    subjects: u32,
    per_subject: usize,
    side: usize,
    sigma: f64,
) -> Vec<(u32, GrayImage)> {
    let mut out = Vec::new();
    for label in 0..subjects {
        let template = smooth_image(rng, side, side, 256);
        for _ in 0..per_subject {
            out.push((label, noised(&template, rng, sigma)));
        }
    }
    out
}

/// AT&T face corpus: `LDRP_ATT_ROOT`, or `data/att` at the workspace root.
pub fn att_root() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("LDRP_ATT_ROOT") {
        let p = PathBuf::from(p);
        return p.is_dir().then_some(p);
    }
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/att");
    p.is_dir().then_some(p)
}

/// Straightforward per-pixel LDRP reference.
///
/// Coordinates follow the 1-based `(i, j)` convention, neighbor positions are
/// recomputed from scratch for every pixel and no lookup table is used.
pub mod oracle {
    use super::*;

    fn snap(v: f64) -> f64 {
        let r = v.round();
        if (v - r).abs() < 1e-9 {
            r
        } else {
            v
        }
    }

    fn pixel(image: &GrayImage, i: i64, j: i64) -> f64 {
        assert!(i >= 1 && j >= 1 && i <= image.height() as i64 && j <= image.width() as i64);
        f64::from(image.get(i as usize - 1, j as usize - 1))
    }

    /// Intensity of the neighbor at radius `r`, direction `k` of `N`, around 1-based `(i, j)`.
    pub fn neighbor(
        image: &GrayImage,
        i: usize,
        j: usize,
        r: u32,
        k: u32,
        n: u32,
        mode: SamplingMode,
    ) -> f64 {
        let theta = 2.0 * PI * f64::from(k - 1) / f64::from(n);
        let dx = snap(f64::from(r) * theta.cos());
        let dy = snap(-f64::from(r) * theta.sin());
        match mode {
            SamplingMode::RoundNearest => pixel(
                image,
                i as i64 + dy.round() as i64,
                j as i64 + dx.round() as i64,
            ),
            SamplingMode::Bilinear => {
                let (y0, x0) = (dy.floor(), dx.floor());
                let (fy, fx) = (dy - y0, dx - x0);
                let (i0, j0) = (i as i64 + y0 as i64, j as i64 + x0 as i64);
                let row = |ii: i64| {
                    let a = pixel(image, ii, j0);
                    if fx == 0.0 {
                        a
                    } else {
                        a + fx * (pixel(image, ii, j0 + 1) - a)
                    }
                };
                let top = row(i0);
                if fy == 0.0 {
                    top
                } else {
                    top + fy * (row(i0 + 1) - top)
                }
            }
        }
    }

    /// 1-based position of the pair `(r1, r2)` among the `M(M-1)/2` pairs.
    pub fn pair_position(r1: u32, r2: u32, m: u32) -> u32 {
        let mut t = r2 - r1;
        for eta in 1..r1 {
            t += m - eta;
        }
        t
    }

    /// `β` bits of direction `k`, index `t - 1` holding `β(t)`.
    pub fn bits(
        image: &GrayImage,
        i: usize,
        j: usize,
        k: u32,
        n: u32,
        m: u32,
        mode: SamplingMode,
    ) -> Vec<bool> {
        let mut beta = vec![false; (m * (m - 1) / 2) as usize];
        for r1 in 1..m {
            for r2 in r1 + 1..=m {
                let t = pair_position(r1, r2, m) as usize;
                beta[t - 1] =
                    neighbor(image, i, j, r1, k, n, mode) <= neighbor(image, i, j, r2, k, n, mode);
            }
        }
        beta
    }

    pub fn gamma(beta: &[bool]) -> u64 {
        let mut g = 0u64;
        for (eta, &b) in beta.iter().enumerate() {
            if b {
                g += 1u64 << eta;
            }
        }
        g
    }

    pub fn tau(center: u16, m: u32, bit_depth: u8) -> u64 {
        let pairs = m * (m - 1) / 2;
        let num = u128::from(center) * ((1u128 << pairs) - 1);
        (num / ((1u128 << bit_depth) - 1)) as u64
    }

    pub fn code(
        image: &GrayImage,
        i: usize,
        j: usize,
        n: u32,
        m: u32,
        mode: SamplingMode,
    ) -> usize {
        let center = image.get(i - 1, j - 1);
        let tau = tau(center, m, image.bit_depth());
        let mut code = 0usize;
        for k in 1..=n {
            if gamma(&bits(image, i, j, k, n, m, mode)) >= tau {
                code += 1 << (k - 1);
            }
        }
        code
    }

    /// Histogram over `i in [M+1, X-M]`, `j in [M+1, Y-M]`.
    pub fn scale_histogram(image: &GrayImage, n: u32, m: u32, mode: SamplingMode) -> Vec<u64> {
        let (x, y) = (image.height(), image.width());
        let mu = m as usize;
        let mut hist = vec![0u64; 1 << n];
        for i in mu + 1..=x - mu {
            for j in mu + 1..=y - mu {
                hist[code(image, i, j, n, m, mode)] += 1;
            }
        }
        hist
    }

    /// Concatenation of `histograms` divided by its grand total.
    pub fn normalize_concat(histograms: &[Vec<u64>]) -> Vec<f64> {
        let total = histograms.iter().flatten().sum::<u64>() as f64;
        histograms
            .iter()
            .flatten()
            .map(|&c| c as f64 / total)
            .collect()
    }
}

/// Retrieval metrics recomputed from a full distance matrix.
pub mod brute {
    use super::*;
    use ldrp_core::distance;

    pub fn distance_matrix(vectors: &[Vec<f64>], kind: DistanceKind) -> Vec<Vec<f64>> {
        vectors
            .iter()
            .map(|q| {
                vectors
                    .iter()
                    .map(|t| distance(q, t, kind).unwrap())
                    .collect()
            })
            .collect()
    }

    /// 1-based rank of item `j` for query row `d`: strictly closer items, then
    /// equally distant items stored earlier, come first.
    pub fn rank(d: &[f64], j: usize) -> usize {
        let closer = d.iter().filter(|&&x| x < d[j]).count();
        let tied_before = d[..j].iter().filter(|&&x| x == d[j]).count();
        1 + closer + tied_before
    }

    pub struct Metrics {
        pub arp: f64,
        pub arr: f64,
        pub anmrr: f64,
    }

    pub fn metrics(matrix: &[Vec<f64>], labels: &[u32], n: usize) -> Metrics {
        let mut categories: Vec<u32> = labels.to_vec();
        categories.sort_unstable();
        categories.dedup();
        let (mut arp, mut arr, mut anmrr) = (0.0, 0.0, 0.0);
        for &c in &categories {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            let ng = members.len();
            let (mut p, mut r) = (0.0, 0.0);
            for &q in &members {
                let ranks: Vec<usize> = members.iter().map(|&j| rank(&matrix[q], j)).collect();
                let hits = ranks.iter().filter(|&&x| x <= n).count() as f64;
                p += hits / n as f64;
                r += hits / ng as f64;

                let k = n as f64;
                let avr = ranks
                    .iter()
                    .map(|&x| if x <= n { x as f64 } else { 1.25 * k })
                    .sum::<f64>()
                    / ng as f64;
                let mrr = avr - 0.5 - ng as f64 / 2.0;
                let den = 1.25 * k - 0.5 - ng as f64 / 2.0;
                anmrr += if den > 0.0 {
                    (mrr / den).clamp(0.0, 1.0)
                } else if mrr > 0.0 {
                    1.0
                } else {
                    0.0
                };
            }
            arp += p / ng as f64;
            arr += r / ng as f64;
        }
        let c = categories.len() as f64;
        Metrics {
            arp: arp / c,
            arr: arr / c,
            anmrr: anmrr / labels.len() as f64,
        }
    }
}
