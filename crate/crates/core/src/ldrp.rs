//! Local directional relation pattern (LDRP).
//!
//! For every pixel and each of `N` directions, the `M` neighbors along the ray
//! are compared pairwise (`near <= far` gives a 1 bit), yielding a directional
//! code `Γ` in `[0, 2^μ)` with `μ = M(M-1)/2`. The center intensity is rescaled
//! into the same range (`τ`), and direction `k` contributes bit `k-1` of the final
//! pattern when `Γ_k >= τ`. Histograms of the pattern over the interior pixels
//! are concatenated for scales `M1..=M2` and normalized to unit mass.
//!
//! The per-operation functions ([`pair_index`], [`directional_bits`],
//! [`directional_code`], [`transform_center`], [`ldrp_code`]) mirror the
//! definitions one pixel at a time. [`scale_histogram`] and
//! [`multiscale_descriptor`] use precomputed sampling tables instead.

use std::ops::RangeInclusive;

use thiserror::Error;

use crate::pixel_grid::{
    lerp, neighbor_offset, sample_neighbor, GrayImage, GridError, SamplingMode,
};

/// Largest supported scale; `μ(11) = 55` keeps `Γ` inside a `u64`.
pub const MAX_SCALE: u32 = 11;
/// Largest supported direction count; histograms hold `2^N` bins.
pub const MAX_DIRECTIONS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("image is {width}x{height} but scale {scale} needs at least {min}x{min} pixels")]
    ImageTooSmall {
        width: usize,
        height: usize,
        scale: u32,
        min: usize,
    },
    #[error("pixel ({row}, {col}) is closer than {margin} pixels to the image border")]
    Border {
        row: usize,
        col: usize,
        margin: usize,
    },
    #[error("image bit depth {image} does not match configured bit depth {configured}")]
    BitDepth { image: u8, configured: u8 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Descriptor configuration: direction count `N`, scale range `M1..=M2`, bit depth `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LdrpParams {
    pub directions: u32,
    pub min_scale: u32,
    pub max_scale: u32,
    pub bit_depth: u8,
    pub sampling: SamplingMode,
}

impl Default for LdrpParams {
    fn default() -> Self {
        Self {
            directions: 8,
            min_scale: 3,
            max_scale: 6,
            bit_depth: 8,
            sampling: SamplingMode::RoundNearest,
        }
    }
}

impl LdrpParams {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        check_directions(self.directions)?;
        if self.min_scale < 2 {
            return Err(DescriptorError::Params(format!(
                "smallest scale must be at least 2, got {}",
                self.min_scale
            )));
        }
        if self.max_scale < self.min_scale {
            return Err(DescriptorError::Params(format!(
                "largest scale {} is below smallest scale {}",
                self.max_scale, self.min_scale
            )));
        }
        if self.max_scale > MAX_SCALE {
            return Err(DescriptorError::Params(format!(
                "largest scale {} exceeds the supported maximum {MAX_SCALE}",
                self.max_scale
            )));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(DescriptorError::Params(format!(
                "bit depth must be in 1..=16, got {}",
                self.bit_depth
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> RangeInclusive<u32> {
        self.min_scale..=self.max_scale
    }

    /// Bins per scale, `2^N`.
    pub fn bins_per_scale(&self) -> usize {
        1usize << self.directions
    }

    /// Descriptor length `(M2 - M1 + 1) * 2^N`.
    pub fn dimension(&self) -> usize {
        (self.max_scale - self.min_scale + 1) as usize * self.bins_per_scale()
    }

    pub fn scale_config(&self, scale: u32) -> ScaleConfig {
        ScaleConfig {
            directions: self.directions,
            scale,
            sampling: self.sampling,
        }
    }
}

/// Single-scale neighborhood: `N` rays with `M` neighbors each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleConfig {
    pub directions: u32,
    pub scale: u32,
    pub sampling: SamplingMode,
}

impl ScaleConfig {
    pub fn new(directions: u32, scale: u32, sampling: SamplingMode) -> Self {
        Self {
            directions,
            scale,
            sampling,
        }
    }

    fn validate(&self) -> Result<(), DescriptorError> {
        check_directions(self.directions)?;
        if !(2..=MAX_SCALE).contains(&self.scale) {
            return Err(DescriptorError::Params(format!(
                "scale must be in 2..={MAX_SCALE}, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn pair_count(&self) -> u32 {
        pair_count(self.scale)
    }

    /// Smallest admissible image side, `2M + 1`.
    pub fn min_side(&self) -> usize {
        2 * self.scale as usize + 1
    }
}

fn check_directions(directions: u32) -> Result<(), DescriptorError> {
    if directions < 2 || !directions.is_multiple_of(2) || directions > MAX_DIRECTIONS {
        return Err(DescriptorError::Params(format!(
            "direction count must be even and in 2..={MAX_DIRECTIONS}, got {directions}"
        )));
    }
    Ok(())
}

/// Number of radius pairs per direction, `M(M-1)/2`.
pub fn pair_count(scale: u32) -> u32 {
    scale * scale.saturating_sub(1) / 2
}

/// 1-based position of the radius pair `(r1, r2)` among all pairs at `scale`.
pub fn pair_index(r1: u32, r2: u32, scale: u32) -> Result<u32, DescriptorError> {
    if r1 == 0 || r1 >= r2 || r2 > scale {
        return Err(DescriptorError::Argument(format!(
            "radius pair ({r1}, {r2}) must satisfy 1 <= r1 < r2 <= {scale}"
        )));
    }
    if r1 == 1 {
        return Ok(r2 - r1);
    }
    let preceding: u32 = (1..r1).map(|eta| scale - eta).sum();
    Ok(r2 - r1 + preceding)
}

/// Pairwise comparison bits along one direction, indexed by pair position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectionalBits(Vec<bool>);

impl DirectionalBits {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Bit for pair position `t` (1-based).
    pub fn get(&self, t: usize) -> bool {
        self.0[t - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Bits as 0/1 integers, in pair order.
    pub fn to_vec(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }
}

/// Directional information code `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectionalCode(pub u64);

/// Pairwise bits of direction `k` for the pixel at `(row, col)`.
pub fn directional_bits(
    image: &GrayImage,
    row: usize,
    col: usize,
    k: u32,
    config: ScaleConfig,
) -> Result<DirectionalBits, DescriptorError> {
    config.validate()?;
    let margin = config.scale as usize;
    if row < margin
        || col < margin
        || row + margin >= image.height()
        || col + margin >= image.width()
    {
        return Err(DescriptorError::Border { row, col, margin });
    }
    let samples = (1..=config.scale)
        .map(|r| sample_neighbor(image, row, col, r, k, config.directions, config.sampling))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut bits = vec![false; config.pair_count() as usize];
    for r1 in 1..config.scale {
        for r2 in r1 + 1..=config.scale {
            let t = pair_index(r1, r2, config.scale)? as usize;
            bits[t - 1] = samples[r1 as usize - 1] <= samples[r2 as usize - 1];
        }
    }
    Ok(DirectionalBits(bits))
}

/// Weighted sum of the bits, bit `η` carrying weight `2^(η-1)`.
pub fn directional_code(bits: &DirectionalBits) -> DirectionalCode {
    let code = bits
        .as_slice()
        .iter()
        .enumerate()
        .map(|(eta, &b)| u64::from(b) << eta)
        .sum();
    DirectionalCode(code)
}

/// Center intensity rescaled into the directional code range:
/// `floor(center * (2^μ - 1) / (2^B - 1))`, evaluated in exact integer arithmetic.
pub fn transform_center(center: u16, pairs: u32, bit_depth: u8) -> u64 {
    let code_max = (1u128 << pairs) - 1;
    let intensity_max = (1u128 << bit_depth) - 1;
    (u128::from(center) * code_max / intensity_max) as u64
}

/// Relation pattern: bit `k-1` is set when `Γ_k - τ >= 0`.
pub fn ldrp_code(codes: &[DirectionalCode], tau: u64) -> u32 {
    codes
        .iter()
        .enumerate()
        .filter(|(_, code)| code.0 >= tau)
        .map(|(k, _)| 1u32 << k)
        .sum()
}

fn check_image_size(image: &GrayImage, config: &ScaleConfig) -> Result<(), DescriptorError> {
    let min = config.min_side();
    if image.width() < min || image.height() < min {
        return Err(DescriptorError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            scale: config.scale,
            min,
        });
    }
    Ok(())
}

/// Neighbor reader over a flattened raster, with offsets precomputed per `(k, r)` slot.
trait Taps {
    type Sample: PartialOrd + Copy + Default;
    fn read(&self, pixels: &[u16], center: usize, slot: usize) -> Self::Sample;
}

struct RoundTaps {
    offsets: Vec<isize>,
}

impl Taps for RoundTaps {
    type Sample = u16;

    #[inline(always)]
    fn read(&self, pixels: &[u16], center: usize, slot: usize) -> u16 {
        pixels[center.wrapping_add_signed(self.offsets[slot])]
    }
}

#[derive(Clone, Copy)]
struct BilinearTap {
    base: isize,
    row_frac: f64,
    col_frac: f64,
}

struct BilinearTaps {
    taps: Vec<BilinearTap>,
    width: usize,
}

impl Taps for BilinearTaps {
    type Sample = f64;

    #[inline(always)]
    fn read(&self, pixels: &[u16], center: usize, slot: usize) -> f64 {
        let tap = self.taps[slot];
        let origin = center.wrapping_add_signed(tap.base);
        let row_value = |start: usize| {
            let left = f64::from(pixels[start]);
            if tap.col_frac == 0.0 {
                left
            } else {
                lerp(left, f64::from(pixels[start + 1]), tap.col_frac)
            }
        };
        let top = row_value(origin);
        if tap.row_frac == 0.0 {
            top
        } else {
            lerp(top, row_value(origin + self.width), tap.row_frac)
        }
    }
}

fn offsets_for(config: &ScaleConfig) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((config.directions * config.scale) as usize);
    for k in 1..=config.directions {
        for r in 1..=config.scale {
            out.push(
                neighbor_offset(r, k, config.directions, config.sampling)
                    .expect("validated direction and radius"),
            );
        }
    }
    out
}

fn round_taps(config: &ScaleConfig, width: usize) -> RoundTaps {
    let offsets = offsets_for(config)
        .into_iter()
        .map(|(dr, dc)| dr as isize * width as isize + dc as isize)
        .collect();
    RoundTaps { offsets }
}

fn bilinear_taps(config: &ScaleConfig, width: usize) -> BilinearTaps {
    let taps = offsets_for(config)
        .into_iter()
        .map(|(dr, dc)| {
            let row_base = dr.floor();
            let col_base = dc.floor();
            BilinearTap {
                base: row_base as isize * width as isize + col_base as isize,
                row_frac: dr - row_base,
                col_frac: dc - col_base,
            }
        })
        .collect();
    BilinearTaps { taps, width }
}

fn accumulate<T: Taps>(image: &GrayImage, config: &ScaleConfig, taps: &T, hist: &mut [u64]) {
    let m = config.scale as usize;
    let n = config.directions as usize;
    let width = image.width();
    let pixels = image.pixels();
    let pairs = config.pair_count();
    let tau_lut: Vec<u64> = (0..=image.max_intensity())
        .map(|v| transform_center(v, pairs, image.bit_depth()))
        .collect();
    let mut ray = [T::Sample::default(); MAX_SCALE as usize];

    for row in m..image.height() - m {
        for col in m..width - m {
            let center = row * width + col;
            let tau = tau_lut[pixels[center] as usize];
            let mut pattern = 0usize;
            for k in 0..n {
                for (r, slot) in ray[..m].iter_mut().enumerate() {
                    *slot = taps.read(pixels, center, k * m + r);
                }
                // Pairs visited in (r1, r2) lexicographic order are exactly pair_index order.
                let mut gamma = 0u64;
                let mut bit = 0u32;
                for a in 0..m - 1 {
                    let near = ray[a];
                    for &far in &ray[a + 1..m] {
                        gamma |= u64::from(near <= far) << bit;
                        bit += 1;
                    }
                }
                pattern |= usize::from(gamma >= tau) << k;
            }
            hist[pattern] += 1;
        }
    }
}

/// Pattern occurrence counts over interior pixels at one scale, `2^N` bins.
///
/// Pixels within `M` of any border are excluded, so the counts sum to
/// `(width - 2M) * (height - 2M)`.
pub fn scale_histogram(
    image: &GrayImage,
    config: ScaleConfig,
) -> Result<Vec<u64>, DescriptorError> {
    config.validate()?;
    check_image_size(image, &config)?;
    let mut hist = vec![0u64; 1usize << config.directions];
    match config.sampling {
        SamplingMode::RoundNearest => accumulate(
            image,
            &config,
            &round_taps(&config, image.width()),
            &mut hist,
        ),
        SamplingMode::Bilinear => accumulate(
            image,
            &config,
            &bilinear_taps(&config, image.width()),
            &mut hist,
        ),
    }
    Ok(hist)
}

/// Concatenated per-scale counts for scales `M1..=M2`, before normalization.
pub fn multiscale_histogram(
    image: &GrayImage,
    params: &LdrpParams,
) -> Result<Vec<u64>, DescriptorError> {
    params.validate()?;
    if image.bit_depth() != params.bit_depth {
        return Err(DescriptorError::BitDepth {
            image: image.bit_depth(),
            configured: params.bit_depth,
        });
    }
    check_image_size(image, &params.scale_config(params.max_scale))?;
    let mut out = Vec::with_capacity(params.dimension());
    for scale in params.scales() {
        out.extend(scale_histogram(image, params.scale_config(scale))?);
    }
    Ok(out)
}

/// Normalized multi-scale descriptor. Values are nonnegative and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleDescriptor {
    values: Vec<f64>,
    params: LdrpParams,
}

impl MultiScaleDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &LdrpParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn normalize(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Multi-scale LDRP descriptor of `image`.
pub fn multiscale_descriptor(
    image: &GrayImage,
    params: &LdrpParams,
) -> Result<MultiScaleDescriptor, DescriptorError> {
    let counts = multiscale_histogram(image, params)?;
    Ok(MultiScaleDescriptor {
        values: normalize(&counts),
        params: *params,
    })
}
