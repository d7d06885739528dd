//! Classic local binary pattern, used as the comparison baseline.
//!
//! Neighbor `p` sits on the same ring geometry as the LDRP rays (first neighbor
//! to the right, counter-clockwise) and sets bit `p-1` when it is at least as
//! bright as the center.

use crate::ldrp::{normalize, DescriptorError};
use crate::pixel_grid::{neighbor_offset, sample_at_offset, GrayImage, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LbpParams {
    pub neighbors: u32,
    pub radius: u32,
    pub sampling: SamplingMode,
}

impl Default for LbpParams {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1,
            sampling: SamplingMode::RoundNearest,
        }
    }
}

impl LbpParams {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if !(4..=16).contains(&self.neighbors) {
            return Err(DescriptorError::Params(format!(
                "LBP neighbor count must be in 4..=16, got {}",
                self.neighbors
            )));
        }
        if self.radius == 0 {
            return Err(DescriptorError::Params(
                "LBP radius must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        1usize << self.neighbors
    }

    fn offsets(&self) -> Vec<(f64, f64)> {
        (1..=self.neighbors)
            .map(|p| {
                neighbor_offset(self.radius, p, self.neighbors, self.sampling)
                    .expect("validated LBP parameters")
            })
            .collect()
    }
}

fn code_with_offsets(
    image: &GrayImage,
    row: usize,
    col: usize,
    offsets: &[(f64, f64)],
    sampling: SamplingMode,
) -> Result<u32, DescriptorError> {
    let center = f64::from(image.get(row, col));
    let mut code = 0u32;
    for (p, &(dr, dc)) in offsets.iter().enumerate() {
        if sample_at_offset(image, row, col, dr, dc, sampling)? >= center {
            code |= 1 << p;
        }
    }
    Ok(code)
}

/// LBP code of the pixel at `(row, col)`.
pub fn lbp_code(
    image: &GrayImage,
    row: usize,
    col: usize,
    params: &LbpParams,
) -> Result<u32, DescriptorError> {
    params.validate()?;
    let margin = params.radius as usize;
    if row < margin
        || col < margin
        || row + margin >= image.height()
        || col + margin >= image.width()
    {
        return Err(DescriptorError::Border { row, col, margin });
    }
    code_with_offsets(image, row, col, &params.offsets(), params.sampling)
}

/// Raw code counts over pixels at least `R` from every border.
pub fn lbp_counts(image: &GrayImage, params: &LbpParams) -> Result<Vec<u64>, DescriptorError> {
    params.validate()?;
    let margin = params.radius as usize;
    let min = 2 * margin + 1;
    if image.width() < min || image.height() < min {
        return Err(DescriptorError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            scale: params.radius,
            min,
        });
    }
    let offsets = params.offsets();
    let mut hist = vec![0u64; params.dimension()];
    for row in margin..image.height() - margin {
        for col in margin..image.width() - margin {
            hist[code_with_offsets(image, row, col, &offsets, params.sampling)? as usize] += 1;
        }
    }
    Ok(hist)
}

/// Normalized LBP histogram with `2^P` bins.
pub fn lbp_histogram(image: &GrayImage, params: &LbpParams) -> Result<Vec<f64>, DescriptorError> {
    Ok(normalize(&lbp_counts(image, params)?))
}
