//! Grayscale rasters, resampling and circular neighbor geometry.
//!
//! Coordinates are `(row, col)` with the origin at the top-left corner. Direction
//! `k = 1` points to the right of the center pixel and directions advance
//! counter-clockwise as displayed, so `k = 1 + N/4` points straight up.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Errors raised by raster construction and sampling.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("sample at ({row}, {col}) lies outside the {height}x{width} image")]
    OutOfBounds {
        row: i64,
        col: i64,
        width: usize,
        height: usize,
    },
}

/// How non-integer neighbor coordinates are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SamplingMode {
    /// Round each offset component half away from zero and read a single pixel.
    #[default]
    RoundNearest,
    /// Interpolate between the four pixels surrounding the exact position.
    Bilinear,
}

impl SamplingMode {
    /// Numeric code used by the feature store header.
    pub fn code(self) -> u8 {
        match self {
            SamplingMode::RoundNearest => 0,
            SamplingMode::Bilinear => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SamplingMode::RoundNearest),
            1 => Some(SamplingMode::Bilinear),
            _ => None,
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::RoundNearest => "round",
            SamplingMode::Bilinear => "bilinear",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "round" | "nearest" | "round-nearest" => Ok(SamplingMode::RoundNearest),
            "bilinear" => Ok(SamplingMode::Bilinear),
            other => Err(format!(
                "unknown sampling mode `{other}` (expected round|bilinear)"
            )),
        }
    }
}

/// Single-channel raster with a configurable bit depth, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u16>,
}

impl GrayImage {
    /// Builds an 8-bit image from row-major intensities.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, GridError> {
        Self::with_bit_depth(
            width,
            height,
            8,
            pixels.into_iter().map(u16::from).collect(),
        )
    }

    /// Builds an image of bit depth `bit_depth` (1..=16).
    pub fn with_bit_depth(
        width: usize,
        height: usize,
        bit_depth: u8,
        pixels: Vec<u16>,
    ) -> Result<Self, GridError> {
        if !(1..=16).contains(&bit_depth) {
            return Err(GridError::Argument(format!(
                "bit depth must be in 1..=16, got {bit_depth}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(GridError::Argument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(GridError::Dimension(format!(
                "{} intensities supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        let max = max_intensity(bit_depth);
        if let Some(bad) = pixels.iter().find(|&&v| v > max) {
            return Err(GridError::Argument(format!(
                "intensity {bad} exceeds the {bit_depth}-bit maximum {max}"
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    /// Builds an 8-bit image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(u16::from(f(row, col)));
            }
        }
        Self {
            width,
            height,
            bit_depth: 8,
            pixels,
        }
    }

    /// Constant 8-bit image.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_intensity(&self) -> u16 {
        max_intensity(self.bit_depth)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    /// Intensity at `(row, col)`. Panics when out of range.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    fn checked_get(&self, row: i64, col: i64) -> Result<u16, GridError> {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return Err(GridError::OutOfBounds {
                row,
                col,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.pixels[row as usize * self.width + col as usize])
    }

    /// Binary PGM (P5) encoding. Depths above 8 bits use big-endian 16-bit samples.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let max = self.max_intensity();
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, max).into_bytes();
        if max < 256 {
            out.extend(self.pixels.iter().map(|&v| v as u8));
        } else {
            for &v in &self.pixels {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut file = io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&self.to_pgm_bytes())?;
        file.flush()
    }
}

pub fn max_intensity(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// One 8-bit color plane of a planar RGB raster.
#[derive(Debug, Clone, Copy)]
pub struct Plane<'a> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [u8],
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    // BT.601 weights in thousandths, rounded half up; the sum never exceeds 255.
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000).min(255) as u8
}

/// Converts planar RGB to 8-bit gray with BT.601 luma weights.
pub fn to_grayscale(
    red: Plane<'_>,
    green: Plane<'_>,
    blue: Plane<'_>,
) -> Result<GrayImage, GridError> {
    let dims = (red.width, red.height);
    for (name, plane) in [("red", red), ("green", green), ("blue", blue)] {
        if (plane.width, plane.height) != dims {
            return Err(GridError::Dimension(format!(
                "{name} channel is {}x{}, expected {}x{}",
                plane.width, plane.height, dims.0, dims.1
            )));
        }
        if plane.data.len() != plane.width * plane.height {
            return Err(GridError::Dimension(format!(
                "{name} channel holds {} samples for a {}x{} plane",
                plane.data.len(),
                plane.width,
                plane.height
            )));
        }
    }
    let pixels = red
        .data
        .iter()
        .zip(green.data)
        .zip(blue.data)
        .map(|((&r, &g), &b)| luma(r, g, b))
        .collect();
    GrayImage::new(dims.0, dims.1, pixels)
}

/// Converts an interleaved 8-bit RGB image.
pub fn from_rgb8(image: &image::RgbImage) -> GrayImage {
    let (width, height) = (image.width() as usize, image.height() as usize);
    let pixels = image
        .pixels()
        .map(|p| u16::from(luma(p[0], p[1], p[2])))
        .collect();
    GrayImage {
        width,
        height,
        bit_depth: 8,
        pixels,
    }
}

/// Converts any decoded image: 8-bit gray is taken as is, everything else goes
/// through 8-bit RGB and luma weighting.
pub fn from_dynamic(image: &image::DynamicImage) -> GrayImage {
    match image {
        image::DynamicImage::ImageLuma8(gray) => GrayImage {
            width: gray.width() as usize,
            height: gray.height() as usize,
            bit_depth: 8,
            pixels: gray.as_raw().iter().map(|&v| u16::from(v)).collect(),
        },
        other => from_rgb8(&other.to_rgb8()),
    }
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn resize(
    image: &GrayImage,
    new_width: usize,
    new_height: usize,
) -> Result<GrayImage, GridError> {
    if new_width == 0 || new_height == 0 {
        return Err(GridError::Argument(format!(
            "target dimensions must be positive, got {new_width}x{new_height}"
        )));
    }
    if new_width == image.width && new_height == image.height {
        return Ok(image.clone());
    }
    let cols: Vec<(usize, usize, f64)> = (0..new_width)
        .map(|c| source_taps(c, image.width, new_width))
        .collect();
    let max = f64::from(image.max_intensity());
    let mut pixels = Vec::with_capacity(new_width * new_height);
    for r in 0..new_height {
        let (r0, r1, fr) = source_taps(r, image.height, new_height);
        for &(c0, c1, fc) in &cols {
            let p = |row: usize, col: usize| f64::from(image.pixels[row * image.width + col]);
            let top = lerp(p(r0, c0), p(r0, c1), fc);
            let bottom = lerp(p(r1, c0), p(r1, c1), fc);
            let value = lerp(top, bottom, fr);
            pixels.push((value + 0.5).floor().clamp(0.0, max) as u16);
        }
    }
    Ok(GrayImage {
        width: new_width,
        height: new_height,
        bit_depth: image.bit_depth,
        pixels,
    })
}

fn source_taps(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let scale = src_len as f64 / dst_len as f64;
    let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(src_len - 1);
    (lo, hi, pos - lo as f64)
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Snaps values within 1e-9 of an integer so grid-aligned angles give exact offsets.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r + 0.0
    } else {
        v
    }
}

/// Offset `(d_row, d_col)` of the `k`-th of `directions` neighbors at `radius`.
///
/// Under [`SamplingMode::RoundNearest`] both components are rounded half away
/// from zero.
pub fn neighbor_offset(
    radius: u32,
    k: u32,
    directions: u32,
    mode: SamplingMode,
) -> Result<(f64, f64), GridError> {
    if directions == 0 {
        return Err(GridError::Argument(
            "direction count must be positive".into(),
        ));
    }
    if k == 0 || k > directions {
        return Err(GridError::Argument(format!(
            "direction index {k} outside 1..={directions}"
        )));
    }
    if radius == 0 {
        return Err(GridError::Argument("radius must be at least 1".into()));
    }
    let theta = f64::from(k - 1) * 2.0 * PI / f64::from(directions);
    let r = f64::from(radius);
    let d_col = snap(r * theta.cos());
    let d_row = snap(-r * theta.sin());
    Ok(match mode {
        SamplingMode::RoundNearest => (d_row.round() + 0.0, d_col.round() + 0.0),
        SamplingMode::Bilinear => (d_row, d_col),
    })
}

/// Reads the image at `(row + d_row, col + d_col)`.
///
/// Integer offsets read one pixel. Fractional offsets interpolate along each
/// fractional axis, where the fraction is `d - floor(d)` of the offset itself;
/// axes with a zero fraction never touch the following pixel.
pub fn sample_at_offset(
    image: &GrayImage,
    row: usize,
    col: usize,
    d_row: f64,
    d_col: f64,
    mode: SamplingMode,
) -> Result<f64, GridError> {
    let (d_row, d_col) = match mode {
        SamplingMode::RoundNearest => (d_row.round(), d_col.round()),
        SamplingMode::Bilinear => (d_row, d_col),
    };
    let row_base = d_row.floor();
    let col_base = d_col.floor();
    let row_frac = d_row - row_base;
    let col_frac = d_col - col_base;
    let r0 = row as i64 + row_base as i64;
    let c0 = col as i64 + col_base as i64;

    let along_row = |r: i64| -> Result<f64, GridError> {
        let left = f64::from(image.checked_get(r, c0)?);
        if col_frac == 0.0 {
            Ok(left)
        } else {
            let right = f64::from(image.checked_get(r, c0 + 1)?);
            Ok(lerp(left, right, col_frac))
        }
    };
    let top = along_row(r0)?;
    if row_frac == 0.0 {
        Ok(top)
    } else {
        let bottom = along_row(r0 + 1)?;
        Ok(lerp(top, bottom, row_frac))
    }
}

/// Intensity of the `k`-th neighbor of `(row, col)` at `radius`.
///
/// Under round-nearest sampling the returned value is an exact integer.
pub fn sample_neighbor(
    image: &GrayImage,
    row: usize,
    col: usize,
    radius: u32,
    k: u32,
    directions: u32,
    mode: SamplingMode,
) -> Result<f64, GridError> {
    let (d_row, d_col) = neighbor_offset(radius, k, directions, mode)?;
    sample_at_offset(image, row, col, d_row, d_col, mode)
}
