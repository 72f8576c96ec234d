//! Image containers, periodic indexing, and 8-bit raster I/O.
//!
//! Samples are double-precision reals with nominal range [0, 1]; `x` is the
//! column axis and `y` the row axis. Storage is row-major.

use std::path::Path;

use image::DynamicImage;

use crate::{Error, Result};

/// Wraps a signed index onto a periodic axis of length `n`.
///
/// Uses the mathematical (nonnegative) modulus, so `wrap_index(-1, 5) == 4`.
#[inline]
pub fn wrap_index(i: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    let n = n as isize;
    (((i % n) + n) % n) as usize
}

/// A 2-D grid of real samples in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    /// All-zero field of the given size. Panics on a zero-sized grid.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    /// Constant field of the given size. Panics on a zero-sized grid.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width >= 1 && height >= 1, "zero-sized field");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps an existing row-major sample buffer.
    ///
    /// Panics if `data.len() != width * height` or the grid is zero-sized.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert!(width >= 1 && height >= 1, "zero-sized field");
        assert_eq!(data.len(), width * height, "sample count mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_size(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Sample at (row, col) without wrapping.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    /// Sample at (row, col) with periodic wrap on both axes.
    #[inline]
    pub fn get_periodic(&self, row: isize, col: isize) -> f64 {
        let r = wrap_index(row, self.height);
        let c = wrap_index(col, self.width);
        self.data[r * self.width + c]
    }

    /// New field with `f` applied to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// New field combining two fields sample by sample. Panics on size mismatch.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert!(self.same_size(other), "field size mismatch");
        ScalarField {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Euclidean norm over all samples.
    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute sample difference against `other`.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        assert!(self.same_size(other), "field size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of sample products, the unweighted grid inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        assert!(self.same_size(other), "field size mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Copy with every sample clamped to [lo, hi].
    pub fn clamped(&self, lo: f64, hi: f64) -> ScalarField {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Known/missing indicator per pixel; the missing set is the inpainting domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskField {
    width: usize,
    height: usize,
    missing: Vec<bool>,
}

impl MaskField {
    /// Mask with every pixel known (the denoising case).
    pub fn all_known(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "zero-sized mask");
        Self {
            width,
            height,
            missing: vec![false; width * height],
        }
    }

    /// Builds a mask from a per-pixel missing indicator in row-major order.
    pub fn from_missing(width: usize, height: usize, missing: Vec<bool>) -> Self {
        assert!(width >= 1 && height >= 1, "zero-sized mask");
        assert_eq!(missing.len(), width * height, "indicator count mismatch");
        Self {
            width,
            height,
            missing,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.height && col < self.width);
        self.missing[row * self.width + col]
    }

    #[inline]
    pub fn is_known(&self, row: usize, col: usize) -> bool {
        !self.is_missing(row, col)
    }

    #[inline]
    pub fn missing_flags(&self) -> &[bool] {
        &self.missing
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn all_pixels_known(&self) -> bool {
        self.missing.iter().all(|&m| !m)
    }

    /// 1 on known pixels, 0 on missing ones.
    pub fn indicator(&self) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self
                .missing
                .iter()
                .map(|&m| if m { 0.0 } else { 1.0 })
                .collect(),
        }
    }

    /// Reads a mask from a grayscale raster: value >= 128 marks a pixel missing.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let image = load_image(path)?;
        let missing = image.data().iter().map(|&v| v >= 128.0 / 255.0).collect();
        Ok(Self {
            width: image.width(),
            height: image.height(),
            missing,
        })
    }

    /// Writes the mask as an 8-bit raster: missing = 255, known = 0.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let field = ScalarField {
            width: self.width,
            height: self.height,
            data: self
                .missing
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect(),
        };
        save_image(&field, path)
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let image = image::ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    if image.width() < 2 || image.height() < 2 {
        return Err(Error::ImageTooSmall(format!(
            "{} is {}x{}, need at least 2x2",
            path.display(),
            image.width(),
            image.height()
        )));
    }
    Ok(image)
}

fn scale_u8(v: u8) -> f64 {
    v as f64 / 255.0
}

/// Loads an 8-bit grayscale or color raster (PGM/PNG) as samples in [0, 1].
///
/// Color input is reduced to its channel average; 16-bit input is rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let image = decode(path)?;
    let (width, height) = (image.width() as usize, image.height() as usize);
    let data = match image {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(scale_u8).collect(),
        DynamicImage::ImageLumaA8(buf) => {
            buf.into_raw().chunks_exact(2).map(|p| scale_u8(p[0])).collect()
        }
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .chunks_exact(3)
            .map(|p| (scale_u8(p[0]) + scale_u8(p[1]) + scale_u8(p[2])) / 3.0)
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .into_raw()
            .chunks_exact(4)
            .map(|p| (scale_u8(p[0]) + scale_u8(p[1]) + scale_u8(p[2])) / 3.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: {:?} samples are not 8-bit",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(ScalarField::from_vec(width, height, data))
}

/// Loads an 8-bit raster as separate channels: 1 for grayscale, 3 for color.
pub fn load_image_channels(path: impl AsRef<Path>) -> Result<Vec<ScalarField>> {
    let path = path.as_ref();
    let image = decode(path)?;
    let (width, height) = (image.width() as usize, image.height() as usize);
    let planes: Vec<Vec<f64>> = match image {
        DynamicImage::ImageLuma8(buf) => {
            vec![buf.into_raw().into_iter().map(scale_u8).collect()]
        }
        DynamicImage::ImageLumaA8(buf) => {
            vec![buf.into_raw().chunks_exact(2).map(|p| scale_u8(p[0])).collect()]
        }
        DynamicImage::ImageRgb8(buf) => {
            let raw = buf.into_raw();
            (0..3)
                .map(|c| raw.chunks_exact(3).map(|p| scale_u8(p[c])).collect())
                .collect()
        }
        DynamicImage::ImageRgba8(buf) => {
            let raw = buf.into_raw();
            (0..3)
                .map(|c| raw.chunks_exact(4).map(|p| scale_u8(p[c])).collect())
                .collect()
        }
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: {:?} samples are not 8-bit",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(planes
        .into_iter()
        .map(|data| ScalarField::from_vec(width, height, data))
        .collect())
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes samples as an 8-bit grayscale raster, clamped to [0, 1].
///
/// The format follows the file extension (`.png` or `.pgm`). Saving an
/// already-quantized field reproduces its bytes exactly.
pub fn save_image(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = field.data().iter().map(|&v| quantize(v)).collect();
    let buf = image::GrayImage::from_raw(field.width() as u32, field.height() as u32, bytes)
        .expect("buffer length matches field size");
    DynamicImage::ImageLuma8(buf)
        .save(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes three channel fields as an 8-bit RGB raster.
pub fn save_image_rgb(channels: &[ScalarField; 3], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (width, height) = (channels[0].width(), channels[0].height());
    for c in channels.iter() {
        if c.width() != width || c.height() != height {
            return Err(Error::DimensionMismatch(
                "rgb channels differ in size".into(),
            ));
        }
    }
    let mut bytes = Vec::with_capacity(width * height * 3);
    for i in 0..width * height {
        for c in channels.iter() {
            bytes.push(quantize(c.data()[i]));
        }
    }
    let buf = image::RgbImage::from_raw(width as u32, height as u32, bytes)
        .expect("buffer length matches field size");
    DynamicImage::ImageRgb8(buf)
        .save(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}
