//! Grayscale image type, loading and resizing.
//!
//! Every feature extractor works on a [`GrayImage`] holding luminance in
//! `[0, 1]`. Color inputs are converted with the BT.601 luma weights.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageError, ImageFormat, ImageReader};
use thiserror::Error;

/// Side length every image is resized to before feature extraction.
pub const CANONICAL_SIZE: usize = 256;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

#[derive(Debug, Error)]
pub enum ImageLoadError {
    #[error("image file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image {path}: {reason}")]
    CorruptImage { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum GrayImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("expected {expected} pixels for the given dimensions, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("pixel {index} has value {value} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// Row-major luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, GrayImageError> {
        if width == 0 || height == 0 {
            return Err(GrayImageError::EmptyImage { width, height });
        }
        if pixels.len() != width * height {
            return Err(GrayImageError::LengthMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(GrayImageError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, GrayImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, GrayImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample at a real-valued position inside the image.
    ///
    /// Written as `a + t (b - a)` so that interpolating equal values returns
    /// that value exactly.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = (x.floor() as usize).min(self.width - 1);
        let y0 = (y.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = lerp(self.get(x0, y0), self.get(x1, y0), fx);
        let bottom = lerp(self.get(x0, y1), self.get(x1, y1), fx);
        lerp(top, bottom, fy)
    }

    /// Writes the image as a binary PGM (P5), quantized to 8 bits.
    pub fn write_pgm(&self, path: &Path) -> Result<(), ImageLoadError> {
        let io_err = |source| ImageLoadError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height).map_err(io_err)?;
        let bytes: Vec<u8> = self.pixels.iter().map(|&v| quantize(v)).collect();
        out.write_all(&bytes).map_err(io_err)?;
        out.flush().map_err(io_err)
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Loads a PNG or PNM (P5/P6) file as a luminance image.
pub fn load_image(path: &Path) -> Result<GrayImage, ImageLoadError> {
    let display = path.display().to_string();
    if !path.is_file() {
        return Err(ImageLoadError::FileNotFound(display));
    }
    let reader = ImageReader::open(path)
        .and_then(|r| r.with_guessed_format())
        .map_err(|source| ImageLoadError::Io {
            path: display.clone(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        _ => return Err(ImageLoadError::UnsupportedFormat(display)),
    }
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(_) => ImageLoadError::UnsupportedFormat(display.clone()),
        other => ImageLoadError::CorruptImage {
            path: display.clone(),
            reason: other.to_string(),
        },
    })?;
    Ok(to_gray(&decoded))
}

fn to_gray(img: &DynamicImage) -> GrayImage {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| luma(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64) / 255.0)
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| luma(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64) / 255.0)
            .collect(),
        other => other
            .to_rgb32f()
            .pixels()
            .map(|p| luma(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64))
            .collect(),
    };
    let pixels = pixels.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    GrayImage {
        width,
        height,
        pixels,
    }
}

#[inline]
fn luma(r: f64, g: f64, b: f64) -> f64 {
    LUMA_R * r + LUMA_G * g + LUMA_B * b
}

/// Corner-aligned bilinear resize: output corners map onto input corners.
///
/// A target dimension of 1 samples the source center along that axis.
///
/// # Panics
///
/// Panics if `width` or `height` is zero.
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> GrayImage {
    assert!(width >= 1 && height >= 1, "target size must be positive");
    if width == img.width && height == img.height {
        return img.clone();
    }
    let xs = source_coords(img.width, width);
    let ys = source_coords(img.height, height);
    let mut pixels = Vec::with_capacity(width * height);
    for &sy in &ys {
        for &sx in &xs {
            pixels.push(img.sample_bilinear(sx, sy).clamp(0.0, 1.0));
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

fn source_coords(src: usize, dst: usize) -> Vec<f64> {
    if dst == 1 {
        return vec![(src - 1) as f64 / 2.0];
    }
    let step = (src - 1) as f64 / (dst - 1) as f64;
    (0..dst).map(|i| i as f64 * step).collect()
}

/// Resizes to the canonical working size unless already there.
pub fn canonicalize(img: &GrayImage, size: usize) -> GrayImage {
    resize_bilinear(img, size, size)
}
