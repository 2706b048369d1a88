//! PNG reading and writing for maps and color images.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Result, SeeError};
use crate::field::{BinaryMask, ColorImage, ScalarField};

/// Ground truths are binarized at this level on load.
pub const GT_THRESHOLD: f64 = 0.5;

fn open(path: &Path) -> Result<DynamicImage> {
    if !path.is_file() {
        return Err(SeeError::MissingFile(path.to_path_buf()));
    }
    let reader = image::ImageReader::open(path)
        .map_err(|e| SeeError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| SeeError::io(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) => {}
        other => {
            return Err(SeeError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("expected PNG, found {other:?}"),
            })
        }
    }
    let img = reader.decode().map_err(|source| SeeError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(SeeError::ZeroSized(path.to_path_buf()));
    }
    Ok(img)
}

fn channels_of(img: &DynamicImage, path: &Path) -> Result<[ScalarField; 3]> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let unsupported = |what: &str| SeeError::UnsupportedFormat {
        path: path.to_path_buf(),
        reason: format!("{what} rasters are not supported"),
    };
    let split = |samples: Vec<f64>, n: usize| -> [ScalarField; 3] {
        let mut chans = [
            Vec::with_capacity(w * h),
            Vec::with_capacity(w * h),
            Vec::with_capacity(w * h),
        ];
        for px in samples.chunks_exact(n) {
            for (k, chan) in chans.iter_mut().enumerate() {
                chan.push(px[k.min(n - 1)]);
            }
        }
        chans.map(|v| ScalarField::from_raw(h, w, v))
    };
    match img {
        DynamicImage::ImageLuma8(buf) => Ok(split(
            buf.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(),
            1,
        )),
        DynamicImage::ImageLuma16(buf) => Ok(split(
            buf.as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect(),
            1,
        )),
        DynamicImage::ImageRgb8(buf) => Ok(split(
            buf.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(),
            3,
        )),
        DynamicImage::ImageRgb16(buf) => Ok(split(
            buf.as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect(),
            3,
        )),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => Err(unsupported("gray+alpha")),
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageRgba16(_) => Err(unsupported("RGBA")),
        _ => Err(unsupported("floating-point")),
    }
}

/// Loads a single-channel map scaled to `[0, 1]`. RGB inputs are reduced to luma.
pub fn load_map(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let img = open(path)?;
    let is_gray = matches!(img, DynamicImage::ImageLuma8(_) | DynamicImage::ImageLuma16(_));
    let chans = channels_of(&img, path)?;
    if is_gray {
        let [r, _, _] = chans;
        Ok(r)
    } else {
        let [r, g, b] = chans;
        Ok(ColorImage::new(r, g, b)?.luma())
    }
}

/// Loads an image as three channels. Gray inputs are replicated.
pub fn load_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let img = open(path)?;
    let [r, g, b] = channels_of(&img, path)?;
    ColorImage::new(r, g, b)
}

/// Loads a ground truth and binarizes it at [`GT_THRESHOLD`].
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(BinaryMask::threshold(&load_map(path)?, GT_THRESHOLD))
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| SeeError::io(parent, e))?;
        }
    }
    Ok(())
}

/// Writes an 8-bit grayscale PNG using `round(v * 255)` after clamping to `[0, 1]`.
pub fn save_map(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    let buf: GrayImage = ImageBuffer::from_fn(field.width() as u32, field.height() as u32, |x, y| {
        Luma([quantize(field.get(y as usize, x as usize))])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| SeeError::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes an 8-bit RGB PNG.
pub fn save_color(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    let [r, g, b] = img.channels();
    let (h, w) = img.dims();
    let buf: RgbImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (row, col) = (y as usize, x as usize);
        Rgb([
            quantize(r.get(row, col)),
            quantize(g.get(row, col)),
            quantize(b.get(row, col)),
        ])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| SeeError::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads only the PNG header and returns `(height, width)`.
pub fn image_dims(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(SeeError::MissingFile(path.to_path_buf()));
    }
    let (w, h) = image::image_dimensions(path).map_err(|source| SeeError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    if w == 0 || h == 0 {
        return Err(SeeError::ZeroSized(path.to_path_buf()));
    }
    Ok((h as usize, w as usize))
}
