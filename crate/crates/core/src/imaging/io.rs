use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use super::{clamp01, Image};
use crate::error::{Error, Result};
use crate::num::Real;

/// Reads an 8-bit grayscale or RGB raster. Sample `k` maps to `k / 255`.
pub fn load_image<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let scale = T::one() / T::lit(255.0);
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => Image::new(
            h,
            w,
            1,
            buf.into_raw().into_iter().map(|v| T::lit(v as f64) * scale).collect(),
        ),
        DynamicImage::ImageRgb8(buf) => Image::new(
            h,
            w,
            3,
            buf.into_raw().into_iter().map(|v| T::lit(v as f64) * scale).collect(),
        ),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("{:?} (only 8-bit gray and RGB are accepted)", other.color()),
        }),
    }
}

/// Writes a PNG, quantizing each sample as `round(255 * clamp(v, 0, 1))`.
pub fn save_image<T: Real>(img: &Image<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let encoded = match img.channels() {
        1 => ImageBuffer::<Luma<u8>, _>::from_raw(w, h, bytes)
            .map(DynamicImage::ImageLuma8),
        _ => ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).map(DynamicImage::ImageRgb8),
    }
    .ok_or_else(|| Error::dim("image buffer size"))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    encoded
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

#[inline]
fn quantize<T: Real>(v: T) -> u8 {
    (clamp01(v) * T::lit(255.0)).round().to_u8().unwrap_or(0)
}
