//! Image containers, PNG I/O, convolution, the 2-D Fourier transform,
//! magnitude smoothing and full-reference quality metrics.

mod convolve;
mod fft;
mod io;
mod quality;
mod smooth;

pub use convolve::{convolve_psf, convolve_psf_unclamped, translate, Boundary};
pub use fft::{fft2, ifft2, ifft2_complex, Fft2d, Spectrum};
pub use io::{load_image, save_image};
pub use quality::{aligned_psnr, mse, psnr, quality, ssim, Quality, PSNR_CAP_DB};
pub use smooth::{gaussian_kernel, gaussian_smooth, gaussian_smooth_with, MagnitudeMap, SmoothBoundary};

use crate::error::{Error, Result};
use crate::num::Real;

/// Multi-channel floating point image.
///
/// Samples are stored row-major with channels interleaved
/// (`data[(y * width + x) * channels + c]`). Decoded images and the output of
/// every clamping operation lie in `[0, 1]`; unclamped intermediate results
/// (for example the raw inverse transform) may leave that range.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::dim(format!("empty image {height}x{width}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::dim(format!("{channels} channels (expected 1 or 3)")));
        }
        if data.len() != height * width * channels {
            return Err(Error::dim(format!(
                "{height}x{width}x{channels} image needs {} samples, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![T::zero(); height * width * channels])
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image from `f(y, x, c)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: T) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// One channel as a dense row-major plane.
    pub fn plane(&self, c: usize) -> Vec<T> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Builds an image from per-channel planes.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<T>]) -> Result<Self> {
        let channels = planes.len();
        let n = height * width;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::dim("plane length does not match image size"));
        }
        let mut data = vec![T::zero(); n * channels];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.iter().enumerate() {
                data[i * channels + c] = v;
            }
        }
        Self::new(height, width, channels, data)
    }

    /// Luma plane (0.299 R + 0.587 G + 0.114 B); the plane itself for gray images.
    pub fn luma(&self) -> Vec<T> {
        if self.channels == 1 {
            return self.data.clone();
        }
        let (wr, wg, wb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
        self.data
            .chunks_exact(3)
            .map(|px| wr * px[0] + wg * px[1] + wb * px[2])
            .collect()
    }

    /// Copy with every sample clamped to `[0, 1]`; NaN maps to 0.
    pub fn clamped(&self) -> Self {
        let mut out = self.clone();
        out.clamp_in_place();
        out
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = clamp01(*v);
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rectangular crop. Fails when the window leaves the image.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::dim(format!(
                "crop {height}x{width}+{top}+{left} outside {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width * self.channels);
        for y in top..top + height {
            let start = (y * self.width + left) * self.channels;
            data.extend_from_slice(&self.data[start..start + width * self.channels]);
        }
        Self::new(height, width, self.channels, data)
    }

    /// Centered crop of at most `tile` x `tile`; smaller images are returned whole.
    pub fn center_tile(&self, tile: usize) -> Self {
        let th = self.height.min(tile.max(1));
        let tw = self.width.min(tile.max(1));
        if th == self.height && tw == self.width {
            return self.clone();
        }
        self.crop((self.height - th) / 2, (self.width - tw) / 2, th, tw)
            .expect("centered tile fits")
    }

    /// Converts every sample to another scalar type.
    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

#[inline]
pub(crate) fn clamp01<T: Real>(v: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(T::zero()).min(T::one())
    }
}

/// Symmetric (half-sample) reflection of an arbitrary index into `0..n`:
/// `... b a | a b c d | d c ...`.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

#[inline]
pub(crate) fn wrap_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}
