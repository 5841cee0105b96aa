use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::Image;
use crate::error::{Error, Result};
use crate::num::Real;

/// Full-plane 2-D spectrum, one plane per channel.
///
/// Coefficients are stored planar: channel `c` occupies
/// `coefficients[c * h * w .. (c + 1) * h * w]`, row-major, with the DC term
/// at index 0 of each plane (no quadrant shift).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub coefficients: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Spectrum {
            height,
            width,
            channels,
            coefficients: vec![Complex::new(T::zero(), T::zero()); height * width * channels],
        }
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[Complex<T>] {
        let n = self.height * self.width;
        &self.coefficients[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        let n = self.height * self.width;
        &mut self.coefficients[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }
}

/// Planned 2-D transform for one image size.
///
/// Forward is unnormalized; inverse is scaled by `1 / (h * w)`, so
/// `inverse(forward(x)) == x` and `sum |x|^2 == sum |v|^2 / (h * w)`.
pub struct Fft2d<T: Real> {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2d<T> {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// In-place transform of one row-major plane.
    pub fn forward_plane(&self, plane: &mut [Complex<T>]) {
        self.process(plane, &self.row_fwd, &self.col_fwd);
    }

    /// In-place inverse of one plane, including the `1 / (h * w)` scale.
    pub fn inverse_plane(&self, plane: &mut [Complex<T>]) {
        self.process(plane, &self.row_inv, &self.col_inv);
        let scale = T::one() / T::from_usize_lossy(self.height * self.width);
        for v in plane.iter_mut() {
            *v = *v * scale;
        }
    }

    fn process(&self, plane: &mut [Complex<T>], rows: &Arc<dyn Fft<T>>, cols: &Arc<dyn Fft<T>>) {
        let (h, w) = (self.height, self.width);
        debug_assert_eq!(plane.len(), h * w);
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); scratch_len];
        for row in plane.chunks_exact_mut(w) {
            rows.process_with_scratch(row, &mut scratch);
        }
        let mut column = vec![Complex::new(T::zero(), T::zero()); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = plane[y * w + x];
            }
            cols.process_with_scratch(&mut column, &mut scratch);
            for y in 0..h {
                plane[y * w + x] = column[y];
            }
        }
    }

    pub fn forward(&self, img: &Image<T>) -> Result<Spectrum<T>> {
        self.check(img.height(), img.width())?;
        let mut spec = Spectrum::zeros(img.height(), img.width(), img.channels());
        for c in 0..img.channels() {
            let plane = spec.plane_mut(c);
            for (dst, src) in plane.iter_mut().zip(img.data().iter().skip(c).step_by(img.channels())) {
                *dst = Complex::new(*src, T::zero());
            }
            self.forward_plane(plane);
        }
        Ok(spec)
    }

    /// Complex inverse, one plane per channel.
    pub fn inverse_complex(&self, spec: &Spectrum<T>) -> Result<Vec<Vec<Complex<T>>>> {
        self.check(spec.height, spec.width)?;
        Ok((0..spec.channels)
            .map(|c| {
                let mut plane = spec.plane(c).to_vec();
                self.inverse_plane(&mut plane);
                plane
            })
            .collect())
    }

    /// Real part of the inverse transform, unclamped.
    pub fn inverse(&self, spec: &Spectrum<T>) -> Result<Image<T>> {
        let planes = self.inverse_complex(spec)?;
        let real: Vec<Vec<T>> = planes
            .into_iter()
            .map(|p| p.into_iter().map(|z| z.re).collect())
            .collect();
        Image::from_planes(spec.height, spec.width, &real)
    }

    fn check(&self, h: usize, w: usize) -> Result<()> {
        if h == self.height && w == self.width {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "transform planned for {}x{}, got {h}x{w}",
                self.height, self.width
            )))
        }
    }
}

pub fn fft2<T: Real>(img: &Image<T>) -> Spectrum<T> {
    Fft2d::new(img.height(), img.width())
        .forward(img)
        .expect("plan matches image")
}

/// Real part of the inverse transform (not clamped).
pub fn ifft2<T: Real>(spec: &Spectrum<T>) -> Image<T> {
    Fft2d::new(spec.height, spec.width)
        .inverse(spec)
        .expect("plan matches spectrum")
}

pub fn ifft2_complex<T: Real>(spec: &Spectrum<T>) -> Vec<Vec<Complex<T>>> {
    Fft2d::new(spec.height, spec.width)
        .inverse_complex(spec)
        .expect("plan matches spectrum")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, c, |_, _, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn round_trip_sizes() {
        for &(h, w) in &[(32, 32), (8, 8), (17, 17), (64, 64), (5, 12), (1, 1)] {
            let x = random_image(h, w, 3, (h * 31 + w) as u64);
            let back = ifft2(&fft2(&x));
            assert!(x.max_abs_diff(&back) < 1e-10, "{h}x{w}");
        }
    }

    #[test]
    fn inverse_then_forward_is_identity() {
        for &n in &[8usize, 17, 64] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let mut spec = Spectrum::<f64>::zeros(n, n, 1);
            for v in spec.coefficients.iter_mut() {
                *v = Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let plan = Fft2d::new(n, n);
            let mut plane = spec.plane(0).to_vec();
            plan.inverse_plane(&mut plane);
            plan.forward_plane(&mut plane);
            let err = plane
                .iter()
                .zip(spec.plane(0))
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{n}: {err}");
        }
    }

    #[test]
    fn impulse_has_flat_magnitude() {
        let mut x = Image::<f64>::zeros(9, 6, 1).unwrap();
        x.set(4, 2, 0, 1.0);
        let v = fft2(&x);
        for z in v.plane(0) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval() {
        let x = random_image(16, 24, 3, 9);
        let v = fft2(&x);
        let ex: f64 = x.data().iter().map(|a| a * a).sum();
        let ev: f64 = v.coefficients.iter().map(|z| z.norm_sqr()).sum::<f64>() / (16.0 * 24.0);
        assert!((ex - ev).abs() < 1e-8);
    }

    #[test]
    fn real_input_is_conjugate_symmetric() {
        let x = random_image(6, 7, 1, 3);
        let v = fft2(&x);
        let (h, w) = (6, 7);
        for ky in 0..h {
            for kx in 0..w {
                let a = v.plane(0)[ky * w + kx];
                let b = v.plane(0)[((h - ky) % h) * w + (w - kx) % w];
                assert!((a - b.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_naive_dft() {
        let x = random_image(5, 4, 1, 11);
        let v = fft2(&x);
        for ky in 0..5 {
            for kx in 0..4 {
                let mut acc = Complex::new(0.0, 0.0);
                for y in 0..5 {
                    for xx in 0..4 {
                        let ang = -2.0 * std::f64::consts::PI
                            * (ky as f64 * y as f64 / 5.0 + kx as f64 * xx as f64 / 4.0);
                        acc += Complex::from_polar(x.get(y, xx, 0), ang);
                    }
                }
                assert!((acc - v.plane(0)[ky * 4 + kx]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let x: Image<f32> = random_image(12, 10, 3, 5).cast();
        let back = ifft2(&fft2(&x));
        assert!(x.max_abs_diff(&back) < 1e-5);
    }
}
