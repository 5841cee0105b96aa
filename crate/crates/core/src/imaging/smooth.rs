use super::{reflect_index, wrap_index};
use crate::error::{Error, Result};
use crate::num::Real;

/// Single-plane map of nonnegative values (spectral magnitudes, weights).
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeMap<T> {
    pub height: usize,
    pub width: usize,
    pub values: Vec<T>,
}

impl<T: Real> MagnitudeMap<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::dim(format!(
                "{height}x{width} map needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(MagnitudeMap {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        MagnitudeMap {
            height,
            width,
            values: vec![T::zero(); height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// Extension used by [`gaussian_smooth_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmoothBoundary {
    /// Half-sample symmetric reflection.
    #[default]
    Reflect,
    /// Periodic extension; the natural boundary of a DFT grid.
    Wrap,
}

/// Normalized sampled Gaussian with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel<T: Real>(sigma: T) -> Result<Vec<T>> {
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(Error::param(format!("smoothing sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == T::zero() {
        return Ok(vec![T::one()]);
    }
    let radius = (T::lit(3.0) * sigma).ceil().to_usize().unwrap_or(0);
    let denom = T::lit(2.0) * sigma * sigma;
    let mut taps: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let d = T::from_usize_lossy(i) - T::from_usize_lossy(radius);
            (-(d * d) / denom).exp()
        })
        .collect();
    let total: T = taps.iter().copied().sum();
    for t in &mut taps {
        *t = *t / total;
    }
    Ok(taps)
}

/// Separable Gaussian filtering with reflect boundary. `sigma_s = 0` is the identity.
pub fn gaussian_smooth<T: Real>(map: &MagnitudeMap<T>, sigma_s: T) -> Result<MagnitudeMap<T>> {
    gaussian_smooth_with(map, sigma_s, SmoothBoundary::Reflect)
}

pub fn gaussian_smooth_with<T: Real>(
    map: &MagnitudeMap<T>,
    sigma_s: T,
    boundary: SmoothBoundary,
) -> Result<MagnitudeMap<T>> {
    let taps = gaussian_kernel(sigma_s)?;
    if taps.len() == 1 {
        return Ok(map.clone());
    }
    let (h, w) = (map.height, map.width);
    let mut tmp = vec![T::zero(); h * w];
    let row_taps = fold_taps(&taps, w, boundary);
    for y in 0..h {
        let src = &map.values[y * w..(y + 1) * w];
        filter_line(src, &row_taps, boundary, &mut tmp[y * w..(y + 1) * w]);
    }
    let col_taps = fold_taps(&taps, h, boundary);
    let mut out = vec![T::zero(); h * w];
    let mut column = vec![T::zero(); h];
    let mut filtered = vec![T::zero(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = tmp[y * w + x];
        }
        filter_line(&column, &col_taps, boundary, &mut filtered);
        for y in 0..h {
            out[y * w + x] = filtered[y];
        }
    }
    MagnitudeMap::new(h, w, out)
}

/// Taps as `(offset, weight)`. Periodic extension lets a long kernel be
/// folded onto the line length once instead of wrapping per sample.
fn fold_taps<T: Real>(taps: &[T], n: usize, boundary: SmoothBoundary) -> Vec<(isize, T)> {
    let radius = (taps.len() / 2) as isize;
    match boundary {
        SmoothBoundary::Wrap if taps.len() > n => {
            let mut folded = vec![T::zero(); n];
            for (i, &t) in taps.iter().enumerate() {
                let off = wrap_index(i as isize - radius, n);
                folded[off] = folded[off] + t;
            }
            folded
                .into_iter()
                .enumerate()
                .map(|(i, t)| (i as isize, t))
                .collect()
        }
        _ => taps
            .iter()
            .enumerate()
            .map(|(i, &t)| (i as isize - radius, t))
            .collect(),
    }
}

fn filter_line<T: Real>(src: &[T], taps: &[(isize, T)], boundary: SmoothBoundary, dst: &mut [T]) {
    let n = src.len();
    for (i, out) in dst.iter_mut().enumerate() {
        let mut acc = T::zero();
        for &(off, t) in taps {
            let j = i as isize + off;
            let j = match boundary {
                SmoothBoundary::Reflect => reflect_index(j, n),
                SmoothBoundary::Wrap => wrap_index(j, n),
            };
            acc = acc + t * src[j];
        }
        *out = acc;
    }
}
