use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Fft2d, Image};
use crate::num::Real;
use rustfft::num_complex::Complex;

/// Smallest image side accepted by [`features`].
pub const MIN_FEATURE_SIDE: usize = 16;

pub const FEATURE_NAMES: [&str; 5] = ["log_nsps", "grad_energy", "sgrd", "lap_var", "hf_ratio"];

/// Fraction of gradient magnitudes averaged by `sgrd`.
const SGRD_FRACTION: f64 = 0.3;
const NSPS_GUARD: f64 = 1e-9;

/// Five no-reference blur features of the luma plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// `ln(|grad|_1 / |grad|_2)`; 0 when the gradient vanishes.
    pub log_nsps: f64,
    /// Mean squared gradient magnitude.
    pub grad_energy: f64,
    /// Mean of the smallest 30% of gradient magnitudes.
    pub sgrd: f64,
    /// Variance of the 4-neighbour Laplacian.
    pub lap_var: f64,
    /// Spectral energy beyond radius `min(h, w) / 4` over all AC energy.
    pub hf_ratio: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 5] {
        [self.log_nsps, self.grad_energy, self.sgrd, self.lap_var, self.hf_ratio]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        FeatureVector {
            log_nsps: a[0],
            grad_energy: a[1],
            sgrd: a[2],
            lap_var: a[3],
            hf_ratio: a[4],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.to_array()[i])
    }
}

/// Gradients by central differences and the Laplacian are taken on interior
/// pixels only, so borders never see padding.
pub fn features<T: Real>(img: &Image<T>) -> Result<FeatureVector> {
    let (h, w) = (img.height(), img.width());
    if h < MIN_FEATURE_SIDE || w < MIN_FEATURE_SIDE {
        return Err(Error::dim(format!(
            "features need at least {MIN_FEATURE_SIDE}x{MIN_FEATURE_SIDE}, got {h}x{w}"
        )));
    }
    let luma: Vec<f64> = img.luma().iter().map(|v| v.to_f64_lossy()).collect();
    let at = |y: usize, x: usize| luma[y * w + x];

    let n = (h - 2) * (w - 2);
    let mut mags = Vec::with_capacity(n);
    let mut lap = Vec::with_capacity(n);
    let (mut l1, mut l2sq) = (0.0, 0.0);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = 0.5 * (at(y, x + 1) - at(y, x - 1));
            let gy = 0.5 * (at(y + 1, x) - at(y - 1, x));
            l1 += gx.abs() + gy.abs();
            l2sq += gx * gx + gy * gy;
            mags.push(gx.hypot(gy));
            lap.push(at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1) - 4.0 * at(y, x));
        }
    }
    let l2 = l2sq.sqrt();
    let log_nsps = if l2 < NSPS_GUARD { 0.0 } else { (l1 / l2).ln() };
    let grad_energy = l2sq / n as f64;

    let k = ((SGRD_FRACTION * n as f64).round() as usize).max(1);
    mags.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    let sgrd = mags[..k].iter().sum::<f64>() / k as f64;

    let lap_mean = lap.iter().sum::<f64>() / n as f64;
    let lap_var = lap.iter().map(|v| (v - lap_mean).powi(2)).sum::<f64>() / n as f64;

    Ok(FeatureVector {
        log_nsps,
        grad_energy,
        sgrd,
        lap_var,
        hf_ratio: hf_ratio(&luma, h, w),
    })
}

fn hf_ratio(luma: &[f64], h: usize, w: usize) -> f64 {
    let mut plane: Vec<Complex<f64>> = luma.iter().map(|&v| Complex::new(v, 0.0)).collect();
    Fft2d::<f64>::new(h, w).forward_plane(&mut plane);
    let radius = h.min(w) as f64 / 4.0;
    let signed = |k: usize, n: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    let dc = plane[0].norm_sqr();
    let (mut high, mut ac) = (0.0, 0.0);
    for ky in 0..h {
        for kx in 0..w {
            if ky == 0 && kx == 0 {
                continue;
            }
            let e = plane[ky * w + kx].norm_sqr();
            ac += e;
            if signed(ky, h).hypot(signed(kx, w)) > radius {
                high += e;
            }
        }
    }
    // transform round-off on a flat image
    if ac > 1e-20 * dc {
        high / ac
    } else {
        0.0
    }
}
