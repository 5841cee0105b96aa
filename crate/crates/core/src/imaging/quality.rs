use serde::Serialize;

use super::Image;
use crate::error::{Error, Result};
use crate::num::Real;

/// PSNR reported for a perfect match (mse floored at 1e-12).
pub const PSNR_CAP_DB: f64 = 120.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quality {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn quality<T: Real>(reference: &Image<T>, img: &Image<T>) -> Result<Quality> {
    let mse = mse(reference, img)?;
    Ok(Quality {
        mse,
        psnr_db: psnr_from_mse(mse),
        ssim: ssim(reference, img)?,
    })
}

pub fn mse<T: Real>(reference: &Image<T>, img: &Image<T>) -> Result<f64> {
    reference.check_same_shape(img, "quality")?;
    let total: f64 = reference
        .data()
        .iter()
        .zip(img.data())
        .map(|(&a, &b)| {
            let d = (a - b).to_f64_lossy();
            d * d
        })
        .sum();
    Ok(total / reference.data().len() as f64)
}

/// Peak 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr<T: Real>(reference: &Image<T>, img: &Image<T>) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, img)?))
}

/// Best PSNR over integer translations of `img` within `max_shift` pixels,
/// measured on the interior that every translation keeps valid.
pub fn aligned_psnr<T: Real>(reference: &Image<T>, img: &Image<T>, max_shift: usize) -> Result<f64> {
    reference.check_same_shape(img, "aligned psnr")?;
    let (h, w) = (reference.height(), reference.width());
    if 2 * max_shift >= h.min(w) {
        return Err(Error::dim(format!("max_shift {max_shift} leaves no interior in a {h}x{w} image")));
    }
    let (ih, iw) = (h - 2 * max_shift, w - 2 * max_shift);
    let core = reference.crop(max_shift, max_shift, ih, iw)?;
    let mut best = f64::NEG_INFINITY;
    for top in 0..=2 * max_shift {
        for left in 0..=2 * max_shift {
            best = best.max(psnr(&core, &img.crop(top, left, ih, iw)?)?);
        }
    }
    Ok(best)
}

fn psnr_from_mse(mse: f64) -> f64 {
    10.0 * (1.0 / mse.max(1e-12)).log10()
}

/// Mean SSIM over all full 11x11 Gaussian windows (sigma 1.5), averaged
/// over channels. Images smaller than the window use the largest odd window
/// that fits.
pub fn ssim<T: Real>(reference: &Image<T>, img: &Image<T>) -> Result<f64> {
    reference.check_same_shape(img, "ssim")?;
    let (h, w) = (reference.height(), reference.width());
    let mut win = SSIM_WINDOW.min(h).min(w);
    if win % 2 == 0 {
        win -= 1;
    }
    let g = window_taps(win);
    let total: f64 = (0..reference.channels())
        .map(|c| {
            let a: Vec<f64> = reference.plane(c).iter().map(|v| v.to_f64_lossy()).collect();
            let b: Vec<f64> = img.plane(c).iter().map(|v| v.to_f64_lossy()).collect();
            ssim_plane(&a, &b, h, w, &g)
        })
        .sum();
    Ok(total / reference.channels() as f64)
}

fn window_taps(win: usize) -> Vec<f64> {
    let r = (win / 2) as f64;
    let taps: Vec<f64> = (0..win)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

fn valid_filter(src: &[f64], h: usize, w: usize, g: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = g.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|i| g[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| g[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, g: &[f64]) -> f64 {
    let c1 = 0.01f64.powi(2);
    let c2 = 0.03f64.powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let (mu_a, oh, ow) = valid_filter(a, h, w, g);
    let (mu_b, _, _) = valid_filter(b, h, w, g);
    let (e_aa, _, _) = valid_filter(&aa, h, w, g);
    let (e_bb, _, _) = valid_filter(&bb, h, w, g);
    let (e_ab, _, _) = valid_filter(&ab, h, w, g);
    let mut acc = 0.0;
    for i in 0..oh * ow {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    acc / (oh * ow) as f64
}
