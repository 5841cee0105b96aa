//! Fourier burst accumulation: the batch average, the incremental
//! accumulator, and deblurring with automatic frame selection.
//!
//! Every frame `x_t` contributes its spectrum `v_t` with the per-frequency
//! weight `vbar_t^p`, where `vbar_t` is the channel-mean magnitude of `v_t`
//! smoothed by a Gaussian. The result is
//! `ifft2(sum_t vbar_t^p v_t / sum_t vbar_t^p)`.
//!
//! Magnitudes are taken in the unitary scale (`|v| / sqrt(h w)`) before the
//! power so large `p` stays finite in single precision. The smoothing runs
//! with periodic boundaries on the unshifted spectrum, which keeps the
//! weights symmetric under `k -> -k` and the reconstruction real.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::compare::{Comparator, Frame};
use crate::error::{Error, Result};
use crate::imaging::{gaussian_smooth_with, Fft2d, Image, MagnitudeMap, SmoothBoundary, Spectrum};
use crate::num::Real;

pub const DEFAULT_P: f64 = 11.0;
pub const DEFAULT_SIGMA_S: f64 = 50.0;
/// `min(h, w) / SIGMA_DIVISOR` is the image-relative smoothing width.
pub const SIGMA_DIVISOR: f64 = 50.0;
/// Side of the centered tile used for degradation checks.
pub const DEFAULT_TILE: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FbaParams<T> {
    pub p: T,
    pub sigma_s: T,
}

impl<T: Real> Default for FbaParams<T> {
    fn default() -> Self {
        FbaParams {
            p: T::lit(DEFAULT_P),
            sigma_s: T::lit(DEFAULT_SIGMA_S),
        }
    }
}

impl<T: Real> FbaParams<T> {
    pub fn new(p: T, sigma_s: T) -> Result<Self> {
        let params = FbaParams { p, sigma_s };
        params.validate()?;
        Ok(params)
    }

    /// Smoothing proportional to the image size, `min(h, w) / 50`.
    pub fn image_relative(p: T, height: usize, width: usize) -> Result<Self> {
        Self::new(p, T::lit(height.min(width) as f64 / SIGMA_DIVISOR))
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= T::zero()) || !self.p.is_finite() {
            return Err(Error::param(format!("p must be finite and >= 0, got {}", self.p)));
        }
        if !(self.sigma_s >= T::zero()) || !self.sigma_s.is_finite() {
            return Err(Error::param(format!("sigma_s must be finite and >= 0, got {}", self.sigma_s)));
        }
        Ok(())
    }
}

/// `vbar^p` for one spectrum.
pub fn magnitude_weight<T: Real>(spec: &Spectrum<T>, params: &FbaParams<T>) -> Result<MagnitudeMap<T>> {
    params.validate()?;
    let n = spec.height * spec.width;
    let norm = T::one() / (T::from_usize_lossy(n).sqrt() * T::from_usize_lossy(spec.channels));
    let mut mean = vec![T::zero(); n];
    for c in 0..spec.channels {
        for (m, z) in mean.iter_mut().zip(spec.plane(c)) {
            *m = *m + z.norm();
        }
    }
    for m in &mut mean {
        *m = *m * norm;
    }
    let smoothed = gaussian_smooth_with(
        &MagnitudeMap::new(spec.height, spec.width, mean)?,
        params.sigma_s,
        SmoothBoundary::Wrap,
    )?;
    let values = smoothed.values.into_iter().map(|v| v.powf(params.p)).collect();
    MagnitudeMap::new(spec.height, spec.width, values)
}

/// A frame's spectrum together with its unnormalized weight map.
#[derive(Clone, Debug)]
pub struct WeightedSpectrum<T> {
    pub spectrum: Spectrum<T>,
    pub weight: MagnitudeMap<T>,
}

pub fn analyze_frame<T: Real>(fft: &Fft2d<T>, img: &Image<T>, params: &FbaParams<T>) -> Result<WeightedSpectrum<T>> {
    let spectrum = fft.forward(img)?;
    let weight = magnitude_weight(&spectrum, params)?;
    Ok(WeightedSpectrum { spectrum, weight })
}

fn check_burst<T: Real>(burst: &[Image<T>]) -> Result<()> {
    let first = burst.first().ok_or_else(|| Error::param("empty burst"))?;
    for (i, img) in burst.iter().enumerate().skip(1) {
        first.check_same_shape(img, &format!("burst frame {i}"))?;
    }
    Ok(())
}

fn analyze_burst<T: Real>(burst: &[Image<T>], params: &FbaParams<T>) -> Result<Vec<WeightedSpectrum<T>>> {
    check_burst(burst)?;
    params.validate()?;
    let fft = Fft2d::new(burst[0].height(), burst[0].width());
    burst.par_iter().map(|img| analyze_frame(&fft, img, params)).collect()
}

/// Per-frequency weights `w_t(f) = vbar_t^p / sum_i vbar_i^p`. At a
/// frequency where every `vbar_i^p` is zero the weights are uniform.
pub fn fba_weights<T: Real>(burst: &[Image<T>], params: &FbaParams<T>) -> Result<Vec<MagnitudeMap<T>>> {
    let frames = analyze_burst(burst, params)?;
    normalized_weights(&frames)
}

fn normalized_weights<T: Real>(frames: &[WeightedSpectrum<T>]) -> Result<Vec<MagnitudeMap<T>>> {
    let (h, w) = (frames[0].weight.height, frames[0].weight.width);
    let mut total = vec![T::zero(); h * w];
    for f in frames {
        for (t, &v) in total.iter_mut().zip(&f.weight.values) {
            *t = *t + v;
        }
    }
    let uniform = T::one() / T::from_usize_lossy(frames.len());
    frames
        .iter()
        .map(|f| {
            let values = f
                .weight
                .values
                .iter()
                .zip(&total)
                .map(|(&v, &t)| if t > T::zero() { v / t } else { uniform })
                .collect();
            MagnitudeMap::new(h, w, values)
        })
        .collect()
}

/// Batch reconstruction `ifft2(sum_t w_t v_t)`, real part, not clamped.
pub fn fba_unclamped<T: Real>(burst: &[Image<T>], params: &FbaParams<T>) -> Result<Image<T>> {
    let frames = analyze_burst(burst, params)?;
    let weights = normalized_weights(&frames)?;
    let first = &frames[0].spectrum;
    let (h, w, channels) = (first.height, first.width, first.channels);
    let fft = Fft2d::new(h, w);
    let planes = (0..channels).map(|c| {
        let mut plane = vec![Complex::new(T::zero(), T::zero()); h * w];
        for (f, wt) in frames.iter().zip(&weights) {
            for ((dst, &z), &k) in plane.iter_mut().zip(f.spectrum.plane(c)).zip(&wt.values) {
                *dst = *dst + z * k;
            }
        }
        plane
    });
    inverse_real(&fft, h, w, planes)
}

/// Inverse transform of each plane, keeping the real part. Fails when the
/// imaginary residue exceeds round-off.
fn inverse_real<T: Real>(
    fft: &Fft2d<T>,
    height: usize,
    width: usize,
    planes: impl Iterator<Item = Vec<Complex<T>>>,
) -> Result<Image<T>> {
    let mut real = Vec::new();
    let mut max_imag = T::zero();
    for mut plane in planes {
        fft.inverse_plane(&mut plane);
        max_imag = plane.iter().fold(max_imag, |m, z| m.max(z.im.abs()));
        real.push(plane.into_iter().map(|z| z.re).collect::<Vec<T>>());
    }
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    if !(max_imag <= tol) {
        return Err(Error::NonReal {
            max_imag: max_imag.to_f64_lossy(),
        });
    }
    Image::from_planes(height, width, &real)
}

/// Batch reconstruction clamped to `[0, 1]`.
pub fn fba<T: Real>(burst: &[Image<T>], params: &FbaParams<T>) -> Result<Image<T>> {
    Ok(fba_unclamped(burst, params)?.clamped())
}

/// Running state of the incremental accumulation: `omega = sum vbar_i^p`
/// and `weighted_sum = sum vbar_i^p v_i` over the frames absorbed so far.
pub struct SpectralAccumulator<T: Real> {
    params: FbaParams<T>,
    fft: Option<Fft2d<T>>,
    omega: Option<MagnitudeMap<T>>,
    weighted_sum: Option<Spectrum<T>>,
    t: usize,
}

impl<T: Real> SpectralAccumulator<T> {
    pub fn new(params: FbaParams<T>) -> Self {
        SpectralAccumulator {
            params,
            fft: None,
            omega: None,
            weighted_sum: None,
            t: 0,
        }
    }

    pub fn params(&self) -> &FbaParams<T> {
        &self.params
    }

    /// Frames absorbed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn omega(&self) -> Option<&MagnitudeMap<T>> {
        self.omega.as_ref()
    }

    pub fn weighted_sum(&self) -> Option<&Spectrum<T>> {
        self.weighted_sum.as_ref()
    }

    fn plan(&mut self, h: usize, w: usize) -> &Fft2d<T> {
        self.fft.get_or_insert_with(|| Fft2d::new(h, w))
    }

    /// Transforms and weighs a frame with this accumulator's settings.
    pub fn analyze(&mut self, img: &Image<T>) -> Result<WeightedSpectrum<T>> {
        let params = self.params;
        analyze_frame(self.plan(img.height(), img.width()), img, &params)
    }

    /// Adds an analyzed frame. The first frame fixes the dimensions.
    pub fn absorb(&mut self, frame: WeightedSpectrum<T>) -> Result<()> {
        let WeightedSpectrum { spectrum, weight } = frame;
        match (&mut self.omega, &mut self.weighted_sum) {
            (Some(omega), Some(sum)) => {
                if !sum.same_shape(&spectrum) {
                    return Err(Error::dim(format!(
                        "accumulator holds {}x{}x{}, frame is {}x{}x{}",
                        sum.height, sum.width, sum.channels, spectrum.height, spectrum.width, spectrum.channels
                    )));
                }
                let n = omega.values.len();
                for c in 0..sum.channels {
                    let dst = sum.plane_mut(c);
                    let src = spectrum.plane(c);
                    for i in 0..n {
                        dst[i] = dst[i] + src[i] * weight.values[i];
                    }
                }
                for (o, &w) in omega.values.iter_mut().zip(&weight.values) {
                    *o = *o + w;
                }
            }
            _ => {
                self.plan(spectrum.height, spectrum.width);
                let mut sum = spectrum;
                let n = weight.values.len();
                for c in 0..sum.channels {
                    let plane = sum.plane_mut(c);
                    for i in 0..n {
                        plane[i] = plane[i] * weight.values[i];
                    }
                }
                self.weighted_sum = Some(sum);
                self.omega = Some(weight);
            }
        }
        self.t += 1;
        Ok(())
    }

    /// One incremental step: absorbs `frame` and returns the new
    /// reconstruction (real part, not clamped).
    pub fn ifba_step(&mut self, frame: &Image<T>) -> Result<Image<T>> {
        let analyzed = self.analyze(frame)?;
        self.absorb(analyzed)?;
        self.reconstruct_unclamped()
    }

    /// `ifft2(weighted_sum / omega)`. Where `omega` is zero the running sum
    /// itself is used.
    pub fn reconstruct_unclamped(&self) -> Result<Image<T>> {
        let (omega, sum) = match (&self.omega, &self.weighted_sum) {
            (Some(o), Some(s)) => (o, s),
            _ => return Err(Error::param("accumulator is empty")),
        };
        let fft = self.fft.as_ref().expect("planned on first absorb");
        let planes = (0..sum.channels).map(|c| {
            sum.plane(c)
                .iter()
                .zip(&omega.values)
                .map(|(&z, &o)| if o > T::zero() { z / o } else { z })
                .collect::<Vec<Complex<T>>>()
        });
        inverse_real(fft, sum.height, sum.width, planes)
    }

    pub fn reconstruct(&self) -> Result<Image<T>> {
        Ok(self.reconstruct_unclamped()?.clamped())
    }
}

/// Outcome of [`ifba_deblur`].
#[derive(Clone, Debug)]
pub struct SelectionResult<T> {
    /// Clamped to `[0, 1]`.
    pub reconstruction: Image<T>,
    /// Positions in the sorted burst that were fused: always `0..k`.
    pub selected: Vec<usize>,
    /// Step at which the degradation check fired, if it did.
    pub stopped_at: Option<usize>,
    /// Probability that each new reconstruction is blurrier than the
    /// previous one, one entry per check.
    pub trace: Vec<T>,
}

/// Options for [`ifba_deblur`].
#[derive(Clone, Copy, Debug)]
pub struct DeblurOptions<T> {
    pub params: FbaParams<T>,
    pub stop: bool,
    pub tile: usize,
    /// Fuse at most this many frames.
    pub max_frames: Option<usize>,
}

impl<T: Real> Default for DeblurOptions<T> {
    fn default() -> Self {
        DeblurOptions {
            params: FbaParams::default(),
            stop: true,
            tile: DEFAULT_TILE,
            max_frames: None,
        }
    }
}

/// Normalized probability that `a` is blurrier than `b`. When both
/// directions are zero the raw value (zero) is returned.
fn degradation<T: Real, C: Comparator<T> + ?Sized>(c: &C, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
    let ab = c.compare(a, b)?;
    let ba = c.compare(b, a)?;
    let denom = ab + ba;
    Ok(if denom > T::zero() { ab / denom } else { ab })
}

/// Fuses the sorted burst one frame at a time. With `stop` enabled, each new
/// reconstruction is compared with the previous one on a centered tile, and
/// the procedure returns the previous reconstruction as soon as the new one
/// is judged at least as likely blurrier as not.
pub fn ifba_deblur<T: Real, C: Comparator<T> + ?Sized>(
    sorted: &[Image<T>],
    comparator: &C,
    opts: &DeblurOptions<T>,
) -> Result<SelectionResult<T>> {
    check_burst(sorted)?;
    opts.params.validate()?;
    let limit = opts.max_frames.unwrap_or(sorted.len()).min(sorted.len());
    if limit == 0 {
        return Err(Error::param("max_frames must be >= 1"));
    }
    let fft = Fft2d::new(sorted[0].height(), sorted[0].width());
    let analyzed: Vec<WeightedSpectrum<T>> = sorted[..limit]
        .par_iter()
        .map(|img| analyze_frame(&fft, img, &opts.params))
        .collect::<Result<_>>()?;

    let mut acc = SpectralAccumulator::new(opts.params);
    let mut previous: Option<(Image<T>, Frame<T>)> = None;
    let mut trace = Vec::new();
    for (t, frame) in analyzed.into_iter().enumerate() {
        acc.absorb(frame)?;
        let current = acc.reconstruct()?;
        if let (true, Some((prev_img, prev_frame))) = (opts.stop, &previous) {
            let cur_frame = Frame::new(current.center_tile(opts.tile));
            let d = degradation(comparator, &cur_frame, prev_frame).map_err(|e| match e {
                Error::Comparator { .. } => e,
                other => Error::Comparator {
                    i: t,
                    j: t - 1,
                    message: other.to_string(),
                },
            })?;
            trace.push(d);
            if d >= T::lit(0.5) {
                return Ok(SelectionResult {
                    reconstruction: prev_img.clone(),
                    selected: (0..t).collect(),
                    stopped_at: Some(t),
                    trace,
                });
            }
            previous = Some((current, cur_frame));
        } else {
            let tile = Frame::new(current.center_tile(opts.tile));
            previous = Some((current, tile));
        }
    }
    let (reconstruction, _) = previous.expect("at least one frame");
    Ok(SelectionResult {
        reconstruction,
        selected: (0..limit).collect(),
        stopped_at: None,
        trace,
    })
}
