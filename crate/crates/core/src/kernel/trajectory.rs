use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Parameters of the camera-shake random walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams<T> {
    pub num_samples: usize,
    /// Gain of the Gaussian velocity noise.
    pub anxiety: T,
    /// Per-step probability of a direction reversal.
    pub impulse_prob: T,
    /// Pull toward the origin.
    pub centripetal_gain: T,
    /// Total path length in pixels after rescaling.
    pub length: T,
}

impl<T: Real> Default for TrajectoryParams<T> {
    fn default() -> Self {
        TrajectoryParams {
            num_samples: 2000,
            anxiety: T::lit(0.008),
            impulse_prob: T::lit(0.005),
            centripetal_gain: T::lit(0.7),
            length: T::zero(),
        }
    }
}

impl<T: Real> TrajectoryParams<T> {
    pub fn with_length(mut self, length: T) -> Self {
        self.length = length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::param("num_samples must be >= 1"));
        }
        if !(self.anxiety >= T::zero()) {
            return Err(Error::param(format!("anxiety must be >= 0, got {}", self.anxiety)));
        }
        if !(self.impulse_prob >= T::zero() && self.impulse_prob <= T::one()) {
            return Err(Error::param(format!(
                "impulse_prob must lie in [0, 1], got {}",
                self.impulse_prob
            )));
        }
        if !(self.centripetal_gain.is_finite()) {
            return Err(Error::param("centripetal_gain must be finite"));
        }
        if !(self.length >= T::zero()) || !self.length.is_finite() {
            return Err(Error::param(format!("length must be finite and >= 0, got {}", self.length)));
        }
        Ok(())
    }
}

/// Continuous shake path in pixels, zero-mean, with total length `length`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    /// `[x, y]` positions; x runs along columns, y along rows.
    pub points: Vec<[T; 2]>,
    pub length: T,
}

impl<T: Real> Trajectory<T> {
    /// Path from explicit points, re-centered to zero mean. `length` is measured.
    pub fn from_points(points: Vec<[T; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("trajectory needs at least one point"));
        }
        let mut t = Trajectory {
            points,
            length: T::zero(),
        };
        t.center();
        t.length = t.path_length();
        Ok(t)
    }

    pub fn path_length(&self) -> T {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    pub fn mean(&self) -> [T; 2] {
        let n = T::from_usize_lossy(self.points.len());
        let sx: T = self.points.iter().map(|p| p[0]).sum();
        let sy: T = self.points.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }

    fn center(&mut self) {
        let [mx, my] = self.mean();
        for p in &mut self.points {
            p[0] = p[0] - mx;
            p[1] = p[1] - my;
        }
    }

    /// Largest |x| or |y| over the path.
    pub fn extent(&self) -> T {
        self.points
            .iter()
            .fold(T::zero(), |m, p| m.max(p[0].abs()).max(p[1].abs()))
    }
}

/// Second-order random walk, rescaled to path length `params.length`.
///
/// Starting from the origin with a unit velocity of random heading, each step
/// applies `v += anxiety * g - centripetal_gain * p / N` with `g` a standard
/// 2-D Gaussian draw, reverses `v` with probability `impulse_prob`, and
/// advances `p += v / N`. The walk runs in `f64` regardless of `T`, so the
/// same seed gives the same path in either precision.
pub fn gen_trajectory<T: Real, R: Rng + ?Sized>(
    params: &TrajectoryParams<T>,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    params.validate()?;
    let n = params.num_samples;
    let nf = n as f64;
    let anxiety = params.anxiety.to_f64_lossy();
    let pull = params.centripetal_gain.to_f64_lossy();
    let impulse = params.impulse_prob.to_f64_lossy();

    let heading = rng.random::<f64>() * std::f64::consts::TAU;
    let mut v = [heading.cos(), heading.sin()];
    let mut p = [0.0f64, 0.0];
    let mut raw = Vec::with_capacity(n);
    raw.push(p);
    for _ in 1..n {
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        v[0] += anxiety * gx - pull * p[0] / nf;
        v[1] += anxiety * gy - pull * p[1] / nf;
        if rng.random::<f64>() < impulse {
            v = [-v[0], -v[1]];
        }
        p[0] += v[0] / nf;
        p[1] += v[1] / nf;
        raw.push(p);
    }

    let total: f64 = raw
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum();
    let target = params.length.to_f64_lossy();
    let scale = if target == 0.0 || total == 0.0 {
        0.0
    } else {
        target / total
    };
    let (mx, my) = raw
        .iter()
        .fold((0.0, 0.0), |(sx, sy), q| (sx + q[0], sy + q[1]));
    let (mx, my) = (mx / nf, my / nf);
    let points = raw
        .into_iter()
        .map(|q| [T::lit((q[0] - mx) * scale), T::lit((q[1] - my) * scale)])
        .collect();
    Ok(Trajectory {
        points,
        length: if scale == 0.0 { T::zero() } else { params.length },
    })
}
