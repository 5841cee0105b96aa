use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;

/// Weighted rank disagreement between ground-truth scores and an order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KendallReport {
    /// Weighted mass of discordant pairs.
    pub m: f64,
    /// The same quantity for the fully reversed order.
    pub m_rev: f64,
    /// `m / m_rev`, in `[0, 1]`.
    pub tau_bar: f64,
}

/// `delta[i]` is the ground-truth score of item `i` (larger is better) and
/// `gamma` lists items from best to worst.
///
/// A pair is discordant when the order disagrees with `delta`; it
/// contributes `|(max(delta_i, delta_j) - delta_min) (delta_i - delta_j)|`,
/// with `delta_min` the smallest score. Errors among the best items
/// therefore weigh most, and mistakes against the worst item weigh least.
pub fn weighted_kendall<T: Real>(delta: &[T], gamma: &[usize]) -> Result<KendallReport> {
    let n = delta.len();
    if gamma.len() != n {
        return Err(Error::dim(format!("{n} scores but {} ranked items", gamma.len())));
    }
    if n < 2 {
        return Err(Error::param("weighted Kendall distance needs at least two items"));
    }
    let mut position = vec![usize::MAX; n];
    for (pos, &item) in gamma.iter().enumerate() {
        if item >= n || position[item] != usize::MAX {
            return Err(Error::param(format!("ranking {gamma:?} is not a permutation of 0..{n}")));
        }
        position[item] = pos;
    }
    let delta: Vec<f64> = delta.iter().map(|d| d.to_f64_lossy()).collect();
    if let Some(i) = delta.iter().position(|d| !d.is_finite()) {
        return Err(Error::param(format!("score {i} is not finite")));
    }
    let d_min = delta.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut m, mut m_rev) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            if delta[i] == delta[j] {
                return Err(Error::Tie { i, j });
            }
            let w = ((delta[i].max(delta[j]) - d_min) * (delta[i] - delta[j])).abs();
            m_rev += w;
            // i ranks ahead of j exactly when position[i] < position[j]
            if (delta[i] > delta[j]) != (position[i] < position[j]) {
                m += w;
            }
        }
    }
    Ok(KendallReport {
        m,
        m_rev,
        tau_bar: m / m_rev,
    })
}

/// Ground-truth scores from blur scores: `max(zeta) - zeta_i + 1e-6`, so the
/// sharpest frame gets the largest score and every score is positive.
pub fn delta_from_zeta<T: Real>(zetas: &[T]) -> Vec<T> {
    let top = zetas.iter().cloned().fold(T::neg_infinity(), T::max);
    zetas.iter().map(|&z| top - z + T::lit(1e-6)).collect()
}
