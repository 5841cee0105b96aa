//! Bradley–Terry strengths from pairwise win counts, fitted by
//! minorization–maximization (MM).
//!
//! Under the model item `i` beats item `j` with probability
//! `pi_i / (pi_i + pi_j)`. Each MM step replaces every strength at once with
//! `W_i / sum_j n_ij / (pi_i + pi_j)`, where `W_i` counts the wins of `i` and
//! `n_ij` the games between `i` and `j`. The log-likelihood never decreases
//! along the iteration; strengths are rescaled to sum to one after each step.
//!
//! The maximum-likelihood estimate exists only when every item can be
//! reached from every other along "beat" edges; [`bt_fit`] checks this
//! up front.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BtResult {
    /// Positive strengths summing to one.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood before the first step and after each step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// `sum_{i != j} wins[i][j] * ln(pi_i / (pi_i + pi_j))`.
pub fn log_likelihood(wins: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && wins[i][j] > 0.0 {
                ll += wins[i][j] * (pi[i] / (pi[i] + pi[j])).ln();
            }
        }
    }
    ll
}

fn validate(wins: &[Vec<f64>]) -> Result<()> {
    let n = wins.len();
    if n < 2 {
        return Err(Error::param("Bradley-Terry fit needs at least two items"));
    }
    for (i, row) in wins.iter().enumerate() {
        if row.len() != n {
            return Err(Error::dim(format!("wins row {i} has {} entries, expected {n}", row.len())));
        }
        if let Some(j) = row.iter().position(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::param(format!("wins[{i}][{j}] must be finite and >= 0")));
        }
    }
    for (i, row) in wins.iter().enumerate() {
        if (0..n).filter(|&j| j != i).all(|j| row[j] == 0.0) {
            return Err(Error::DegenerateLikelihood {
                item: i,
                reason: "item has zero wins".into(),
            });
        }
    }
    // every item must reach item 0 and be reached from it along beat edges
    for (forward, what) in [(true, "cannot be reached from item 0"), (false, "cannot reach item 0")] {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let edge = if forward { wins[u][v] } else { wins[v][u] };
                if v != u && edge > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if let Some(item) = seen.iter().position(|s| !s) {
            let linked = (0..n).any(|j| j != item && wins[item][j] + wins[j][item] > 0.0);
            return Err(Error::DegenerateLikelihood {
                item,
                reason: if linked {
                    format!("comparison graph is not strongly connected: item {what}")
                } else {
                    "item was never compared".into()
                },
            });
        }
    }
    Ok(())
}

/// `wins[i][j]` counts the times item `i` beat item `j`.
pub fn bt_fit(wins: &[Vec<f64>], max_iter: usize, tol: f64) -> Result<BtResult> {
    validate(wins)?;
    let n = wins.len();
    let total_wins: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| wins[i][j]).sum())
        .collect();
    let mut pi = vec![1.0 / n as f64; n];
    let mut ll = log_likelihood(wins, &pi);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                let denom: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (wins[i][j] + wins[j][i]) / (pi[i] + pi[j]))
                    .sum();
                total_wins[i] / denom
            })
            .collect();
        let s: f64 = next.iter().sum();
        for v in &mut next {
            *v /= s;
        }
        let change = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        let new_ll = log_likelihood(wins, &pi);
        debug_assert!(new_ll >= ll - 1e-9 * ll.abs().max(1.0), "MM step lowered the likelihood");
        ll = new_ll;
        trace.push(ll);
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(BtResult {
        scores: pi,
        iterations,
        log_likelihood: ll,
        trace,
        converged,
    })
}
