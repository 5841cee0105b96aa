//! Pair-probability matrices, crisp and soft rank scores, and burst sorting.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::compare::{Comparator, Frame};
use crate::error::{Error, Result};
use crate::num::Real;

/// Which ordered pairs are sent to the comparator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Both orders of every pair, then `P(i, j) = f(i, j) / (f(i, j) + f(j, i))`.
    Full,
    /// `i < j` only, taken as is; the other half is `1 - P(i, j)`.
    #[default]
    Triangular,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Count of pairs with `P >= 0.5`.
    Crisp,
    /// Sum of probabilities.
    #[default]
    Soft,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Full => "full",
            Strategy::Triangular => "triangular",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Strategy::Full),
            "triangular" => Ok(Strategy::Triangular),
            _ => Err(Error::param(format!("unknown strategy {s:?}"))),
        }
    }
}

impl fmt::Display for RankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMode::Crisp => "crisp",
            RankMode::Soft => "soft",
        })
    }
}

impl FromStr for RankMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crisp" => Ok(RankMode::Crisp),
            "soft" => Ok(RankMode::Soft),
            _ => Err(Error::param(format!("unknown rank mode {s:?}"))),
        }
    }
}

/// `P[i][j]`: probability that frame `i` is blurrier than frame `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairProb<T> {
    n: usize,
    values: Vec<T>,
    pub strategy: Strategy,
}

impl<T: Real> PairProb<T> {
    /// Checks the diagonal, the range and `P[i][j] + P[j][i] = 1` (within 1e-12).
    pub fn from_matrix(n: usize, values: Vec<T>, strategy: Strategy) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::dim(format!("{n}x{n} matrix needs {} entries, got {}", n * n, values.len())));
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            if values[i * n + i] != T::lit(0.5) {
                return Err(Error::param(format!("P[{i}][{i}] must be 0.5")));
            }
            for j in 0..n {
                let p = values[i * n + j];
                if !(p >= T::zero() && p <= T::one()) {
                    return Err(Error::param(format!("P[{i}][{j}] = {p} outside [0, 1]")));
                }
                if (p + values[j * n + i] - T::one()).abs() > tol {
                    return Err(Error::param(format!("P[{i}][{j}] + P[{j}][{i}] != 1")));
                }
            }
        }
        Ok(PairProb { n, values, strategy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

fn checked_compare<T: Real, C: Comparator<T> + ?Sized>(c: &C, frames: &[Frame<T>], i: usize, j: usize) -> Result<T> {
    let v = c.compare(&frames[i], &frames[j]).map_err(|e| match e {
        Error::Comparator { .. } => e,
        other => Error::Comparator {
            i,
            j,
            message: other.to_string(),
        },
    })?;
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::Comparator {
            i,
            j,
            message: format!("returned {v}, outside [0, 1]"),
        });
    }
    Ok(v)
}

/// Builds the pair matrix for a burst. Comparator calls run in parallel;
/// the assembly does not depend on their completion order.
pub fn pair_probabilities<T: Real, C: Comparator<T> + ?Sized>(
    frames: &[Frame<T>],
    comparator: &C,
    strategy: Strategy,
) -> Result<PairProb<T>> {
    let n = frames.len();
    if n == 0 {
        return Err(Error::param("empty burst"));
    }
    for (k, f) in frames.iter().enumerate().skip(1) {
        frames[0].image.check_same_shape(&f.image, &format!("burst frame {k}"))?;
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let half = T::lit(0.5);
    let mut values = vec![half; n * n];
    match strategy {
        Strategy::Triangular => {
            let raw: Vec<T> = pairs
                .par_iter()
                .map(|&(i, j)| checked_compare(comparator, frames, i, j))
                .collect::<Result<_>>()?;
            for (&(i, j), p) in pairs.iter().zip(raw) {
                values[i * n + j] = p;
                values[j * n + i] = T::one() - p;
            }
        }
        Strategy::Full => {
            let raw: Vec<(T, T)> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    Ok((
                        checked_compare(comparator, frames, i, j)?,
                        checked_compare(comparator, frames, j, i)?,
                    ))
                })
                .collect::<Result<_>>()?;
            for (&(i, j), (fij, fji)) in pairs.iter().zip(raw) {
                let total = fij + fji;
                if !(total > T::zero()) {
                    return Err(Error::DegeneratePair { i, j });
                }
                let p = fij / total;
                values[i * n + j] = p;
                values[j * n + i] = T::one() - p;
            }
        }
    }
    Ok(PairProb { n, values, strategy })
}

/// Scores and the resulting order. Lower scores are sharper.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankResult<T> {
    pub r_crisp: Vec<usize>,
    pub r_soft: Vec<T>,
    /// Frame indices from sharpest to blurriest.
    pub gamma: Vec<usize>,
    pub mode: RankMode,
}

pub fn rank_scores<T: Real>(pp: &PairProb<T>, mode: RankMode) -> RankResult<T> {
    let n = pp.n();
    let half = T::lit(0.5);
    let r_crisp: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && pp.get(i, j) >= half).count())
        .collect();
    let r_soft: Vec<T> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| pp.get(i, j)).sum())
        .collect();
    let mut gamma: Vec<usize> = (0..n).collect();
    match mode {
        RankMode::Crisp => gamma.sort_by_key(|&i| r_crisp[i]),
        RankMode::Soft => gamma.sort_by(|&a, &b| r_soft[a].partial_cmp(&r_soft[b]).expect("finite scores")),
    }
    RankResult {
        r_crisp,
        r_soft,
        gamma,
        mode,
    }
}

/// Pair matrix and scores in one call.
pub fn rank_burst<T: Real, C: Comparator<T> + ?Sized>(
    frames: &[Frame<T>],
    comparator: &C,
    strategy: Strategy,
    mode: RankMode,
) -> Result<RankResult<T>> {
    Ok(rank_scores(&pair_probabilities(frames, comparator, strategy)?, mode))
}

/// Reorders anything indexed like the burst, sharpest first.
pub fn sort_burst<X: Clone, T>(burst: &[X], rr: &RankResult<T>) -> Result<Vec<X>> {
    if burst.len() != rr.gamma.len() {
        return Err(Error::dim(format!(
            "burst has {} frames, ranking has {}",
            burst.len(),
            rr.gamma.len()
        )));
    }
    Ok(rr.gamma.iter().map(|&i| burst[i].clone()).collect())
}

/// JSON shape of a ranking.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub order: Vec<usize>,
    pub r_soft: Vec<f64>,
    pub r_crisp: Vec<usize>,
    pub strategy: Strategy,
    pub mode: RankMode,
    pub comparator: String,
}

impl RankReport {
    pub fn new<T: Real>(rr: &RankResult<T>, strategy: Strategy, comparator: String) -> Self {
        RankReport {
            order: rr.gamma.clone(),
            r_soft: rr.r_soft.iter().map(|v| v.to_f64_lossy()).collect(),
            r_crisp: rr.r_crisp.clone(),
            strategy,
            mode: rr.mode,
            comparator,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::{ConstantComparator, FeatureComparator, ComparatorModel, Oracle, SingleMetric, Metric};
    use crate::imaging::Image;
    use crate::scene::random_scene;
    use proptest::prelude::*;
    use super::Strategy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labelled(zetas: &[f64]) -> Vec<Frame<f64>> {
        zetas
            .iter()
            .enumerate()
            .map(|(i, &z)| Frame::new(Image::filled(4, 4, 1, 0.5).unwrap()).with_index(i).with_zeta(z))
            .collect()
    }

    #[test]
    fn single_frame() {
        let pp = pair_probabilities(&labelled(&[0.3]), &Oracle, Strategy::Full).unwrap();
        assert_eq!(pp.values(), &[0.5]);
    }

    #[test]
    fn constant_comparator_normalizes_to_half() {
        let pp = pair_probabilities(&labelled(&[0.1, 0.2, 0.3]), &ConstantComparator(0.7), Strategy::Full).unwrap();
        assert!(pp.values().iter().all(|&v| v == 0.5));
        let zero = pair_probabilities(&labelled(&[0.1, 0.2]), &ConstantComparator(0.0), Strategy::Full);
        assert!(matches!(zero, Err(Error::DegeneratePair { i: 0, j: 1 })));
        let bad = pair_probabilities(&labelled(&[0.1, 0.2]), &ConstantComparator(1.5), Strategy::Triangular);
        assert!(matches!(bad, Err(Error::Comparator { i: 0, j: 1, .. })));
    }

    #[test]
    fn comparator_error_names_pair() {
        let mut frames = labelled(&[0.1, 0.2, 0.3]);
        frames[2].zeta = None;
        match pair_probabilities(&frames, &Oracle, Strategy::Triangular) {
            Err(Error::Comparator { i: 0, j: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strict_order_scores() {
        // frame 0 sharpest, frame 2 blurriest
        let pp = PairProb::from_matrix(3, vec![0.5, 0.2, 0.1, 0.8, 0.5, 0.3, 0.9, 0.7, 0.5], Strategy::Full).unwrap();
        let rr = rank_scores(&pp, RankMode::Crisp);
        assert_eq!(rr.r_crisp, vec![0, 1, 2]);
        assert_eq!(rr.gamma, vec![0, 1, 2]);
    }

    #[test]
    fn all_half_keeps_identity() {
        let n = 5;
        let pp = PairProb::from_matrix(n, vec![0.5; n * n], Strategy::Full).unwrap();
        for mode in [RankMode::Soft, RankMode::Crisp] {
            let rr = rank_scores(&pp, mode);
            assert!(rr.r_soft.iter().all(|&v| v == 2.0));
            assert_eq!(rr.gamma, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn binary_matrix_soft_equals_crisp() {
        let pp = pair_probabilities(&labelled(&[0.4, 0.1, 0.9, 0.3]), &Oracle, Strategy::Triangular).unwrap();
        let rr = rank_scores(&pp, RankMode::Soft);
        for i in 0..4 {
            assert_eq!(rr.r_soft[i], rr.r_crisp[i] as f64);
        }
        assert_eq!(rr.gamma, vec![1, 3, 0, 2]);
    }

    #[test]
    fn sort_burst_permutes() {
        let rr = RankResult {
            r_crisp: vec![2, 1, 0],
            r_soft: vec![2.0, 1.0, 0.0],
            gamma: vec![2, 1, 0],
            mode: RankMode::Crisp,
        };
        assert_eq!(sort_burst(&["a", "b", "c"], &rr).unwrap(), vec!["c", "b", "a"]);
        let id = RankResult { gamma: vec![0, 1, 2], ..rr.clone() };
        assert_eq!(sort_burst(&["a", "b", "c"], &id).unwrap(), vec!["a", "b", "c"]);
        assert!(sort_burst(&["a"], &rr).is_err());
    }

    #[test]
    fn full_and_triangular_agree_for_antisymmetric() {
        let model = ComparatorModel::new([0.4, -20.0, -3.0, -8.0, -1.0]);
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frames: Vec<Frame<f64>> = (0..5)
                .map(|i| Frame::new(random_scene(24, 24, 3, &mut rng).unwrap()).with_index(i))
                .collect();
            for c in [
                Box::new(FeatureComparator::new(model.clone())) as Box<dyn Comparator<f64>>,
                Box::new(SingleMetric(Metric::LapVar)),
            ] {
                let a = pair_probabilities(&frames, &c, Strategy::Full).unwrap();
                let b = pair_probabilities(&frames, &c, Strategy::Triangular).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    /// Arbitrary, non-antisymmetric outputs in (0, 1].
    struct Table(Vec<f64>, usize);

    impl Comparator<f64> for Table {
        fn name(&self) -> String {
            "table".into()
        }
        fn compare(&self, a: &Frame<f64>, b: &Frame<f64>) -> Result<f64> {
            Ok(self.0[a.index.unwrap() * self.1 + b.index.unwrap()])
        }
    }

    proptest! {
        #[test]
        fn full_strategy_repairs_trichotomy(n in 1usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table: Vec<f64> = (0..n * n).map(|_| rng.random_range(1e-3..=1.0)).collect();
            let frames = labelled(&vec![0.0; n]);
            let pp = pair_probabilities(&frames, &Table(table, n), Strategy::Full).unwrap();
            for i in 0..n {
                prop_assert_eq!(pp.get(i, i), 0.5);
                for j in 0..n {
                    prop_assert!((pp.get(i, j) + pp.get(j, i) - 1.0).abs() < 1e-12);
                }
            }
            for mode in [RankMode::Crisp, RankMode::Soft] {
                let rr = rank_scores(&pp, mode);
                let mut sorted = rr.gamma.clone();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
                prop_assert!(rr.r_crisp.iter().all(|&v| v < n));
                prop_assert!(rr.r_soft.iter().all(|&v| v >= 0.0 && v <= (n - 1) as f64));
                // stable: equal scores keep index order
                for w in rr.gamma.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    match mode {
                        RankMode::Crisp => {
                            prop_assert!(rr.r_crisp[a] < rr.r_crisp[b] || (rr.r_crisp[a] == rr.r_crisp[b] && a < b))
                        }
                        RankMode::Soft => {
                            prop_assert!(rr.r_soft[a] < rr.r_soft[b] || (rr.r_soft[a] == rr.r_soft[b] && a < b))
                        }
                    }
                }
            }
        }

        #[test]
        fn oracle_ranking_is_permutation_invariant(seed in any::<u64>(), n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let zetas: Vec<f64> = (0..n).map(|i| rng.random::<f64>() + i as f64 * 1e-6).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<f64> = perm.iter().map(|&i| zetas[i]).collect();
            let sorted_zeta = |z: &[f64]| {
                let rr = rank_burst(&labelled(z), &Oracle, Strategy::Triangular, RankMode::Soft).unwrap();
                sort_burst(z, &rr).unwrap()
            };
            let a = sorted_zeta(&zetas);
            prop_assert_eq!(&a, &sorted_zeta(&permuted));
            prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
