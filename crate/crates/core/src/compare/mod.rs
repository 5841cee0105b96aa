//! Pairwise blur comparators.
//!
//! A comparator returns the probability that its first frame is blurrier
//! than its second. Every implementation here gives 0.5 for a frame
//! compared with itself and satisfies `f(a, b) + f(b, a) == 1`.

mod features;
mod model;
mod owe;

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use features::{features, FeatureVector, FEATURE_NAMES, MIN_FEATURE_SIDE};
pub use model::{pair_accuracy, train_feature_comparator, ComparatorModel, Training, TrainingPair};
pub use owe::{owe_scores, OweComparator};

use crate::error::{Error, Result};
use crate::imaging::{psnr, Image};
use crate::num::{logistic, Real};

/// An image plus whatever a comparator may need to know about it.
#[derive(Debug)]
pub struct Frame<T> {
    /// Position in the burst, when the frame belongs to one.
    pub index: Option<usize>,
    pub image: Image<T>,
    /// Ground-truth blur score, when known.
    pub zeta: Option<T>,
    features: OnceLock<FeatureVector>,
}

impl<T: Real> Clone for Frame<T> {
    fn clone(&self) -> Self {
        Frame {
            index: self.index,
            image: self.image.clone(),
            zeta: self.zeta,
            features: self.features.clone(),
        }
    }
}

impl<T: Real> Frame<T> {
    pub fn new(image: Image<T>) -> Self {
        Frame {
            index: None,
            image,
            zeta: None,
            features: OnceLock::new(),
        }
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn with_zeta(mut self, zeta: T) -> Self {
        self.zeta = Some(zeta);
        self
    }

    /// Features of the image, computed once.
    pub fn features(&self) -> Result<FeatureVector> {
        if let Some(f) = self.features.get() {
            return Ok(*f);
        }
        let f = features(&self.image)?;
        let _ = self.features.set(f);
        Ok(f)
    }
}

/// Frames for a burst: centered tiles of at most `tile` pixels per side,
/// indexed by position and labelled when scores are given.
pub fn burst_frames<T: Real>(burst: &[Image<T>], zetas: Option<&[T]>, tile: usize) -> Vec<Frame<T>> {
    burst
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let f = Frame::new(img.center_tile(tile)).with_index(i);
            match zetas {
                Some(z) => f.with_zeta(z[i]),
                None => f,
            }
        })
        .collect()
}

pub trait Comparator<T: Real>: Send + Sync {
    fn name(&self) -> String;

    /// Probability in `[0, 1]` that `a` is blurrier than `b`.
    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T>;
}

impl<T: Real, C: Comparator<T> + ?Sized> Comparator<T> for Box<C> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        (**self).compare(a, b)
    }
}

impl<T: Real, C: Comparator<T> + ?Sized> Comparator<T> for &C {
    fn name(&self) -> String {
        (**self).name()
    }
    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        (**self).compare(a, b)
    }
}

fn check_shapes<T: Real>(a: &Frame<T>, b: &Frame<T>) -> Result<()> {
    a.image.check_same_shape(&b.image, "compared frames")
}

fn indices<T: Real>(a: &Frame<T>, b: &Frame<T>, who: &str) -> Result<(usize, usize)> {
    match (a.index, b.index) {
        (Some(i), Some(j)) => Ok((i, j)),
        _ => Err(Error::MissingLabel(format!("{who} comparator needs burst indices"))),
    }
}

/// Ground truth from blur scores: 1 when `a` has the larger score.
#[derive(Clone, Copy, Debug, Default)]
pub struct Oracle;

impl<T: Real> Comparator<T> for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        check_shapes(a, b)?;
        let (za, zb) = match (a.zeta, b.zeta) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::MissingLabel("oracle comparator needs zeta for both frames".into())),
        };
        Ok(if za > zb {
            T::one()
        } else if za < zb {
            T::zero()
        } else {
            T::lit(0.5)
        })
    }
}

/// `1 - f(a, b)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reversed<C>(pub C);

impl<T: Real, C: Comparator<T>> Comparator<T> for Reversed<C> {
    fn name(&self) -> String {
        format!("reversed-{}", self.0.name())
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        Ok(T::one() - self.0.compare(a, b)?)
    }
}

/// Same value for every pair. Only antisymmetric for 0.5; meant for tests
/// of the normalization and stop logic.
#[derive(Clone, Copy, Debug)]
pub struct ConstantComparator(pub f64);

impl<T: Real> Comparator<T> for ConstantComparator {
    fn name(&self) -> String {
        format!("constant-{}", self.0)
    }

    fn compare(&self, _a: &Frame<T>, _b: &Frame<T>) -> Result<T> {
        Ok(T::lit(self.0))
    }
}

/// Fair coin per unordered pair of burst indices, fixed by the seed.
#[derive(Clone, Copy, Debug)]
pub struct CoinComparator {
    pub seed: u64,
}

impl<T: Real> Comparator<T> for CoinComparator {
    fn name(&self) -> String {
        format!("coin-{}", self.seed)
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        let (i, j) = indices(a, b, "coin")?;
        if i == j {
            return Ok(T::lit(0.5));
        }
        let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
        let key = self.seed ^ (lo << 32 | hi).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let heads = ChaCha8Rng::seed_from_u64(key).random::<bool>();
        // heads: the lower index is blurrier
        Ok(if heads == (i < j) { T::one() } else { T::zero() })
    }
}

/// Classical no-reference sharpness scores (higher means sharper).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Mean of the smallest gradient magnitudes.
    Sgrd,
    /// Normalized sparsity, negated.
    Nsps,
    LapVar,
    GradEnergy,
    HfRatio,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Sgrd => "sgrd",
            Metric::Nsps => "nsps",
            Metric::LapVar => "lap_var",
            Metric::GradEnergy => "grad_energy",
            Metric::HfRatio => "hf_ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Metric::Sgrd, Metric::Nsps, Metric::LapVar, Metric::GradEnergy, Metric::HfRatio]
            .into_iter()
            .find(|m| m.name() == s)
    }

    pub fn sharpness(self, f: &FeatureVector) -> f64 {
        match self {
            Metric::Sgrd => f.sgrd,
            Metric::Nsps => -f.log_nsps,
            Metric::LapVar => f.lap_var,
            Metric::GradEnergy => f.grad_energy,
            Metric::HfRatio => f.hf_ratio,
        }
    }
}

/// `logistic(s_b - s_a)` for one sharpness score `s`.
#[derive(Clone, Copy, Debug)]
pub struct SingleMetric(pub Metric);

impl<T: Real> Comparator<T> for SingleMetric {
    fn name(&self) -> String {
        self.0.name().into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        check_shapes(a, b)?;
        let (sa, sb) = (self.0.sharpness(&a.features()?), self.0.sharpness(&b.features()?));
        Ok(T::lit(logistic(sb - sa)))
    }
}

/// Trained linear model on feature differences.
#[derive(Clone, Debug)]
pub struct FeatureComparator {
    pub model: ComparatorModel,
}

impl FeatureComparator {
    pub fn new(model: ComparatorModel) -> Self {
        FeatureComparator { model }
    }
}

impl<T: Real> Comparator<T> for FeatureComparator {
    fn name(&self) -> String {
        "features".into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        check_shapes(a, b)?;
        Ok(T::lit(self.model.probability(&a.features()?, &b.features()?)))
    }
}

/// Probabilities produced elsewhere, keyed by burst index pairs. A missing
/// `(i, j)` falls back to `1 - P(j, i)`.
#[derive(Clone, Debug, Default)]
pub struct ExternalScores {
    table: HashMap<(usize, usize), f64>,
}

#[derive(serde::Deserialize)]
struct ScoreRow {
    i: usize,
    j: usize,
    p: f64,
}

impl ExternalScores {
    pub fn new(rows: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, j, p) in rows {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("score for ({i}, {j}) is {p}, outside [0, 1]")));
            }
            table.insert((i, j), p);
        }
        Ok(ExternalScores { table })
    }

    /// Reads CSV rows `i,j,p`. A header line `i,j,p` is optional.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |message: String| Error::Malformed {
            what: "score file",
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let has_header = text.trim_start().starts_with('i');
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            if has_header && line == 0 {
                continue;
            }
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row: ScoreRow = rec
                .deserialize(Some(&csv::StringRecord::from(vec!["i", "j", "p"])))
                .map_err(|e| bad(format!("line {}: {e}", line + 1)))?;
            rows.push((row.i, row.j, row.p));
        }
        Self::new(rows).map_err(|e| bad(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<T: Real> Comparator<T> for ExternalScores {
    fn name(&self) -> String {
        "external".into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        let (i, j) = indices(a, b, "external")?;
        if i == j {
            return Ok(T::lit(0.5));
        }
        if let Some(&p) = self.table.get(&(i, j)) {
            Ok(T::lit(p))
        } else if let Some(&p) = self.table.get(&(j, i)) {
            Ok(T::lit(1.0 - p))
        } else {
            Err(Error::MissingLabel(format!("no external score for pair ({i}, {j})")))
        }
    }
}

/// Full-reference judge: the frame with the lower PSNR against the sharp
/// reference is the blurrier one. The reference must have the frame size,
/// so build it from the same tile as the frames.
#[derive(Clone, Debug)]
pub struct ReferenceComparator<T> {
    pub reference: Image<T>,
}

impl<T: Real> ReferenceComparator<T> {
    pub fn new(reference: Image<T>) -> Self {
        ReferenceComparator { reference }
    }
}

impl<T: Real> Comparator<T> for ReferenceComparator<T> {
    fn name(&self) -> String {
        "reference".into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        check_shapes(a, b)?;
        let (pa, pb) = (psnr(&self.reference, &a.image)?, psnr(&self.reference, &b.image)?);
        Ok(if pa < pb {
            T::one()
        } else if pa > pb {
            T::zero()
        } else {
            T::lit(0.5)
        })
    }
}
