use super::{check_shapes, Comparator, Frame};
use crate::error::Result;
use crate::fba::{fba_weights, FbaParams};
use crate::imaging::Image;
use crate::num::{logistic, Real};

/// Overall weights energy: the sum over frequencies of each frame's
/// normalized FBA weight. The values add up to `h * w` across the burst.
pub fn owe_scores<T: Real>(burst: &[Image<T>], p: T, sigma_s: T) -> Result<Vec<T>> {
    let params = FbaParams::new(p, sigma_s)?;
    Ok(fba_weights(burst, &params)?.iter().map(|w| w.sum()).collect())
}

/// Ranks by OWE, a larger share meaning sharper. Scores are looked up by
/// burst index when a table is present; otherwise (or for frames without an
/// index, such as reconstructions) the two frames are scored as a pair.
#[derive(Clone, Debug)]
pub struct OweComparator<T> {
    pub params: FbaParams<T>,
    /// Per-frame energy divided by `h * w`.
    table: Option<Vec<T>>,
}

impl<T: Real> OweComparator<T> {
    pub fn pairwise(params: FbaParams<T>) -> Self {
        OweComparator { params, table: None }
    }

    /// Precomputes scores for a whole burst (use the same tiles the
    /// comparator will see).
    pub fn for_burst(burst: &[Image<T>], params: FbaParams<T>) -> Result<Self> {
        let scores = owe_scores(burst, params.p, params.sigma_s)?;
        let area = T::from_usize_lossy(burst[0].pixels());
        Ok(OweComparator {
            params,
            table: Some(scores.into_iter().map(|e| e / area).collect()),
        })
    }
}

impl<T: Real> Comparator<T> for OweComparator<T> {
    fn name(&self) -> String {
        "owe".into()
    }

    fn compare(&self, a: &Frame<T>, b: &Frame<T>) -> Result<T> {
        check_shapes(a, b)?;
        if let (Some(table), Some(i), Some(j)) = (&self.table, a.index, b.index) {
            if i < table.len() && j < table.len() {
                return Ok(logistic(table[j] - table[i]));
            }
        }
        let e = owe_scores(&[a.image.clone(), b.image.clone()], self.params.p, self.params.sigma_s)?;
        let area = T::from_usize_lossy(a.image.pixels());
        Ok(logistic((e[1] - e[0]) / area))
    }
}
