use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::kendall::{delta_from_zeta, weighted_kendall};
use crate::compare::{burst_frames, Comparator, Frame, TrainingPair};
use crate::error::{Error, Result};
use crate::fba::{fba, ifba_deblur, DeblurOptions, FbaParams, DEFAULT_TILE};
use crate::imaging::{quality, Image};
use crate::kernel::{LoadedBurst, SynthBurst};
use crate::num::Real;
use crate::ranking::{rank_burst, RankMode, Strategy};

/// A burst with its labels, however it was obtained.
#[derive(Clone, Debug)]
pub struct BurstSample<T> {
    pub id: String,
    pub frames: Vec<Image<T>>,
    pub zetas: Vec<T>,
    pub shifts: Vec<[i32; 2]>,
    pub sharp: Option<Image<T>>,
}

impl<T: Real> BurstSample<T> {
    pub fn from_synth(id: impl Into<String>, burst: &SynthBurst<T>) -> Self {
        BurstSample {
            id: id.into(),
            frames: burst.images(),
            zetas: burst.zetas(),
            shifts: burst.frames.iter().map(|f| f.shift).collect(),
            sharp: Some(burst.sharp.clone()),
        }
    }

    pub fn from_loaded(id: impl Into<String>, burst: LoadedBurst<T>) -> Self {
        BurstSample {
            id: id.into(),
            zetas: burst.zetas(),
            shifts: burst.manifest.frames.iter().map(|f| f.shift).collect(),
            frames: burst.frames,
            sharp: burst.sharp,
        }
    }

    /// Centered tiles, indexed and labelled.
    pub fn tiles(&self, tile: usize) -> Vec<Frame<T>> {
        burst_frames(&self.frames, Some(&self.zetas), tile)
    }
}

/// Feature pairs for training: every within-burst pair whose scores differ
/// by at least `min_gap`, labelled 1 when the first frame is blurrier.
pub fn labelled_pairs<T: Real>(bursts: &[BurstSample<T>], min_gap: f64, tile: usize) -> Result<Vec<TrainingPair>> {
    let per_burst = bursts
        .par_iter()
        .map(|b| {
            let tiles = b.tiles(tile);
            let feats = tiles.iter().map(Frame::features).collect::<Result<Vec<_>>>()?;
            let z: Vec<f64> = b.zetas.iter().map(|v| v.to_f64_lossy()).collect();
            let mut out = Vec::new();
            for i in 0..z.len() {
                for j in i + 1..z.len() {
                    if (z[i] - z[j]).abs() >= min_gap {
                        out.push(TrainingPair {
                            first: feats[i],
                            second: feats[j],
                            label: if z[i] > z[j] { 1.0 } else { 0.0 },
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_burst.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SortingSettings {
    pub strategy: Strategy,
    pub mode: RankMode,
    pub tile: usize,
}

impl Default for SortingSettings {
    fn default() -> Self {
        SortingSettings {
            strategy: Strategy::Triangular,
            mode: RankMode::Soft,
            tile: DEFAULT_TILE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortingRow {
    pub burst_id: String,
    pub tau_bar: f64,
    pub m: f64,
    pub m_rev: f64,
    pub order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortingReport {
    pub comparator: String,
    pub settings_strategy: Strategy,
    pub settings_mode: RankMode,
    pub tile: usize,
    pub rows: Vec<SortingRow>,
    pub mean_tau_bar: f64,
}

/// Ranks every burst and scores the order against the blur scores.
/// `comparator_for` builds the comparator for one burst from its tiles.
pub fn run_sorting_experiment<T, F>(
    bursts: &[BurstSample<T>],
    comparator_for: F,
    settings: SortingSettings,
) -> Result<SortingReport>
where
    T: Real,
    F: Fn(&BurstSample<T>, &[Frame<T>]) -> Result<Box<dyn Comparator<T>>> + Sync,
{
    if bursts.is_empty() {
        return Err(Error::param("no bursts to sort"));
    }
    let rows: Vec<(String, SortingRow)> = bursts
        .par_iter()
        .map(|b| {
            let tiles = b.tiles(settings.tile);
            let c = comparator_for(b, &tiles)?;
            let rr = rank_burst(&tiles, &c, settings.strategy, settings.mode)?;
            let k = weighted_kendall(&delta_from_zeta(&b.zetas), &rr.gamma)?;
            Ok((
                c.name(),
                SortingRow {
                    burst_id: b.id.clone(),
                    tau_bar: k.tau_bar,
                    m: k.m,
                    m_rev: k.m_rev,
                    order: rr.gamma,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let comparator = rows[0].0.clone();
    let rows: Vec<SortingRow> = rows.into_iter().map(|(_, r)| r).collect();
    let mean_tau_bar = rows.iter().map(|r| r.tau_bar).sum::<f64>() / rows.len() as f64;
    Ok(SortingReport {
        comparator,
        settings_strategy: settings.strategy,
        settings_mode: settings.mode,
        tile: settings.tile,
        rows,
        mean_tau_bar,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeblurMode {
    /// Batch accumulation over all frames in input order.
    Fba,
    /// Sorted incremental accumulation with the degradation stop.
    Ifba,
    /// Sorted incremental accumulation over all frames.
    IfbaNoStop,
    /// The first `k` sorted frames, no stop.
    IfbaFixedK(usize),
}

impl fmt::Display for DeblurMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeblurMode::Fba => f.write_str("fba"),
            DeblurMode::Ifba => f.write_str("ifba"),
            DeblurMode::IfbaNoStop => f.write_str("ifba-nostop"),
            DeblurMode::IfbaFixedK(k) => write!(f, "ifba-fixed-{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeblurSettings<T> {
    pub params: FbaParams<T>,
    pub strategy: Strategy,
    pub mode: RankMode,
    pub tile: usize,
}

impl<T: Real> Default for DeblurSettings<T> {
    fn default() -> Self {
        DeblurSettings {
            params: FbaParams::default(),
            strategy: Strategy::Triangular,
            mode: RankMode::Soft,
            tile: DEFAULT_TILE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeblurRow {
    pub mode: String,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    /// Original frame indices that were fused, in fusion order.
    pub selected: Vec<usize>,
    pub stopped_at: Option<usize>,
    pub trace: Vec<f64>,
    /// How many selected frames carry a nonzero shift.
    pub shifted_selected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeblurReport {
    pub burst_id: String,
    /// Ranking used by the incremental modes, sharpest first.
    pub order: Option<Vec<usize>>,
    pub input_psnr: Option<Vec<f64>>,
    pub mean_input_psnr: Option<f64>,
    pub shifted_total: usize,
    pub rows: Vec<DeblurRow>,
}

/// Runs each mode on one burst. `ranker` sorts the frames; `judge` makes
/// the degradation decisions between reconstructions. Returns the report
/// and the reconstruction of every mode.
pub fn run_deblur_experiment<T, R, J>(
    sample: &BurstSample<T>,
    modes: &[DeblurMode],
    ranker: &R,
    judge: &J,
    settings: &DeblurSettings<T>,
) -> Result<(DeblurReport, Vec<Image<T>>)>
where
    T: Real,
    R: Comparator<T> + ?Sized,
    J: Comparator<T> + ?Sized,
{
    if sample.frames.is_empty() {
        return Err(Error::param("empty burst"));
    }
    let needs_order = modes.iter().any(|m| *m != DeblurMode::Fba);
    let order = if needs_order {
        let tiles = sample.tiles(settings.tile);
        Some(rank_burst(&tiles, ranker, settings.strategy, settings.mode)?.gamma)
    } else {
        None
    };
    let shifted = |i: usize| sample.shifts.get(i).is_some_and(|s| *s != [0, 0]);

    let input_psnr = match &sample.sharp {
        Some(sharp) => Some(
            sample
                .frames
                .iter()
                .map(|f| Ok(quality(sharp, f)?.psnr_db))
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    let mean_input_psnr = input_psnr.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64);

    let mut rows = Vec::with_capacity(modes.len());
    let mut images = Vec::with_capacity(modes.len());
    for &mode in modes {
        let (image, selected, stopped_at, trace) = match mode {
            DeblurMode::Fba => (
                fba(&sample.frames, &settings.params)?,
                (0..sample.frames.len()).collect(),
                None,
                Vec::new(),
            ),
            _ => {
                let order = order.as_ref().expect("ranked above");
                let sorted: Vec<Image<T>> = order.iter().map(|&i| sample.frames[i].clone()).collect();
                let opts = DeblurOptions {
                    params: settings.params,
                    stop: mode == DeblurMode::Ifba,
                    tile: settings.tile,
                    max_frames: match mode {
                        DeblurMode::IfbaFixedK(k) => Some(k),
                        _ => None,
                    },
                };
                if let DeblurMode::IfbaFixedK(k) = mode {
                    if k == 0 || k > sorted.len() {
                        return Err(Error::param(format!("k = {k} outside 1..={}", sorted.len())));
                    }
                }
                let r = ifba_deblur(&sorted, judge, &opts)?;
                let selected: Vec<usize> = r.selected.iter().map(|&p| order[p]).collect();
                (
                    r.reconstruction,
                    selected,
                    r.stopped_at,
                    r.trace.iter().map(|v| v.to_f64_lossy()).collect(),
                )
            }
        };
        let q = match &sample.sharp {
            Some(sharp) => Some(quality(sharp, &image)?),
            None => None,
        };
        rows.push(DeblurRow {
            mode: mode.to_string(),
            psnr_db: q.map(|q| q.psnr_db),
            ssim: q.map(|q| q.ssim),
            shifted_selected: selected.iter().filter(|&&i| shifted(i)).count(),
            selected,
            stopped_at,
            trace,
        });
        images.push(image);
    }
    Ok((
        DeblurReport {
            burst_id: sample.id.clone(),
            order,
            input_psnr,
            mean_input_psnr,
            shifted_total: (0..sample.frames.len()).filter(|&i| shifted(i)).count(),
            rows,
        },
        images,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::{CoinComparator, Oracle, ReferenceComparator, Reversed};
    use crate::kernel::{synthesize_burst, SynthConfig};
    use crate::scene::random_scene;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64, frames: usize) -> BurstSample<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sharp = random_scene(48, 48, 3, &mut rng).unwrap();
        let cfg = SynthConfig {
            frames,
            canvas: 31,
            m_max: 12.0,
            seed,
            ..SynthConfig::default()
        };
        BurstSample::from_synth(format!("b{seed}"), &synthesize_burst(&sharp, &cfg).unwrap())
    }

    #[test]
    fn oracle_and_reversed_oracle() {
        let bursts: Vec<_> = (0..4).map(|s| sample(s, 6)).collect();
        let r = run_sorting_experiment(&bursts, |_, _| Ok(Box::new(Oracle)), SortingSettings::default()).unwrap();
        assert_eq!(r.mean_tau_bar, 0.0);
        assert_eq!(r.comparator, "oracle");
        let r = run_sorting_experiment(&bursts, |_, _| Ok(Box::new(Reversed(Oracle))), SortingSettings::default())
            .unwrap();
        assert!(r.rows.iter().all(|row| row.tau_bar == 1.0));
        let r = run_sorting_experiment(
            &bursts,
            |_, _| Ok(Box::new(CoinComparator { seed: 1 })),
            SortingSettings::default(),
        )
        .unwrap();
        assert!((0.0..=1.0).contains(&r.mean_tau_bar));
    }

    #[test]
    fn fixed_k_edges() {
        let s = sample(7, 5);
        let sharp = s.sharp.clone().unwrap();
        let judge = ReferenceComparator::new(sharp.center_tile(DEFAULT_TILE));
        let settings = DeblurSettings::default();
        let modes = [DeblurMode::Fba, DeblurMode::IfbaFixedK(5), DeblurMode::IfbaFixedK(1), DeblurMode::Ifba];
        let (report, images) = run_deblur_experiment(&s, &modes, &Oracle, &judge, &settings).unwrap();
        let psnr = |i: usize| report.rows[i].psnr_db.unwrap();
        assert!((psnr(0) - psnr(1)).abs() < 0.01);
        let order = report.order.clone().unwrap();
        assert_eq!(report.rows[2].selected, vec![order[0]]);
        assert!((psnr(2) - report.input_psnr.as_ref().unwrap()[order[0]]).abs() < 1e-9);
        assert!(images[2].max_abs_diff(&s.frames[order[0]].clamped()) < 1e-10);
        let z: Vec<f64> = order.iter().map(|&i| s.zetas[i]).collect();
        assert!(z.windows(2).all(|w| w[0] <= w[1]));
        assert!(run_deblur_experiment(&s, &[DeblurMode::IfbaFixedK(6)], &Oracle, &judge, &settings).is_err());
    }
}
