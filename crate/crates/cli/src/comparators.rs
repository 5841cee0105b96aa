use std::path::PathBuf;

use anyhow::Context;
use burstforge::compare::{
    Comparator, ComparatorModel, ExternalScores, FeatureComparator, Metric, Oracle, OweComparator, ReferenceComparator,
    SingleMetric,
};
use burstforge::eval::BurstSample;
use burstforge::fba::FbaParams;
use burstforge::FrameF;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::report::usage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparatorKind {
    /// Ground-truth blur scores from the manifest.
    Oracle,
    /// Trained logistic model on image features (needs --model).
    Features,
    /// Sparse-gradient sharpness.
    Sgrd,
    /// Normalized sparsity of gradients.
    Nsps,
    /// Share of the FBA weight energy.
    Owe,
    /// Per-pair probabilities from a CSV file `i,j,p` (needs --scores).
    External,
}

/// Decides whether a new reconstruction is blurrier than the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    Features,
    Sgrd,
    Nsps,
    Owe,
    /// PSNR against the burst's sharp reference.
    Reference,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ComparatorArgs {
    #[arg(long, value_enum, default_value_t = ComparatorKind::Owe)]
    pub comparator: ComparatorKind,
    /// Model file for the feature comparator.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Score file for the external comparator.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Frames are compared on centered tiles of at most this side.
    #[arg(long, default_value_t = 200)]
    pub tile: usize,
}

impl ComparatorArgs {
    pub fn check(&self) -> anyhow::Result<()> {
        if self.comparator == ComparatorKind::Features && self.model.is_none() {
            return Err(usage("--comparator features needs --model"));
        }
        if self.comparator == ComparatorKind::External && self.scores.is_none() {
            return Err(usage("--comparator external needs --scores"));
        }
        if self.tile == 0 {
            return Err(usage("--tile must be positive"));
        }
        Ok(())
    }

    pub fn load_model(&self) -> anyhow::Result<Option<ComparatorModel>> {
        match &self.model {
            Some(p) => Ok(Some(ComparatorModel::read(p)?)),
            None => Ok(None),
        }
    }

    /// The ranking comparator for one burst, given its tiles.
    pub fn ranker(
        &self,
        model: Option<&ComparatorModel>,
        tiles: &[FrameF],
        p: f64,
    ) -> anyhow::Result<Box<dyn Comparator<f64>>> {
        Ok(match self.comparator {
            ComparatorKind::Oracle => Box::new(Oracle),
            ComparatorKind::Features => Box::new(FeatureComparator::new(
                model.cloned().context("feature comparator without a model")?,
            )),
            ComparatorKind::Sgrd => Box::new(SingleMetric(Metric::Sgrd)),
            ComparatorKind::Nsps => Box::new(SingleMetric(Metric::Nsps)),
            ComparatorKind::Owe => {
                let images: Vec<_> = tiles.iter().map(|f| f.image.clone()).collect();
                let (h, w) = (images[0].height(), images[0].width());
                Box::new(OweComparator::for_burst(&images, FbaParams::image_relative(p, h, w)?)?)
            }
            ComparatorKind::External => {
                let path = self.scores.as_ref().context("external comparator without a score file")?;
                Box::new(ExternalScores::read_csv(path).with_context(|| format!("reading {}", path.display()))?)
            }
        })
    }

    /// The degradation judge. Without `--judge` it follows the comparator;
    /// the oracle becomes the reference judge, and external scores (which
    /// only cover burst frames) need an explicit choice.
    pub fn judge(
        &self,
        judge: Option<JudgeKind>,
        model: Option<&ComparatorModel>,
        sample: &BurstSample<f64>,
        tile: usize,
        p: f64,
    ) -> anyhow::Result<Box<dyn Comparator<f64>>> {
        let kind = match (judge, self.comparator) {
            (Some(j), _) => j,
            (None, ComparatorKind::Oracle) => JudgeKind::Reference,
            (None, ComparatorKind::Features) => JudgeKind::Features,
            (None, ComparatorKind::Sgrd) => JudgeKind::Sgrd,
            (None, ComparatorKind::Nsps) => JudgeKind::Nsps,
            (None, ComparatorKind::Owe) => JudgeKind::Owe,
            (None, ComparatorKind::External) => return Err(usage("--comparator external needs --judge")),
        };
        Ok(match kind {
            JudgeKind::Features => Box::new(FeatureComparator::new(
                model.cloned().ok_or_else(|| usage("--judge features needs --model"))?,
            )),
            JudgeKind::Sgrd => Box::new(SingleMetric(Metric::Sgrd)),
            JudgeKind::Nsps => Box::new(SingleMetric(Metric::Nsps)),
            JudgeKind::Owe => {
                let tile = sample.frames[0].center_tile(tile);
                Box::new(OweComparator::pairwise(FbaParams::image_relative(p, tile.height(), tile.width())?))
            }
            JudgeKind::Reference => {
                let sharp = sample
                    .sharp
                    .as_ref()
                    .context("the reference judge needs a sharp image in the manifest")?;
                Box::new(ReferenceComparator::new(sharp.center_tile(tile)))
            }
        })
    }
}
