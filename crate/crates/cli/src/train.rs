use std::path::{Path, PathBuf};

use anyhow::Context;
use burstforge::compare::{pair_accuracy, train_feature_comparator, TrainingPair};
use burstforge::eval::{labelled_pairs, BurstSample};
use burstforge::kernel::load_burst;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::report::{emit, usage};

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    /// JSON file: `{"pairs": [{first, second, label}]}` with feature
    /// vectors, or `{"bursts": [dirs], "min_zeta_gap": 0.05}`.
    #[arg(long)]
    pub pairs_manifest: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    /// Initial learning rate; halved whenever a step would raise the loss.
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    /// Features are computed on centered tiles of at most this side.
    #[arg(long, default_value_t = 200)]
    pub tile: usize,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn default_gap() -> f64 {
    0.05
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairsManifest {
    Pairs {
        pairs: Vec<TrainingPair>,
    },
    Bursts {
        bursts: Vec<PathBuf>,
        #[serde(default = "default_gap")]
        min_zeta_gap: f64,
    },
}

#[derive(Serialize)]
struct TrainOutput {
    model: PathBuf,
    pairs: usize,
    weights: [f64; 5],
    initial_loss: f64,
    final_loss: f64,
    final_lr: f64,
    train_accuracy: f64,
}

fn load_pairs(path: &Path, tile: usize) -> anyhow::Result<Vec<TrainingPair>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: PairsManifest = serde_json::from_str(&text)
        .with_context(|| format!("{} is neither a pair list nor a burst list", path.display()))?;
    match manifest {
        PairsManifest::Pairs { pairs } => Ok(pairs),
        PairsManifest::Bursts { bursts, min_zeta_gap } => {
            let base = path.parent().unwrap_or(Path::new("."));
            let samples = bursts
                .iter()
                .map(|b| {
                    let dir = base.join(b);
                    let loaded = load_burst(&dir).with_context(|| format!("loading {}", dir.display()))?;
                    Ok(BurstSample::from_loaded(b.display().to_string(), loaded))
                })
                .collect::<anyhow::Result<Vec<BurstSample<f64>>>>()?;
            Ok(labelled_pairs(&samples, min_zeta_gap, tile)?)
        }
    }
}

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    if args.tile == 0 {
        return Err(usage("--tile must be positive"));
    }
    let pairs = load_pairs(&args.pairs_manifest, args.tile)?;
    if pairs.is_empty() {
        anyhow::bail!("no training pairs in {}", args.pairs_manifest.display());
    }
    let t = train_feature_comparator(&pairs, args.epochs, args.lr)?;
    t.model.write(&args.out)?;
    let out = TrainOutput {
        model: args.out.clone(),
        pairs: pairs.len(),
        weights: t.model.weights,
        initial_loss: t.losses[0],
        final_loss: *t.losses.last().expect("at least one loss"),
        final_lr: t.final_lr,
        train_accuracy: pair_accuracy(&t.model, &pairs),
    };
    emit("train", &args, &out, args.report.as_deref())
}
