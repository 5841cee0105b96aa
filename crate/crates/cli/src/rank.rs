use std::path::PathBuf;

use anyhow::Context;
use burstforge::eval::BurstSample;
use burstforge::kernel::load_burst;
use burstforge::ranking::{rank_burst, RankMode, RankReport, Strategy};
use clap::Args;
use serde::Serialize;

use crate::comparators::ComparatorArgs;
use crate::report::emit;

#[derive(Args, Debug, Serialize)]
pub struct RankArgs {
    /// Burst directory (or its manifest.json).
    #[arg(long)]
    pub burst: PathBuf,
    #[command(flatten)]
    pub comparator: ComparatorArgs,
    /// soft: sum of pair probabilities; crisp: count of pairs at or above 0.5.
    #[arg(long, default_value_t = RankMode::Soft)]
    pub mode: RankMode,
    /// full: both orders of every pair; triangular: one order per pair.
    #[arg(long, default_value_t = Strategy::Triangular)]
    pub strategy: Strategy,
    /// Exponent of the OWE weights.
    #[arg(long, default_value_t = 11.0)]
    pub p: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct RankOutput {
    burst: PathBuf,
    #[serde(flatten)]
    ranking: RankReport,
}

pub fn run(args: RankArgs) -> anyhow::Result<()> {
    args.comparator.check()?;
    let model = args.comparator.load_model()?;
    let loaded = load_burst(&args.burst).with_context(|| format!("loading {}", args.burst.display()))?;
    let sample = BurstSample::from_loaded(args.burst.display().to_string(), loaded);
    let tiles = sample.tiles(args.comparator.tile);
    let c = args.comparator.ranker(model.as_ref(), &tiles, args.p)?;
    let rr = rank_burst(&tiles, &c, args.strategy, args.mode)?;
    let out = RankOutput {
        burst: args.burst.clone(),
        ranking: RankReport::new(&rr, args.strategy, c.name()),
    };
    emit("rank", &args, &out, args.report.as_deref())
}
