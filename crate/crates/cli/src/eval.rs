use std::path::{Path, PathBuf};

use anyhow::Context;
use burstforge::eval::{
    bt_fit, delta_from_zeta, run_sorting_experiment, weighted_kendall, BurstSample, SortingSettings, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use burstforge::imaging::{aligned_psnr, load_image, quality};
use burstforge::kernel::{load_burst, BurstManifest};
use burstforge::ranking::{RankMode, Strategy};
use burstforge::ImageF;
use clap::{Args, Subcommand};
use serde::Serialize;

use crate::comparators::ComparatorArgs;
use crate::report::{emit, usage};

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Weighted Kendall distance between a ranking and the manifest scores.
    Kendall(KendallArgs),
    /// Bradley-Terry strengths from a win-count matrix.
    Bt(BtArgs),
    /// PSNR and SSIM of an image against a reference.
    Quality(QualityArgs),
    /// Rank several bursts and score each against its manifest.
    Sorting(SortingArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct KendallArgs {
    /// Burst directory or manifest with the blur scores.
    #[arg(long)]
    pub burst: PathBuf,
    /// Report written by `rank`, or any JSON with an `order` array.
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BtArgs {
    /// CSV with n rows of n counts; entry (i, j) is how often i beat j.
    #[arg(long)]
    pub wins: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct QualityArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Also report the best PSNR over integer shifts up to this size.
    #[arg(long)]
    pub max_shift: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SortingArgs {
    /// Burst directories.
    #[arg(long, num_args = 1.., required = true)]
    pub bursts: Vec<PathBuf>,
    #[command(flatten)]
    pub comparator: ComparatorArgs,
    #[arg(long, default_value_t = RankMode::Soft)]
    pub mode: RankMode,
    #[arg(long, default_value_t = Strategy::Triangular)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 11.0)]
    pub p: f64,
    /// Also write `burst_id,tau_bar,m,m_rev` rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(cmd: EvalCommand) -> anyhow::Result<()> {
    match cmd {
        EvalCommand::Kendall(a) => kendall(a),
        EvalCommand::Bt(a) => bt(a),
        EvalCommand::Quality(a) => quality_cmd(a),
        EvalCommand::Sorting(a) => sorting(a),
    }
}

fn read_order(path: &Path) -> anyhow::Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let order = v
        .pointer("/result/order")
        .or_else(|| v.get("order"))
        .with_context(|| format!("{} has no `order` array", path.display()))?;
    serde_json::from_value(order.clone()).with_context(|| format!("`order` in {} is not a list of indices", path.display()))
}

fn kendall(args: KendallArgs) -> anyhow::Result<()> {
    let manifest = BurstManifest::read(&args.burst)?;
    let order = read_order(&args.ranking)?;
    let k = weighted_kendall(&delta_from_zeta(&manifest.zetas()), &order)?;
    emit("eval kendall", &args, &k, args.report.as_deref())
}

fn read_wins(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {i}", path.display()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {i} is not numeric", path.display()))?;
        rows.push(row);
    }
    Ok(rows)
}

fn bt(args: BtArgs) -> anyhow::Result<()> {
    if !(args.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let wins = read_wins(&args.wins)?;
    let r = bt_fit(&wins, args.max_iter, args.tol)?;
    emit("eval bt", &args, &r, args.report.as_deref())
}

#[derive(Serialize)]
struct QualityOutput {
    mse: f64,
    psnr_db: f64,
    ssim: f64,
    aligned_psnr_db: Option<f64>,
}

fn quality_cmd(args: QualityArgs) -> anyhow::Result<()> {
    let reference: ImageF = load_image(&args.reference)?;
    let image: ImageF = load_image(&args.image)?;
    let q = quality(&reference, &image)?;
    let aligned = match args.max_shift {
        Some(s) => Some(aligned_psnr(&reference, &image, s)?),
        None => None,
    };
    let out = QualityOutput {
        mse: q.mse,
        psnr_db: q.psnr_db,
        ssim: q.ssim,
        aligned_psnr_db: aligned,
    };
    emit("eval quality", &args, &out, args.report.as_deref())
}

fn sorting(args: SortingArgs) -> anyhow::Result<()> {
    args.comparator.check()?;
    let model = args.comparator.load_model()?;
    let samples = args
        .bursts
        .iter()
        .map(|b| {
            let loaded = load_burst(b).with_context(|| format!("loading {}", b.display()))?;
            Ok(BurstSample::from_loaded(b.display().to_string(), loaded))
        })
        .collect::<anyhow::Result<Vec<BurstSample<f64>>>>()?;
    let settings = SortingSettings {
        strategy: args.strategy,
        mode: args.mode,
        tile: args.comparator.tile,
    };
    let report = run_sorting_experiment(
        &samples,
        |_, tiles| {
            args.comparator
                .ranker(model.as_ref(), tiles, args.p)
                .map_err(|e| burstforge::Error::Parameter(format!("{e:#}")))
        },
        settings,
    )?;
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["burst_id", "tau_bar", "m", "m_rev"])?;
        for r in &report.rows {
            w.write_record([r.burst_id.clone(), r.tau_bar.to_string(), r.m.to_string(), r.m_rev.to_string()])?;
        }
        w.flush()?;
    }
    emit("eval sorting", &args, &report, args.report.as_deref())
}
