use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Context;
use burstforge::compare::{Comparator, ConstantComparator};
use burstforge::eval::{run_deblur_experiment, BurstSample, DeblurMode, DeblurRow, DeblurSettings};
use burstforge::fba::FbaParams;
use burstforge::imaging::save_image;
use burstforge::kernel::load_burst;
use burstforge::ranking::{RankMode, Strategy};
use clap::{Args, ValueEnum};
use serde::{Serialize, Serializer};

use crate::comparators::{ComparatorArgs, JudgeKind};
use crate::report::{emit, usage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeblurStrategy {
    /// All frames at once, in burst order.
    Fba,
    /// Sorted, fused one at a time, stopping when the result gets blurrier.
    Ifba,
    /// Sorted, fused one at a time, every frame.
    IfbaNostop,
    /// The sharpest --k frames.
    IfbaFixedK,
}

/// Smoothing width in pixels, or `auto` for `min(h, w) / 50`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sigma {
    Auto,
    Pixels(f64),
}

impl FromStr for Sigma {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Sigma::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Sigma::Pixels(v)),
            _ => Err(format!("expected `auto` or a number >= 0, got {s:?}")),
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Auto => f.write_str("auto"),
            Sigma::Pixels(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Sigma::Auto => s.serialize_str("auto"),
            Sigma::Pixels(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct DeblurArgs {
    /// Burst directory (or its manifest.json).
    #[arg(long)]
    pub burst: PathBuf,
    #[arg(long, value_enum, default_value_t = DeblurStrategy::Ifba)]
    pub strategy: DeblurStrategy,
    /// Frame count for ifba-fixed-k.
    #[arg(long, required_if_eq("strategy", "ifba-fixed-k"))]
    pub k: Option<usize>,
    /// Exponent of the Fourier weights.
    #[arg(long, default_value_t = 11.0)]
    pub p: f64,
    /// Gaussian width for smoothing the spectrum magnitudes.
    #[arg(long, default_value_t = Sigma::Auto)]
    pub smooth_sigma: Sigma,
    #[command(flatten)]
    pub comparator: ComparatorArgs,
    /// Degradation judge; defaults to the comparator (reference for oracle).
    #[arg(long, value_enum)]
    pub judge: Option<JudgeKind>,
    #[arg(long, default_value_t = RankMode::Soft)]
    pub mode: RankMode,
    /// Pair strategy used for ranking.
    #[arg(long, default_value_t = Strategy::Triangular)]
    pub rank_strategy: Strategy,
    /// Output image.
    #[arg(long, default_value = "deblurred.png")]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct DeblurOutput {
    burst: PathBuf,
    output: PathBuf,
    p: f64,
    sigma_s: f64,
    order: Option<Vec<usize>>,
    mean_input_psnr: Option<f64>,
    #[serde(flatten)]
    row: DeblurRow,
}

pub fn run(args: DeblurArgs) -> anyhow::Result<()> {
    args.comparator.check()?;
    if args.k.is_some() && args.strategy != DeblurStrategy::IfbaFixedK {
        return Err(usage("--k only applies to --strategy ifba-fixed-k"));
    }
    let mode = match args.strategy {
        DeblurStrategy::Fba => DeblurMode::Fba,
        DeblurStrategy::Ifba => DeblurMode::Ifba,
        DeblurStrategy::IfbaNostop => DeblurMode::IfbaNoStop,
        DeblurStrategy::IfbaFixedK => DeblurMode::IfbaFixedK(args.k.expect("required by clap")),
    };
    let model = args.comparator.load_model()?;
    let loaded = load_burst(&args.burst).with_context(|| format!("loading {}", args.burst.display()))?;
    let sample = BurstSample::from_loaded(args.burst.display().to_string(), loaded);
    if let DeblurMode::IfbaFixedK(k) = mode {
        if k == 0 || k > sample.frames.len() {
            return Err(usage(format!("--k must lie in 1..={}", sample.frames.len())));
        }
    }
    let (h, w) = (sample.frames[0].height(), sample.frames[0].width());
    let params = match args.smooth_sigma {
        Sigma::Auto => FbaParams::image_relative(args.p, h, w)?,
        Sigma::Pixels(s) => FbaParams::new(args.p, s)?,
    };
    let tile = args.comparator.tile;
    let tiles = sample.tiles(tile);
    // fba consults neither; the no-stop modes never consult the judge
    let idle = || -> Box<dyn Comparator<f64>> { Box::new(ConstantComparator(0.5)) };
    let ranker = match mode {
        DeblurMode::Fba => idle(),
        _ => args.comparator.ranker(model.as_ref(), &tiles, args.p)?,
    };
    let judge = match mode {
        DeblurMode::Ifba => args.comparator.judge(args.judge, model.as_ref(), &sample, tile, args.p)?,
        _ => idle(),
    };
    let settings = DeblurSettings {
        params,
        strategy: args.rank_strategy,
        mode: args.mode,
        tile,
    };
    let (report, images) = run_deblur_experiment(&sample, &[mode], &ranker, &judge, &settings)?;
    save_image(&images[0], &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let out = DeblurOutput {
        burst: args.burst.clone(),
        output: args.out.clone(),
        p: params.p,
        sigma_s: params.sigma_s,
        order: report.order,
        mean_input_psnr: report.mean_input_psnr,
        row: report.rows.into_iter().next().expect("one mode"),
    };
    emit("deblur", &args, &out, args.report.as_deref())
}
