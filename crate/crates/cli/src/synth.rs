use std::path::{Path, PathBuf};

use anyhow::Context;
use burstforge::imaging::load_image;
use burstforge::kernel::{choose_shifts, synthesize_burst, write_burst, BurstManifest, SynthConfig, TrajectoryParams};
use burstforge::ImageF;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{emit, usage};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];
/// Mixed into the burst seed for the shift generator.
const SHIFT_STREAM: u64 = 0x5eed_5417_f7a3_0001;

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Sharp image, or a directory of images (one burst per image).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "burst")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    /// Shortest trajectory length in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub m_min: f64,
    /// Longest trajectory length in pixels.
    #[arg(long, default_value_t = 19.0)]
    pub m_max: f64,
    #[arg(long, default_value_t = 0.008)]
    pub anxiety: f64,
    /// Kernel side in pixels (odd).
    #[arg(long, default_value_t = 63)]
    pub canvas: usize,
    /// Width of the blur-score Gaussian.
    #[arg(long, default_value_t = 32.0)]
    pub zeta_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of frames to translate after blurring.
    #[arg(long, default_value_t = 0.0)]
    pub shift_fraction: f64,
    /// Largest translation in pixels along each axis.
    #[arg(long, default_value_t = 10)]
    pub max_shift: u32,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct SynthOutput {
    dir: PathBuf,
    seed: u64,
    manifest: BurstManifest,
}

fn inputs(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        anyhow::bail!("no images in {}", path.display());
    }
    Ok(files)
}

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    if args.shift_fraction > 0.0 && args.max_shift == 0 {
        return Err(usage("--shift-fraction > 0 needs --max-shift >= 1"));
    }
    if !(0.0..=1.0).contains(&args.shift_fraction) {
        return Err(usage("--shift-fraction must lie in [0, 1]"));
    }
    let files = inputs(&args.input)?;
    let many = args.input.is_dir();
    let mut outputs = Vec::with_capacity(files.len());
    for (k, file) in files.iter().enumerate() {
        let seed = args.seed ^ ((k as u64) << 32);
        let dir = if many {
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            args.out.join(stem)
        } else {
            args.out.clone()
        };
        let sharp: ImageF = load_image(file)?;
        let cfg = SynthConfig {
            frames: args.frames,
            m_min: args.m_min,
            m_max: args.m_max,
            trajectory: TrajectoryParams {
                anxiety: args.anxiety,
                ..TrajectoryParams::default()
            },
            canvas: args.canvas,
            zeta_sigma: args.zeta_sigma,
            seed,
            ..SynthConfig::default()
        };
        let mut burst = synthesize_burst(&sharp, &cfg).with_context(|| format!("synthesizing from {}", file.display()))?;
        if args.shift_fraction > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHIFT_STREAM);
            let shifts = choose_shifts(args.frames, args.shift_fraction, args.max_shift, &mut rng)?;
            burst.apply_shifts(&shifts)?;
        }
        let manifest = write_burst(&burst, &dir)?;
        outputs.push(SynthOutput { dir, seed, manifest });
    }
    emit("synth", &args, &outputs, args.report.as_deref())
}
