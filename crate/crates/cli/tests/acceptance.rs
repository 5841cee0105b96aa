//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use burstforge::compare::{
    pair_accuracy, train_feature_comparator, CoinComparator, ComparatorModel, ConstantComparator, FeatureComparator,
    Oracle, Reversed,
};
use burstforge::eval::{
    bt_fit, labelled_pairs, run_deblur_experiment, run_sorting_experiment, BurstSample, DeblurMode, DeblurSettings,
    SortingSettings,
};
use burstforge::fba::{fba_unclamped, FbaParams, SpectralAccumulator};
use burstforge::imaging::{aligned_psnr, save_image};
use burstforge::kernel::{choose_shifts, draw_kernel, synthesize_burst, zeta, Psf, SynthConfig};
use burstforge::scene::random_scene;
use burstforge::ImageF;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scene(seed: u64, side: usize) -> ImageF {
    random_scene(side, side, 3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn burst(scene_seed: u64, side: usize, cfg: SynthConfig<f64>) -> BurstSample<f64> {
    let b = synthesize_burst(&scene(scene_seed, side), &cfg).unwrap();
    BurstSample::from_synth(format!("s{scene_seed}"), &b)
}

fn frames_cfg(frames: usize, seed: u64) -> SynthConfig<f64> {
    SynthConfig {
        frames,
        seed,
        ..SynthConfig::default()
    }
}

fn ifba_matches_fba() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let n = rng.random_range(2..=10);
        let p = [0.0, 2.0, 11.0][case as usize % 3];
        let cfg = SynthConfig {
            frames: n,
            canvas: 31,
            m_max: 14.0,
            seed: 1000 + case,
            ..SynthConfig::default()
        };
        let frames = synthesize_burst(&scene(case, 64), &cfg).unwrap().images();
        let params = FbaParams::image_relative(p, 64, 64).unwrap();
        let batch = fba_unclamped(&frames, &params).unwrap();
        let mut acc = SpectralAccumulator::new(params);
        for f in &frames {
            let w = acc.analyze(f).unwrap();
            acc.absorb(w).unwrap();
        }
        let inc = acc.reconstruct_unclamped().unwrap();
        let scale = batch.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(inc.max_abs_diff(&batch) / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs < 30.0,
        format!("max relative L-inf {worst:.2e} (<= 1e-6), {secs:.1} s (< 30 s)"),
    )
}

/// `100 * sum h * (1 - exp(-r^2 / 2 sigma^2))`, summed row by row.
fn zeta_brute(psf: &Psf<f64>, sigma: f64) -> f64 {
    let c = psf.center() as f64;
    let mut total = 0.0;
    for r in 0..psf.size() {
        for col in 0..psf.size() {
            let (dy, dx) = (r as f64 - c, col as f64 - c);
            total += psf.get(r, col) * (1.0 - (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    100.0 * total
}

fn zeta_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let cfg = SynthConfig::<f64> {
            canvas: [15, 31, 63][i % 3],
            m_min: 1.0,
            m_max: [6.0, 14.0, 30.0][i % 3],
            ..SynthConfig::default()
        };
        let (_, psf) = draw_kernel(&cfg, &mut rng).unwrap();
        let sigma = rng.random_range(1.0..64.0);
        worst = worst.max((zeta(&psf, sigma).unwrap() - zeta_brute(&psf, sigma)).abs());
    }
    let size = 15;
    let mut raw = vec![0.0f64; size * size];
    raw[(7 + 4) * size + 7 + 3] = 1.0;
    let delta = zeta(&Psf::normalized(size, raw).unwrap(), 32.0).unwrap();
    outcome(
        worst <= 1e-12 && (delta - 1.2133).abs() <= 1e-4,
        format!("max |zeta - brute force| {worst:.1e} (<= 1e-12), delta at (3,4) gives {delta:.5} (1.2133 +- 1e-4)"),
    )
}

fn ranking_sanity() -> Outcome {
    let cfg = |seed| SynthConfig {
        frames: 10,
        canvas: 31,
        m_max: 14.0,
        seed,
        ..SynthConfig::default()
    };
    let bursts: Vec<BurstSample<f64>> = (0..100).map(|s| burst(2000 + s, 48, cfg(2000 + s))).collect();
    let settings = SortingSettings::default();
    let oracle = run_sorting_experiment(&bursts, |_, _| Ok(Box::new(Oracle)), settings).unwrap();
    let reversed = run_sorting_experiment(&bursts, |_, _| Ok(Box::new(Reversed(Oracle))), settings).unwrap();
    let coin = run_sorting_experiment(
        &bursts,
        |b, _| {
            let seed = b.id[1..].parse::<u64>().unwrap();
            Ok(Box::new(CoinComparator { seed }))
        },
        settings,
    )
    .unwrap();
    let rev_all = reversed.rows.iter().all(|r| (r.tau_bar - 1.0).abs() < 1e-12);
    let rev_min = reversed.rows.iter().map(|r| r.tau_bar).fold(f64::INFINITY, f64::min);
    outcome(
        oracle.mean_tau_bar == 0.0 && rev_all && (0.4..=0.6).contains(&coin.mean_tau_bar),
        format!(
            "oracle mean {:.3} (= 0), reversed min {rev_min:.6} (every burst 1.0), coin mean {:.3} (in [0.4, 0.6])",
            oracle.mean_tau_bar, coin.mean_tau_bar
        ),
    )
}

fn learned_comparator() -> (Outcome, ComparatorModel) {
    let start = Instant::now();
    let train: Vec<BurstSample<f64>> = (0..220).map(|s| burst(3000 + s, 96, frames_cfg(10, 3000 + s))).collect();
    let held: Vec<BurstSample<f64>> = (0..30).map(|s| burst(9000 + s, 96, frames_cfg(10, 9000 + s))).collect();
    let pairs = labelled_pairs(&train, 0.05, 200).unwrap();
    let t = train_feature_comparator(&pairs, 2000, 1.0).unwrap();
    let held_pairs = labelled_pairs(&held, 0.05, 200).unwrap();
    let acc = pair_accuracy(&t.model, &held_pairs);
    let fc = FeatureComparator::new(t.model.clone());
    let sorting = run_sorting_experiment(&held, |_, _| Ok(Box::new(fc.clone())), SortingSettings::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let tau = sorting.mean_tau_bar;
    (
        outcome(
            pairs.len() >= 5000 && acc >= 0.8 && tau <= 0.15 && secs < 300.0,
            format!(
                "{} training pairs (>= 5000), held-out accuracy {acc:.3} on {} pairs (>= 0.8), mean tau_bar {tau:.4} over 30 bursts (<= 0.15), {secs:.1} s (< 300 s)",
                pairs.len(),
                held_pairs.len()
            ),
        ),
        t.model,
    )
}

fn deblur_gain() -> Outcome {
    let mut wins = 0;
    let mut margins = Vec::new();
    for s in 0..20u64 {
        let sample = burst(4000 + s, 96, frames_cfg(8, 4000 + s));
        let settings = DeblurSettings {
            params: FbaParams::image_relative(11.0, 96, 96).unwrap(),
            ..DeblurSettings::default()
        };
        let idle = ConstantComparator(0.5);
        let (report, _) = run_deblur_experiment(&sample, &[DeblurMode::Fba], &idle, &idle, &settings).unwrap();
        let gain = report.rows[0].psnr_db.unwrap() - report.mean_input_psnr.unwrap();
        if gain > 0.0 {
            wins += 1;
        }
        margins.push(gain);
    }
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        wins >= 18,
        format!("fba beats mean input PSNR on {wins}/20 bursts (>= 18), smallest gain {min:+.2} dB"),
    )
}

fn misalignment(model: &ComparatorModel) -> Outcome {
    let fc = FeatureComparator::new(model.clone());
    let (mut aligned_wins, mut raw_wins) = (0, 0);
    let mut exclusion = Vec::new();
    for s in 0..10u64 {
        let seed = 5000 + s;
        let mut b = synthesize_burst(&scene(seed, 96), &frames_cfg(10, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5417_f7a3_0001);
        let shifts = choose_shifts(b.frames.len(), 0.5, 10, &mut rng).unwrap();
        b.apply_shifts(&shifts).unwrap();
        let sample = BurstSample::from_synth(format!("m{seed}"), &b);
        let settings = DeblurSettings {
            params: FbaParams::image_relative(11.0, 96, 96).unwrap(),
            ..DeblurSettings::default()
        };
        let (report, images) =
            run_deblur_experiment(&sample, &[DeblurMode::Fba, DeblurMode::Ifba], &fc, &fc, &settings).unwrap();
        let aligned = |img: &ImageF| aligned_psnr(&b.sharp, img, 10).unwrap();
        if aligned(&images[1]) >= aligned(&images[0]) {
            aligned_wins += 1;
        }
        if report.rows[1].psnr_db.unwrap() >= report.rows[0].psnr_db.unwrap() {
            raw_wins += 1;
        }
        exclusion.push(1.0 - report.rows[1].shifted_selected as f64 / report.shifted_total as f64);
    }
    let mean_excl = exclusion.iter().sum::<f64>() / exclusion.len() as f64;
    outcome(
        aligned_wins >= 8 && mean_excl >= 0.6,
        format!(
            "ifba >= fba shift-aligned PSNR on {aligned_wins}/10 (>= 8), mean shifted-frame exclusion {:.0}% (>= 60%); unaligned PSNR wins {raw_wins}/10",
            100.0 * mean_excl
        ),
    )
}

fn bradley_terry() -> Outcome {
    let two = bt_fit(&[vec![0.0, 3.0], vec![1.0, 0.0]], 10_000, 1e-12).unwrap();
    let two_ok = (two.scores[0] - 0.75).abs() <= 1e-6 && (two.scores[1] - 0.25).abs() <= 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(0xACC7);
    let mut monotone = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let wins: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { rng.random_range(1..=20) as f64 }).collect())
            .collect();
        let r = bt_fit(&wins, 10_000, 1e-12).unwrap();
        if r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()) {
            monotone += 1;
        }
    }

    let mut recovered = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strength: Vec<f64> = (0..8).map(|k| 1.3f64.powi(k)).collect();
        let mut wins = vec![vec![0.0; 8]; 8];
        for i in 0..8 {
            for j in i + 1..8 {
                let p = strength[i] / (strength[i] + strength[j]);
                for _ in 0..200 {
                    if rng.random_bool(p) {
                        wins[i][j] += 1.0;
                    } else {
                        wins[j][i] += 1.0;
                    }
                }
            }
        }
        let r = bt_fit(&wins, 10_000, 1e-10).unwrap();
        if r.scores.windows(2).all(|w| w[0] < w[1]) {
            recovered += 1;
        }
    }
    outcome(
        two_ok && monotone == 100 && recovered >= 95,
        format!(
            "3:1 gives ({:.8}, {:.8}), monotone log-likelihood on {monotone}/100, true order recovered in {recovered}/100 (>= 95)",
            two.scores[0], two.scores[1]
        ),
    )
}

fn cli(dir: &Path, threads: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_burstforge"))
        .args(args)
        .current_dir(dir)
        .env("BURSTFORGE_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex);
            }
        }
    }
    out
}

fn pipeline(threads: &str) -> BTreeMap<String, String> {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::create_dir(d.join("in")).unwrap();
    save_image(&scene(61, 80), d.join("in/a.png")).unwrap();
    save_image(&scene(62, 80), d.join("in/b.png")).unwrap();
    std::fs::write(d.join("pairs.json"), r#"{"bursts": ["bursts/a", "bursts/b"]}"#).unwrap();
    let steps: [&[&str]; 9] = [
        &["synth", "--input", "in", "--out", "bursts", "--frames", "8", "--seed", "42", "--shift-fraction", "0.5", "--max-shift", "6", "--report", "synth.json"],
        &["train", "--pairs-manifest", "pairs.json", "--epochs", "300", "--out", "model.json", "--report", "train.json"],
        &["rank", "--burst", "bursts/a", "--comparator", "features", "--model", "model.json", "--report", "rank.json"],
        &["deblur", "--burst", "bursts/a", "--strategy", "ifba", "--comparator", "features", "--model", "model.json", "--out", "ifba.png", "--report", "ifba.json"],
        &["deblur", "--burst", "bursts/a", "--strategy", "fba", "--out", "fba.png", "--report", "fba.json"],
        &["eval", "kendall", "--burst", "bursts/a", "--ranking", "rank.json", "--report", "kendall.json"],
        &["eval", "quality", "--reference", "bursts/a/sharp.png", "--image", "ifba.png", "--max-shift", "6", "--report", "quality.json"],
        &["eval", "sorting", "--bursts", "bursts/a", "bursts/b", "--csv", "sorting.csv", "--report", "sorting.json"],
        &["eval", "sorting", "--bursts", "bursts/a", "bursts/b", "--comparator", "features", "--model", "model.json", "--report", "sorting_features.json"],
    ];
    for args in steps {
        cli(d, threads, args);
    }
    hash_tree(d)
}

fn determinism() -> Outcome {
    let runs: Vec<(&str, BTreeMap<String, String>)> = ["1", "8", "8", "1"].iter().map(|t| (*t, pipeline(t))).collect();
    let base = &runs[0].1;
    let mismatched: Vec<String> = runs[1..]
        .iter()
        .flat_map(|(t, h)| {
            base.iter()
                .filter(move |(k, v)| h.get(*k) != Some(*v))
                .map(move |(k, _)| format!("{k} (threads {t})"))
        })
        .collect();
    let same_files = runs.iter().all(|(_, h)| h.len() == base.len());
    outcome(
        mismatched.is_empty() && same_files,
        format!(
            "{} files hashed over 4 runs (threads 1, 8, 8, 1), mismatches: {}",
            base.len(),
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
        ),
    )
}

fn main() {
    let mut results = Vec::new();
    let mut record = |name: &str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push(o.pass);
    };
    record("ifba-equals-fba", ifba_matches_fba());
    record("zeta-oracle", zeta_oracle());
    record("ranking-sanity", ranking_sanity());
    let (learned, model) = learned_comparator();
    record("learned-comparator", learned);
    record("deblur-gain", deblur_gain());
    record("degradation-stop", misalignment(&model));
    record("bradley-terry", bradley_terry());
    record("determinism", determinism());
    let failed = results.iter().filter(|p| !**p).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
