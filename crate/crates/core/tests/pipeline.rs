//! End-to-end paths through the library: synthesis to disk and back,
//! ranking, fusion and scoring.

use burstforge::compare::{FeatureComparator, Oracle, ReferenceComparator};
use burstforge::eval::{
    labelled_pairs, run_deblur_experiment, run_sorting_experiment, BurstSample, DeblurMode, DeblurSettings,
    SortingSettings,
};
use burstforge::fba::{fba, FbaParams, SpectralAccumulator};
use burstforge::imaging::{load_image, psnr};
use burstforge::kernel::{load_burst, synth_burst, synthesize_burst, zeta, Psf, SynthConfig};
use burstforge::scene::random_scene;
use burstforge::ImageF;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_cfg(frames: usize, seed: u64) -> SynthConfig<f64> {
    SynthConfig {
        frames,
        canvas: 31,
        m_max: 12.0,
        seed,
        ..SynthConfig::default()
    }
}

fn scene(seed: u64, side: usize) -> ImageF {
    random_scene(side, side, 3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn burst_survives_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = scene(3, 48);
    let manifest = synth_burst(&sharp, &small_cfg(5, 3), dir.path()).unwrap();
    let loaded = load_burst::<f64>(dir.path()).unwrap();
    assert_eq!(loaded.manifest, manifest);
    assert_eq!(loaded.frames.len(), 5);
    for (entry, frame) in manifest.frames.iter().zip(&loaded.frames) {
        let psf: Psf<f64> = Psf::read(dir.path().join(&entry.kernel_path)).unwrap();
        assert_eq!(zeta(&psf, manifest.zeta_sigma).unwrap(), entry.zeta);
        // frames are stored as 8-bit PNG
        let direct: ImageF = load_image(dir.path().join(&entry.path)).unwrap();
        assert_eq!(&direct, frame);
    }
}

#[test]
fn synthesis_is_repeatable() {
    let sharp = scene(4, 40);
    let a = synthesize_burst(&sharp, &small_cfg(6, 11)).unwrap();
    let b = synthesize_burst(&sharp, &small_cfg(6, 11)).unwrap();
    assert_eq!(a.zetas(), b.zetas());
    assert_eq!(a.images(), b.images());
    let c = synthesize_burst(&sharp, &small_cfg(6, 12)).unwrap();
    assert_ne!(a.zetas(), c.zetas());
}

#[test]
fn oracle_sorting_and_incremental_fusion() {
    let bursts: Vec<BurstSample<f64>> = (0..3)
        .map(|s| BurstSample::from_synth(format!("b{s}"), &synthesize_burst(&scene(s, 48), &small_cfg(6, s)).unwrap()))
        .collect();
    let r = run_sorting_experiment(&bursts, |_, _| Ok(Box::new(Oracle)), SortingSettings::default()).unwrap();
    assert_eq!(r.mean_tau_bar, 0.0);

    for b in &bursts {
        let params = FbaParams::image_relative(11.0, 48, 48).unwrap();
        let mut acc = SpectralAccumulator::new(params);
        let mut last = None;
        for f in &b.frames {
            last = Some(acc.ifba_step(f).unwrap());
        }
        let batch = fba(&b.frames, &params).unwrap();
        assert!(last.unwrap().max_abs_diff(&batch) < 1e-9);
    }
}

#[test]
fn fixed_k_modes() {
    let sharp = scene(21, 48);
    let sample = BurstSample::from_synth("b", &synthesize_burst(&sharp, &small_cfg(5, 21)).unwrap());
    let settings = DeblurSettings {
        params: FbaParams::image_relative(11.0, 48, 48).unwrap(),
        ..DeblurSettings::default()
    };
    let judge = ReferenceComparator::new(sharp.clone());
    let modes = [DeblurMode::Fba, DeblurMode::IfbaFixedK(5), DeblurMode::IfbaFixedK(1)];
    let (report, images) = run_deblur_experiment(&sample, &modes, &Oracle, &judge, &settings).unwrap();
    let psnr_of = |i: usize| report.rows[i].psnr_db.unwrap();
    assert!((psnr_of(0) - psnr_of(1)).abs() < 0.01);
    // k = 1 returns the sharpest frame
    let order = report.order.as_ref().unwrap();
    assert_eq!(report.rows[2].selected, vec![order[0]]);
    let best = &sample.frames[order[0]];
    assert!(images[2].max_abs_diff(best) < 1e-9);
    assert!((psnr_of(2) - psnr(&sharp, best).unwrap()).abs() < 1e-6);
}

#[test]
fn trained_comparator_beats_chance() {
    let cfg = |seed| SynthConfig {
        frames: 8,
        seed,
        ..SynthConfig::default()
    };
    let train: Vec<BurstSample<f64>> = (100..112)
        .map(|s| BurstSample::from_synth("t", &synthesize_burst(&scene(s, 80), &cfg(s)).unwrap()))
        .collect();
    let pairs = labelled_pairs(&train, 0.05, 200).unwrap();
    assert!(pairs.len() > 100);
    let t = burstforge::compare::train_feature_comparator(&pairs, 500, 1.0).unwrap();
    let held: Vec<BurstSample<f64>> = (500..506)
        .map(|s| BurstSample::from_synth(format!("h{s}"), &synthesize_burst(&scene(s, 80), &cfg(s)).unwrap()))
        .collect();
    let fc = FeatureComparator::new(t.model);
    let r = run_sorting_experiment(&held, |_, _| Ok(Box::new(fc.clone())), SortingSettings::default()).unwrap();
    assert!(r.mean_tau_bar < 0.3, "{}", r.mean_tau_bar);
}
