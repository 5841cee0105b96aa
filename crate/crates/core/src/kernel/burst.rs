use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_trajectory, rasterize_psf, zeta, Psf, Trajectory, TrajectoryParams};
use super::{DEFAULT_CANVAS, DEFAULT_ZETA_SIGMA};
use crate::error::{Error, Result};
use crate::imaging::{convolve_psf, load_image, save_image, translate, Boundary, Image};
use crate::num::Real;

pub const MANIFEST_FILE: &str = "manifest.json";

const MAX_KERNEL_ATTEMPTS: usize = 10;
const MAX_TIE_REDRAWS: u64 = 10;
const ZETA_TIE: f64 = 1e-12;

/// Settings for one synthetic burst.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig<T> {
    pub frames: usize,
    /// Path length is drawn uniformly from `m_min..=m_max` per frame.
    pub m_min: T,
    pub m_max: T,
    /// Walk parameters; `length` is overwritten per frame.
    pub trajectory: TrajectoryParams<T>,
    pub canvas: usize,
    pub zeta_sigma: T,
    #[serde(skip)]
    pub boundary: Boundary,
    pub seed: u64,
}

impl<T: Real> Default for SynthConfig<T> {
    fn default() -> Self {
        SynthConfig {
            frames: 10,
            m_min: T::lit(3.0),
            m_max: T::lit(19.0),
            trajectory: TrajectoryParams::default(),
            canvas: DEFAULT_CANVAS,
            zeta_sigma: T::lit(DEFAULT_ZETA_SIGMA),
            boundary: Boundary::Reflect,
            seed: 0,
        }
    }
}

impl<T: Real> SynthConfig<T> {
    fn validate(&self, sharp: &Image<T>) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::param("a burst needs at least one frame"));
        }
        if !(self.m_min >= T::zero() && self.m_min <= self.m_max) || !self.m_max.is_finite() {
            return Err(Error::param(format!(
                "need 0 <= m_min <= m_max, got [{}, {}]",
                self.m_min, self.m_max
            )));
        }
        if self.canvas % 2 == 0 {
            return Err(Error::param(format!("kernel canvas must be odd, got {}", self.canvas)));
        }
        if sharp.height() <= self.canvas || sharp.width() <= self.canvas {
            return Err(Error::dim(format!(
                "sharp image {}x{} must be larger than the {}x{} kernel canvas",
                sharp.height(),
                sharp.width(),
                self.canvas,
                self.canvas
            )));
        }
        self.trajectory.validate()
    }
}

/// One blurred frame with its kernel and label.
#[derive(Clone, Debug)]
pub struct SynthFrame<T> {
    pub image: Image<T>,
    pub psf: Psf<T>,
    pub trajectory: Trajectory<T>,
    pub zeta: T,
    /// Integer translation `[dx, dy]` applied after blurring.
    pub shift: [i32; 2],
}

/// In-memory burst; [`write_burst`] puts it on disk.
#[derive(Clone, Debug)]
pub struct SynthBurst<T> {
    pub sharp: Image<T>,
    pub frames: Vec<SynthFrame<T>>,
    pub zeta_sigma: T,
    pub seed: u64,
}

impl<T: Real> SynthBurst<T> {
    pub fn images(&self) -> Vec<Image<T>> {
        self.frames.iter().map(|f| f.image.clone()).collect()
    }

    pub fn zetas(&self) -> Vec<T> {
        self.frames.iter().map(|f| f.zeta).collect()
    }

    /// Translates every frame by the matching offset and records it.
    pub fn apply_shifts(&mut self, shifts: &[[i32; 2]]) -> Result<()> {
        if shifts.len() != self.frames.len() {
            return Err(Error::dim(format!(
                "{} shifts for {} frames",
                shifts.len(),
                self.frames.len()
            )));
        }
        for (frame, &[dx, dy]) in self.frames.iter_mut().zip(shifts) {
            if dx != 0 || dy != 0 {
                frame.image = translate(&frame.image, dx, dy);
                frame.shift = [frame.shift[0] + dx, frame.shift[1] + dy];
            }
        }
        Ok(())
    }
}

/// Draws a trajectory of length uniform in `m_min..=m_max` and rasterizes
/// it, regenerating up to ten times when the path leaves the canvas.
pub fn draw_kernel<T: Real, R: Rng + ?Sized>(
    cfg: &SynthConfig<T>,
    rng: &mut R,
) -> Result<(Trajectory<T>, Psf<T>)> {
    let (lo, hi) = (cfg.m_min.to_f64_lossy(), cfg.m_max.to_f64_lossy());
    let mut last_err = None;
    for _ in 0..MAX_KERNEL_ATTEMPTS {
        let m = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let params = cfg.trajectory.with_length(T::lit(m));
        let traj = gen_trajectory(&params, rng)?;
        match rasterize_psf(&traj, cfg.canvas) {
            Ok(psf) => return Ok((traj, psf)),
            Err(e @ Error::OutOfSupport { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn frame_seed(seed: u64, index: usize, redraw: u64) -> u64 {
    (seed ^ index as u64).wrapping_add(redraw.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn make_frame<T: Real>(sharp: &Image<T>, cfg: &SynthConfig<T>, seed: u64) -> Result<SynthFrame<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (trajectory, psf) = draw_kernel(cfg, &mut rng)?;
    let image = convolve_psf(sharp, &psf, cfg.boundary)?;
    let z = zeta(&psf, cfg.zeta_sigma)?;
    Ok(SynthFrame {
        image,
        psf,
        trajectory,
        zeta: z,
        shift: [0, 0],
    })
}

/// Blurs `sharp` with `cfg.frames` independent kernels.
///
/// Frame `i` uses a generator seeded with `seed ^ i`, so the result does not
/// depend on the thread count. A frame whose score ties an earlier one is
/// redrawn from a derived seed (at most ten times).
pub fn synthesize_burst<T: Real>(sharp: &Image<T>, cfg: &SynthConfig<T>) -> Result<SynthBurst<T>> {
    cfg.validate(sharp)?;
    let mut frames = (0..cfg.frames)
        .into_par_iter()
        .map(|i| make_frame(sharp, cfg, frame_seed(cfg.seed, i, 0)))
        .collect::<Result<Vec<_>>>()?;
    let tie = T::lit(ZETA_TIE);
    for i in 1..frames.len() {
        let mut redraw = 0;
        while redraw < MAX_TIE_REDRAWS && frames[..i].iter().any(|f| (f.zeta - frames[i].zeta).abs() <= tie) {
            redraw += 1;
            frames[i] = make_frame(sharp, cfg, frame_seed(cfg.seed, i, redraw))?;
        }
    }
    Ok(SynthBurst {
        sharp: sharp.clone(),
        frames,
        zeta_sigma: cfg.zeta_sigma,
        seed: cfg.seed,
    })
}

/// Picks `round(fraction * n)` frames without replacement and gives each a
/// nonzero offset uniform in `[-max_shift, max_shift]^2`. Others get `[0, 0]`.
pub fn choose_shifts<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    max_shift: u32,
    rng: &mut R,
) -> Result<Vec<[i32; 2]>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param(format!("shift fraction must lie in [0, 1], got {fraction}")));
    }
    let count = (fraction * n as f64).round() as usize;
    let mut shifts = vec![[0, 0]; n];
    if count == 0 {
        return Ok(shifts);
    }
    if max_shift == 0 {
        return Err(Error::param("max_shift must be >= 1 when frames are shifted"));
    }
    let mut chosen = sample(rng, n, count).into_vec();
    chosen.sort_unstable();
    let m = max_shift as i32;
    for i in chosen {
        shifts[i] = loop {
            let s = [rng.random_range(-m..=m), rng.random_range(-m..=m)];
            if s != [0, 0] {
                break s;
            }
        };
    }
    Ok(shifts)
}

/// On-disk description of a burst. Paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstManifest {
    pub sharp_ref: String,
    pub frames: Vec<FrameEntry>,
    pub zeta_sigma: f64,
    pub rng_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub path: String,
    pub kernel_path: String,
    pub zeta: f64,
    /// `[dx, dy]` in pixels.
    pub shift: [i32; 2],
}

impl BurstManifest {
    /// Reads `manifest.json` from a burst directory, or the named file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = manifest_path(path.as_ref());
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: BurstManifest = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            what: "burst manifest",
            path: path.clone(),
            message: e.to_string(),
        })?;
        manifest.validate(&path)?;
        Ok(manifest)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        for (i, f) in self.frames.iter().enumerate() {
            if !(f.zeta.is_finite() && (0.0..100.0).contains(&f.zeta)) {
                return Err(Error::Malformed {
                    what: "burst manifest",
                    path: path.to_path_buf(),
                    message: format!("frame {i} has zeta {} outside [0, 100)", f.zeta),
                });
            }
        }
        Ok(())
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.zeta).collect()
    }

    /// `Some(true)` when frame `i` is blurrier than frame `j`, `None` on a tie.
    pub fn blurrier(&self, i: usize, j: usize) -> Option<bool> {
        let (a, b) = (self.frames[i].zeta, self.frames[j].zeta);
        if (a - b).abs() <= ZETA_TIE {
            None
        } else {
            Some(a > b)
        }
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Writes `sharp.png`, `frame_XXX.png`, `psf_XXX.txt` and the manifest.
pub fn write_burst<T: Real>(burst: &SynthBurst<T>, out_dir: impl AsRef<Path>) -> Result<BurstManifest> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_image(&burst.sharp, dir.join("sharp.png"))?;
    let frames = burst
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let path = format!("frame_{i:03}.png");
            let kernel_path = format!("psf_{i:03}.txt");
            save_image(&f.image, dir.join(&path))?;
            f.psf.write(dir.join(&kernel_path))?;
            Ok(FrameEntry {
                path,
                kernel_path,
                zeta: f.zeta.to_f64_lossy(),
                shift: f.shift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = BurstManifest {
        sharp_ref: "sharp.png".into(),
        frames,
        zeta_sigma: burst.zeta_sigma.to_f64_lossy(),
        rng_seed: burst.seed,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// [`synthesize_burst`] followed by [`write_burst`].
pub fn synth_burst<T: Real>(
    sharp: &Image<T>,
    cfg: &SynthConfig<T>,
    out_dir: impl AsRef<Path>,
) -> Result<BurstManifest> {
    write_burst(&synthesize_burst(sharp, cfg)?, out_dir)
}

/// Translates a random subset of the frames stored in `dir` in place and
/// rewrites the manifest with the accumulated shifts.
pub fn shift_frames<R: Rng + ?Sized>(
    dir: impl AsRef<Path>,
    manifest: &BurstManifest,
    fraction: f64,
    max_shift: u32,
    rng: &mut R,
) -> Result<BurstManifest> {
    let dir = dir.as_ref();
    let shifts = choose_shifts(manifest.frames.len(), fraction, max_shift, rng)?;
    let mut out = manifest.clone();
    if shifts.iter().all(|s| *s == [0, 0]) {
        return Ok(out);
    }
    for (entry, &[dx, dy]) in out.frames.iter_mut().zip(&shifts) {
        if dx == 0 && dy == 0 {
            continue;
        }
        let path = dir.join(&entry.path);
        let img = load_image::<f64>(&path)?;
        save_image(&translate(&img, dx, dy), &path)?;
        entry.shift = [entry.shift[0] + dx, entry.shift[1] + dy];
    }
    out.write(dir)?;
    Ok(out)
}

/// Frames and reference of a burst directory, decoded.
#[derive(Clone, Debug)]
pub struct LoadedBurst<T> {
    pub dir: PathBuf,
    pub manifest: BurstManifest,
    pub sharp: Option<Image<T>>,
    pub frames: Vec<Image<T>>,
}

impl<T: Real> LoadedBurst<T> {
    pub fn zetas(&self) -> Vec<T> {
        self.manifest.frames.iter().map(|f| T::lit(f.zeta)).collect()
    }
}

pub fn load_burst<T: Real>(dir: impl AsRef<Path>) -> Result<LoadedBurst<T>> {
    let path = manifest_path(dir.as_ref());
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let manifest = BurstManifest::read(&path)?;
    let frames = manifest
        .frames
        .par_iter()
        .map(|f| load_image(dir.join(&f.path)))
        .collect::<Result<Vec<Image<T>>>>()?;
    if let Some(first) = frames.first() {
        for (i, f) in frames.iter().enumerate() {
            first.check_same_shape(f, &format!("frame {i} of {}", dir.display()))?;
        }
    }
    let sharp = if manifest.sharp_ref.is_empty() {
        None
    } else {
        Some(load_image(dir.join(&manifest.sharp_ref))?)
    };
    Ok(LoadedBurst {
        dir,
        manifest,
        sharp,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{fft2, Fft2d};

    fn sharp(h: usize, w: usize) -> Image<f64> {
        Image::from_fn(h, w, 3, |y, x, c| {
            let v = ((x / 6 + y / 9 + c) % 3) as f64 / 2.0;
            0.1 + 0.8 * v
        })
        .unwrap()
    }

    fn small_cfg(frames: usize, seed: u64) -> SynthConfig<f64> {
        SynthConfig {
            frames,
            m_min: 3.0,
            m_max: 9.0,
            canvas: 21,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn single_frame_zeta_matches_kernel() {
        let b = synthesize_burst(&sharp(40, 40), &small_cfg(1, 3)).unwrap();
        assert_eq!(b.frames.len(), 1);
        let f = &b.frames[0];
        assert_eq!(f.zeta, zeta(&f.psf, 32.0).unwrap());
        assert!(f.zeta > 0.0);
    }

    #[test]
    fn sharp_must_exceed_canvas() {
        let r = synthesize_burst(&sharp(21, 40), &small_cfg(1, 0));
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_length_frames_are_deltas() {
        let cfg = SynthConfig {
            m_min: 0.0,
            m_max: 0.0,
            ..small_cfg(2, 1)
        };
        let b = synthesize_burst(&sharp(30, 30), &cfg).unwrap();
        // identical kernels tie; redraws cannot break a tie between deltas
        assert_eq!(b.frames[0].zeta, 0.0);
        assert_eq!(b.frames[1].zeta, 0.0);
        assert_eq!(b.frames[0].image, b.sharp);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let img = sharp(36, 36);
        let a = synthesize_burst(&img, &small_cfg(6, 11)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| synthesize_burst(&img, &small_cfg(6, 11)).unwrap());
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.zeta, y.zeta);
        }
        let c = synthesize_burst(&img, &small_cfg(6, 12)).unwrap();
        assert_ne!(a.zetas(), c.zetas());
    }

    #[test]
    fn shift_count_and_nonzero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = choose_shifts(10, 0.5, 10, &mut rng).unwrap();
        assert_eq!(s.iter().filter(|v| **v != [0, 0]).count(), 5);
        assert!(s.iter().all(|v| v[0].abs() <= 10 && v[1].abs() <= 10));
        assert!(choose_shifts(10, 0.0, 0, &mut rng).unwrap().iter().all(|v| *v == [0, 0]));
        assert!(choose_shifts(10, 0.5, 0, &mut rng).is_err());
        assert!(choose_shifts(10, 1.5, 3, &mut rng).is_err());
    }

    /// Peak of the inverse cross-power spectrum, wrapped to signed offsets.
    fn phase_correlation_peak(a: &Image<f64>, b: &Image<f64>) -> [i32; 2] {
        let (h, w) = (a.height(), a.width());
        let fa = fft2(a);
        let fb = fft2(b);
        let mut cross: Vec<_> = fa
            .plane(0)
            .iter()
            .zip(fb.plane(0))
            .map(|(x, y)| {
                let c = y * x.conj();
                if c.norm() > 0.0 {
                    c / c.norm()
                } else {
                    c
                }
            })
            .collect();
        Fft2d::<f64>::new(h, w).inverse_plane(&mut cross);
        let (mut best, mut at) = (f64::NEG_INFINITY, 0);
        for (i, v) in cross.iter().enumerate() {
            if v.re > best {
                best = v.re;
                at = i;
            }
        }
        let wrap = |v: usize, n: usize| if v > n / 2 { v as i32 - n as i32 } else { v as i32 };
        [wrap(at % w, w), wrap(at / w, h)]
    }

    #[test]
    fn shifted_frames_on_disk_match_phase_correlation() {
        let dir = tempfile::tempdir().unwrap();
        let img: Image<f64> = crate::scene::random_scene(64, 64, 3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let manifest = synth_burst(&img, &small_cfg(6, 21), dir.path()).unwrap();
        let before: Vec<Image<f64>> = manifest
            .frames
            .iter()
            .map(|f| load_image(dir.path().join(&f.path)).unwrap())
            .collect();

        let same = shift_frames(dir.path(), &manifest, 0.0, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(same, manifest);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shifted = shift_frames(dir.path(), &manifest, 0.5, 5, &mut rng).unwrap();
        assert_eq!(shifted.frames.iter().filter(|f| f.shift != [0, 0]).count(), 3);
        assert_eq!(BurstManifest::read(dir.path()).unwrap(), shifted);
        let loaded = load_burst::<f64>(dir.path()).unwrap();
        for (i, f) in shifted.frames.iter().enumerate() {
            if f.shift == [0, 0] {
                assert_eq!(loaded.frames[i], before[i]);
            } else {
                let lum = |x: &Image<f64>| Image::new(64, 64, 1, x.luma()).unwrap();
                assert_eq!(phase_correlation_peak(&lum(&before[i]), &lum(&loaded.frames[i])), f.shift);
            }
        }
    }

    #[test]
    fn written_burst_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let b = synthesize_burst(&sharp(40, 40), &small_cfg(3, 5)).unwrap();
        let m = write_burst(&b, dir.path()).unwrap();
        for name in ["sharp.png", "frame_000.png", "psf_002.txt", MANIFEST_FILE] {
            assert!(dir.path().join(name).is_file(), "{name}");
        }
        let loaded = load_burst::<f64>(dir.path()).unwrap();
        assert_eq!(loaded.manifest, m);
        assert_eq!(loaded.frames.len(), 3);
        assert!(loaded.sharp.unwrap().max_abs_diff(&b.sharp) <= 0.5 / 255.0 + 1e-12);
        let psf = Psf::<f64>::read(dir.path().join("psf_001.txt")).unwrap();
        assert!((zeta(&psf, 32.0).unwrap() - m.frames[1].zeta).abs() < 1e-9);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 4);
        for k in ["sharp_ref", "frames", "zeta_sigma", "rng_seed"] {
            assert!(keys.contains(&k.to_string()));
        }
    }

    #[test]
    fn blurrier_relation() {
        let m = BurstManifest {
            sharp_ref: String::new(),
            frames: [0.5, 0.1, 0.1]
                .iter()
                .enumerate()
                .map(|(i, &z)| FrameEntry {
                    path: format!("{i}"),
                    kernel_path: String::new(),
                    zeta: z,
                    shift: [0, 0],
                })
                .collect(),
            zeta_sigma: 32.0,
            rng_seed: 0,
        };
        assert_eq!(m.blurrier(0, 1), Some(true));
        assert_eq!(m.blurrier(1, 0), Some(false));
        assert_eq!(m.blurrier(1, 2), None);
    }
}
