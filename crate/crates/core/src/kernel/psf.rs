use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::num::Real;

/// Default kernel canvas (odd, so the center cell is unique).
pub const DEFAULT_CANVAS: usize = 63;
/// Default spread of the blur-complexity score, in pixels.
pub const DEFAULT_ZETA_SIGMA: f64 = 32.0;

/// Normalized point-spread function on an odd `size` x `size` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Psf<T> {
    size: usize,
    weights: Vec<T>,
}

impl<T: Real> Psf<T> {
    /// Unit mass at the center cell.
    pub fn delta(size: usize) -> Self {
        assert!(size % 2 == 1, "PSF size must be odd");
        let mut weights = vec![T::zero(); size * size];
        weights[(size / 2) * size + size / 2] = T::one();
        Psf { size, weights }
    }

    /// Scales nonnegative raw weights to unit sum.
    pub fn normalized(size: usize, raw: Vec<T>) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::dim(format!("PSF size must be odd, got {size}")));
        }
        if raw.len() != size * size {
            return Err(Error::dim(format!(
                "{size}x{size} PSF needs {} weights, got {}",
                size * size,
                raw.len()
            )));
        }
        if raw.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::param("PSF weights must be finite and nonnegative"));
        }
        let total: T = raw.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::param("PSF has zero mass"));
        }
        Ok(Psf {
            size,
            weights: raw.into_iter().map(|v| v / total).collect(),
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn center(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.weights[row * self.size + col]
    }

    /// Mass-weighted mean offset `[x, y]` from the center cell.
    pub fn first_moment(&self) -> [T; 2] {
        let c = self.center() as isize;
        let mut m = [T::zero(); 2];
        for (i, &v) in self.weights.iter().enumerate() {
            let (r, col) = ((i / self.size) as isize - c, (i % self.size) as isize - c);
            m[0] = m[0] + v * T::lit(col as f64);
            m[1] = m[1] + v * T::lit(r as f64);
        }
        m
    }

    /// Text form: a `PSF k k` header line followed by `k` rows of `k` values.
    pub fn to_text(&self) -> String {
        let mut out = format!("PSF {} {}\n", self.size, self.size);
        for row in self.weights.chunks_exact(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{}", v.to_f64_lossy())).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let bad = |message: String| Error::Malformed {
            what: "PSF file",
            path: origin.to_path_buf(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .split_whitespace()
            .collect();
        let size = match header.as_slice() {
            ["PSF", a, b] if a == b => a.parse::<usize>().map_err(|e| bad(e.to_string()))?,
            _ => return Err(bad(format!("bad header {header:?}"))),
        };
        let mut raw = Vec::with_capacity(size * size);
        for line in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| bad(format!("bad value {tok:?}")))?;
                raw.push(T::lit(v));
            }
        }
        if raw.len() != size * size {
            return Err(bad(format!("expected {} values, found {}", size * size, raw.len())));
        }
        let mut psf = Psf::normalized(size, raw.clone())?;
        // keep stored values exactly when the file already has unit mass
        let total: f64 = raw.iter().map(|v| v.to_f64_lossy()).sum();
        if (total - 1.0).abs() <= 1e-12 {
            psf.weights = raw;
        }
        Ok(psf)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Splats every trajectory point onto its four neighboring cells with
/// bilinear weights, then normalizes to unit mass.
pub fn rasterize_psf<T: Real>(traj: &Trajectory<T>, size: usize) -> Result<Psf<T>> {
    if size % 2 == 0 || size == 0 {
        return Err(Error::dim(format!("PSF size must be odd, got {size}")));
    }
    if traj.points.is_empty() {
        return Err(Error::param("empty trajectory"));
    }
    let center = (size / 2) as f64;
    let extent = traj.extent().to_f64_lossy();
    if !(extent <= center) {
        return Err(Error::OutOfSupport {
            size,
            extent,
            limit: center,
        });
    }
    let mut raw = vec![T::zero(); size * size];
    let last = size - 1;
    for p in &traj.points {
        let col = T::lit(center) + p[0];
        let row = T::lit(center) + p[1];
        let c0 = col.floor();
        let r0 = row.floor();
        let fx = col - c0;
        let fy = row - r0;
        let (c0, r0) = (c0.to_usize().unwrap_or(0), r0.to_usize().unwrap_or(0));
        let cells = [
            (r0, c0, (T::one() - fy) * (T::one() - fx)),
            (r0, c0 + 1, (T::one() - fy) * fx),
            (r0 + 1, c0, fy * (T::one() - fx)),
            (r0 + 1, c0 + 1, fy * fx),
        ];
        for (r, c, wgt) in cells {
            if wgt == T::zero() {
                continue;
            }
            // only reachable with zero weight when a point sits exactly on the last cell
            if r > last || c > last {
                continue;
            }
            raw[r * size + c] = raw[r * size + c] + wgt;
        }
    }
    Psf::normalized(size, raw)
}

/// Blur-complexity score: `100 * sum h(k) * (1 - exp(-|k|^2 / (2 sigma^2)))`
/// over integer offsets `k` from the kernel center. Lies in `[0, 100)`.
pub fn zeta<T: Real>(psf: &Psf<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::param(format!("zeta sigma must be > 0, got {sigma}")));
    }
    let c = psf.center() as isize;
    let denom = T::lit(2.0) * sigma * sigma;
    let mut acc = T::zero();
    for (i, &h) in psf.weights().iter().enumerate() {
        if h == T::zero() {
            continue;
        }
        let dy = (i / psf.size()) as isize - c;
        let dx = (i % psf.size()) as isize - c;
        let r2 = T::lit((dx * dx + dy * dy) as f64);
        // exp_m1 keeps precision for the small offsets that dominate real kernels
        acc = acc + h * -(-r2 / denom).exp_m1();
    }
    Ok(T::lit(100.0) * acc)
}

/// Shape descriptors of a kernel and its generating path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelDescriptors<T> {
    /// Larger eigenvalue of the point covariance.
    pub c_l: T,
    /// Smaller eigenvalue of the point covariance.
    pub c_s: T,
    /// Half the harmonic mean of the eigenvalues.
    pub hm: T,
    /// Path length.
    pub m: T,
    pub zeta: T,
}

/// Eigenvalues `(larger, smaller)` of the population covariance of the points.
pub fn covariance_eigenvalues<T: Real>(points: &[[T; 2]]) -> (T, T) {
    let n = T::from_usize_lossy(points.len());
    let mx = points.iter().map(|p| p[0]).sum::<T>() / n;
    let my = points.iter().map(|p| p[1]).sum::<T>() / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    let (a, d, b) = (sxx / n, syy / n, sxy / n);
    let half_trace = (a + d) / T::lit(2.0);
    let radius = ((a - d) / T::lit(2.0)).hypot(b);
    (half_trace + radius, (half_trace - radius).max(T::zero()))
}

pub fn kernel_descriptors<T: Real>(traj: &Trajectory<T>, psf: &Psf<T>) -> Result<KernelDescriptors<T>> {
    if traj.points.is_empty() {
        return Err(Error::param("empty trajectory"));
    }
    let (c_l, c_s) = covariance_eigenvalues(&traj.points);
    let sum = c_l + c_s;
    let hm = if sum > T::zero() { c_l * c_s / sum } else { T::zero() };
    Ok(KernelDescriptors {
        c_l,
        c_s,
        hm,
        m: traj.path_length(),
        zeta: zeta(psf, T::lit(DEFAULT_ZETA_SIGMA))?,
    })
}
