//! Procedural sharp test scenes: a smooth background with random rectangles,
//! discs, bars, checkerboard patches and fine texture. Useful when no photo
//! collection is at hand.

use rand::Rng;

use crate::error::Result;
use crate::imaging::Image;
use crate::num::Real;

enum Shape {
    Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
    Disc { cy: f64, cx: f64, r: f64 },
    Bar { cy: f64, cx: f64, nx: f64, ny: f64, half: f64, len: f64 },
    Checker { y0: f64, x0: f64, y1: f64, x1: f64, cell: f64 },
}

impl Shape {
    fn covers(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Rect { y0, x0, y1, x1 } => y >= y0 && y < y1 && x >= x0 && x < x1,
            Shape::Disc { cy, cx, r } => (y - cy).hypot(x - cx) <= r,
            Shape::Bar { cy, cx, nx, ny, half, len } => {
                let (dy, dx) = (y - cy, x - cx);
                (dx * nx + dy * ny).abs() <= half && (dx * ny - dy * nx).abs() <= len
            }
            Shape::Checker { y0, x0, y1, x1, cell } => {
                y >= y0
                    && y < y1
                    && x >= x0
                    && x < x1
                    && (((y - y0) / cell).floor() as i64 + ((x - x0) / cell).floor() as i64) % 2 == 0
            }
        }
    }
}

/// Random piecewise-constant scene with values in `[0.05, 0.95]`.
pub fn random_scene<T: Real, R: Rng + ?Sized>(
    height: usize,
    width: usize,
    channels: usize,
    rng: &mut R,
) -> Result<Image<T>> {
    let (hf, wf) = (height as f64, width as f64);
    let size = hf.min(wf);
    let base: Vec<f64> = (0..channels).map(|_| rng.random_range(0.2..0.8)).collect();
    let slope: Vec<[f64; 2]> = (0..channels)
        .map(|_| [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)])
        .collect();

    let count = 12 + (size / 8.0) as usize;
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let color: Vec<f64> = (0..channels).map(|_| rng.random_range(0.05..0.95)).collect();
        let cy = rng.random_range(0.0..hf);
        let cx = rng.random_range(0.0..wf);
        let extent = rng.random_range(0.04..0.3) * size;
        let shape = match rng.random_range(0..4) {
            0 => Shape::Rect {
                y0: cy - extent / 2.0,
                x0: cx - extent * rng.random_range(0.3..1.0),
                y1: cy + extent / 2.0,
                x1: cx + extent * rng.random_range(0.3..1.0),
            },
            1 => Shape::Disc { cy, cx, r: extent / 2.0 },
            2 => {
                let a = rng.random_range(0.0..std::f64::consts::PI);
                Shape::Bar {
                    cy,
                    cx,
                    nx: a.cos(),
                    ny: a.sin(),
                    half: rng.random_range(0.8..3.0),
                    len: extent,
                }
            }
            _ => Shape::Checker {
                y0: cy - extent / 2.0,
                x0: cx - extent / 2.0,
                y1: cy + extent / 2.0,
                x1: cx + extent / 2.0,
                cell: rng.random_range(2.0..6.0),
            },
        };
        shapes.push((shape, color));
    }
    let grain = rng.random_range(0.0..0.04);
    let noise: Vec<f64> = (0..height * width).map(|_| rng.random_range(-1.0..1.0)).collect();

    Image::from_fn(height, width, channels, |y, x, c| {
        let (yf, xf) = (y as f64 + 0.5, x as f64 + 0.5);
        let mut v = base[c] + slope[c][0] * (yf / hf - 0.5) + slope[c][1] * (xf / wf - 0.5);
        for (shape, color) in &shapes {
            if shape.covers(yf, xf) {
                v = color[c];
            }
        }
        v += grain * noise[y * width + x];
        T::lit(v.clamp(0.05, 0.95))
    })
}
