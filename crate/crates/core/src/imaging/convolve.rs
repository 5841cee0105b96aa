use super::{reflect_index, Image};
use crate::error::{Error, Result};
use crate::kernel::Psf;
use crate::num::Real;

/// Rule for samples that fall outside the image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Half-sample symmetric extension (`b a | a b c | c b`).
    #[default]
    Reflect,
    Zero,
}

/// "Same"-size linear convolution with a PSF, clamped to `[0, 1]`.
pub fn convolve_psf<T: Real>(img: &Image<T>, psf: &Psf<T>, boundary: Boundary) -> Result<Image<T>> {
    let mut out = convolve_psf_unclamped(img, psf, boundary)?;
    out.clamp_in_place();
    Ok(out)
}

/// Linear convolution without the final clamp.
///
/// `out(y, x) = sum_{r,s} h(r, s) * img(y + c - r, x + c - s)` with `c` the
/// kernel center, so a kernel cell right of center moves content right.
/// Only nonzero taps are visited; motion kernels are sparse.
pub fn convolve_psf_unclamped<T: Real>(
    img: &Image<T>,
    psf: &Psf<T>,
    boundary: Boundary,
) -> Result<Image<T>> {
    let k = psf.size();
    if k > img.height() || k > img.width() {
        return Err(Error::dim(format!(
            "{k}x{k} kernel larger than {}x{} image",
            img.height(),
            img.width()
        )));
    }
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let center = (k / 2) as isize;
    let taps: Vec<(isize, isize, T)> = psf
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != T::zero())
        .map(|(i, &v)| ((i / k) as isize - center, (i % k) as isize - center, v))
        .collect();

    let mut out = Image::zeros(h, w, ch)?;
    let src = img.data();
    let dst = out.data_mut();
    for &(dy, dx, weight) in &taps {
        for y in 0..h {
            let sy = y as isize - dy;
            let sy = match boundary {
                Boundary::Reflect => reflect_index(sy, h),
                Boundary::Zero if sy < 0 || sy >= h as isize => continue,
                Boundary::Zero => sy as usize,
            };
            for x in 0..w {
                let sx = x as isize - dx;
                let sx = match boundary {
                    Boundary::Reflect => reflect_index(sx, w),
                    Boundary::Zero if sx < 0 || sx >= w as isize => continue,
                    Boundary::Zero => sx as usize,
                };
                let s = (sy * w + sx) * ch;
                let d = (y * w + x) * ch;
                for c in 0..ch {
                    dst[d + c] = dst[d + c] + weight * src[s + c];
                }
            }
        }
    }
    Ok(out)
}

/// Integer translation with reflect fill: `out(y, x) = img(y - dy, x - dx)`.
pub fn translate<T: Real>(img: &Image<T>, dx: i32, dy: i32) -> Image<T> {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut data = Vec::with_capacity(img.data().len());
    for y in 0..h {
        let sy = reflect_index(y as isize - dy as isize, h);
        for x in 0..w {
            let sx = reflect_index(x as isize - dx as isize, w);
            let s = (sy * w + sx) * ch;
            data.extend_from_slice(&img.data()[s..s + ch]);
        }
    }
    Image::new(h, w, ch, data).expect("same shape")
}
