//! Pixel-domain visual information fidelity over a four-scale Gaussian
//! pyramid.

use super::ssim::Moments;
use crate::error::{Error, Result};
use crate::filter;
use crate::frameio::LumaPlane;

pub const VIF_SCALES: usize = 4;
pub const VIF_WINDOW: usize = 11;
/// Variance of the visual noise added in both channels.
pub const VIF_NOISE_VARIANCE: f64 = 2.0;
const WINDOW_SIGMA: f64 = VIF_WINDOW as f64 / 5.0;
const TINY: f64 = 1e-10;

/// Information preserved in the distorted plane relative to the reference
/// (1 for identical inputs). Not symmetric.
pub fn vif(reference: &LumaPlane, distorted: &LumaPlane) -> Result<f64> {
    if reference.dims() != distorted.dims() {
        return Err(Error::DimensionMismatch {
            left: reference.dims(),
            right: distorted.dims(),
        });
    }
    let (mut w, mut h) = reference.dims();
    if w < 32 || h < 32 {
        return Err(Error::InvalidFrame(format!("{w}x{h} is below the 32x32 VIF minimum")));
    }
    let mut x = reference.values().to_vec();
    let mut y = distorted.values().to_vec();
    let (mut num, mut den) = (0.0, 0.0);
    for scale in 0..VIF_SCALES {
        if scale > 0 {
            let xf = filter::gaussian_blur_f64(&x, w, h, WINDOW_SIGMA, VIF_WINDOW);
            let yf = filter::gaussian_blur_f64(&y, w, h, WINDOW_SIGMA, VIF_WINDOW);
            let (xd, nw, nh) = filter::decimate(&xf, w, h);
            let (yd, _, _) = filter::decimate(&yf, w, h);
            x = xd;
            y = yd;
            w = nw;
            h = nh;
        }
        let m = Moments::compute(&x, &y, w, h, WINDOW_SIGMA, VIF_WINDOW);
        for i in 0..w * h {
            let s1 = m.var_x[i].max(0.0);
            let s2 = m.var_y[i].max(0.0);
            let s12 = m.cov[i];
            let (mut g, mut sv) = (s12 / (s1 + TINY), s2 - (s12 / (s1 + TINY)) * s12);
            let mut s1 = s1;
            if s1 < TINY {
                g = 0.0;
                sv = s2;
                s1 = 0.0;
            }
            if s2 < TINY {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = s2;
                g = 0.0;
            }
            let sv = sv.max(TINY);
            num += (1.0 + g * g * s1 / (sv + VIF_NOISE_VARIANCE)).log2();
            den += (1.0 + s1 / VIF_NOISE_VARIANCE).log2();
        }
    }
    if den == 0.0 {
        // flat reference: only an exact copy preserves everything
        return Ok(if reference == distorted { 1.0 } else { 0.0 });
    }
    Ok(num / den)
}
