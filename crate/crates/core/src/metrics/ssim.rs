use crate::error::{Error, Result};
use crate::filter;
use crate::frameio::LumaPlane;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Local first and second moments of a pair of planes under a Gaussian
/// window, same-size output.
pub(crate) struct Moments {
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    pub cov: Vec<f64>,
}

impl Moments {
    pub fn compute(x: &[f64], y: &[f64], w: usize, h: usize, sigma: f64, ksize: usize) -> Moments {
        let blur = |v: &[f64]| filter::gaussian_blur_f64(v, w, h, sigma, ksize);
        let mu_x = blur(x);
        let mu_y = blur(y);
        let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
        let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
        let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
        let var_x = blur(&xx).iter().zip(&mu_x).map(|(s, m)| s - m * m).collect();
        let var_y = blur(&yy).iter().zip(&mu_y).map(|(s, m)| s - m * m).collect();
        let cov = blur(&xy).iter().zip(mu_x.iter().zip(&mu_y)).map(|(s, (a, b))| s - a * b).collect();
        Moments {
            mu_x,
            mu_y,
            var_x,
            var_y,
            cov,
        }
    }
}

/// Mean SSIM over window positions that lie fully inside the plane.
pub fn ssim(reference: &LumaPlane, distorted: &LumaPlane) -> Result<f64> {
    if reference.dims() != distorted.dims() {
        return Err(Error::DimensionMismatch {
            left: reference.dims(),
            right: distorted.dims(),
        });
    }
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidFrame(format!("{w}x{h} is smaller than the SSIM window")));
    }
    let m = Moments::compute(reference.values(), distorted.values(), w, h, SSIM_SIGMA, SSIM_WINDOW);
    let r = SSIM_WINDOW / 2;
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in r..h - r {
        for x in r..w - r {
            let i = y * w + x;
            let (mx, my) = (m.mu_x[i], m.mu_y[i]);
            let num = (2.0 * mx * my + C1) * (2.0 * m.cov[i] + C2);
            let den = (mx * mx + my * my + C1) * (m.var_x[i] + m.var_y[i] + C2);
            sum += num / den;
            n += 1;
        }
    }
    Ok(sum / n as f64)
}
