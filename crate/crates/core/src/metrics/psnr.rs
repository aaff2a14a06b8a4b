use crate::error::{Error, Result};
use crate::frameio::Frame;

pub const PSNR_PEAK: f64 = 255.0;

pub fn mse(reference: &Frame, distorted: &Frame) -> Result<f64> {
    if reference.dims() != distorted.dims() {
        return Err(Error::DimensionMismatch {
            left: reference.dims(),
            right: distorted.dims(),
        });
    }
    let sum: u64 = reference
        .data()
        .iter()
        .zip(distorted.data())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / reference.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB over all RGB samples; `+inf` for
/// identical frames.
pub fn psnr(reference: &Frame, distorted: &Frame) -> Result<f64> {
    let m = mse(reference, distorted)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PSNR_PEAK * PSNR_PEAK / m).log10())
}
