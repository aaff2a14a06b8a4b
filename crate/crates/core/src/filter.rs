//! Plane filtering shared by the distortion models and the metrics. Every
//! filter here is "same"-size with replicate border handling.

use std::ops::{Add, Mul};

pub trait Sample: Copy + Default + Add<Output = Self> + Mul<Output = Self> + Send + Sync {
    fn from_f64(v: f64) -> Self;
}

impl Sample for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Sample for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// Normalized 1-D Gaussian of odd length `ksize`.
pub fn gaussian_1d(sigma: f64, ksize: usize) -> Vec<f64> {
    debug_assert!(ksize % 2 == 1);
    let r = (ksize / 2) as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Horizontal pass then vertical pass with centred odd-length kernels.
pub fn separable<T: Sample>(src: &[T], width: usize, height: usize, kx: &[T], ky: &[T]) -> Vec<T> {
    let tmp = convolve_rows(src, width, height, kx);
    convolve_cols(&tmp, width, height, ky)
}

fn convolve_rows<T: Sample>(src: &[T], width: usize, height: usize, k: &[T]) -> Vec<T> {
    let r = k.len() / 2;
    if k.len() == 1 {
        return src.iter().map(|&v| v * k[0]).collect();
    }
    let mut out = vec![T::default(); src.len()];
    let mut padded = vec![T::default(); width + 2 * r];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[i.saturating_sub(r).min(width - 1)];
        }
        let dst = &mut out[y * width..(y + 1) * width];
        // accumulate one shifted copy per tap; contiguous slices vectorize
        for (j, &kv) in k.iter().enumerate() {
            for (d, &s) in dst.iter_mut().zip(&padded[j..j + width]) {
                *d = *d + s * kv;
            }
        }
    }
    out
}

fn convolve_cols<T: Sample>(src: &[T], width: usize, height: usize, k: &[T]) -> Vec<T> {
    let r = k.len() as isize / 2;
    if k.len() == 1 {
        return src.iter().map(|&v| v * k[0]).collect();
    }
    let mut out = vec![T::default(); src.len()];
    for y in 0..height {
        let dst = &mut out[y * width..(y + 1) * width];
        for (j, &kv) in k.iter().enumerate() {
            let sy = (y as isize + j as isize - r).clamp(0, height as isize - 1) as usize;
            let row = &src[sy * width..(sy + 1) * width];
            for (d, &s) in dst.iter_mut().zip(row) {
                *d = *d + s * kv;
            }
        }
    }
    out
}

/// One tap of a sparse 2-D kernel: offset from the output pixel and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub weight: f64,
}

/// Correlates `src` with a sparse kernel (taps already mirrored for
/// convolution by the caller, if it matters).
pub fn sparse<T: Sample>(src: &[T], width: usize, height: usize, taps: &[Tap]) -> Vec<T> {
    let mut out = vec![T::default(); src.len()];
    let hi = height as isize;
    let pad = taps.iter().map(|t| t.dx.unsigned_abs()).max().unwrap_or(0);
    let pw = width + 2 * pad;
    // rows extended by replicating their end samples, so every tap reads a
    // contiguous slice
    let mut padded = vec![T::default(); pw * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for (i, p) in padded[y * pw..(y + 1) * pw].iter_mut().enumerate() {
            *p = row[i.saturating_sub(pad).min(width - 1)];
        }
    }
    for tap in taps {
        let w = T::from_f64(tap.weight);
        let start = (pad as isize + tap.dx) as usize;
        for y in 0..height {
            let sy = (y as isize + tap.dy).clamp(0, hi - 1) as usize;
            let row = &padded[sy * pw + start..sy * pw + start + width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, &s) in dst.iter_mut().zip(row) {
                *d = *d + s * w;
            }
        }
    }
    out
}

pub fn gaussian_blur_f64(src: &[f64], width: usize, height: usize, sigma: f64, ksize: usize) -> Vec<f64> {
    let k = gaussian_1d(sigma, ksize);
    separable(src, width, height, &k, &k)
}

/// Every second sample in both directions, starting at (0, 0).
pub fn decimate(src: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let (nw, nh) = (width.div_ceil(2), height.div_ceil(2));
    let mut out = Vec::with_capacity(nw * nh);
    for y in (0..height).step_by(2) {
        for x in (0..width).step_by(2) {
            out.push(src[y * width + x]);
        }
    }
    (out, nw, nh)
}
