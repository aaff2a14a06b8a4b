//! The five distortion models, applied frame by frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::filter::{self, Tap};
use crate::frameio::{Frame, VideoClip};

#[inline]
pub(crate) fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn split_planes(frame: &Frame) -> [Vec<f32>; 3] {
    let n = frame.width() * frame.height();
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for p in frame.data().chunks_exact(3) {
        for c in 0..3 {
            planes[c].push(f32::from(p[c]));
        }
    }
    planes
}

fn merge_planes(width: usize, height: usize, planes: &[Vec<f32>; 3]) -> Frame {
    let n = width * height;
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        for plane in planes {
            data.push(round_u8(f64::from(plane[i])));
        }
    }
    Frame::new(width, height, data).expect("dimensions preserved")
}

fn map_frames(clip: &VideoClip, exec: Exec, f: impl Fn(usize, &Frame) -> Frame + Sync + Send) -> VideoClip {
    let frames = exec.map_indexed(clip.frames(), f);
    clip.with_frames(frames).expect("frame count and dimensions preserved")
}

/// Kernel size covering ±3σ, the default pairing for a given sigma.
pub fn default_ksize(sigma: f64) -> usize {
    2 * (3.0 * sigma).ceil() as usize + 1
}

pub fn defocus_blur_frame(frame: &Frame, sigma: f64, ksize: usize) -> Frame {
    let k: Vec<f32> = filter::gaussian_1d(sigma, ksize).into_iter().map(|v| v as f32).collect();
    let (w, h) = frame.dims();
    let planes = split_planes(frame).map(|p| filter::separable(&p, w, h, &k, &k));
    merge_planes(w, h, &planes)
}

pub fn apply_defocus_blur(clip: &VideoClip, sigma: f64, ksize: usize) -> Result<VideoClip> {
    apply_defocus_blur_with(clip, sigma, ksize, Exec::default())
}

pub fn apply_defocus_blur_with(clip: &VideoClip, sigma: f64, ksize: usize, exec: Exec) -> Result<VideoClip> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("defocus sigma {sigma}")));
    }
    let (w, h) = clip.dims();
    if ksize < 3 || ksize % 2 == 0 || ksize > w.min(h) {
        return Err(Error::InvalidParameter(format!(
            "defocus ksize {ksize} must be odd, >= 3 and <= {}",
            w.min(h)
        )));
    }
    Ok(map_frames(clip, exec, |_, f| defocus_blur_frame(f, sigma, ksize)))
}

/// Anti-aliased line kernel: each cell is weighted by `max(0, 1 - d)` where
/// `d` is its distance to a centred segment of the given length and angle
/// (degrees, counter-clockwise from the +x axis, y pointing up). Weights are
/// normalized to sum to one.
pub fn motion_kernel(length: f64, angle_deg: f64) -> Vec<Tap> {
    let half = (length - 1.0).max(0.0) / 2.0;
    let (s, c) = angle_deg.to_radians().sin_cos();
    let reach = half.ceil() as isize + 1;
    let mut taps = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            // image rows grow downwards
            let (px, py) = (dx as f64, -(dy as f64));
            let along = (px * c + py * s).clamp(-half, half);
            let (qx, qy) = (along * c, along * s);
            let d = ((px - qx).powi(2) + (py - qy).powi(2)).sqrt();
            let w = 1.0 - d;
            if w > 1e-9 {
                taps.push(Tap { dx, dy, weight: w });
            }
        }
    }
    let sum: f64 = taps.iter().map(|t| t.weight).sum();
    for t in &mut taps {
        t.weight /= sum;
    }
    taps
}

pub fn motion_blur_frame(frame: &Frame, taps: &[Tap]) -> Frame {
    let (w, h) = frame.dims();
    let planes = split_planes(frame).map(|p| filter::sparse(&p, w, h, taps));
    merge_planes(w, h, &planes)
}

pub fn apply_motion_blur(clip: &VideoClip, length: f64, angle_deg: f64) -> Result<VideoClip> {
    apply_motion_blur_with(clip, length, angle_deg, Exec::default())
}

pub fn apply_motion_blur_with(clip: &VideoClip, length: f64, angle_deg: f64, exec: Exec) -> Result<VideoClip> {
    if !(length >= 1.0 && length.is_finite()) || !angle_deg.is_finite() {
        return Err(Error::InvalidParameter(format!("motion length {length}, angle {angle_deg}")));
    }
    let taps = motion_kernel(length, angle_deg);
    if taps.len() == 1 {
        return Ok(clip.clone());
    }
    Ok(map_frames(clip, exec, |_, f| motion_blur_frame(f, &taps)))
}

/// Noise for frame `index` comes from its own ChaCha stream, so frames can be
/// generated in any order.
pub fn awgn_frame(frame: &Frame, variance: f64, seed: u64, index: usize) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite non-negative variance");
    frame.map_samples(|v| {
        let x = f64::from(v) / 255.0 + normal.sample(&mut rng);
        round_u8(x.clamp(0.0, 1.0) * 255.0)
    })
}

pub fn apply_awgn(clip: &VideoClip, variance: f64, seed: u64) -> Result<VideoClip> {
    apply_awgn_with(clip, variance, seed, Exec::default())
}

pub fn apply_awgn_with(clip: &VideoClip, variance: f64, seed: u64, exec: Exec) -> Result<VideoClip> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {variance}")));
    }
    if variance == 0.0 {
        return Ok(clip.clone());
    }
    Ok(map_frames(clip, exec, |i, f| awgn_frame(f, variance, seed, i)))
}

/// Multiplicative gain field with a fully lit disc.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationMask {
    width: usize,
    height: usize,
    gain: Vec<f64>,
}

impl IlluminationMask {
    pub fn uniform(width: usize, height: usize, gain: f64) -> Self {
        IlluminationMask {
            width,
            height,
            gain: vec![gain; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.gain[y * self.width + x]
    }
}

/// Gain 1 inside the disc, Gaussian roll-off towards `floor` outside it.
pub fn illumination_gain(d: f64, radius: f64, falloff: f64, floor: f64) -> f64 {
    if d <= radius {
        1.0
    } else {
        let t = d - radius;
        floor + (1.0 - floor) * (-(t * t) / (2.0 * falloff * falloff)).exp()
    }
}

pub fn make_illumination_mask(
    width: usize,
    height: usize,
    center: (f64, f64),
    radius: f64,
    falloff: f64,
    floor: f64,
) -> Result<IlluminationMask> {
    if !(radius > 0.0) || !(falloff > 0.0) || !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidParameter(format!(
            "illumination radius {radius}, falloff {falloff}, floor {floor}"
        )));
    }
    let mut gain = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = (x as f64 - center.0).hypot(y as f64 - center.1);
            gain.push(illumination_gain(d, radius, falloff, floor));
        }
    }
    Ok(IlluminationMask { width, height, gain })
}

pub fn illuminate_frame(frame: &Frame, mask: &IlluminationMask) -> Frame {
    let data = frame
        .data()
        .chunks_exact(3)
        .zip(&mask.gain)
        .flat_map(|(p, &g)| [round_u8(f64::from(p[0]) * g), round_u8(f64::from(p[1]) * g), round_u8(f64::from(p[2]) * g)])
        .collect();
    Frame::new(frame.width(), frame.height(), data).expect("dimensions preserved")
}

pub fn apply_uneven_illumination(clip: &VideoClip, mask: &IlluminationMask) -> Result<VideoClip> {
    apply_uneven_illumination_with(clip, mask, Exec::default())
}

pub fn apply_uneven_illumination_with(clip: &VideoClip, mask: &IlluminationMask, exec: Exec) -> Result<VideoClip> {
    if mask.dims() != clip.dims() {
        return Err(Error::DimensionMismatch {
            left: clip.dims(),
            right: mask.dims(),
        });
    }
    Ok(map_frames(clip, exec, |_, f| illuminate_frame(f, mask)))
}

/// Screen blend of one sample pair, both in [0, 1].
#[inline]
pub fn screen(a: f64, b: f64, opacity: f64) -> f64 {
    // 1 - (1 - a)(1 - opacity·b), arranged so that b = 0 returns a exactly
    let c = opacity * b;
    a + c * (1.0 - a)
}

pub fn smoke_frame(frame: &Frame, smoke: &Frame, opacity: f64) -> Frame {
    let data = frame
        .data()
        .iter()
        .zip(smoke.data())
        .map(|(&a, &b)| round_u8(screen(f64::from(a) / 255.0, f64::from(b) / 255.0, opacity) * 255.0))
        .collect();
    Frame::new(frame.width(), frame.height(), data).expect("dimensions preserved")
}

/// Screen-blends `smoke` over `clip`; the smoke clip is looped or truncated
/// to the clip length.
pub fn apply_smoke(clip: &VideoClip, smoke: &VideoClip, opacity: f64) -> Result<VideoClip> {
    apply_smoke_with(clip, smoke, opacity, Exec::default())
}

pub fn apply_smoke_with(clip: &VideoClip, smoke: &VideoClip, opacity: f64, exec: Exec) -> Result<VideoClip> {
    if smoke.dims() != clip.dims() {
        return Err(Error::DimensionMismatch {
            left: clip.dims(),
            right: smoke.dims(),
        });
    }
    if !(0.0..=1.0).contains(&opacity) {
        return Err(Error::InvalidParameter(format!("smoke opacity {opacity}")));
    }
    let layers = smoke.frames();
    Ok(map_frames(clip, exec, |i, f| smoke_frame(f, &layers[i % layers.len()], opacity)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::FrameRate;

    fn textured(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            [((x * 31 + y * 17) % 256) as u8, ((x * x + y) % 256) as u8, ((x ^ y) * 5 % 256) as u8]
        })
        .unwrap()
    }

    fn clip_of(f: Frame, n: usize) -> VideoClip {
        VideoClip::new(vec![f; n], FrameRate::default()).unwrap()
    }

    #[test]
    fn defocus_keeps_constant_frames() {
        let c = clip_of(Frame::filled(20, 16, [200, 13, 77]).unwrap(), 2);
        for (s, k) in [(0.5, 3), (1.0, 7), (3.0, 15)] {
            assert_eq!(apply_defocus_blur(&c, s, k).unwrap(), c);
        }
    }

    #[test]
    fn defocus_impulse_matches_direct_convolution() {
        // direct 5×5 convolution of a centred impulse
        let f = Frame::from_fn(11, 11, |x, y| if x == 5 && y == 5 { [255; 3] } else { [0; 3] }).unwrap();
        let out = apply_defocus_blur(&clip_of(f, 1), 1.0, 5).unwrap();
        let mut weights = [[0.0f64; 5]; 5];
        let mut total = 0.0;
        for (j, row) in weights.iter_mut().enumerate() {
            for (i, w) in row.iter_mut().enumerate() {
                let (dx, dy) = (i as f64 - 2.0, j as f64 - 2.0);
                *w = (-(dx * dx + dy * dy) / 2.0).exp();
                total += *w;
            }
        }
        for y in 0..11 {
            for x in 0..11 {
                let (dx, dy) = (x as isize - 5, y as isize - 5);
                let expected = if dx.abs() <= 2 && dy.abs() <= 2 {
                    weights[(dy + 2) as usize][(dx + 2) as usize] / total * 255.0
                } else {
                    0.0
                };
                assert_eq!(out.frames()[0].pixel(x, y)[0], round_u8(expected), "at {x},{y}");
            }
        }
        // 0.1621 × 255 = 41.3
        assert_eq!(out.frames()[0].pixel(5, 5), [41; 3]);
    }

    #[test]
    fn defocus_rejects_bad_ksize() {
        let c = clip_of(Frame::filled(8, 8, [1; 3]).unwrap(), 1);
        assert!(apply_defocus_blur(&c, 1.0, 4).is_err());
        assert!(apply_defocus_blur(&c, 1.0, 1).is_err());
        assert!(apply_defocus_blur(&c, 1.0, 9).is_err());
        assert!(apply_defocus_blur(&c, 0.0, 3).is_err());
    }

    #[test]
    fn motion_kernel_shapes() {
        let k1 = motion_kernel(1.0, 30.0);
        assert_eq!(k1, vec![Tap { dx: 0, dy: 0, weight: 1.0 }]);
        let k9 = motion_kernel(9.0, 0.0);
        assert_eq!(k9.len(), 9);
        assert!(k9.iter().all(|t| t.dy == 0 && (t.weight - 1.0 / 9.0).abs() < 1e-12));
        let k_diag = motion_kernel(7.0, 45.0);
        assert!((k_diag.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        // 45° runs up-right: positive dx pairs with negative dy (row index)
        assert!(k_diag.iter().any(|t| t.dx == 2 && t.dy == -2));
        assert!(!k_diag.iter().any(|t| t.dx == 2 && t.dy == 2));
        let k_v = motion_kernel(5.0, 90.0);
        assert!(k_v.iter().all(|t| t.dx == 0));
    }

    #[test]
    fn motion_length_one_is_identity() {
        let c = clip_of(textured(16, 12), 2);
        assert_eq!(apply_motion_blur(&c, 1.0, 0.0).unwrap(), c);
        assert_eq!(apply_motion_blur(&c, 1.0, 73.0).unwrap(), c);
    }

    #[test]
    fn motion_step_edge_matches_moving_average() {
        let f = Frame::from_fn(40, 5, |x, _| if x >= 20 { [240; 3] } else { [0; 3] }).unwrap();
        let out = apply_motion_blur(&clip_of(f.clone(), 1), 9.0, 0.0).unwrap();
        let row: Vec<f64> = (0..40).map(|x| f64::from(f.pixel(x, 0)[0])).collect();
        for x in 0..40 {
            let avg: f64 = (-4..=4)
                .map(|d| row[(x as isize + d).clamp(0, 39) as usize])
                .sum::<f64>()
                / 9.0;
            for y in 0..5 {
                assert_eq!(out.frames()[0].pixel(x, y)[0], round_u8(avg));
            }
        }
        // ramp covers exactly 9 columns strictly between the plateaus
        let ramp = (0..40)
            .filter(|&x| {
                let v = out.frames()[0].pixel(x, 0)[0];
                v > 0 && v < 240
            })
            .count();
        assert_eq!(ramp, 8);
    }

    #[test]
    fn awgn_identity_and_determinism() {
        let c = clip_of(textured(32, 32), 3);
        assert_eq!(apply_awgn(&c, 0.0, 9).unwrap(), c);
        let a = apply_awgn(&c, 0.01, 42).unwrap();
        let b = apply_awgn(&c, 0.01, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, apply_awgn(&c, 0.01, 43).unwrap());
        assert_ne!(a.frames()[0], a.frames()[1]);
        assert_eq!(Exec::Sequential.map(&[0], |_| apply_awgn_with(&c, 0.01, 42, Exec::Sequential).unwrap())[0], a);
    }

    #[test]
    fn awgn_sample_variance() {
        let c = clip_of(Frame::filled(256, 256, [128; 3]).unwrap(), 1);
        let out = apply_awgn(&c, 0.01, 7).unwrap();
        let diffs: Vec<f64> = out.frames()[0]
            .data()
            .iter()
            .map(|&v| (f64::from(v) - 128.0) / 255.0)
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        assert!((var - 0.01).abs() < 0.0015, "variance {var}");
    }

    #[test]
    fn illumination_mask_formula() {
        let m = make_illumination_mask(101, 51, (50.0, 25.0), 10.0, 5.0, 0.0).unwrap();
        assert_eq!(m.at(50, 25), 1.0);
        assert_eq!(m.at(60, 25), 1.0);
        assert!((m.at(65, 25) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((illumination_gain(1e6, 10.0, 5.0, 0.3) - 0.3).abs() < 1e-12);
        assert!(make_illumination_mask(4, 4, (0.0, 0.0), 0.0, 1.0, 0.0).is_err());
        assert!(make_illumination_mask(4, 4, (0.0, 0.0), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn illumination_multiplies_with_half_up_rounding() {
        let c = clip_of(Frame::filled(4, 4, [200, 201, 1]).unwrap(), 1);
        let out = apply_uneven_illumination(&c, &IlluminationMask::uniform(4, 4, 0.5)).unwrap();
        assert_eq!(out.frames()[0].pixel(0, 0), [100, 101, 1]);
        let ones = IlluminationMask::uniform(4, 4, 1.0);
        assert_eq!(apply_uneven_illumination(&c, &ones).unwrap(), c);
        assert!(apply_uneven_illumination(&c, &IlluminationMask::uniform(5, 4, 1.0)).is_err());
    }

    #[test]
    fn centred_mask_darkens_corners_only() {
        let (w, h) = (64, 48);
        let c = clip_of(Frame::filled(w, h, [220; 3]).unwrap(), 1);
        let m = make_illumination_mask(w, h, (32.0, 24.0), 16.0, 8.0, 0.1).unwrap();
        let out = apply_uneven_illumination(&c, &m).unwrap();
        assert_eq!(out.frames()[0].pixel(32, 24), [220; 3]);
        // corner distance 40 → gain 0.1 + 0.9·exp(-(24²)/(2·64)) ≈ 0.1100
        let g = illumination_gain(40.0, 16.0, 8.0, 0.1);
        assert_eq!(out.frames()[0].pixel(0, 0)[0], round_u8(220.0 * g));
        assert!(out.frames()[0].pixel(0, 0)[0] < 30);
    }

    #[test]
    fn screen_blend_cases() {
        let c = clip_of(textured(16, 16), 2);
        let black = clip_of(Frame::filled(16, 16, [0; 3]).unwrap(), 1);
        let white = clip_of(Frame::filled(16, 16, [255; 3]).unwrap(), 1);
        assert_eq!(apply_smoke(&c, &black, 0.8).unwrap(), c);
        let sat = apply_smoke(&c, &white, 1.0).unwrap();
        assert!(sat.frames().iter().all(|f| f.data().iter().all(|&v| v == 255)));
        assert!((screen(0.5, 0.5, 0.5) - 0.625).abs() < 1e-15);
        assert!(apply_smoke(&c, &clip_of(Frame::filled(8, 8, [0; 3]).unwrap(), 1), 0.5).is_err());
    }
}
