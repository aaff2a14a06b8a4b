use super::noise_field::ValueNoise;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::{Frame, FrameRate, VideoClip};

/// Coarse-grid step; the smoke field is evaluated on a grid this much
/// sparser than the frame and bilinearly upsampled.
const GRID: usize = 4;

/// Rise speed and turbulence rate of the plume, per frame.
const RISE: f64 = 0.045;
const EVOLVE: f64 = 0.02;

/// Density transfer: field values below `LO` are clear air, above `HI` opaque.
const LO: f64 = 0.24;
const HI: f64 = 0.46;

/// Grayscale animated fractal smoke on a black background. Deterministic in
/// `seed`; frame rate is 25 fps.
pub fn gen_smoke_clip(width: usize, height: usize, nframes: usize, seed: u64) -> Result<VideoClip> {
    gen_smoke_clip_with(width, height, nframes, seed, Exec::default())
}

pub fn gen_smoke_clip_with(width: usize, height: usize, nframes: usize, seed: u64, exec: Exec) -> Result<VideoClip> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!(
            "smoke clip {width}x{height} is below 16x16"
        )));
    }
    if nframes == 0 {
        return Err(Error::EmptyClip);
    }
    let noise = ValueNoise::new(seed);
    let cover = ValueNoise::new(seed ^ 0x5a5a_5a5a);
    let (cw, ch) = (width / GRID + 2, height / GRID + 2);
    // feature size relative to the frame so the look is resolution independent
    let scale = 3.0 / cw.min(ch) as f64;
    let frames = exec.map_range(nframes, |t| {
            let t = t as f64;
            let mut coarse = vec![0.0f64; cw * ch];
            for gy in 0..ch {
                for gx in 0..cw {
                    let (x, y) = (gx as f64 * scale, gy as f64 * scale);
                    let v = noise.fbm3(x, y + t * RISE, t * EVOLVE, 5);
                    // slowly drifting coverage modulation keeps some gaps open
                    let c = cover.fbm3(x * 0.35, y * 0.35 + t * RISE * 0.5, t * EVOLVE * 0.5, 2);
                    let field = v + 0.35 * (c - 0.5);
                    let d = ((field - LO) / (HI - LO)).clamp(0.0, 1.0);
                    coarse[gy * cw + gx] = d * d * (3.0 - 2.0 * d);
                }
            }
            Frame::from_fn(width, height, |x, y| {
                let fx = x as f64 / GRID as f64;
                let fy = y as f64 / GRID as f64;
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                let at = |i: usize, j: usize| coarse[j * cw + i];
                let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
                let bot = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
                let d = top * (1.0 - ty) + bot * ty;
                let v = (d * 250.0 + 0.5) as u8;
                [v, v, v]
            })
            .expect("dimensions checked above")
    });
    VideoClip::new(frames, FrameRate::default())
}
