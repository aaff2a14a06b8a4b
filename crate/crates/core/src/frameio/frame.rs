use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted frame side; the 3×3 noise mask must fit.
pub const MIN_SIDE: usize = 3;

/// An 8-bit RGB frame, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::InvalidFrame(format!(
                "{width}x{height} is below the {MIN_SIDE}x{MIN_SIDE} minimum"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidFrame(format!(
                "{} bytes for {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Frame::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Frame::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Applies `f` to every sample value, keeping the layout.
    pub fn map_samples(&self, mut f: impl FnMut(u8) -> u8) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Luma plane with BT.601 full-range weights.
    pub fn to_luma(&self) -> LumaPlane {
        to_luma(self)
    }
}

/// Real-valued luminance in [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} luma values for {width}x{height}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=255.0).contains(*v)) {
            return Err(Error::InvalidFrame(format!("luma value {v} outside [0, 255]")));
        }
        Ok(LumaPlane {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        LumaPlane::new(width, height, values)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub const BT601_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub fn to_luma(frame: &Frame) -> LumaPlane {
    let [wr, wg, wb] = BT601_WEIGHTS;
    let values = frame
        .pixels()
        .map(|[r, g, b]| {
            let y = wr * f64::from(r) + wg * f64::from(g) + wb * f64::from(b);
            y.clamp(0.0, 255.0)
        })
        .collect();
    LumaPlane {
        width: frame.width,
        height: frame.height,
        values,
    }
}

/// Frame rate as an exact ratio, so it survives a Y4M round-trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParameter(format!("frame rate {num}:{den}")));
        }
        Ok(FrameRate { num, den })
    }

    pub fn fps(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        FrameRate { num: 25, den: 1 }
    }
}

/// A non-empty sequence of equally sized frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoClip {
    frames: Vec<Frame>,
    rate: FrameRate,
}

impl VideoClip {
    pub fn new(frames: Vec<Frame>, rate: FrameRate) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyClip)?;
        let dims = first.dims();
        for (index, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(Error::InconsistentFrameSize {
                    index,
                    expected: dims,
                    got: f.dims(),
                });
            }
        }
        if rate.num == 0 || rate.den == 0 {
            return Err(Error::InvalidParameter("frame rate must be positive".into()));
        }
        Ok(VideoClip { frames, rate })
    }

    pub fn single(frame: Frame) -> Self {
        VideoClip {
            frames: vec![frame],
            rate: FrameRate::default(),
        }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn rate(&self) -> FrameRate {
        self.rate
    }

    pub fn fps(&self) -> f64 {
        self.rate.fps()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Replaces the frames, keeping the rate. Fails if the new frames are
    /// empty or inconsistently sized.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        VideoClip::new(frames, self.rate)
    }
}
