//! Procedural stand-ins for laparoscopic reference footage.
//!
//! Each content category gets a tissue canvas (two-tone parenchyma, vessels,
//! wet specular spots, shading) rendered once, a camera path over it, and
//! animated metallic instruments drawn per frame. The look is only meant to
//! exercise the distortion classifiers and metrics the way real endoscopic
//! frames would: saturated reddish tissue, sharp edges from vessels and
//! instruments, a few clipped highlights and darker recesses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::noise_field::{derive_seed, ValueNoise};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::{Frame, FrameRate, VideoClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContentCategory {
    /// Bleeding
    BL,
    /// Grasping and burning
    GB,
    /// Multiple instruments
    MI,
    /// Irrigation
    IR,
    /// Clipping
    CL,
    /// Stretching away
    SA,
    /// Cutting
    CU,
    /// Grasping and stretching forward
    SF,
    /// Organ extraction
    OE,
    /// Burning
    BU,
}

impl ContentCategory {
    pub const ALL: [ContentCategory; 10] = [
        ContentCategory::BL,
        ContentCategory::GB,
        ContentCategory::MI,
        ContentCategory::IR,
        ContentCategory::CL,
        ContentCategory::SA,
        ContentCategory::CU,
        ContentCategory::SF,
        ContentCategory::OE,
        ContentCategory::BU,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ContentCategory::BL => "BL",
            ContentCategory::GB => "GB",
            ContentCategory::MI => "MI",
            ContentCategory::IR => "IR",
            ContentCategory::CL => "CL",
            ContentCategory::SA => "SA",
            ContentCategory::CU => "CU",
            ContentCategory::SF => "SF",
            ContentCategory::OE => "OE",
            ContentCategory::BU => "BU",
        }
    }

    fn index(self) -> u64 {
        ContentCategory::ALL.iter().position(|&c| c == self).unwrap() as u64
    }
}

impl fmt::Display for ContentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ContentCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContentCategory::ALL
            .into_iter()
            .find(|c| c.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown content category {s}")))
    }
}

type Rgb = [f64; 3];

struct Palette {
    tissue_a: Rgb,
    tissue_b: Rgb,
    vessel: Rgb,
    /// Mean luma the camera exposes a frame to, before highlights.
    exposure: f64,
}

fn palette(cat: ContentCategory) -> Palette {
    use ContentCategory::*;
    // (darker tissue, lighter tissue, chroma kept, exposure)
    let (tissue_a, tissue_b, chroma, exposure) = match cat {
        BL => ([176.0, 62.0, 52.0], [206.0, 128.0, 92.0], 0.95, 104.0),
        GB => ([190.0, 84.0, 66.0], [214.0, 150.0, 104.0], 0.80, 122.0),
        MI => ([168.0, 70.0, 60.0], [210.0, 140.0, 100.0], 0.85, 118.0),
        IR => ([196.0, 92.0, 80.0], [222.0, 150.0, 118.0], 0.75, 124.0),
        CL => ([180.0, 76.0, 62.0], [220.0, 158.0, 102.0], 0.90, 112.0),
        SA => ([172.0, 66.0, 58.0], [204.0, 122.0, 96.0], 0.95, 108.0),
        CU => ([186.0, 80.0, 70.0], [216.0, 146.0, 110.0], 0.85, 120.0),
        SF => ([178.0, 72.0, 60.0], [218.0, 160.0, 108.0], 0.90, 114.0),
        OE => ([182.0, 86.0, 68.0], [200.0, 150.0, 100.0], 0.80, 122.0),
        BU => ([188.0, 78.0, 64.0], [212.0, 142.0, 98.0], 0.90, 110.0),
    };
    let desaturate = |c: Rgb| {
        let g = luma(c);
        [g + (c[0] - g) * chroma, g + (c[1] - g) * chroma, g + (c[2] - g) * chroma]
    };
    Palette {
        tissue_a: desaturate(tissue_a),
        tissue_b: desaturate(tissue_b),
        vessel: [120.0, 28.0, 34.0],
        exposure,
    }
}

#[inline]
fn luma(c: Rgb) -> f64 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}

#[inline]
fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[inline]
fn blend(a: Rgb, b: Rgb, t: f64) -> Rgb {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

#[inline]
fn scale(a: Rgb, s: f64) -> Rgb {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Static tissue texture, larger than the frame so the camera can move.
struct Canvas {
    width: usize,
    height: usize,
    rgb: Vec<Rgb>,
    /// Specular highlight weight, composited after exposure.
    glint: Vec<f64>,
}

impl Canvas {
    fn render(cat: ContentCategory, width: usize, height: usize, seed: u64) -> Canvas {
        let pal = palette(cat);
        let n_region = ValueNoise::new(derive_seed(seed, &[1]));
        let n_fine = ValueNoise::new(derive_seed(seed, &[2]));
        let n_shade = ValueNoise::new(derive_seed(seed, &[3]));
        let n_vessel = ValueNoise::new(derive_seed(seed, &[4]));
        let n_spec = ValueNoise::new(derive_seed(seed, &[5]));
        let n_extra = ValueNoise::new(derive_seed(seed, &[6]));
        // feature sizes in pixels, tied to the frame height
        let unit = height as f64 / 288.0;
        let mut rgb = Vec::with_capacity(width * height);
        let mut glint = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (xf, yf) = (x as f64 / unit, y as f64 / unit);
                let region = n_region.fbm2(xf / 110.0, yf / 110.0, 3);
                let mut c = blend(pal.tissue_a, pal.tissue_b, smoothstep(0.42, 0.62, region));
                let fine = n_fine.fbm2(xf / 9.0, yf / 9.0, 2);
                c = scale(c, 0.92 + 0.16 * fine);
                let ridge = (n_vessel.fbm2(xf / 70.0, yf / 70.0, 3) - 0.5).abs();
                let v = 1.0 - smoothstep(0.006, 0.016, ridge);
                c = blend(c, pal.vessel, 0.85 * v);
                let shade = n_shade.fbm2(xf / 150.0 + 40.0, yf / 150.0, 3);
                c = scale(c, 0.45 + 0.9 * smoothstep(0.25, 0.7, shade));
                match cat {
                    ContentCategory::BL => {
                        let pool = n_extra.fbm2(xf / 60.0, yf / 60.0, 3);
                        c = blend(c, [96.0, 8.0, 10.0], smoothstep(0.60, 0.64, pool));
                    }
                    ContentCategory::BU => {
                        let char_ = n_extra.fbm2(xf / 18.0, yf / 18.0, 2);
                        c = blend(c, [62.0, 36.0, 28.0], smoothstep(0.70, 0.74, char_));
                    }
                    ContentCategory::OE => {
                        let bag = n_extra.fbm2(xf / 90.0, yf / 90.0, 2);
                        c = blend(c, [84.0, 124.0, 72.0], smoothstep(0.60, 0.63, bag));
                    }
                    _ => {}
                }
                let spec = n_spec.fbm2(xf / 5.0, yf / 5.0, 2);
                let wet = if cat == ContentCategory::IR { 0.78 } else { 0.80 };
                glint.push(smoothstep(wet, wet + 0.04, spec) * smoothstep(0.3, 0.45, shade));
                rgb.push(c);
            }
        }
        Canvas { width, height, rgb, glint }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> (Rgb, f64) {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let i = y * self.width + x;
        (self.rgb[i], self.glint[i])
    }
}

/// A straight instrument shaft entering from outside the frame.
struct Instrument {
    base: (f64, f64),
    tip: (f64, f64),
    radius: f64,
    jaw: bool,
}

impl Instrument {
    /// Coverage in [0,1] and the shaded colour at `(x, y)`.
    fn shade(&self, x: f64, y: f64) -> Option<(f64, Rgb)> {
        let (dx, dy) = (self.tip.0 - self.base.0, self.tip.1 - self.base.1);
        let len2 = dx * dx + dy * dy;
        let t = (((x - self.base.0) * dx + (y - self.base.1) * dy) / len2).clamp(0.0, 1.0);
        let (px, py) = (self.base.0 + t * dx, self.base.1 + t * dy);
        let d = (x - px).hypot(y - py);
        let r = if self.jaw && t > 0.9 { self.radius * 0.7 } else { self.radius };
        let cover = (r - d + 0.5).clamp(0.0, 1.0);
        if cover <= 0.0 {
            return None;
        }
        // signed offset across the shaft drives a cylindrical shading profile
        let side = ((x - px) * -dy + (y - py) * dx).signum();
        let u = (side * d / r).clamp(-1.0, 1.0);
        let lambert = 0.35 + 0.65 * (1.0 - u * u).sqrt();
        let streak = (-(u - 0.35).powi(2) / 0.01).exp();
        let base = if self.jaw && t > 0.9 { [70.0, 72.0, 76.0] } else { [150.0, 156.0, 164.0] };
        let c = [
            (base[0] * lambert + 100.0 * streak).min(255.0),
            (base[1] * lambert + 100.0 * streak).min(255.0),
            (base[2] * lambert + 100.0 * streak).min(255.0),
        ];
        Some((cover, c))
    }
}

struct Motion {
    pan_amp: (f64, f64),
    pan_freq: f64,
    zoom_rate: f64,
}

fn motion(cat: ContentCategory) -> Motion {
    use ContentCategory::*;
    let zoom_rate = match cat {
        SA => 0.0006,
        SF => -0.0006,
        _ => 0.0,
    };
    let pan_amp = match cat {
        MI | CU => (10.0, 6.0),
        IR | OE => (18.0, 8.0),
        _ => (14.0, 5.0),
    };
    Motion {
        pan_amp,
        pan_freq: 0.021 + 0.002 * cat.index() as f64,
        zoom_rate,
    }
}

fn instruments(cat: ContentCategory, w: f64, h: f64, t: f64) -> Vec<Instrument> {
    use ContentCategory::*;
    let r = 0.05 * h;
    let wob = |f: f64, a: f64| a * (t * f).sin();
    let mut out = vec![Instrument {
        base: (w * 1.05, h * 1.1),
        tip: (w * 0.68 + wob(0.05, 0.03 * w), h * 0.55 + wob(0.07, 0.04 * h)),
        radius: r,
        jaw: true,
    }];
    match cat {
        MI => {
            out.push(Instrument {
                base: (-0.05 * w, h * 1.1),
                tip: (w * 0.35 + wob(0.04, 0.03 * w), h * 0.5),
                radius: r,
                jaw: true,
            });
            out.push(Instrument {
                base: (w * 0.5, -0.1 * h),
                tip: (w * 0.52, h * 0.3 + wob(0.06, 0.05 * h)),
                radius: r * 0.8,
                jaw: false,
            });
        }
        GB | CL | CU | SF | OE => out.push(Instrument {
            base: (-0.05 * w, h * 0.9),
            tip: (w * 0.32 + wob(0.03, 0.02 * w), h * 0.6),
            radius: r * 0.9,
            jaw: true,
        }),
        IR => out.push(Instrument {
            base: (w * 0.2, -0.1 * h),
            tip: (w * 0.38, h * 0.42 + wob(0.05, 0.03 * h)),
            radius: r * 0.6,
            jaw: false,
        }),
        _ => {}
    }
    out
}

/// Renders one procedural reference clip. Deterministic in
/// `(category, dims, nframes, seed)`; 25 fps.
pub fn generate_reference(
    category: ContentCategory,
    width: usize,
    height: usize,
    nframes: usize,
    seed: u64,
) -> Result<VideoClip> {
    generate_reference_with(category, width, height, nframes, seed, Exec::default())
}

pub fn generate_reference_with(
    category: ContentCategory,
    width: usize,
    height: usize,
    nframes: usize,
    seed: u64,
    exec: Exec,
) -> Result<VideoClip> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!("reference {width}x{height} is below 16x16")));
    }
    if nframes == 0 {
        return Err(Error::EmptyClip);
    }
    let seed = derive_seed(seed, &[category.index()]);
    let margin = (0.15 * width.max(height) as f64).ceil() as usize + 24;
    let canvas = Canvas::render(category, width + 2 * margin, height + 2 * margin, seed);
    let mv = motion(category);
    let exposure = palette(category).exposure;
    let (wf, hf) = (width as f64, height as f64);
    let (cx, cy) = (wf / 2.0, hf / 2.0);
    let rmax = cx.hypot(cy);
    let frames = exec.map_range(nframes, |i| {
        let t = i as f64;
        let ox = (mv.pan_amp.0 * (t * mv.pan_freq).sin()).round() as isize;
        let oy = (mv.pan_amp.1 * (t * mv.pan_freq * 1.3).cos()).round() as isize;
        let zoom = (1.0 + mv.zoom_rate * t).clamp(0.9, 1.1);
        let tools = instruments(category, wf, hf, t);
        let mut base = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let sx = ((x as f64 - cx) * zoom + cx).round() as isize + margin as isize + ox;
                let sy = ((y as f64 - cy) * zoom + cy).round() as isize + margin as isize + oy;
                let (mut c, mut g) = canvas.at(sx, sy);
                let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
                for tool in &tools {
                    if let Some((cover, tc)) = tool.shade(xf, yf) {
                        c = blend(c, tc, cover);
                        g *= 1.0 - cover;
                    }
                }
                let r = (xf - cx).hypot(yf - cy) / rmax;
                base.push((scale(c, 1.0 - 0.22 * r * r), g));
            }
        }
        // auto-exposure pulls every frame to the same mean level
        let mean = base.iter().map(|(c, _)| luma(*c)).sum::<f64>() / base.len() as f64;
        let gain = exposure / mean.max(1.0);
        Frame::from_fn(width, height, |x, y| {
            let (c, g) = base[y * width + x];
            let c = blend(scale(c, gain), [255.0, 252.0, 248.0], g);
            let px = |v: f64| (v + 0.5).clamp(0.0, 255.0) as u8;
            [px(c[0]), px(c[1]), px(c[2])]
        })
        .expect("dimensions checked above")
    });
    VideoClip::new(frames, FrameRate::default())
}
