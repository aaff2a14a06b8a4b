//! Distortion synthesis: the five distortion models, procedural smoke and
//! reference footage, and corpus generation.

mod corpus;
pub mod noise_field;
mod ops;
mod scene;
mod smoke;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use corpus::{
    load_manifest, load_reference, save_manifest, synthesize_corpus, synthesize_corpus_with, CorpusOptions, CorpusReference,
    LevelTable, Manifest, ManifestEntry,
};
pub use ops::{
    apply_awgn, apply_awgn_with, apply_defocus_blur, apply_defocus_blur_with, apply_motion_blur,
    apply_motion_blur_with, apply_smoke, apply_smoke_with, apply_uneven_illumination,
    apply_uneven_illumination_with, awgn_frame, default_ksize, defocus_blur_frame, illuminate_frame,
    illumination_gain, make_illumination_mask, motion_blur_frame, motion_kernel, screen, smoke_frame,
    IlluminationMask,
};
pub use scene::{generate_reference, generate_reference_with, ContentCategory};
pub use smoke::{gen_smoke_clip, gen_smoke_clip_with};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::VideoClip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistortionKind {
    Noise,
    DefocusBlur,
    MotionBlur,
    UnevenIllumination,
    Smoke,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 5] = [
        DistortionKind::Noise,
        DistortionKind::DefocusBlur,
        DistortionKind::MotionBlur,
        DistortionKind::UnevenIllumination,
        DistortionKind::Smoke,
    ];

    /// Short lowercase tag used in video ids.
    pub fn code(self) -> &'static str {
        match self {
            DistortionKind::Noise => "noise",
            DistortionKind::DefocusBlur => "defocus",
            DistortionKind::MotionBlur => "motion",
            DistortionKind::UnevenIllumination => "uneven",
            DistortionKind::Smoke => "smoke",
        }
    }

    /// Column title in correlation tables.
    pub fn title(self) -> &'static str {
        match self {
            DistortionKind::Noise => "Noise",
            DistortionKind::DefocusBlur => "Defocus Blur",
            DistortionKind::MotionBlur => "Motion Blur",
            DistortionKind::UnevenIllumination => "Uneven illumination",
            DistortionKind::Smoke => "Smoke",
        }
    }

    pub(crate) fn index(self) -> u64 {
        DistortionKind::ALL.iter().position(|&k| k == self).unwrap() as u64
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistortionKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s) || format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown distortion kind {s}")))
    }
}

/// Kind-specific parameters. Illumination geometry is stored relative to the
/// frame so one table serves every resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionParams {
    Noise {
        /// Variance on the [0, 1] intensity scale.
        variance: f64,
    },
    DefocusBlur {
        sigma: f64,
        ksize: usize,
    },
    MotionBlur {
        length: f64,
        /// Degrees.
        angle: f64,
    },
    UnevenIllumination {
        /// Bright-disc radius as a fraction of the smaller frame side.
        radius: f64,
        floor: f64,
        /// Roll-off width as a fraction of the smaller frame side.
        falloff: f64,
        /// Disc centre as fractions of (width, height).
        center: [f64; 2],
    },
    Smoke {
        opacity: f64,
    },
}

impl DistortionParams {
    pub fn kind(&self) -> DistortionKind {
        match self {
            DistortionParams::Noise { .. } => DistortionKind::Noise,
            DistortionParams::DefocusBlur { .. } => DistortionKind::DefocusBlur,
            DistortionParams::MotionBlur { .. } => DistortionKind::MotionBlur,
            DistortionParams::UnevenIllumination { .. } => DistortionKind::UnevenIllumination,
            DistortionParams::Smoke { .. } => DistortionKind::Smoke,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistortionParams::Noise { variance } => variance >= 0.0 && variance.is_finite(),
            DistortionParams::DefocusBlur { sigma, ksize } => sigma > 0.0 && ksize >= 3 && ksize % 2 == 1,
            DistortionParams::MotionBlur { length, angle } => length >= 1.0 && angle.is_finite(),
            DistortionParams::UnevenIllumination {
                radius,
                floor,
                falloff,
                center,
            } => radius > 0.0 && falloff > 0.0 && (0.0..1.0).contains(&floor) && center.iter().all(|c| c.is_finite()),
            DistortionParams::Smoke { opacity } => (0.0..=1.0).contains(&opacity),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self:?}")))
        }
    }

    /// Builds the illumination mask for a frame size; `None` for other kinds.
    pub fn illumination_mask(&self, width: usize, height: usize) -> Option<Result<IlluminationMask>> {
        match *self {
            DistortionParams::UnevenIllumination {
                radius,
                floor,
                falloff,
                center,
            } => {
                let side = width.min(height) as f64;
                Some(make_illumination_mask(
                    width,
                    height,
                    (center[0] * width as f64, center[1] * height as f64),
                    radius * side,
                    falloff * side,
                    floor,
                ))
            }
            _ => None,
        }
    }
}

/// Recipe for one distorted video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    pub level: u8,
    pub params: DistortionParams,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind, level: u8, params: DistortionParams) -> Result<Self> {
        let spec = DistortionSpec { kind, level, params };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.level) {
            return Err(Error::InvalidParameter(format!("level {} outside 1..=4", self.level)));
        }
        if self.params.kind() != self.kind {
            return Err(Error::InvalidParameter(format!(
                "{:?} parameters given for {:?}",
                self.params.kind(),
                self.kind
            )));
        }
        self.params.validate()
    }

    /// Applies the distortion. `seed` drives the noise draws; for smoke a
    /// procedural smoke clip is generated from it.
    pub fn apply(&self, clip: &VideoClip, seed: u64) -> Result<VideoClip> {
        self.apply_with(clip, seed, Exec::default())
    }

    pub fn apply_with(&self, clip: &VideoClip, seed: u64, exec: Exec) -> Result<VideoClip> {
        let (w, h) = clip.dims();
        match self.params {
            DistortionParams::Noise { variance } => apply_awgn_with(clip, variance, seed, exec),
            DistortionParams::DefocusBlur { sigma, ksize } => apply_defocus_blur_with(clip, sigma, ksize, exec),
            DistortionParams::MotionBlur { length, angle } => apply_motion_blur_with(clip, length, angle, exec),
            DistortionParams::UnevenIllumination { .. } => {
                let mask = self.params.illumination_mask(w, h).expect("illumination params")?;
                apply_uneven_illumination_with(clip, &mask, exec)
            }
            DistortionParams::Smoke { opacity } => {
                let smoke = gen_smoke_clip_with(w, h, clip.len(), seed, exec)?;
                apply_smoke_with(clip, &smoke, opacity, exec)
            }
        }
    }
}
