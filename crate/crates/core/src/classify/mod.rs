//! Distortion identification: four no-reference indices per frame, median
//! pooling over the clip, and a fixed-priority threshold decision.
//!
//! Decision order is noise, smoke, uneven illumination, blur. Blur is split
//! into motion and defocus by the orientation anisotropy of the spectrum.

mod accuracy;
mod calibrate;
mod indices;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use accuracy::{AccuracySummary, KindAccuracy};
pub use calibrate::{calibrate, Calibration, LabelledIndices};
pub use indices::{
    lmr, noise_sigma, saturation, saturation_histogram, smoke_probability, LMR_UNDEFINED, SATURATION_BINS,
    SMOKE_TC,
};
pub use spectrum::{
    anisotropy, binomial, pbi, PowerSpectrum, SpectrumAnalyzer, ANGULAR_SECTORS, ANISOTROPY_BAND, ANISOTROPY_REF_BAND,
    PBI_EPSILON,
};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::{Frame, VideoClip};
use crate::synth::DistortionKind;

fn default_w_bins() -> usize {
    64
}

/// Decision thresholds. The shipped defaults were fitted once with
/// [`calibrate`] to the default corpus (references and distortions from
/// seed 2024, 250 frames at 512×288) under the rule that every pristine
/// reference must come out as None. `smoke_tc` is fixed a priori.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// Blur when the pooled index falls below this.
    pub pbi_blur: f64,
    /// Motion blur when spectral anisotropy exceeds this.
    pub pbi_motion_vs_defocus: f64,
    /// Saturation cut-off for the smoke histogram.
    pub smoke_tc: f64,
    /// Noise when the estimated sigma (8-bit luma units) exceeds this.
    pub noise_sigma: f64,
    /// Uneven illumination when mean-to-range falls below this.
    pub lmr: f64,
    /// Radial annuli for the blur index.
    #[serde(default = "default_w_bins")]
    pub w_bins: usize,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds {
            pbi_blur: -2.789,
            pbi_motion_vs_defocus: 7.29,
            smoke_tc: SMOKE_TC,
            noise_sigma: 2.966,
            lmr: 0.463,
            w_bins: default_w_bins(),
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.pbi_blur, self.pbi_motion_vs_defocus, self.noise_sigma, self.lmr]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.smoke_tc > 0.0 && self.smoke_tc < 1.0) || self.lmr <= 0.0 || self.w_bins < 8 {
            return Err(Error::InvalidParameter(format!("classifier thresholds {self:?}")));
        }
        Ok(())
    }
}

/// Index values for one frame, or pooled over a clip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameIndices {
    pub pbi: f64,
    pub anisotropy: f64,
    pub p_smoke: f64,
    pub p_nosmoke: f64,
    pub sigma_n: f64,
    /// `None` when the luminance range is zero.
    #[serde(with = "lmr_serde")]
    pub lmr: f64,
}

mod lmr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::LMR_UNDEFINED;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(LMR_UNDEFINED))
    }
}

pub fn frame_indices(frame: &Frame, th: &ClassifierThresholds) -> FrameIndices {
    let (w, h) = frame.dims();
    frame_indices_with(&SpectrumAnalyzer::new(w, h), frame, th)
}

/// As [`frame_indices`], reusing an analyzer built for the frame size.
pub fn frame_indices_with(an: &SpectrumAnalyzer, frame: &Frame, th: &ClassifierThresholds) -> FrameIndices {
    let luma = frame.to_luma();
    let sharp = an.spectrum(luma.values());
    let (p_smoke, p_nosmoke) = smoke_probability(frame, th.smoke_tc, SATURATION_BINS);
    FrameIndices {
        pbi: an.pbi_from(&sharp, &luma, th.w_bins),
        anisotropy: an.anisotropy(&sharp),
        p_smoke,
        p_nosmoke,
        sigma_n: noise_sigma(&luma),
        lmr: lmr(&luma),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 || v[n / 2 - 1] == v[n / 2] {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median of each index over frames. The smoke pair is pooled through
/// `p_smoke` so the two still sum to one.
pub fn pool(frames: &[FrameIndices]) -> FrameIndices {
    let col = |f: fn(&FrameIndices) -> f64| median(frames.iter().map(f).collect());
    let p_smoke = col(|f| f.p_smoke);
    FrameIndices {
        pbi: col(|f| f.pbi),
        anisotropy: col(|f| f.anisotropy),
        p_smoke,
        p_nosmoke: 1.0 - p_smoke,
        sigma_n: col(|f| f.sigma_n),
        lmr: col(|f| f.lmr),
    }
}

pub fn decide(ix: &FrameIndices, th: &ClassifierThresholds) -> Option<DistortionKind> {
    if ix.sigma_n > th.noise_sigma {
        Some(DistortionKind::Noise)
    } else if ix.p_smoke > 0.5 {
        Some(DistortionKind::Smoke)
    } else if ix.lmr < th.lmr {
        Some(DistortionKind::UnevenIllumination)
    } else if ix.pbi < th.pbi_blur {
        if ix.anisotropy > th.pbi_motion_vs_defocus {
            Some(DistortionKind::MotionBlur)
        } else {
            Some(DistortionKind::DefocusBlur)
        }
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_frame: Vec<FrameIndices>,
    pub video: FrameIndices,
    pub decision: Option<DistortionKind>,
}

pub fn classify_video(clip: &VideoClip, th: &ClassifierThresholds) -> Result<ClassificationReport> {
    classify_video_with(clip, th, Exec::default())
}

pub fn classify_video_with(clip: &VideoClip, th: &ClassifierThresholds, exec: Exec) -> Result<ClassificationReport> {
    th.validate()?;
    if clip.is_empty() {
        return Err(Error::EmptyClip);
    }
    let (w, h) = clip.dims();
    if w < 16 || h < 16 {
        return Err(Error::InvalidFrame(format!("{w}x{h} is too small to classify (16x16 minimum)")));
    }
    let analyzer = SpectrumAnalyzer::new(w, h);
    let per_frame = exec.map(clip.frames(), |f| frame_indices_with(&analyzer, f, th));
    let video = pool(&per_frame);
    Ok(ClassificationReport {
        decision: decide(&video, th),
        per_frame,
        video,
    })
}

/// Flat per-video record for the report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoClassification {
    pub id: String,
    pub pbi: f64,
    pub anisotropy: f64,
    pub p_smoke: f64,
    pub sigma_n: f64,
    #[serde(with = "lmr_serde")]
    pub lmr: f64,
    pub decision: Option<DistortionKind>,
    /// Ground-truth kind from the manifest, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<DistortionKind>,
    /// Set when the clip could not be read or classified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VideoClassification {
    pub fn from_report(id: impl Into<String>, r: &ClassificationReport, truth: Option<DistortionKind>) -> Self {
        VideoClassification {
            id: id.into(),
            pbi: r.video.pbi,
            anisotropy: r.video.anisotropy,
            p_smoke: r.video.p_smoke,
            sigma_n: r.video.sigma_n,
            lmr: r.video.lmr,
            decision: r.decision,
            truth,
            error: None,
        }
    }

    pub fn failed(id: impl Into<String>, truth: Option<DistortionKind>, error: impl Into<String>) -> Self {
        VideoClassification {
            id: id.into(),
            pbi: f64::NAN,
            anisotropy: f64::NAN,
            p_smoke: f64::NAN,
            sigma_n: f64::NAN,
            lmr: f64::NAN,
            decision: None,
            truth,
            error: Some(error.into()),
        }
    }

    pub fn indices(&self) -> FrameIndices {
        FrameIndices {
            pbi: self.pbi,
            anisotropy: self.anisotropy,
            p_smoke: self.p_smoke,
            p_nosmoke: 1.0 - self.p_smoke,
            sigma_n: self.sigma_n,
            lmr: self.lmr,
        }
    }
}
