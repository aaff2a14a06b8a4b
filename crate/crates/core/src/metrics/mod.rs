//! Full-reference quality metrics. PSNR runs over all RGB samples; SSIM and
//! VIF run on BT.601 luma. Clip scores are the mean of the per-frame values.

mod psnr;
mod ssim;
mod vif;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use psnr::{mse, psnr, PSNR_PEAK};
pub use ssim::{ssim, SSIM_SIGMA, SSIM_WINDOW};
pub use vif::{vif, VIF_NOISE_VARIANCE, VIF_SCALES, VIF_WINDOW};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::{Frame, VideoClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "PSNR")]
    Psnr,
    #[serde(rename = "SSIM")]
    Ssim,
    #[serde(rename = "VIF")]
    Vif,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Psnr, MetricKind::Ssim, MetricKind::Vif];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Psnr => "PSNR",
            MetricKind::Ssim => "SSIM",
            MetricKind::Vif => "VIF",
        }
    }

    pub fn frame_score(self, reference: &Frame, distorted: &Frame) -> Result<f64> {
        match self {
            MetricKind::Psnr => psnr(reference, distorted),
            MetricKind::Ssim => ssim(&reference.to_luma(), &distorted.to_luma()),
            MetricKind::Vif => vif(&reference.to_luma(), &distorted.to_luma()),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s}")))
    }
}

/// Per-frame scores for one metric and their mean. An infinite PSNR
/// (identical frames) is kept as `f64::INFINITY` in memory and written to
/// JSON as `null` with `infinite: true`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub metric: MetricKind,
    pub per_frame: Vec<f64>,
    pub video_score: f64,
}

impl MetricScore {
    pub fn from_frames(metric: MetricKind, per_frame: Vec<f64>) -> Self {
        let video_score = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
        MetricScore {
            metric,
            per_frame,
            video_score,
        }
    }
}

pub fn score_clip(reference: &VideoClip, distorted: &VideoClip, metric: MetricKind) -> Result<MetricScore> {
    score_clip_with(reference, distorted, metric, Exec::default())
}

/// Frames are paired by index; both clips must have the same length and size.
pub fn score_clip_with(
    reference: &VideoClip,
    distorted: &VideoClip,
    metric: MetricKind,
    exec: Exec,
) -> Result<MetricScore> {
    if reference.dims() != distorted.dims() {
        return Err(Error::DimensionMismatch {
            left: reference.dims(),
            right: distorted.dims(),
        });
    }
    if reference.len() != distorted.len() {
        return Err(Error::InvalidParameter(format!(
            "clip lengths differ: {} vs {}",
            reference.len(),
            distorted.len()
        )));
    }
    let per_frame = exec
        .map_range(reference.len(), |i| {
            metric.frame_score(&reference.frames()[i], &distorted.frames()[i])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricScore::from_frames(metric, per_frame))
}

/// Scores JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoScoreRecord {
    pub video_id: String,
    pub metric: MetricKind,
    pub video_score: Option<f64>,
    pub per_frame: Vec<Option<f64>>,
    #[serde(default)]
    pub infinite: bool,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl VideoScoreRecord {
    pub fn new(video_id: impl Into<String>, score: &MetricScore) -> Self {
        VideoScoreRecord {
            video_id: video_id.into(),
            metric: score.metric,
            video_score: finite_or_none(score.video_score),
            per_frame: score.per_frame.iter().map(|&v| finite_or_none(v)).collect(),
            infinite: score.video_score == f64::INFINITY,
        }
    }

    /// Score as a number; `+inf` for the identical-frames sentinel.
    pub fn value(&self) -> f64 {
        match self.video_score {
            Some(v) => v,
            None if self.infinite => f64::INFINITY,
            None => f64::NAN,
        }
    }
}
