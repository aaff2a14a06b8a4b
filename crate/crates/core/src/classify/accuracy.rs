use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::VideoClassification;
use crate::synth::DistortionKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAccuracy {
    pub kind: DistortionKind,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Per-kind video-level accuracy and the confusion matrix against manifest
/// ground truth. Rows are true kinds; columns are decisions, `None` included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub per_kind: Vec<KindAccuracy>,
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub failures: usize,
}

fn label(k: Option<DistortionKind>) -> String {
    k.map_or_else(|| "None".to_string(), |k| k.to_string())
}

impl AccuracySummary {
    /// Failed classifications count as wrong.
    pub fn from_results(results: &[VideoClassification]) -> Self {
        let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut failures = 0;
        for r in results {
            if r.error.is_some() {
                failures += 1;
            }
            let Some(truth) = r.truth else { continue };
            let decided = if r.error.is_some() { "Failed".to_string() } else { label(r.decision) };
            *confusion.entry(truth.to_string()).or_default().entry(decided).or_default() += 1;
        }
        let per_kind = DistortionKind::ALL
            .iter()
            .map(|&kind| {
                let row = confusion.get(&kind.to_string());
                let total = row.map_or(0, |r| r.values().sum());
                let correct = row.and_then(|r| r.get(&kind.to_string())).copied().unwrap_or(0);
                KindAccuracy {
                    kind,
                    total,
                    correct,
                    accuracy: if total == 0 { f64::NAN } else { correct as f64 / total as f64 },
                }
            })
            .collect();
        AccuracySummary {
            per_kind,
            confusion,
            failures,
        }
    }

    pub fn accuracy(&self, kind: DistortionKind) -> f64 {
        self.per_kind.iter().find(|k| k.kind == kind).map_or(f64::NAN, |k| k.accuracy)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Distortion | Correct | Total | Accuracy |\n|---|---|---|---|\n");
        for k in &self.per_kind {
            s.push_str(&format!(
                "| {} | {} | {} | {:.1}% |\n",
                k.kind.title(),
                k.correct,
                k.total,
                100.0 * k.accuracy
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vc(truth: DistortionKind, decision: Option<DistortionKind>) -> VideoClassification {
        VideoClassification {
            id: String::new(),
            pbi: 0.0,
            anisotropy: 1.0,
            p_smoke: 0.0,
            sigma_n: 0.0,
            lmr: 0.5,
            decision,
            truth: Some(truth),
            error: None,
        }
    }

    #[test]
    fn five_rows_and_counts() {
        let rs = vec![
            vc(DistortionKind::Noise, Some(DistortionKind::Noise)),
            vc(DistortionKind::Noise, None),
            vc(DistortionKind::Smoke, Some(DistortionKind::Smoke)),
            VideoClassification::failed("f", Some(DistortionKind::Smoke), "unreadable"),
        ];
        let s = AccuracySummary::from_results(&rs);
        assert_eq!(s.per_kind.len(), 5);
        assert_eq!(s.accuracy(DistortionKind::Noise), 0.5);
        assert_eq!(s.accuracy(DistortionKind::Smoke), 0.5);
        assert!(s.accuracy(DistortionKind::MotionBlur).is_nan());
        assert_eq!(s.failures, 1);
        assert_eq!(s.confusion["Noise"]["None"], 1);
    }
}
