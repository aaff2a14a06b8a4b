use serde::{Deserialize, Serialize};

use super::{decide, ClassifierThresholds, FrameIndices};
use crate::error::{Error, Result};
use crate::synth::DistortionKind;

/// Pooled indices of one video with its ground truth; `None` marks a
/// pristine reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelledIndices {
    pub truth: Option<DistortionKind>,
    pub indices: FrameIndices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub thresholds: ClassifierThresholds,
    /// Distorted videos classified correctly.
    pub correct: usize,
    pub distorted: usize,
    /// References not classified as None. Zero whenever any feasible
    /// setting was found.
    pub reference_violations: usize,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 20;

#[derive(Clone, Copy)]
enum Knob {
    Noise,
    Lmr,
    Pbi,
    Anisotropy,
}

impl Knob {
    const ALL: [Knob; 4] = [Knob::Noise, Knob::Lmr, Knob::Pbi, Knob::Anisotropy];

    fn index(self, ix: &FrameIndices) -> f64 {
        match self {
            Knob::Noise => ix.sigma_n,
            Knob::Lmr => ix.lmr,
            Knob::Pbi => ix.pbi,
            Knob::Anisotropy => ix.anisotropy,
        }
    }

    fn set(self, th: &mut ClassifierThresholds, v: f64) {
        match self {
            Knob::Noise => th.noise_sigma = v,
            Knob::Lmr => th.lmr = v,
            Knob::Pbi => th.pbi_blur = v,
            Knob::Anisotropy => th.pbi_motion_vs_defocus = v,
        }
    }

    fn get(self, th: &ClassifierThresholds) -> f64 {
        match self {
            Knob::Noise => th.noise_sigma,
            Knob::Lmr => th.lmr,
            Knob::Pbi => th.pbi_blur,
            Knob::Anisotropy => th.pbi_motion_vs_defocus,
        }
    }
}

/// (reference violations, correct distorted) for a setting.
fn score(samples: &[LabelledIndices], th: &ClassifierThresholds) -> (usize, usize) {
    let mut violations = 0;
    let mut correct = 0;
    for s in samples {
        let d = decide(&s.indices, th);
        match s.truth {
            None if d.is_some() => violations += 1,
            Some(k) if d == Some(k) => correct += 1,
            _ => {}
        }
    }
    (violations, correct)
}

fn better(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Cut points halfway between consecutive distinct finite values.
fn candidates(samples: &[LabelledIndices], knob: Knob) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().map(|s| knob.index(&s.indices)).filter(|v| v.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut out: Vec<f64> = v.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if let (Some(&lo), Some(&hi)) = (v.first(), v.last()) {
        let pad = ((hi - lo) * 0.01).max(1e-6);
        out.insert(0, lo - pad);
        out.push(hi + pad);
    }
    out
}

/// Fits the four decision thresholds (noise sigma, LMR, blur index,
/// anisotropy) to labelled pooled indices by coordinate-wise search.
///
/// Feasibility comes first: a setting that sends any reference to a
/// distortion class always loses to one that does not. Among equally good
/// cut points the centre of the widest run of them is kept, which puts the
/// threshold in the middle of the gap between classes. `smoke_tc` and
/// `w_bins` are copied from `start`; they shape the indices themselves and
/// are not searched.
pub fn calibrate(samples: &[LabelledIndices], start: &ClassifierThresholds) -> Result<Calibration> {
    start.validate()?;
    if samples.iter().all(|s| s.truth.is_none()) {
        return Err(Error::InvalidParameter("calibration needs distorted samples".into()));
    }
    let grids: Vec<Vec<f64>> = Knob::ALL.iter().map(|&k| candidates(samples, k)).collect();
    let mut th = *start;
    let mut best = score(samples, &th);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut changed = false;
        for (knob, grid) in Knob::ALL.into_iter().zip(&grids) {
            let results: Vec<(usize, usize)> = grid
                .iter()
                .map(|&v| {
                    let mut t = th;
                    knob.set(&mut t, v);
                    score(samples, &t)
                })
                .collect();
            let Some(top) = results.iter().copied().reduce(|a, b| if better(b, a) { b } else { a }) else {
                continue;
            };
            if better(best, top) {
                continue;
            }
            // widest run of cut points reaching the top score
            let (mut run_start, mut widest) = (0, (0, 0));
            for i in 0..results.len() {
                if results[i] != top {
                    run_start = i + 1;
                } else if i + 1 - run_start > widest.1 - widest.0 {
                    widest = (run_start, i + 1);
                }
            }
            // any value inside the run classifies like one of its cut points
            let v = (grid[widest.0] + grid[widest.1 - 1]) / 2.0;
            changed |= better(top, best) || (knob.get(&th) - v).abs() > 1e-9;
            knob.set(&mut th, v);
            best = top;
        }
        if !changed {
            break;
        }
    }
    Ok(Calibration {
        thresholds: th,
        correct: best.1,
        distorted: samples.iter().filter(|s| s.truth.is_some()).count(),
        reference_violations: best.0,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ix(pbi: f64, anisotropy: f64, sigma_n: f64, lmr: f64, p_smoke: f64) -> FrameIndices {
        FrameIndices {
            pbi,
            anisotropy,
            p_smoke,
            p_nosmoke: 1.0 - p_smoke,
            sigma_n,
            lmr,
        }
    }

    fn sample(truth: Option<DistortionKind>, i: FrameIndices) -> LabelledIndices {
        LabelledIndices { truth, indices: i }
    }

    #[test]
    fn separable_data_is_fitted_exactly() {
        let mut s = Vec::new();
        for j in 0..5 {
            let d = f64::from(j) * 0.01;
            s.push(sample(None, ix(-1.0 - d, 2.0, 1.0 + d, 0.55, 0.1)));
            s.push(sample(Some(DistortionKind::Noise), ix(-1.0, 2.0, 6.0 + d, 0.55, 0.1)));
            s.push(sample(Some(DistortionKind::UnevenIllumination), ix(-1.0, 2.0, 1.0, 0.30 - d, 0.1)));
            s.push(sample(Some(DistortionKind::DefocusBlur), ix(-4.0 - d, 2.5, 0.5, 0.55, 0.1)));
            s.push(sample(Some(DistortionKind::MotionBlur), ix(-4.0 - d, 20.0 + d, 0.5, 0.55, 0.1)));
            s.push(sample(Some(DistortionKind::Smoke), ix(-1.0, 2.0, 1.0, 0.55, 0.9)));
        }
        let c = calibrate(&s, &ClassifierThresholds::default()).unwrap();
        assert_eq!(c.reference_violations, 0);
        assert_eq!(c.correct, 25);
        let t = c.thresholds;
        assert!(t.noise_sigma > 1.04 && t.noise_sigma < 6.0, "{t:?}");
        assert!(t.lmr > 0.30 && t.lmr < 0.55);
        assert!(t.pbi_blur > -4.0 && t.pbi_blur < -1.04);
        assert!(t.pbi_motion_vs_defocus > 2.5 && t.pbi_motion_vs_defocus < 20.0);
        // centred in the gap
        assert!((t.pbi_motion_vs_defocus - 11.25).abs() < 0.5, "{t:?}");
    }

    #[test]
    fn references_take_priority_over_accuracy() {
        // a blurred video indistinguishable from a reference must stay wrong
        let s = vec![
            sample(None, ix(-3.0, 2.0, 1.0, 0.55, 0.1)),
            sample(Some(DistortionKind::DefocusBlur), ix(-3.0, 2.0, 1.0, 0.55, 0.1)),
            sample(Some(DistortionKind::DefocusBlur), ix(-5.0, 2.0, 1.0, 0.55, 0.1)),
        ];
        let c = calibrate(&s, &ClassifierThresholds::default()).unwrap();
        assert_eq!(c.reference_violations, 0);
        assert_eq!(c.correct, 1);
        assert!(c.thresholds.pbi_blur < -3.0 && c.thresholds.pbi_blur > -5.0);
    }

    #[test]
    fn needs_distorted_samples() {
        let s = vec![sample(None, ix(-1.0, 2.0, 1.0, 0.5, 0.1))];
        assert!(calibrate(&s, &ClassifierThresholds::default()).is_err());
    }
}
