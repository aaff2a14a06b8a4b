//! Synthetic observers for exercising the study pipeline without people.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Choice, PreferenceRecord, SessionPlan, TrialResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ObserverModel {
    /// Perceives every video once with Gaussian error of `perception_sd`,
    /// then answers deterministically from that perception: always
    /// transitive. Differences within `equal_band` are answered Equal.
    Consistent { perception_sd: f64, equal_band: f64 },
    /// Draws fresh Gaussian error of `sd` on the quality difference of every
    /// trial, so it can contradict itself on close pairs.
    Noisy { sd: f64, equal_band: f64 },
    /// Ignores the videos: A, B and Equal with equal probability.
    Random,
}

impl ObserverModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ObserverModel::Consistent {
                perception_sd,
                equal_band,
            } => perception_sd >= 0.0 && equal_band >= 0.0 && perception_sd.is_finite() && equal_band.is_finite(),
            ObserverModel::Noisy { sd, equal_band } => {
                sd >= 0.0 && equal_band >= 0.0 && sd.is_finite() && equal_band.is_finite()
            }
            ObserverModel::Random => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("observer model {self:?}")))
        }
    }
}

fn decide(diff: f64, equal_band: f64) -> Choice {
    if diff.abs() <= equal_band {
        Choice::Equal
    } else if diff > 0.0 {
        Choice::A
    } else {
        Choice::B
    }
}

/// Answers every trial of `plan` given a latent quality per video (higher is
/// better). The chance of preferring the better video grows with the
/// quality gap for both non-random models.
pub fn simulate_record(
    plan: &SessionPlan,
    quality: &BTreeMap<String, f64>,
    model: ObserverModel,
    seed: u64,
) -> Result<PreferenceRecord> {
    model.validate()?;
    let missing: Vec<String> = plan
        .trials
        .iter()
        .flat_map(|t| [&t.a, &t.b])
        .filter(|v| !quality.contains_key(*v))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingJoin(missing));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let results = match model {
        ObserverModel::Consistent {
            perception_sd,
            equal_band,
        } => {
            let normal = Normal::new(0.0, perception_sd).expect("validated");
            // perception drawn in sorted video order so it does not depend
            // on trial order
            let perceived: BTreeMap<&String, f64> =
                quality.iter().map(|(v, q)| (v, q + normal.sample(&mut rng))).collect();
            plan.trials
                .iter()
                .map(|t| TrialResult {
                    idx: t.idx,
                    choice: decide(perceived[&t.a] - perceived[&t.b], equal_band),
                })
                .collect()
        }
        ObserverModel::Noisy { sd, equal_band } => {
            let normal = Normal::new(0.0, sd).expect("validated");
            plan.trials
                .iter()
                .map(|t| TrialResult {
                    idx: t.idx,
                    choice: decide(quality[&t.a] - quality[&t.b] + normal.sample(&mut rng), equal_band),
                })
                .collect()
        }
        ObserverModel::Random => plan
            .trials
            .iter()
            .map(|t| TrialResult {
                idx: t.idx,
                choice: [Choice::A, Choice::B, Choice::Equal][rng.gen_range(0..3)],
            })
            .collect(),
    };
    Ok(PreferenceRecord {
        observer_id: plan.observer_id.clone(),
        results,
    })
}
