//! Pairwise-comparison studies: session planning, scoring, outlier
//! screening by circular triads, and mean opinion scores.
//!
//! Every observer compares all six pairs of severity levels within each
//! (reference, kind) group. The preferred video of a pair gets one point,
//! an Equal answer gives half a point to each, so the four videos of a group
//! always share six points per observer.

mod plan;
mod record;
pub mod simulate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use plan::{observer_hash, plan_session, GroupKey, SessionPlan, Trial};
pub use record::{circular_triads, score_observer, Choice, PreferenceRecord, TrialResult};

use crate::error::{Error, Result};
use crate::fsutil;

/// Maximum points a video can collect from one observer in its group.
pub const MAX_GROUP_SCORE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Expert,
    NonExpert,
}

impl Cohort {
    pub const ALL: [Cohort; 2] = [Cohort::Expert, Cohort::NonExpert];

    pub fn code(self) -> &'static str {
        match self {
            Cohort::Expert => "expert",
            Cohort::NonExpert => "nonexpert",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Cohort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expert" => Ok(Cohort::Expert),
            "nonexpert" | "non-expert" => Ok(Cohort::NonExpert),
            _ => Err(Error::InvalidParameter(format!("unknown cohort {s:?}"))),
        }
    }
}

/// One observer's plan together with their answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObserverSession {
    pub plan: SessionPlan,
    pub record: PreferenceRecord,
}

impl ObserverSession {
    pub fn observer_id(&self) -> &str {
        &self.plan.observer_id
    }
}

fn unique_ids(sessions: &[ObserverSession]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in sessions {
        if !seen.insert(s.observer_id()) {
            return Err(Error::InvalidParameter(format!("observer {} appears twice", s.observer_id())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Total circular triads per screened observer.
    pub triads: BTreeMap<String, usize>,
    /// Triad count an observer must exceed to be flagged; absent when the
    /// cohort is too small to screen.
    pub threshold: Option<f64>,
    pub flagged: Vec<String>,
    pub warnings: Vec<String>,
}

/// Flags observers whose circular-triad total exceeds the cohort mean by
/// more than two (population) standard deviations. Incomplete sessions are
/// skipped with a warning; fewer than three screenable observers flags
/// nobody.
pub fn detect_outliers(sessions: &[ObserverSession]) -> Result<OutlierReport> {
    unique_ids(sessions)?;
    let mut triads = BTreeMap::new();
    let mut warnings = Vec::new();
    for s in sessions {
        match circular_triads(&s.plan, &s.record) {
            Ok(per_group) => {
                triads.insert(s.observer_id().to_string(), per_group.values().sum());
            }
            Err(e) => warnings.push(format!("skipping observer {}: {e}", s.observer_id())),
        }
    }
    if triads.len() < 3 {
        warnings.push(format!(
            "only {} complete observers; outlier screening needs at least 3",
            triads.len()
        ));
        return Ok(OutlierReport {
            triads,
            threshold: None,
            flagged: Vec::new(),
            warnings,
        });
    }
    let n = triads.len() as f64;
    let mean = triads.values().map(|&c| c as f64).sum::<f64>() / n;
    let var = triads.values().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + 2.0 * var.sqrt();
    let flagged = triads
        .iter()
        .filter(|(_, &c)| c as f64 > threshold)
        .map(|(id, _)| id.clone())
        .collect();
    Ok(OutlierReport {
        triads,
        threshold: Some(threshold),
        flagged,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosRow {
    pub video_id: String,
    /// Raw points per contributing observer.
    pub scores: BTreeMap<String, f64>,
    pub mos: f64,
    pub mos_normalized: f64,
    pub n_observers: usize,
    pub cohort: Cohort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosTable {
    pub cohort: Cohort,
    pub rows: Vec<MosRow>,
    /// Observers that contributed, in id order.
    pub observers: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    video_id: String,
    mos: f64,
    mos_normalized: f64,
    n_observers: usize,
    cohort: Cohort,
}

impl MosTable {
    pub fn get(&self, video_id: &str) -> Option<&MosRow> {
        self.rows.iter().find(|r| r.video_id == video_id)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                video_id: r.video_id.clone(),
                mos: r.mos,
                mos_normalized: r.mos_normalized,
                n_observers: r.n_observers,
                cohort: r.cohort,
            })
            .map_err(|e| Error::InvalidParameter(format!("mos csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(format!("mos csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write_bytes(path, self.to_csv()?.as_bytes())
    }

    /// Reads a MOS CSV. Per-observer scores are not part of the file, so
    /// rows come back with empty `scores`. All rows must share one cohort.
    pub fn read_csv(path: &Path) -> Result<MosTable> {
        let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidParameter(format!("{}: {other:?}", path.display())),
        })?;
        let mut rows = Vec::new();
        for rec in r.deserialize::<CsvRow>() {
            let rec = rec.map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
            rows.push(MosRow {
                video_id: rec.video_id,
                scores: BTreeMap::new(),
                mos: rec.mos,
                mos_normalized: rec.mos_normalized,
                n_observers: rec.n_observers,
                cohort: rec.cohort,
            });
        }
        let cohort = rows
            .first()
            .map(|r| r.cohort)
            .ok_or_else(|| Error::InvalidParameter(format!("{}: no rows", path.display())))?;
        if rows.iter().any(|r| r.cohort != cohort) {
            return Err(Error::InvalidParameter(format!("{}: mixed cohorts", path.display())));
        }
        Ok(MosTable {
            cohort,
            rows,
            observers: Vec::new(),
            warnings: Vec::new(),
        })
    }
}

/// Mean opinion score per video over the observers not in `exclude`.
/// Sessions whose record does not answer its plan exactly are left out
/// entirely and reported in `warnings`.
pub fn aggregate_mos(sessions: &[ObserverSession], cohort: Cohort, exclude: &BTreeSet<String>) -> Result<MosTable> {
    unique_ids(sessions)?;
    let mut warnings = Vec::new();
    let mut per_video: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut observers = Vec::new();
    for s in sessions {
        if exclude.contains(s.observer_id()) {
            continue;
        }
        let scores = match score_observer(&s.plan, &s.record) {
            Ok(scores) => scores,
            Err(e) => {
                warnings.push(format!("excluding observer {}: {e}", s.observer_id()));
                continue;
            }
        };
        observers.push(s.observer_id().to_string());
        for (video, points) in scores {
            per_video.entry(video).or_default().insert(s.observer_id().to_string(), points);
        }
    }
    if observers.is_empty() {
        return Err(Error::EmptyCohort);
    }
    observers.sort();
    let rows = per_video
        .into_iter()
        .map(|(video_id, scores)| {
            let n = scores.len();
            let mos = scores.values().sum::<f64>() / n as f64;
            MosRow {
                video_id,
                scores,
                mos,
                mos_normalized: mos / MAX_GROUP_SCORE,
                n_observers: n,
                cohort,
            }
        })
        .collect();
    Ok(MosTable {
        cohort,
        rows,
        observers,
        warnings,
    })
}
