use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit_logistic, plcc, srocc, LogisticFit};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::metrics::{MetricKind, VideoScoreRecord};
use crate::subjective::{Cohort, MosTable};
use crate::synth::{DistortionKind, ManifestEntry};

/// Report column: one distortion kind, or all videos together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Noise,
    DefocusBlur,
    MotionBlur,
    UnevenIllumination,
    Smoke,
    Overall,
}

impl Subset {
    pub const ALL: [Subset; 6] = [
        Subset::Noise,
        Subset::DefocusBlur,
        Subset::MotionBlur,
        Subset::UnevenIllumination,
        Subset::Smoke,
        Subset::Overall,
    ];

    pub fn of(kind: DistortionKind) -> Subset {
        match kind {
            DistortionKind::Noise => Subset::Noise,
            DistortionKind::DefocusBlur => Subset::DefocusBlur,
            DistortionKind::MotionBlur => Subset::MotionBlur,
            DistortionKind::UnevenIllumination => Subset::UnevenIllumination,
            DistortionKind::Smoke => Subset::Smoke,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Subset::Noise => "Noise",
            Subset::DefocusBlur => "Defocus Blur",
            Subset::MotionBlur => "Motion Blur",
            Subset::UnevenIllumination => "Uneven illumination",
            Subset::Smoke => "Smoke",
            Subset::Overall => "Overall",
        }
    }

    fn contains(self, kind: DistortionKind) -> bool {
        self == Subset::Overall || self == Subset::of(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub cohort: Cohort,
    pub metric: MetricKind,
    pub subset: Subset,
    /// Correlation of the logistic-mapped scores with MOS.
    pub plcc: Option<f64>,
    pub srocc: Option<f64>,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<LogisticFit>,
    /// Why a correlation is missing, when it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub cohort: Cohort,
    pub rows: Vec<CorrelationRow>,
}

#[derive(Serialize)]
struct CsvRow {
    cohort: Cohort,
    metric: MetricKind,
    subset: Subset,
    plcc: Option<f64>,
    srocc: Option<f64>,
    n_points: usize,
}

fn evaluate(cohort: Cohort, metric: MetricKind, subset: Subset, x: &[f64], y: &[f64]) -> CorrelationRow {
    let mut row = CorrelationRow {
        cohort,
        metric,
        subset,
        plcc: None,
        srocc: None,
        n_points: x.len(),
        fit: None,
        note: None,
    };
    match srocc(x, y) {
        Ok(v) => row.srocc = Some(v),
        Err(e) => row.note = Some(format!("srocc: {e}")),
    }
    match fit_logistic(x, y).and_then(|fit| Ok((plcc(&fit.apply(x), y)?, fit))) {
        Ok((v, fit)) => {
            row.plcc = Some(v);
            row.fit = Some(fit);
        }
        Err(e) => {
            let note = format!("plcc: {e}");
            row.note = Some(match row.note.take() {
                Some(prev) => format!("{prev}; {note}"),
                None => note,
            });
        }
    }
    row
}

/// Joins metric scores with MOS and ground truth, then fits and correlates
/// every metric on every subset. The Overall column gets its own fit over
/// all points rather than an average of the per-kind columns.
pub fn build_report(
    scores: &[VideoScoreRecord],
    mos: &MosTable,
    manifest: &[ManifestEntry],
) -> Result<CorrelationReport> {
    let kinds: BTreeMap<&str, DistortionKind> = manifest.iter().map(|e| (e.id.as_str(), e.kind)).collect();
    let mos_by_id: BTreeMap<&str, f64> = mos.rows.iter().map(|r| (r.video_id.as_str(), r.mos)).collect();
    let mut missing = Vec::new();
    // metric -> video -> (kind, score, mos)
    let mut joined: BTreeMap<MetricKind, BTreeMap<&str, (DistortionKind, f64, f64)>> = BTreeMap::new();
    for s in scores {
        let id = s.video_id.as_str();
        let (Some(&kind), Some(&m)) = (kinds.get(id), mos_by_id.get(id)) else {
            missing.push(s.video_id.clone());
            continue;
        };
        let v = s.value();
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{} score for {id} is not finite", s.metric)));
        }
        if joined.entry(s.metric).or_default().insert(id, (kind, v, m)).is_some() {
            return Err(Error::InvalidParameter(format!("{} scored twice for {id}", s.metric)));
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::MissingJoin(missing));
    }
    let mut rows = Vec::new();
    for metric in MetricKind::ALL {
        let Some(points) = joined.get(&metric) else { continue };
        for subset in Subset::ALL {
            let (x, y): (Vec<f64>, Vec<f64>) = points
                .values()
                .filter(|(k, _, _)| subset.contains(*k))
                .map(|&(_, v, m)| (v, m))
                .unzip();
            rows.push(evaluate(mos.cohort, metric, subset, &x, &y));
        }
    }
    Ok(CorrelationReport {
        cohort: mos.cohort,
        rows,
    })
}

impl CorrelationReport {
    pub fn get(&self, metric: MetricKind, subset: Subset) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.metric == metric && r.subset == subset)
    }

    pub fn metrics(&self) -> Vec<MetricKind> {
        let mut m: Vec<MetricKind> = self.rows.iter().map(|r| r.metric).collect();
        m.dedup();
        m
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                cohort: r.cohort,
                metric: r.metric,
                subset: r.subset,
                plcc: r.plcc,
                srocc: r.srocc,
                n_points: r.n_points,
            })
            .map_err(|e| Error::InvalidParameter(format!("report csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(format!("report csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Two tables, PLCC then SROCC: one row per metric, one column per
    /// subset, the two best values of each column in bold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let plcc_of = |r: &CorrelationRow| r.plcc;
        let srocc_of = |r: &CorrelationRow| r.srocc;
        let tables: [(&str, &dyn Fn(&CorrelationRow) -> Option<f64>); 2] = [("PLCC", &plcc_of), ("SROCC", &srocc_of)];
        for (i, (name, value)) in tables.into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "### {name} ({} observers)\n", self.cohort);
            out.push_str("| Metric |");
            for s in Subset::ALL {
                let _ = write!(out, " {} |", s.title());
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(Subset::ALL.len()));
            out.push('\n');
            let metrics = self.metrics();
            let cells: Vec<Vec<Option<f64>>> = metrics
                .iter()
                .map(|&m| Subset::ALL.iter().map(|&s| self.get(m, s).and_then(value)).collect())
                .collect();
            for (mi, m) in metrics.iter().enumerate() {
                let _ = write!(out, "| {m} |");
                for si in 0..Subset::ALL.len() {
                    match cells[mi][si] {
                        Some(v) => {
                            let column: Vec<Option<f64>> = cells.iter().map(|row| row[si]).collect();
                            if is_top_two(v, &column) {
                                let _ = write!(out, " **{v:.4}** |");
                            } else {
                                let _ = write!(out, " {v:.4} |");
                            }
                        }
                        None => out.push_str(" n/a |"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write_bytes(path, self.to_csv()?.as_bytes())
    }
}

/// True when fewer than two values in `column` are strictly larger.
fn is_top_two(v: f64, column: &[Option<f64>]) -> bool {
    column.iter().flatten().filter(|&&o| o > v).count() < 2
}
