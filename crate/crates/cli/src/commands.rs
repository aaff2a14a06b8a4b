use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use lvq_core::classify::{
    calibrate, classify_video_with, AccuracySummary, ClassifierThresholds, LabelledIndices, VideoClassification,
};
use lvq_core::evalcorr::{build_report, CorrelationReport};
use lvq_core::frameio::{read_clip, write_clip, ClipFormat, VideoClip};
use lvq_core::fsutil;
use lvq_core::metrics::{score_clip_with, MetricKind, VideoScoreRecord};
use lvq_core::subjective::simulate::{simulate_record, ObserverModel};
use lvq_core::subjective::{
    aggregate_mos, detect_outliers, observer_hash, plan_session, MosTable, ObserverSession, PreferenceRecord,
    SessionPlan,
};
use lvq_core::synth::noise_field::derive_seed;
use lvq_core::synth::{
    generate_reference_with, load_manifest, synthesize_corpus_with, ContentCategory, CorpusOptions, CorpusReference,
    LevelTable, Manifest,
};
use lvq_core::Exec;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::args::*;
use crate::config::{need, PipelineConfig, ReferenceSize};
use crate::error::{CliError, CliResult};

pub struct Context {
    pub config: PipelineConfig,
    pub exec: Exec,
}

/// Index written next to generated references and read by `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefEntry {
    pub label: String,
    pub category: ContentCategory,
    /// Relative to the index file's directory.
    pub path: PathBuf,
}

pub const REFS_INDEX: &str = "refs.json";

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    fsutil::atomic_write_bytes(path, text.as_bytes())?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// JSON files of a directory in name order.
fn json_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Observer ids become file names, so they are kept to a safe alphabet.
pub fn check_observer_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("observer id {id:?} must be 1-64 of [A-Za-z0-9._-] and not start with '.'")))
    }
}

impl Context {
    fn seed(&self, flag: Option<u64>) -> CliResult<u64> {
        need(flag, self.config.seed, "--seed")
    }

    fn manifest_path(&self, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let paths = &self.config.paths;
        flag.or_else(|| paths.manifest.clone())
            .or_else(|| paths.corpus.as_ref().map(|c| c.join("manifest.json")))
            .ok_or_else(|| CliError::usage("--manifest is required (flag, paths.manifest or paths.corpus)"))
    }

    fn manifest(&self, flag: Option<PathBuf>) -> CliResult<Manifest> {
        let m = load_manifest(&self.manifest_path(flag)?)?;
        if m.entries.is_empty() {
            return Err(CliError::data("manifest lists no videos"));
        }
        Ok(m)
    }

    fn thresholds(&self, file: Option<&Path>) -> CliResult<ClassifierThresholds> {
        let th = match file {
            Some(p) => read_json(p)?,
            None => self.config.thresholds.unwrap_or_default(),
        };
        th.validate()?;
        Ok(th)
    }
}

pub fn refs(ctx: &Context, a: RefsArgs) -> CliResult<()> {
    let out = need(a.out, ctx.config.paths.refs.clone(), "--out")?;
    let seed = ctx.seed(a.seed)?;
    let size = ctx.config.reference.unwrap_or_default();
    let size = ReferenceSize {
        width: a.width.unwrap_or(size.width),
        height: a.height.unwrap_or(size.height),
        frames: a.frames.unwrap_or(size.frames),
    };
    if size.frames == 0 {
        return Err(CliError::usage("--frames must be positive"));
    }
    let categories = if a.categories.is_empty() { ContentCategory::ALL.to_vec() } else { a.categories };
    let mut index = Vec::new();
    for c in categories {
        let clip = generate_reference_with(c, size.width, size.height, size.frames, seed, ctx.exec)?;
        let rel = match a.format {
            ClipFormat::Y4m => PathBuf::from(format!("{}.y4m", c.code())),
            ClipFormat::PngDir => PathBuf::from(c.code()),
        };
        write_clip(&clip, &out.join(&rel), a.format)?;
        log::info!("reference {c}");
        index.push(RefEntry {
            label: c.code().to_string(),
            category: c,
            path: rel,
        });
    }
    write_json(&out.join(REFS_INDEX), &index)?;
    println!("wrote {} reference clips to {}", index.len(), out.display());
    Ok(())
}

/// References from `refs.json` when present, else every clip in the
/// directory with its category taken from the leading code of its name.
fn load_refs(dir: &Path) -> CliResult<Vec<CorpusReference>> {
    let index_path = dir.join(REFS_INDEX);
    let index: Vec<RefEntry> = if index_path.exists() {
        read_json(&index_path)?
    } else {
        let rd = std::fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
        let mut clips: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                (p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("y4m")))
                    || (p.is_dir() && p.join("clip.json").exists())
            })
            .collect();
        clips.sort();
        clips
            .into_iter()
            .map(|p| {
                let label = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let category = label
                    .get(..2)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| CliError::data(format!("cannot infer content category of {label}; add {REFS_INDEX}")))?;
                Ok(RefEntry {
                    label,
                    category,
                    path: p.strip_prefix(dir).unwrap_or(&p).to_path_buf(),
                })
            })
            .collect::<CliResult<_>>()?
    };
    if index.is_empty() {
        return Err(CliError::data(format!("no reference clips in {}", dir.display())));
    }
    index
        .into_iter()
        .map(|r| {
            let p = dir.join(&r.path);
            let clip = read_clip(&p, ClipFormat::infer(&p))?;
            Ok(CorpusReference {
                label: r.label,
                category: r.category,
                clip,
            })
        })
        .collect()
}

pub fn synth(ctx: &Context, a: SynthArgs) -> CliResult<()> {
    let refs_dir = need(a.refs, ctx.config.paths.refs.clone(), "--refs")?;
    let out = need(a.out, ctx.config.paths.corpus.clone(), "--out")?;
    let seed = ctx.seed(a.seed)?;
    let level_table = ctx.config.level_table.clone().unwrap_or_else(LevelTable::default);
    // fail on an incomplete table before decoding any video
    level_table.check_complete()?;
    let refs = load_refs(&refs_dir)?;
    let opts = CorpusOptions {
        out_dir: out.clone(),
        format: a.format,
        seed,
        level_table,
    };
    let entries = synthesize_corpus_with(&refs, &opts, ctx.exec)?;
    println!(
        "wrote {} distorted videos from {} references; manifest {}",
        entries.len(),
        refs.len(),
        out.join("manifest.json").display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassificationOutput {
    pub thresholds: ClassifierThresholds,
    pub videos: Vec<VideoClassification>,
    /// Pristine references, when requested; all should be None.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<VideoClassification>,
    pub summary: AccuracySummary,
}

fn classify_path(
    id: &str,
    path: &Path,
    th: &ClassifierThresholds,
    truth: Option<lvq_core::synth::DistortionKind>,
    exec: Exec,
) -> VideoClassification {
    let result = read_clip(path, ClipFormat::infer(path)).and_then(|clip| classify_video_with(&clip, th, exec));
    match result {
        Ok(r) => VideoClassification::from_report(id, &r, truth),
        Err(e) => {
            log::warn!("{id}: {e}");
            VideoClassification::failed(id, truth, e.to_string())
        }
    }
}

/// Distinct reference clips of a manifest as (label, path).
fn reference_paths(m: &Manifest) -> Vec<(String, PathBuf)> {
    let mut seen = BTreeSet::new();
    m.entries
        .iter()
        .filter(|e| seen.insert(e.reference_path.clone()))
        .map(|e| (e.reference_label.clone(), m.reference_path(e)))
        .collect()
}

pub fn classify(ctx: &Context, a: ClassifyArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let th = ctx.thresholds(a.thresholds.as_deref())?;
    let videos: Vec<VideoClassification> = m
        .entries
        .iter()
        .map(|e| classify_path(&e.id, &m.video_path(e), &th, Some(e.kind), ctx.exec))
        .collect();
    let references = if a.include_refs {
        reference_paths(&m)
            .iter()
            .map(|(label, p)| classify_path(label, p, &th, None, ctx.exec))
            .collect()
    } else {
        Vec::new()
    };
    let summary = AccuracySummary::from_results(&videos);
    print!("{}", summary.to_markdown());
    if !references.is_empty() {
        let clean = references.iter().filter(|r| r.error.is_none() && r.decision.is_none()).count();
        println!("references classified as None: {clean}/{}", references.len());
    }
    if summary.failures > 0 {
        eprintln!("warning: {} videos could not be classified", summary.failures);
    }
    write_json(
        &a.out,
        &ClassificationOutput {
            thresholds: th,
            videos,
            references,
            summary,
        },
    )
}

pub fn calibrate_cmd(ctx: &Context, a: CalibrateArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let start = ctx.thresholds(None)?;
    let mut samples = Vec::new();
    let mut push = |r: VideoClassification| -> CliResult<()> {
        if let Some(e) = r.error {
            return Err(CliError::data(format!("{}: {e}", r.id)));
        }
        samples.push(LabelledIndices {
            truth: r.truth,
            indices: r.indices(),
        });
        Ok(())
    };
    for (label, p) in reference_paths(&m) {
        push(classify_path(&label, &p, &start, None, ctx.exec))?;
    }
    for e in &m.entries {
        push(classify_path(&e.id, &m.video_path(e), &start, Some(e.kind), ctx.exec))?;
    }
    let c = calibrate(&samples, &start)?;
    println!(
        "{}/{} distorted videos correct, {} references misclassified, {} sweeps",
        c.correct, c.distorted, c.reference_violations, c.sweeps
    );
    write_json(&a.out, &c.thresholds)
}

pub fn score(ctx: &Context, a: ScoreArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let out = need(a.out, ctx.config.paths.scores.clone(), "--out")?;
    let metrics = if a.metrics.is_empty() { MetricKind::ALL.to_vec() } else { a.metrics };
    let mut records = Vec::new();
    let mut cached: Option<(PathBuf, VideoClip)> = None;
    for e in &m.entries {
        let ref_path = m.reference_path(e);
        if cached.as_ref().map_or(true, |(p, _)| *p != ref_path) {
            let clip = read_clip(&ref_path, ClipFormat::infer(&ref_path))
                .map_err(|err| CliError::data(format!("reference of {}: {err}", e.id)))?;
            cached = Some((ref_path, clip));
        }
        let reference = &cached.as_ref().expect("loaded above").1;
        let p = m.video_path(e);
        let distorted =
            read_clip(&p, ClipFormat::infer(&p)).map_err(|err| CliError::data(format!("{}: {err}", e.id)))?;
        for &metric in &metrics {
            let s = score_clip_with(reference, &distorted, metric, ctx.exec)
                .map_err(|err| CliError::data(format!("{} {metric}: {err}", e.id)))?;
            records.push(VideoScoreRecord::new(&e.id, &s));
        }
        log::info!("scored {}", e.id);
    }
    write_json(&out, &records)?;
    println!("scored {} videos with {} metrics", m.entries.len(), metrics.len());
    Ok(())
}

pub fn plan(ctx: &Context, a: PlanArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let seed = ctx.seed(a.seed)?;
    let out = need(a.out, ctx.config.paths.plans.clone(), "--out")?;
    for id in &a.observers {
        check_observer_id(id)?;
    }
    for id in &a.observers {
        let plan = plan_session(&m.entries, id, seed)?;
        write_json(&out.join(format!("{id}.json")), &plan)?;
        println!("{id}: {} trials", plan.trials.len());
    }
    Ok(())
}

fn load_plans(dir: &Path) -> CliResult<BTreeMap<String, SessionPlan>> {
    let mut plans = BTreeMap::new();
    for p in json_files(dir)? {
        let plan: SessionPlan = read_json(&p)?;
        plan.validate().map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
        if let Some(prev) = plans.insert(plan.observer_id.clone(), plan) {
            return Err(CliError::data(format!("two plans for observer {}", prev.observer_id)));
        }
    }
    Ok(plans)
}

/// Default synthetic observer: each video perceived once with Gaussian
/// error of 0.4 on a one-unit-per-level quality scale, near-ties answered
/// Equal.
pub const DEFAULT_OBSERVER: ObserverModel = ObserverModel::Consistent {
    perception_sd: 0.4,
    equal_band: 0.2,
};

pub fn simulate(ctx: &Context, a: SimulateArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let plans_dir = need(a.plans, ctx.config.paths.plans.clone(), "--plans")?;
    let out = need(a.out, ctx.config.paths.records.clone(), "--out")?;
    let seed = ctx.seed(a.seed)?;
    let model = ctx.config.observer_model.unwrap_or(DEFAULT_OBSERVER);
    let plans = load_plans(&plans_dir)?;
    if plans.is_empty() {
        return Err(CliError::data(format!("no plans in {}", plans_dir.display())));
    }
    if let Some(unknown) = a.random.iter().find(|id| !plans.contains_key(*id)) {
        return Err(CliError::usage(format!("--random names {unknown}, who has no plan")));
    }
    // latent quality falls by one per severity level
    let quality: BTreeMap<String, f64> =
        m.entries.iter().map(|e| (e.id.clone(), 4.0 - f64::from(e.level))).collect();
    for (id, plan) in &plans {
        let model = if a.random.contains(id) { ObserverModel::Random } else { model };
        let record = simulate_record(plan, &quality, model, derive_seed(seed, &[observer_hash(id)]))?;
        write_json(&out.join(format!("{id}.json")), &record)?;
    }
    println!("simulated {} observers ({} random)", plans.len(), a.random.len());
    Ok(())
}

pub fn aggregate(ctx: &Context, a: AggregateArgs) -> CliResult<()> {
    let plans_dir = need(a.plans, ctx.config.paths.plans.clone(), "--plans")?;
    let records_dir = need(a.records, ctx.config.paths.records.clone(), "--records")?;
    let cohort = need(a.cohort, ctx.config.cohort, "--cohort")?;
    let plans = load_plans(&plans_dir)?;
    let mut sessions = Vec::new();
    for p in json_files(&records_dir)? {
        let record: PreferenceRecord = read_json(&p)?;
        let plan = plans
            .get(&record.observer_id)
            .ok_or_else(|| CliError::data(format!("{}: no plan for observer {}", p.display(), record.observer_id)))?;
        sessions.push(ObserverSession {
            plan: plan.clone(),
            record,
        });
    }
    if sessions.is_empty() {
        return Err(CliError::data(format!("no records in {}", records_dir.display())));
    }
    let screening = detect_outliers(&sessions)?;
    let exclude: BTreeSet<String> =
        if a.no_screen { BTreeSet::new() } else { screening.flagged.iter().cloned().collect() };
    let table = aggregate_mos(&sessions, cohort, &exclude)?;
    for w in screening.warnings.iter().chain(&table.warnings) {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.outliers {
        write_json(p, &screening)?;
    }
    table.write_csv(&a.out)?;
    println!(
        "{cohort}: {} videos, {} observers used, flagged: [{}]",
        table.rows.len(),
        table.observers.len(),
        screening.flagged.join(", ")
    );
    Ok(())
}

pub fn report(ctx: &Context, a: ReportArgs) -> CliResult<()> {
    let m = ctx.manifest(a.manifest)?;
    let scores_path = need(a.scores, ctx.config.paths.scores.clone(), "--scores")?;
    let mos_paths = if a.mos.is_empty() { ctx.config.paths.mos.clone() } else { a.mos };
    if mos_paths.is_empty() {
        return Err(CliError::usage("--mos is required (flag or paths.mos)"));
    }
    let cohort = a.cohort.or(ctx.config.cohort);
    let scores: Vec<VideoScoreRecord> = read_json(&scores_path)?;
    let mut tables: Vec<MosTable> = Vec::new();
    for p in &mos_paths {
        let t = MosTable::read_csv(p)?;
        if cohort.is_some_and(|c| c != t.cohort) {
            continue;
        }
        if tables.iter().any(|o| o.cohort == t.cohort) {
            return Err(CliError::usage(format!("two MOS tables for cohort {}", t.cohort)));
        }
        tables.push(t);
    }
    if tables.is_empty() {
        return Err(CliError::data(format!("no MOS table for cohort {}", cohort.map(|c| c.to_string()).unwrap_or_default())));
    }
    let reports: Vec<CorrelationReport> =
        tables.iter().map(|t| build_report(&scores, t, &m.entries)).collect::<Result<_, _>>()?;
    let mut md = String::new();
    for r in &reports {
        if !md.is_empty() {
            md.push('\n');
        }
        md.push_str(&format!("## {} observers\n\n", r.cohort));
        md.push_str(&r.to_markdown());
        for row in r.rows.iter().filter(|row| row.note.is_some()) {
            eprintln!("note: {} {} {}: {}", r.cohort, row.metric, row.subset.title(), row.note.as_deref().unwrap_or(""));
        }
    }
    fsutil::atomic_write_bytes(&a.out, md.as_bytes())?;
    if let Some(p) = &a.csv {
        let mut csv = String::new();
        for (i, r) in reports.iter().enumerate() {
            let text = r.to_csv()?;
            let body = if i == 0 { text.as_str() } else { text.split_once('\n').map_or("", |(_, b)| b) };
            csv.push_str(body);
        }
        fsutil::atomic_write_bytes(p, csv.as_bytes())?;
    }
    print!("{md}");
    Ok(())
}
