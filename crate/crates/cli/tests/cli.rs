use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use lvq_cli::serve::SessionService;
use lvq_core::metrics::{MetricKind, VideoScoreRecord};
use lvq_core::subjective::{Choice, PreferenceRecord, SessionPlan, TrialResult};
use lvq_core::synth::{save_manifest, ContentCategory, DistortionKind, LevelTable, ManifestEntry};
use tempfile::TempDir;

fn lvq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvq"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("lvq runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lvq(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Manifest for `n` references without any video files; enough for
/// planning, simulation and reporting.
fn paper_manifest(dir: &Path, n: usize) -> PathBuf {
    let table = LevelTable::default();
    let mut entries = Vec::new();
    for c in &ContentCategory::ALL[..n] {
        for kind in DistortionKind::ALL {
            for level in 1..=4u8 {
                let id = format!("{}-{}-{level}", c.code(), kind.code());
                entries.push(ManifestEntry {
                    id: id.clone(),
                    reference_label: c.code().into(),
                    content_category: *c,
                    kind,
                    level,
                    params: table.get(kind, level).unwrap().params,
                    seed: 0,
                    path: format!("videos/{id}.y4m").into(),
                    reference_path: format!("refs/{}.y4m", c.code()).into(),
                    rendition: None,
                });
            }
        }
    }
    let p = dir.join("manifest.json");
    save_manifest(&p, &entries).unwrap();
    p
}

fn tiny_corpus(dir: &Path, out: &str, seed: &str) {
    if !dir.join("refs").exists() {
        ok(dir, &["refs", "--out", "refs", "--seed", "3", "--frames", "3", "--width", "64", "--height", "48", "--categories", "GB,BL"]);
    }
    ok(dir, &["synth", "--refs", "refs", "--out", out, "--seed", seed]);
}

#[test]
fn help_and_usage_errors() {
    let t = TempDir::new().unwrap();
    let help = lvq(t.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("synth"));
    assert_eq!(lvq(t.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(lvq(t.path(), &["refs", "--out", "r"]).status.code(), Some(1), "seed is never implicit");
    assert_eq!(lvq(t.path(), &["score", "--out", "s.json"]).status.code(), Some(1));
    let bad_cfg = t.path().join("cfg.json");
    std::fs::write(&bad_cfg, r#"{"sead": 1}"#).unwrap();
    let o = lvq(t.path(), &["--config", "cfg.json", "plan", "--observer", "a"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sead"));
}

#[test]
fn data_errors_exit_two() {
    let t = TempDir::new().unwrap();
    std::fs::write(t.path().join("manifest.json"), "[]").unwrap();
    let o = lvq(t.path(), &["classify", "--manifest", "manifest.json", "--out", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no videos"));
    let o = lvq(t.path(), &["classify", "--manifest", "missing.json", "--out", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!t.path().join("c.json").exists());
}

#[test]
fn synth_is_deterministic_and_complete() {
    let t = TempDir::new().unwrap();
    tiny_corpus(t.path(), "a", "7");
    tiny_corpus(t.path(), "b", "7");
    let a = std::fs::read(t.path().join("a/manifest.json")).unwrap();
    let b = std::fs::read(t.path().join("b/manifest.json")).unwrap();
    assert_eq!(a, b);
    let entries: Vec<ManifestEntry> = serde_json::from_slice(&a).unwrap();
    assert_eq!(entries.len(), 40);
    for e in &entries {
        let va = std::fs::read(t.path().join("a").join(&e.path)).unwrap();
        let vb = std::fs::read(t.path().join("b").join(&e.path)).unwrap();
        assert!(va == vb, "{} differs between runs", e.id);
    }
    tiny_corpus(t.path(), "c", "8");
    let c = std::fs::read(t.path().join("c/manifest.json")).unwrap();
    assert_ne!(a, c, "seed reaches the manifest");
}

#[test]
fn missing_level_cell_is_named() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["refs", "--out", "refs", "--seed", "1", "--frames", "2", "--width", "32", "--height", "32", "--categories", "GB"]);
    let mut table = LevelTable::default();
    table.remove(DistortionKind::MotionBlur, 3);
    let cfg = serde_json::json!({ "seed": 1, "level_table": table });
    std::fs::write(t.path().join("cfg.json"), cfg.to_string()).unwrap();
    let o = lvq(t.path(), &["--config", "cfg.json", "synth", "--refs", "refs", "--out", "corpus"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("MotionBlur") && msg.contains("level 3"), "{msg}");
    assert!(!t.path().join("corpus/manifest.json").exists());
}

#[test]
fn classify_survives_unreadable_clip() {
    let t = TempDir::new().unwrap();
    tiny_corpus(t.path(), "corpus", "7");
    let victim = t.path().join("corpus/videos/GB-noise-2.y4m");
    std::fs::write(&victim, b"not a video").unwrap();
    let table = ok(t.path(), &["classify", "--manifest", "corpus/manifest.json", "--out", "cls.json", "--include-refs"]);
    let rows = table.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Distortion")).count();
    assert_eq!(rows, 5);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("cls.json")).unwrap()).unwrap();
    let videos = report["videos"].as_array().unwrap();
    assert_eq!(videos.len(), 40);
    let failed: Vec<&str> =
        videos.iter().filter(|v| v.get("error").is_some()).map(|v| v["id"].as_str().unwrap()).collect();
    assert_eq!(failed, vec!["GB-noise-2"]);
    assert_eq!(report["summary"]["failures"], 1);
    assert_eq!(report["references"].as_array().unwrap().len(), 2);
}

#[test]
fn plan_for_ten_references_has_300_trials() {
    let t = TempDir::new().unwrap();
    paper_manifest(t.path(), 10);
    let out = ok(t.path(), &["plan", "--manifest", "manifest.json", "--observer", "e1", "--observer", "e2", "--seed", "4", "--out", "plans"]);
    assert!(out.contains("e1: 300 trials"));
    let p: SessionPlan = serde_json::from_slice(&std::fs::read(t.path().join("plans/e1.json")).unwrap()).unwrap();
    assert_eq!(p.trials.len(), 300);
    p.validate().unwrap();
    let first = std::fs::read(t.path().join("plans/e2.json")).unwrap();
    ok(t.path(), &["plan", "--manifest", "manifest.json", "--observer", "e2", "--seed", "4", "--out", "plans"]);
    assert_eq!(first, std::fs::read(t.path().join("plans/e2.json")).unwrap());
    assert_eq!(lvq(t.path(), &["plan", "--manifest", "manifest.json", "--observer", "../x", "--seed", "4", "--out", "plans"]).status.code(), Some(1));
}

fn cohort(dir: &Path, prefix: &str, n: usize, random: &str) {
    let ids: Vec<String> = (1..=n).map(|i| format!("{prefix}{i:02}")).collect();
    ok(dir, &["plan", "--manifest", "manifest.json", "--observer", &ids.join(","), "--seed", "11", "--out", &format!("plans_{prefix}")]);
    ok(dir, &["simulate", "--manifest", "manifest.json", "--plans", &format!("plans_{prefix}"), "--out", &format!("records_{prefix}"), "--seed", "12", "--random", random]);
}

fn mos_n_observers(csv: &Path) -> Vec<usize> {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("video_id,mos,mos_normalized,n_observers,cohort"));
    lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect()
}

#[test]
fn aggregate_drops_the_flagged_observer() {
    let t = TempDir::new().unwrap();
    paper_manifest(t.path(), 10);
    cohort(t.path(), "e", 10, "e07");
    let out = ok(t.path(), &[
        "aggregate", "--plans", "plans_e", "--records", "records_e", "--cohort", "expert", "--out", "mos.csv", "--outliers", "outliers.json",
    ]);
    assert!(out.contains("flagged: [e07]"), "{out}");
    assert!(mos_n_observers(&t.path().join("mos.csv")).iter().all(|&n| n == 9));
    let screening: serde_json::Value =
        serde_json::from_slice(&std::fs::read(t.path().join("outliers.json")).unwrap()).unwrap();
    assert_eq!(screening["flagged"], serde_json::json!(["e07"]));
    ok(t.path(), &["aggregate", "--plans", "plans_e", "--records", "records_e", "--cohort", "expert", "--out", "all.csv", "--no-screen"]);
    assert!(mos_n_observers(&t.path().join("all.csv")).iter().all(|&n| n == 10));
}

#[test]
fn record_without_plan_is_a_data_error() {
    let t = TempDir::new().unwrap();
    paper_manifest(t.path(), 2);
    cohort(t.path(), "e", 3, "e01");
    std::fs::remove_file(t.path().join("plans_e/e02.json")).unwrap();
    let o = lvq(t.path(), &["aggregate", "--plans", "plans_e", "--records", "records_e", "--cohort", "expert", "--out", "m.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("e02"));
}

fn fake_scores(dir: &Path, manifest: &Path) -> PathBuf {
    let entries: Vec<ManifestEntry> = serde_json::from_slice(&std::fs::read(manifest).unwrap()).unwrap();
    let mut recs = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let q = 4.0 - f64::from(e.level);
        let wobble = ((i * 7919) % 13) as f64 / 13.0;
        for (m, v) in [(MetricKind::Psnr, 25.0 + 3.0 * q + 4.0 * wobble), (MetricKind::Ssim, 0.6 + 0.1 * q), (MetricKind::Vif, 0.2 + 0.2 * q + 0.05 * wobble)] {
            recs.push(VideoScoreRecord {
                video_id: e.id.clone(),
                metric: m,
                video_score: Some(v),
                per_frame: vec![Some(v)],
                infinite: false,
            });
        }
    }
    let p = dir.join("scores.json");
    std::fs::write(&p, serde_json::to_string(&recs).unwrap()).unwrap();
    p
}

#[test]
fn report_per_cohort() {
    let t = TempDir::new().unwrap();
    let m = paper_manifest(t.path(), 10);
    fake_scores(t.path(), &m);
    cohort(t.path(), "e", 4, "e01");
    cohort(t.path(), "n", 6, "n01");
    ok(t.path(), &["aggregate", "--plans", "plans_e", "--records", "records_e", "--cohort", "expert", "--out", "expert.csv"]);
    ok(t.path(), &["aggregate", "--plans", "plans_n", "--records", "records_n", "--cohort", "nonexpert", "--out", "nonexpert.csv"]);
    let both = ["report", "--manifest", "manifest.json", "--scores", "scores.json", "--mos", "expert.csv", "--mos", "nonexpert.csv"];
    let mut args = both.to_vec();
    args.extend(["--out", "both.md", "--csv", "both.csv"]);
    let md = ok(t.path(), &args);
    assert!(md.contains("## expert observers") && md.contains("## nonexpert observers"));
    assert_eq!(md.matches("| Metric |").count(), 4);
    assert_eq!(std::fs::read_to_string(t.path().join("both.csv")).unwrap().lines().count(), 1 + 2 * 18);

    let mut args = both.to_vec();
    args.extend(["--cohort", "expert", "--out", "expert.md"]);
    let md = ok(t.path(), &args);
    assert!(md.contains("## expert observers") && !md.contains("nonexpert"));
    assert_eq!(md.matches("| Metric |").count(), 2);
    assert_eq!(md, std::fs::read_to_string(t.path().join("expert.md")).unwrap());
}

#[test]
fn report_names_missing_ids() {
    let t = TempDir::new().unwrap();
    let m = paper_manifest(t.path(), 2);
    let scores = fake_scores(t.path(), &m);
    cohort(t.path(), "e", 3, "e01");
    ok(t.path(), &["aggregate", "--plans", "plans_e", "--records", "records_e", "--cohort", "expert", "--out", "mos.csv"]);
    let mut recs: Vec<VideoScoreRecord> = serde_json::from_slice(&std::fs::read(&scores).unwrap()).unwrap();
    recs[0].video_id = "ghost-video".into();
    std::fs::write(&scores, serde_json::to_string(&recs).unwrap()).unwrap();
    let o = lvq(t.path(), &["report", "--manifest", "manifest.json", "--scores", "scores.json", "--mos", "mos.csv", "--out", "r.md"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ghost-video"));
}

#[test]
fn config_supplies_seed_and_paths() {
    let t = TempDir::new().unwrap();
    let sub = t.path().join("study");
    std::fs::create_dir(&sub).unwrap();
    paper_manifest(&sub, 2);
    let cfg = serde_json::json!({
        "seed": 21,
        "cohort": "nonexpert",
        "paths": { "manifest": "manifest.json", "plans": "plans", "records": "records" },
        "observer_model": { "model": "noisy", "sd": 0.5, "equal_band": 0.1 }
    });
    std::fs::write(sub.join("cfg.json"), cfg.to_string()).unwrap();
    ok(t.path(), &["--config", "study/cfg.json", "plan", "--observer", "a,b,c"]);
    assert!(sub.join("plans/a.json").exists());
    ok(t.path(), &["--config", "study/cfg.json", "simulate"]);
    ok(t.path(), &["--config", "study/cfg.json", "aggregate", "--out", "mos.csv"]);
    let text = std::fs::read_to_string(t.path().join("mos.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",nonexpert")));
    // flag beats config
    ok(t.path(), &["--config", "study/cfg.json", "plan", "--observer", "a", "--seed", "22", "--out", "other"]);
    assert_ne!(std::fs::read(sub.join("plans/a.json")).unwrap(), std::fs::read(t.path().join("other/a.json")).unwrap());
}

fn http(addr: &str, request: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(request.as_bytes()).unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = resp.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

fn post(addr: &str, body: &str) -> (u16, String) {
    http(
        addr,
        &format!(
            "POST /record HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        ),
    )
}

#[test]
fn session_endpoint_round_trip() {
    let t = TempDir::new().unwrap();
    paper_manifest(t.path(), 1);
    ok(t.path(), &["plan", "--manifest", "manifest.json", "--observer", "ui1,ui2,ui3", "--seed", "2", "--out", "plans"]);
    let service = SessionService {
        plans: t.path().join("plans"),
        records: t.path().join("records"),
        static_dir: None,
    };
    service.prepare().unwrap();
    let (server, addr) = SessionService::bind("127.0.0.1:0").unwrap();
    let server = Arc::new(server);
    let handle = {
        let server = Arc::clone(&server);
        std::thread::spawn(move || service.run(&server))
    };

    let (status, body) = http(&addr, "GET /plan/ui1 HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    assert_eq!(status, 200);
    let plan: SessionPlan = serde_json::from_str(&body).unwrap();
    assert_eq!(plan.trials.len(), 30);
    assert_eq!(http(&addr, "GET /plan/nobody HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").0, 404);

    // scripted answers: A, B, Equal in turn
    let script = [Choice::A, Choice::B, Choice::Equal];
    let record = PreferenceRecord {
        observer_id: "ui1".into(),
        results: plan.trials.iter().map(|t| TrialResult { idx: t.idx, choice: script[t.idx % 3] }).collect(),
    };
    let json = serde_json::to_string(&record).unwrap();
    assert_eq!(post(&addr, &json).0, 201);
    assert_eq!(post(&addr, &json).0, 409, "stored records are immutable");
    assert_eq!(post(&addr, "{not json").0, 400);
    let mut short = record.clone();
    short.observer_id = "ui2".into();
    short.results.pop();
    assert_eq!(post(&addr, &serde_json::to_string(&short).unwrap()).0, 422);
    server.unblock();
    handle.join().unwrap();

    let stored: PreferenceRecord =
        serde_json::from_slice(&std::fs::read(t.path().join("records/ui1.json")).unwrap()).unwrap();
    assert_eq!(stored, record);
    let o = lvq(t.path(), &["aggregate", "--plans", "plans", "--records", "records", "--cohort", "expert", "--out", "mos.csv"]);
    assert!(o.status.success());
    // one observer: screening is skipped with a warning, nothing else
    let warnings: Vec<String> = stderr(&o).lines().filter(|l| l.starts_with("warning")).map(String::from).collect();
    assert_eq!(warnings.len(), 1, "{warnings:?}");
    assert!(warnings[0].contains("at least 3"));
}

#[test]
fn service_rejects_path_tricks() {
    let t = TempDir::new().unwrap();
    std::fs::create_dir(t.path().join("plans")).unwrap();
    std::fs::create_dir(t.path().join("www")).unwrap();
    std::fs::write(t.path().join("www/index.html"), "<p>ui</p>").unwrap();
    std::fs::write(t.path().join("secret.txt"), "x").unwrap();
    let s = SessionService {
        plans: t.path().join("plans"),
        records: t.path().join("records"),
        static_dir: Some(t.path().join("www")),
    };
    assert_eq!(s.handle("GET", "/plan/..%2Fsecret", b"").status, 400);
    assert_eq!(s.handle("GET", "/plan/../secret", b"").status, 400);
    assert_eq!(s.handle("GET", "/../secret.txt", b"").status, 404);
    let index = s.handle("GET", "/", b"");
    assert_eq!(index.status, 200);
    assert_eq!(index.body_str(), "<p>ui</p>");
    assert_eq!(s.handle("DELETE", "/record", b"").status, 405);
    assert_eq!(s.handle("OPTIONS", "/record", b"").status, 204);
}
