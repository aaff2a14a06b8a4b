use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::metrics::{MetricKind, VideoScoreRecord};
use crate::subjective::{Cohort, MosRow, MosTable};
use crate::synth::{ContentCategory, DistortionKind, LevelTable, ManifestEntry};

#[test]
fn srocc_of_one_swap() {
    let r = srocc(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r - 0.8).abs() < 1e-12);
}

#[test]
fn srocc_with_ties_uses_mid_ranks() {
    assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    // scipy.stats.spearmanr([1, 2, 2, 3], [1, 2, 3, 4])
    let r = srocc(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((r - 0.948_683_298_050_513_8).abs() < 1e-12);
}

#[test]
fn reversed_order_is_minus_one() {
    let r = srocc(&[1.0, 2.0, 3.0, 4.0, 5.0], &[9.0, 7.0, 5.0, 3.0, 1.0]).unwrap();
    assert!((r + 1.0).abs() < 1e-12);
}

#[test]
fn correlation_input_errors() {
    assert!(matches!(srocc(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::TooFewPoints { .. })));
    assert!(matches!(srocc(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(Error::ConstantInput)));
    assert!(matches!(plcc(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::InvalidParameter(_))));
    assert!(plcc(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn plcc_matches_hand_computation() {
    // x = 1..5, y = 2, 4, 5, 4, 5: sxy = 6, sxx = 10, syy = 6
    let r = plcc(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
    assert!((r - 6.0 / 60f64.sqrt()).abs() < 1e-12);
}

#[test]
fn logistic_has_expected_shape() {
    let beta = [2.0, 1.0, 0.0, 0.0, 1.0];
    assert!((logistic5(&beta, 0.0) - 1.0).abs() < 1e-12);
    assert!((logistic5(&beta, 50.0) - 2.0).abs() < 1e-9);
    assert!((logistic5(&beta, -50.0) - 0.0).abs() < 1e-9);
}

#[test]
fn recovers_noise_free_logistic() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = [
            rng.gen_range(1.5..3.0),
            rng.gen_range(0.5..1.5),
            rng.gen_range(4.0..6.0),
            rng.gen_range(0.0..0.05),
            rng.gen_range(0.5..1.5),
        ];
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| logistic5(&beta, v)).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        assert!(fit.rmse < 1e-4, "seed {seed}: rmse {}", fit.rmse);
        let r = plcc(&fit.apply(&x), &y).unwrap();
        assert!(r > 0.9999, "seed {seed}: plcc {r}");
    }
}

#[test]
fn identity_relation_fits_exactly() {
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let fit = fit_logistic(&x, &x).unwrap();
    assert!(fit.rmse < 1e-6);
    assert!((plcc(&fit.apply(&x), &x).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn decreasing_relation_fits() {
    let x: Vec<f64> = (0..30).map(|i| f64::from(i) / 3.0).collect();
    let y: Vec<f64> = x.iter().map(|&v| 3.0 / (1.0 + (v - 5.0).exp())).collect();
    let fit = fit_logistic(&x, &y).unwrap();
    assert!(fit.rmse < 1e-4);
}

#[test]
fn fit_rejects_bad_input() {
    assert!(matches!(fit_logistic(&[1.0; 8], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]), Err(Error::ConstantInput)));
    assert!(matches!(fit_logistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::TooFewPoints { needed: 6, got: 3 })));
    assert!(fit_logistic(&[1.0, 2.0], &[1.0]).is_err());
}

proptest! {
    #[test]
    fn srocc_ignores_monotone_transforms(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        prop_assume!(x.iter().any(|&v| v != x[0]) && y.iter().any(|&v| v != y[0]));
        let base = srocc(&x, &y).unwrap();
        let warped: Vec<f64> = x.iter().map(|v| (v / 50.0).exp() * 3.0 + 1.0).collect();
        let warped_srocc = srocc(&warped, &y).unwrap();
        prop_assert!((base - warped_srocc).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn fitted_plcc_never_below_linear(
        pts in prop::collection::vec((0.0f64..10.0, 0.0f64..3.0), 6..40),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        prop_assume!(x.iter().any(|&v| (v - x[0]).abs() > 1e-6));
        prop_assume!(y.iter().any(|&v| (v - y[0]).abs() > 1e-6));
        let linear = plcc(&x, &y).unwrap().abs();
        let fit = fit_logistic(&x, &y).unwrap();
        let fitted = plcc(&fit.apply(&x), &y).unwrap_or(0.0);
        prop_assert!(fitted >= linear - 1e-9, "fitted {} < linear {}", fitted, linear);
    }
}

fn manifest() -> Vec<ManifestEntry> {
    let table = LevelTable::default();
    let mut out = Vec::new();
    for r in ["AA", "BB"] {
        for kind in DistortionKind::ALL {
            for level in 1..=4u8 {
                let id = format!("{r}-{}-{level}", kind.code());
                out.push(ManifestEntry {
                    id: id.clone(),
                    reference_label: r.into(),
                    content_category: ContentCategory::GB,
                    kind,
                    level,
                    params: table.get(kind, level).unwrap().params,
                    seed: 0,
                    path: PathBuf::from(format!("videos/{id}.y4m")),
                    reference_path: PathBuf::from(format!("refs/{r}.y4m")),
                    rendition: None,
                });
            }
        }
    }
    out
}

fn mos_for(es: &[ManifestEntry], f: impl Fn(&ManifestEntry) -> f64) -> MosTable {
    MosTable {
        cohort: Cohort::Expert,
        rows: es
            .iter()
            .map(|e| {
                let mos = f(e);
                MosRow {
                    video_id: e.id.clone(),
                    scores: Default::default(),
                    mos,
                    mos_normalized: mos / 3.0,
                    n_observers: 1,
                    cohort: Cohort::Expert,
                }
            })
            .collect(),
        observers: vec!["o1".into()],
        warnings: vec![],
    }
}

fn record(id: &str, metric: MetricKind, v: f64) -> VideoScoreRecord {
    VideoScoreRecord {
        video_id: id.into(),
        metric,
        video_score: Some(v),
        per_frame: vec![Some(v)],
        infinite: false,
    }
}

fn mos_of(e: &ManifestEntry) -> f64 {
    3.0 - f64::from(e.level - 1) + if e.reference_label == "AA" { 0.1 } else { 0.0 }
}

#[test]
fn report_has_a_row_per_metric_and_subset() {
    let es = manifest();
    let mos = mos_for(&es, mos_of);
    let mut scores = Vec::new();
    for e in &es {
        let q = mos_of(e);
        // PSNR tracks MOS exactly; SSIM is anti-monotone on smoke only
        scores.push(record(&e.id, MetricKind::Psnr, 20.0 + 5.0 * q));
        let s = if e.kind == DistortionKind::Smoke { 1.0 - q / 10.0 } else { q / 4.0 };
        scores.push(record(&e.id, MetricKind::Ssim, s));
    }
    let report = build_report(&scores, &mos, &es).unwrap();
    assert_eq!(report.rows.len(), 12);
    for s in Subset::ALL {
        let row = report.get(MetricKind::Psnr, s).unwrap();
        assert!((row.srocc.unwrap() - 1.0).abs() < 1e-12, "{s:?}");
        let n = if s == Subset::Overall { 40 } else { 8 };
        assert_eq!(row.n_points, n);
    }
    let smoke = report.get(MetricKind::Ssim, Subset::Smoke).unwrap();
    assert!((smoke.srocc.unwrap() + 1.0).abs() < 1e-12);
    let overall = report.get(MetricKind::Ssim, Subset::Overall).unwrap();
    assert!(overall.srocc.unwrap() < 1.0);
}

#[test]
fn missing_join_is_an_error() {
    let es = manifest();
    let mos = mos_for(&es[1..], mos_of);
    let scores: Vec<VideoScoreRecord> = es.iter().map(|e| record(&e.id, MetricKind::Psnr, 30.0)).collect();
    match build_report(&scores, &mos, &es) {
        Err(Error::MissingJoin(ids)) => assert_eq!(ids, vec![es[0].id.clone()]),
        other => panic!("{other:?}"),
    }
    let stray = vec![record("nowhere", MetricKind::Psnr, 1.0)];
    assert!(matches!(build_report(&stray, &mos_for(&es, mos_of), &es), Err(Error::MissingJoin(_))));
}

#[test]
fn duplicate_and_infinite_scores_are_rejected() {
    let es = manifest();
    let mos = mos_for(&es, mos_of);
    let dup = vec![record(&es[0].id, MetricKind::Psnr, 1.0), record(&es[0].id, MetricKind::Psnr, 2.0)];
    assert!(matches!(build_report(&dup, &mos, &es), Err(Error::InvalidParameter(_))));
    let mut inf = record(&es[0].id, MetricKind::Psnr, 1.0);
    inf.video_score = None;
    inf.infinite = true;
    assert!(matches!(build_report(&[inf], &mos, &es), Err(Error::InvalidParameter(_))));
}

#[test]
fn constant_subset_gets_a_note_not_a_failure() {
    let es = manifest();
    let mos = mos_for(&es, |e| if e.kind == DistortionKind::Noise { 1.0 } else { mos_of(e) });
    let scores: Vec<VideoScoreRecord> =
        es.iter().map(|e| record(&e.id, MetricKind::Vif, mos_of(e) / 3.0)).collect();
    let report = build_report(&scores, &mos, &es).unwrap();
    let noise = report.get(MetricKind::Vif, Subset::Noise).unwrap();
    assert_eq!(noise.srocc, None);
    assert_eq!(noise.plcc, None);
    assert!(noise.note.as_deref().unwrap().contains("constant"));
}

#[test]
fn markdown_bolds_top_two_per_column() {
    let es = manifest();
    let mos = mos_for(&es, mos_of);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut scores = Vec::new();
    for e in &es {
        let q = mos_of(e);
        scores.push(record(&e.id, MetricKind::Psnr, q));
        scores.push(record(&e.id, MetricKind::Ssim, q + rng.gen_range(-0.3..0.3)));
        scores.push(record(&e.id, MetricKind::Vif, rng.gen_range(0.0..1.0)));
    }
    let report = build_report(&scores, &mos, &es).unwrap();
    let md = report.to_markdown();
    assert!(md.contains("### PLCC"));
    assert!(md.contains("### SROCC"));
    assert!(md.contains("| Metric | Noise | Defocus Blur | Motion Blur | Uneven illumination | Smoke | Overall |"));
    let srocc_table = md.split("### SROCC").nth(1).unwrap();
    let bold_per_row: Vec<usize> = srocc_table
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| Metric"))
        .map(|l| l.matches("**").count() / 2)
        .collect();
    assert_eq!(bold_per_row.len(), 3);
    assert_eq!(bold_per_row.iter().sum::<usize>(), 12);
    assert_eq!(bold_per_row[0], 6, "perfect metric is bold everywhere");

    let csv = report.to_csv().unwrap();
    assert!(csv.starts_with("cohort,metric,subset,plcc,srocc,n_points\n"));
    assert_eq!(csv.lines().count(), 19);
}
