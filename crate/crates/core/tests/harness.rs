use neuromimo::harness::{
    ber_csv_string, report_op_counts, run_attempts_study, run_ber_sweep, run_local_minima_study,
    write_ber_results, Detector, ExperimentConfig,
};
use neuromimo::linear::REFERENCE_CONFIGS;
use neuromimo::LifParams;

fn small(detectors: Vec<Detector>) -> ExperimentConfig {
    ExperimentConfig {
        antennas: 4,
        streams: 4,
        snr_db: vec![4.0, 10.0],
        frames: 6,
        tx_per_frame: 20,
        detectors,
        lif: LifParams {
            tau: 3.0,
            ..LifParams::default()
        },
        target_ber: 0.0,
        ..Default::default()
    }
}

fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn ml_is_never_beaten_by_snn() {
    let r = run_ber_sweep(&small(vec![Detector::Ml, Detector::Snn])).unwrap();
    for pair in r.chunks(2) {
        assert_eq!(pair[0].detector, Detector::Ml);
        assert!(pair[1].bit_errors >= pair[0].bit_errors, "{pair:?}");
    }
}

#[test]
fn bit_bookkeeping() {
    let c = small(vec![Detector::Zf, Detector::Mmse, Detector::Snn]);
    let r = run_ber_sweep(&c).unwrap();
    assert_eq!(r.len(), c.snr_db.len() * 3);
    for rec in &r {
        assert_eq!(rec.bits_total, (c.frames * c.tx_per_frame * 2 * c.streams) as u64);
        assert_eq!(rec.ber, rec.bit_errors as f64 / rec.bits_total as f64);
        assert_eq!(rec.config_hash, c.hash());
    }
}

#[test]
fn noiseless_zf_sweep_is_error_free() {
    let mut c = small(vec![Detector::Zf]);
    c.antennas = 16;
    c.snr_db = vec![f64::INFINITY];
    assert!(run_ber_sweep(&c).unwrap().iter().all(|r| r.bit_errors == 0));
}

#[test]
fn repeated_budgets_give_identical_records() {
    let mut c = small(vec![Detector::Mmse]);
    c.lif.sigma_v_sq = 0.01;
    c.attempts_list = vec![1, 1];
    let r = run_attempts_study(&c).unwrap();
    for point in r.chunks(3) {
        assert_eq!(point[1].attempts, 1);
        assert_eq!(point[1].bit_errors, point[2].bit_errors);
    }
}

#[test]
fn sweep_and_study_agree_on_shared_columns() {
    let mut c = small(vec![Detector::Mmse, Detector::Snn]);
    c.lif.sigma_v_sq = 0.01;
    c.attempts = 3;
    c.attempts_list = vec![1, 3];
    let sweep = run_ber_sweep(&c).unwrap();
    let study = run_attempts_study(&c).unwrap();
    for (si, _) in c.snr_db.iter().enumerate() {
        let s = &sweep[2 * si..2 * si + 2];
        let t = &study[3 * si..3 * si + 3];
        assert_eq!(s[0].bit_errors, t[0].bit_errors);
        assert_eq!((s[1].attempts, s[1].bit_errors), (t[2].attempts, t[2].bit_errors));
    }
}

#[test]
fn detectors_see_the_same_transmissions() {
    // a detector's result must not depend on which others run beside it
    let alone = run_ber_sweep(&small(vec![Detector::Mmse])).unwrap();
    let together = run_ber_sweep(&small(vec![Detector::Zf, Detector::Snn, Detector::Mmse])).unwrap();
    for (si, a) in alone.iter().enumerate() {
        assert_eq!(a.bit_errors, together[3 * si + 2].bit_errors);
    }
}

#[test]
fn seed_changes_results_and_reruns_do_not() {
    let c = small(vec![Detector::Zf, Detector::Snn]);
    let a = run_ber_sweep(&c).unwrap();
    let b = run_ber_sweep(&c).unwrap();
    assert_eq!(
        strip_timing(&ber_csv_string(&a, &c.hash())),
        strip_timing(&ber_csv_string(&b, &c.hash()))
    );
    let mut other = c.clone();
    other.seed = 99;
    let d = run_ber_sweep(&other).unwrap();
    assert_ne!(
        a.iter().map(|r| r.bit_errors).collect::<Vec<_>>(),
        d.iter().map(|r| r.bit_errors).collect::<Vec<_>>()
    );
}

#[test]
fn result_files_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out/ber.csv");
    let c = small(vec![Detector::Mmse]);
    let r = run_ber_sweep(&c).unwrap();
    write_ber_results(&path, "ber", &c, &r).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with(&format!("# config_hash={}\n", c.hash())));
    assert_eq!(csv.lines().count(), 2 + r.len());
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(side["kind"], "ber");
    assert_eq!(side["config"]["lif"]["tau"], 3.0);
    let back: ExperimentConfig = serde_json::from_value(side["config"].clone()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn minima_fall_with_spatial_ratio() {
    let rows = run_local_minima_study(&[2, 16], 2, 150, Some(10.0), 5).unwrap();
    assert!(rows[0].mean_local_minima > rows[1].mean_local_minima);
    assert!(rows[1].mean_local_minima >= 1.0);
}

#[test]
fn op_count_report() {
    assert!(report_op_counts(&[]).rows.is_empty());
    assert_eq!(report_op_counts(&[]).average_reduction, None);
    let full = report_op_counts(&REFERENCE_CONFIGS);
    assert_eq!(full.rows.len(), 9);
    let mean = full.rows.iter().map(|r| r.reduction).sum::<f64>() / 9.0;
    assert_eq!(full.average_reduction, Some(mean));
    let one = report_op_counts(&[(16, 8)]);
    assert!((one.rows[0].reduction - 0.603).abs() < 5e-4);
}
