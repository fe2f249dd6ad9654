use speckle_core::campaign::{analyze_frame, PointSetup};
use speckle_core::*;

fn quick() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.synthesis.grid_size = 64;
    cfg.synthesis.oversample = Some(2);
    cfg.synthesis.modes_min = 20;
    cfg.synthesis.modes_max = 40;
    cfg.detector.focal_length = 0.4;
    cfg.pump.gain_peak = Some(3.0);
    cfg.analysis.max_disp = 5;
    cfg
}

#[test]
fn same_seed_same_frame() {
    let setup = PointSetup::new(quick()).unwrap();
    let (_, a) = setup.simulate(17).unwrap();
    let (_, b) = setup.simulate(17).unwrap();
    let (_, c) = setup.simulate(18).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.counts, c.counts);
}

#[test]
fn reloaded_frame_analyzes_identically() {
    let mut cfg = quick();
    cfg.pump.gain_peak = Some(5.0);
    let mut analyzed = 0;
    let setup = PointSetup::new(cfg.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let (_, frame) = setup.simulate(seed).unwrap();
        let path = dir.path().join(format!("{seed}.pgm"));
        save_frame(&frame, &path).unwrap();
        let back = load_frame(&path).unwrap();
        assert_eq!(back, frame);
        let a = analyze_frame(&cfg, &frame);
        let b = analyze_frame(&cfg, &back);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a, b);
                analyzed += 1;
            }
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            (a, b) => panic!("{a:?} vs {b:?}"),
        }
    }
    assert!(analyzed > 0);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("setup.conf");
    let mut cfg = quick();
    cfg.pump.waist = 0.000_733_333_333_333_333_4;
    cfg.crystal.gain_coefficient = 2.71e-3;
    cfg.analysis.region = Some(Region::new(3, 4, 20, 18).unwrap());
    cfg.synthesis.ordering = SamplingOrdering::Symmetric;
    save_config(&cfg, &path).unwrap();
    assert_eq!(load_config(&path).unwrap(), cfg);
}

#[test]
fn campaign_tables_have_one_row_per_frame() {
    let mut base = quick();
    base.analysis.source = AnalysisSource::Intensity;
    let mut spec = CampaignSpec::new(base, "pump.gain_peak", vec![0.0, 2.0, 3.0], 4);
    spec.seed_base = 5;
    let result = run_campaign(&spec).unwrap();
    // zero gain gives dark frames that cannot be analyzed
    assert!(result.rows.iter().any(|r| r.estimate.is_err()));
    assert!(!result.all_failed());
    let frames = result.frames_csv(&spec).unwrap();
    let data_lines = frames.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data_lines, 1 + 3 * 4);
    let agg = result.aggregate_csv(&spec).unwrap();
    let agg_lines = agg.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(agg_lines, 1 + 3);
}

#[test]
fn timestamp_line_is_the_only_difference() {
    let mut spec = CampaignSpec::new(quick(), "pump.waist_mm", vec![0.8, 1.0], 2);
    let plain = run_campaign(&spec).unwrap().frames_csv(&spec).unwrap();
    spec.timestamp = true;
    let stamped = run_campaign(&spec).unwrap().frames_csv(&spec).unwrap();
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| !l.starts_with("# generated_unix"))
            .map(str::to_string)
            .collect()
    };
    assert_ne!(plain, stamped);
    assert_eq!(strip(&plain), strip(&stamped));
}

#[test]
fn predict_report_lists_both_widths() {
    let report = predict(&ExperimentConfig::default()).unwrap();
    let text = report.to_text();
    assert!(text.contains("regime"));
    let csv = report.to_csv();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
}
