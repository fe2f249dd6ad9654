use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdc-speckle"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const QUICK: &[&str] = &[
    "--set",
    "synthesis.grid=64",
    "--set",
    "synthesis.oversample=2",
    "--set",
    "detector.focal_mm=400",
    "--set",
    "synthesis.modes_min=20",
    "--set",
    "synthesis.modes_max=40",
    "--set",
    "analysis.max_disp=5",
];

fn with_quick<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(QUICK).chain(tail).copied().collect()
}

#[test]
fn predict_prints_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["predict", "--out", "p"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("radius_pixels"));
    let csv = std::fs::read_to_string(dir.path().join("p/predict.csv")).unwrap();
    assert!(csv.starts_with("delta_q_gauss_rad_per_m,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["predict", "--set", "pump.waist_mm=-1"]);
    assert_eq!(code(&o), 2);
    std::fs::write(dir.path().join("bad.conf"), "pump.waist_mm = 1\nnot a line\n").unwrap();
    let o = run(dir.path(), &["predict", "--config", "bad.conf"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = run(dir.path(), &["campaign", "--sweep", "pump.waist_mm"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["predict", "--config", "missing.conf"]);
    assert_eq!(code(&o), 3);
    std::fs::write(dir.path().join("junk.pgm"), b"P5\n4 4\n65535\n\x00\x01").unwrap();
    let o = run(dir.path(), &["analyze", "junk.pgm"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sim = with_quick(
        &["simulate"],
        &["--set", "pump.gain_peak=5", "--seed", "40", "--frames", "3", "--out", "f"],
    );
    let o = run(dir.path(), &sim);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for s in 40..43 {
        assert!(dir.path().join(format!("f/frame_{s}.pgm")).exists());
        assert!(dir.path().join(format!("f/frame_{s}.pgm.meta")).exists());
    }
    let ana = with_quick(&["analyze"], &["--out", "a", "f/frame_40.pgm", "f/frame_41.pgm"]);
    let o = run(dir.path(), &ana);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("a/analysis.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().nth(1).unwrap().starts_with("f/frame_40.pgm,40,"));
}

#[test]
fn dark_frames_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let sim = with_quick(
        &["simulate"],
        &["--set", "pump.gain_peak=0", "--set", "detector.read_noise=0", "--out", "d"],
    );
    assert_eq!(code(&run(dir.path(), &sim)), 0);
    let o = run(dir.path(), &with_quick(&["analyze"], &["d/frame_0.pgm"]));
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("degenerate_map"));
}

#[test]
fn campaign_is_reproducible_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        with_quick(
            &["campaign"],
            &[
                "--set",
                "analysis.source=intensity",
                "--sweep",
                "pump.gain_peak=2,3",
                "--frames",
                "2",
                "--seed",
                "7",
                "--no-timestamp",
                "--out",
                out,
            ],
        )
    };
    for out in ["c1", "c2"] {
        let o = run(dir.path(), &args(out));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["frames.csv", "aggregate.csv"] {
        let a = std::fs::read(dir.path().join("c1").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("c2").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let frames = std::fs::read_to_string(dir.path().join("c1/frames.csv")).unwrap();
    assert_eq!(frames.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(frames.contains("# seed_base = 7"));
}

#[test]
fn fit_reads_named_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("# comment\nlabel,g,r\n");
    for i in 0..5 {
        let g = 0.5 * i as f64;
        table.push_str(&format!("p{i},{g},{}\n", 0.6 * g + 2.0));
    }
    table.push_str("bad,,\n");
    std::fs::write(dir.path().join("t.csv"), table).unwrap();
    let o = run(dir.path(), &["fit", "--model", "linear", "--input", "t.csv", "--x", "g", "--y", "r"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("slope = 0.6"), "{out}");
    assert!(out.contains("points = 5"));

    let mut table = String::from("a,n\n");
    for i in 1..=6 {
        let a = 100.0 * i as f64;
        table.push_str(&format!("{a},{}\n", 3.0 * (2e-3 * a).sinh().powi(2)));
    }
    std::fs::write(dir.path().join("s.csv"), table).unwrap();
    let o = run(dir.path(), &["fit", "--model", "sinh2", "--input", "s.csv", "--k", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let sigma: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("sigma = "))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .expect("sigma line");
    assert!((sigma / 2e-3 - 1.0).abs() < 1e-9, "{out}");

    let o = run(dir.path(), &["fit", "--model", "linear", "--input", "t.csv", "--x", "nope"]);
    assert_eq!(code(&o), 2);
}
