use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use l0lms_cli::table::Table;
use l0lms_cli::RunManifest;

fn l0lms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l0lms"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("L0LMS_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

fn is_17_digit(cell: &str) -> bool {
    let (mantissa, exp) = cell.split_once('e').unwrap_or(("", ""));
    let digits = mantissa.trim_start_matches('-');
    digits.len() == 18
        && digits.as_bytes()[1] == b'.'
        && digits.chars().filter(char::is_ascii_digit).count() == 17
        && exp.parse::<i32>().is_ok()
}

fn write_two_col(path: &Path, key: &str, rows: &[(f64, f64)]) {
    let mut s = format!("{key},msd\n");
    for (k, v) in rows {
        s.push_str(&format!("{k:e},{v:e}\n"));
    }
    fs::write(path, s).unwrap();
}

const SMALL_SPEC: &str = r#"{
  "L": 32,
  "Q": 4,
  "mu": 0.01,
  "alpha": 10,
  "kappa": [0, 1e-5],
  "snr_db": 40,
  "trials": 3,
  "iterations": 2000,
  "seed": 5,
  "variants": ["LMS", "L0LMS"]
}"#;

#[test]
fn unknown_preset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = l0lms(&["experiment", "--preset", "exp9", "--out", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown preset"), "{}", stderr(&o));
}

#[test]
fn exp1_theory_marks_kappa_opt() {
    let dir = tempfile::tempdir().unwrap();
    let o = l0lms(&["theory", "--preset", "exp1", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        csv_files(dir.path()),
        ["exp1_20dB_kappa_sweep.csv", "exp1_40dB_kappa_sweep.csv"]
    );
    let t = Table::read(&dir.path().join("exp1_40dB_kappa_sweep.csv")).unwrap();
    assert_eq!(
        t.header[..4],
        ["kappa", "msd_theory", "msd_sim", "msd_sim_ci"]
    );
    let marker = t.column("kappa_opt_marker").unwrap();
    let marked: Vec<&Vec<String>> = t.rows.iter().filter(|r| r[marker] == "1").collect();
    assert_eq!(marked.len(), 1);
    let kopt: f64 = marked[0][0].parse().unwrap();
    assert!((kopt / 3.75e-7 - 1.0).abs() < 0.1, "kappa_opt {kopt}");
    // the marked point is the minimum of the theory column
    let theory: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let best = theory.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(marked[0][1].parse::<f64>().unwrap(), best);
    let first: f64 = t.rows[0][0].parse().unwrap();
    let last: f64 = t.rows.last().unwrap()[0].parse().unwrap();
    assert_eq!((first, last), (1e-9, 3e-6));
    for r in &t.rows {
        assert!(is_17_digit(&r[0]) && is_17_digit(&r[1]), "{r:?}");
        assert!(r[2].is_empty() && r[3].is_empty());
    }
}

#[test]
fn exp3_scaled_keeps_schema_at_quarter_length() {
    let full = tempfile::tempdir().unwrap();
    let o = l0lms(&["theory", "--preset", "exp3", "--out", p(full.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let o = l0lms(&[
        "experiment",
        "--preset",
        "exp3",
        "--scale",
        "0.25",
        "--trials",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let name = "exp3_40dB_q_sweep.csv";
    let a = Table::read(&full.path().join(name)).unwrap();
    let b = Table::read(&dir.path().join(name)).unwrap();
    assert_eq!(a.header, b.header);
    assert_eq!(a.rows.len(), b.rows.len());
    let m = RunManifest::load(&dir.path().join("exp3_manifest.json")).unwrap();
    assert!(m.specs.iter().all(|s| s.len == 250 && s.trials == 3));
    assert_eq!(m.options.scale, 0.25);
    let q: Vec<f64> = b.rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(q.last(), Some(&250.0));
    assert!(q.windows(2).all(|w| w[0] < w[1]));
    for r in &b.rows {
        assert!(
            !r[1].is_empty() && !r[2].is_empty() && !r[3].is_empty(),
            "{r:?}"
        );
    }
}

#[test]
fn exp1_scaled_simulation_matches_theory_within_1db() {
    let dir = tempfile::tempdir().unwrap();
    let o = l0lms(&[
        "experiment",
        "--preset",
        "exp1",
        "--scale",
        "0.25",
        "--trials",
        "8",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = dir.path().join("exp1_40dB_kappa_sweep.csv");
    let o = l0lms(&["compare", p(&f), p(&f), "--tolerance-db", "1"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn compare_identical_files_gives_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.csv");
    write_two_col(&f, "kappa", &[(1e-9, 1e-3), (1e-8, 8e-4), (1e-7, 5e-4)]);
    let o = l0lms(&["compare", p(&f), p(&f), "--tolerance-db", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("max |gap| 0.0000 dB"), "{out}");
    assert_eq!(out.matches("    0.0000\n").count(), 3, "{out}");
}

#[test]
fn compare_doubled_simulation_is_three_db() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [(0.0, 100.0), (10.0, 10.0), (20.0, 1e-3)];
    let t = dir.path().join("theory.csv");
    let s = dir.path().join("sim.csv");
    write_two_col(&t, "n", &rows);
    write_two_col(&s, "n", &rows.map(|(k, v)| (k, 2.0 * v)));
    let o = l0lms(&["compare", p(&t), p(&s), "--tolerance-db", "1"]);
    assert_eq!(code(&o), 3);
    assert_eq!(
        stdout(&o).matches("    3.0103\n").count(),
        3,
        "{}",
        stdout(&o)
    );
    let o = l0lms(&["compare", p(&t), p(&s), "--tolerance-db", "3.02"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn compare_grid_mismatch_lists_missing_points() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("theory.csv");
    let s = dir.path().join("sim.csv");
    write_two_col(&t, "Q", &[(50.0, 1.0), (100.0, 2.0)]);
    write_two_col(&s, "Q", &[(50.0, 1.0), (200.0, 2.0)]);
    let o = l0lms(&["compare", p(&t), p(&s)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("grid mismatch"), "{err}");
    assert!(err.contains("missing from simulation: 1e2"), "{err}");
    assert!(err.contains("missing from theory: 2e2"), "{err}");
}

#[test]
fn manifest_lists_outputs_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = l0lms(&[
        "theory",
        "--preset",
        "exp4",
        "--scale",
        "0.25",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("exp4_manifest.json");
    let text = fs::read_to_string(&path).unwrap();
    let m = RunManifest::from_json(&text).unwrap();
    assert_eq!(m, RunManifest::from_json(&m.to_json()).unwrap());
    assert_eq!(
        m.to_json(),
        RunManifest::from_json(&m.to_json()).unwrap().to_json()
    );
    let mut listed = m.outputs.clone();
    listed.sort();
    assert_eq!(listed, csv_files(dir.path()));
    assert_eq!(listed.len(), 8);
    assert_eq!(m.options.preset.as_deref(), Some("exp4"));
    assert!(m.resolved.iter().all(|r| r.point.signal.pv > 0.0));
    assert!(m
        .resolved
        .iter()
        .filter(|r| r.point.params.variant == sparse_lms::algorithms::Variant::L0Lms)
        .all(|r| r.point.kappa_opt.is_some()));
    let c = Table::read(&dir.path().join("exp4_40dB_curve_l0lms_kappa1x.csv")).unwrap();
    assert_eq!(
        c.header,
        ["n", "msd_theory", "msd_sim", "msd_theory_db", "msd_sim_db"]
    );
    for r in &c.rows {
        let (_, frac) = r[3].split_once('.').unwrap();
        assert_eq!(frac.len(), 4, "{r:?}");
    }
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL_SPEC).unwrap();
    let first = dir.path().join("first");
    let o = l0lms(&["experiment", "--config", p(&cfg), "--out", p(&first)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files = csv_files(&first);
    assert!(
        files.contains(&"small_40dB_steady_l0lms.csv".to_string()),
        "{files:?}"
    );
    assert!(
        files.contains(&"small_40dB_curve_lms_0.csv".to_string()),
        "{files:?}"
    );

    let second = dir.path().join("second");
    let manifest = first.join("small_manifest.json");
    let o = l0lms(&["experiment", "--config", p(&manifest), "--out", p(&second)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(files, csv_files(&second));
    for f in &files {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn modes_fill_their_own_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL_SPEC).unwrap();
    for (mode, theory, sim) in [("theory", true, false), ("simulate", false, true)] {
        let out = dir.path().join(mode);
        let o = l0lms(&[mode, "--config", p(&cfg), "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let t = Table::read(&out.join("small_40dB_steady_l0lms.csv")).unwrap();
        assert_eq!(t.header[0], "kappa");
        for r in &t.rows {
            assert_eq!(!r[1].is_empty(), theory, "{mode}: {r:?}");
            assert_eq!(!r[2].is_empty(), sim, "{mode}: {r:?}");
        }
    }
}

#[test]
fn step_size_sweep_is_keyed_on_mu() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("steps.json");
    fs::write(
        &cfg,
        SMALL_SPEC
            .replace("\"mu\": 0.01", "\"mu\": [0.005, 0.01]")
            .replace("[0, 1e-5]", "\"OPTIMAL\""),
    )
    .unwrap();
    let o = l0lms(&["theory", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&dir.path().join("steps_40dB_steady_l0lms.csv")).unwrap();
    assert_eq!(t.header[0], "mu");
    assert_eq!(t.header.iter().filter(|h| *h == "mu").count(), 1);
    let keys: Vec<f64> = t.rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(keys, [0.005, 0.01]);
}

#[test]
fn seed_override_changes_simulation_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL_SPEC).unwrap();
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        let o = l0lms(&[
            "experiment",
            "--config",
            p(&cfg),
            "--seed",
            seed,
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        Table::read(&out.join("small_40dB_steady_lms.csv")).unwrap()
    };
    let (a, b) = (read("1"), read("2"));
    assert_eq!(a.rows[0][1], b.rows[0][1]);
    assert_ne!(a.rows[0][2], b.rows[0][2]);
}

#[test]
fn config_errors_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, SMALL_SPEC.replacen("\"mu\"", "\"mu_typo\"", 1)).unwrap();
    let o = l0lms(&["experiment", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("mu_typo"), "{err}");

    fs::write(&cfg, SMALL_SPEC.replacen("\"Q\": 4", "\"Q\": 40", 1)).unwrap();
    let o = l0lms(&["experiment", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("exceeds length"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unstable.json");
    // mu_max = 2 / (L + 2) = 0.111 for L = 16
    let spec = SMALL_SPEC.replacen("\"L\": 32", "\"L\": 16", 1).replacen(
        "\"mu\": 0.01",
        "\"mu\": 0.125",
        1,
    );
    fs::write(&cfg, spec).unwrap();
    let o = l0lms(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    assert!(dir.path().join("unstable_manifest.json").exists());
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out: PathBuf = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_l0lms"))
        .args(["theory", "--preset", "exp3"])
        .env("RUST_LOG", "error")
        .env("L0LMS_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_files(&out), ["exp3_40dB_q_sweep.csv"]);
}

#[test]
fn unwritable_output_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = l0lms(&[
        "theory",
        "--preset",
        "exp1",
        "--out",
        p(&blocker.join("sub")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not writable"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_with_code_1() {
    assert_eq!(code(&l0lms(&["experiment", "--scale", "abc"])), 1);
    assert_eq!(code(&l0lms(&["experiment"])), 1);
    let o = l0lms(&["theory", "--preset", "exp1", "--config", "x.json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&l0lms(&["--help"])), 0);
}
