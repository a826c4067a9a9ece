use std::path::PathBuf;
use std::process::{Command, Output};

use magnon_echo_cli::output::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magnon-echo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_threads(args: &[&str], threads: &str) -> Output {
    bin()
        .args(args)
        .env("MAGNON_ECHO_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

const SINGLE: &[&str] = &["--scenario", "echo-single", "--N", "200", "--t0", "0:3:0.25"];

#[test]
fn missing_scenario_is_a_usage_error() {
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario"));
}

#[test]
fn out_of_range_probability_names_the_key() {
    let o = run(&["--scenario", "echo-single", "--t0", "0:1:0.5", "--channel", "phase-flip", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`p`"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flag_and_unknown_config_key() {
    assert_eq!(run(&["--bogus", "1"]).status.code(), Some(2));
    let path = scratch("bad.ini");
    std::fs::write(&path, "scenario = echo-single\nt0 = 0:1:0.5\nbogus = 3\n").unwrap();
    let o = run(&["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn unknown_preset_and_bad_threads() {
    assert_eq!(run(&["--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(run_threads(SINGLE, "zero").status.code(), Some(2));
    assert_eq!(run_threads(SINGLE, "0").status.code(), Some(2));
}

#[test]
fn site_outside_finite_ring_is_rejected() {
    let o = run(&["--scenario", "echo-single", "--N", "10", "--m", "11", "--t0", "0:1:0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harper_needs_finite_ring() {
    let o = run(&["--scenario", "harper-echo", "--N", "inf", "--n", "0:5:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let one = run_threads(SINGLE, "1");
    let four = run_threads(SINGLE, "4");
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, run_threads(SINGLE, "1").stdout);
}

#[test]
fn config_line_echoes_settings() {
    let o = run(SINGLE);
    let text = stdout(&o);
    let config = text.lines().nth(1).unwrap();
    assert!(config.starts_with("# config:"));
    for kv in ["scenario=echo-single", "N=200", "t0=0:3:0.25"] {
        assert!(config.contains(kv), "{config}");
    }
}

#[test]
fn file_and_flags_merge_with_flags_winning() {
    let path = scratch("merge.ini");
    std::fs::write(&path, "# comment\nscenario = echo-single\nN = 200\nt0 = 0:3:0.25\nchannel = project-x\n").unwrap();
    let from_file = run(&["--config", path.to_str().unwrap(), "--channel", "project-z"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    let direct = run(SINGLE);
    assert_eq!(read_csv(&stdout(&from_file)).unwrap(), read_csv(&stdout(&direct)).unwrap());
}

#[test]
fn written_file_round_trips() {
    let path = scratch("out.csv");
    let mut args = SINGLE.to_vec();
    args.extend(["--output", path.to_str().unwrap()]);
    let o = run(&args);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let series = read_csv(&text).unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0].len(), 13);
    assert_eq!(series[0][0], vec![0.0, 0.5]);
    assert!(series[0].iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r[1])));
}

#[test]
fn equal_periods_reverse_to_unity() {
    let o = run(&["--preset", "fig5", "--tau2", "0.1", "--tau", "0.1", "--t", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let series = read_csv(&stdout(&o)).unwrap();
    assert_eq!(series.len(), 5);
    for rows in &series {
        assert!(!rows.is_empty());
        for r in rows {
            assert!((r[1] - 1.0).abs() < 1e-9, "{r:?}");
        }
    }
}

#[test]
fn oracle_agrees_with_analytic_single_echo() {
    let common = ["--N", "10", "--channel", "phase-flip", "--p", "0.3", "--t0", "0:4:0.5", "--m", "3"];
    let mut a = vec!["--scenario", "echo-single"];
    a.extend(common);
    let mut b = vec!["--scenario", "oracle"];
    b.extend(common);
    let analytic = read_csv(&stdout(&run(&a))).unwrap();
    let oracle = read_csv(&stdout(&run(&b))).unwrap();
    assert_eq!(analytic[0].len(), oracle[0].len());
    for (x, y) in analytic[0].iter().zip(&oracle[0]) {
        assert!((x[1] - y[1]).abs() < 1e-9, "{x:?} {y:?}");
    }
}

#[test]
fn green_dump_columns_are_normalized() {
    let o = run(&["--scenario", "harper-green", "--N", "40", "--n", "5", "--g", "1", "--tau", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = &read_csv(&stdout(&o)).unwrap()[0];
    assert_eq!(rows.len(), 40 * 6);
    for n in 0..=5 {
        let total: f64 = rows.iter().filter(|r| r[1] == n as f64).map(|r| r[4]).sum();
        assert!((total - 1.0).abs() < 1e-9, "n={n}: {total}");
    }
}
