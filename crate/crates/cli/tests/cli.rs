use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn leveltrig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leveltrig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Drop the wall-clock column so two CSVs can be compared byte for byte.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| line.rsplit_once(',').map_or(line, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

const SMALL_SWEEP: &str = "n_grid = 1, 4\np_grid = 2, 8, inf\nruns = 300\nh = 1e-3\n";

#[test]
fn run_prints_one_csv_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n = 2\nrule = level\np = 2\nruns = 500\nh = 1e-3\n");
    let out = leveltrig(&["run", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n,p,delta,runs,h,estimator,mean_tau"));
    assert!(lines[0].ends_with("wall_time_s"));
    assert!(lines[1].starts_with("2,2,"));
}

#[test]
fn json_format_round_trips_through_fig1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let rows = dir.path().join("rows.json");
    let out = leveltrig(&["sweep", "--config", &cfg, "--format", "json", "--out", rows.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(&rows).unwrap();
    assert!(body.trim_start().starts_with('['));
    assert!(body.contains("\"mean_R4\""));

    let fig = leveltrig(&["fig1", "--input", rows.to_str().unwrap()]);
    assert_eq!(code(&fig), 0, "{}", String::from_utf8_lossy(&fig.stderr));
    let text = String::from_utf8(fig.stdout).unwrap();
    assert!(text.starts_with("p,n,ratio,ci_low,ci_high,closed_form"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn fig2_reports_unit_baseline_for_two_norm() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let rows = dir.path().join("rows.csv");
    assert_eq!(code(&leveltrig(&["sweep", "--config", &cfg, "--out", rows.to_str().unwrap()])), 0);
    let fig_path = dir.path().join("fig2.csv");
    let fig = leveltrig(&["fig2", "--input", rows.to_str().unwrap(), "--out", fig_path.to_str().unwrap()]);
    assert_eq!(code(&fig), 0);
    let text = fs::read_to_string(fig_path).unwrap();
    assert!(text.starts_with("p,n,ratio_vs_2norm,combined_ci_low,combined_ci_high"));
    let two: Vec<_> = text.lines().filter(|l| l.starts_with("2,")).collect();
    assert_eq!(two.len(), 2);
    for line in two {
        let fields: Vec<f64> = line.split(',').skip(2).map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![1.0, 1.0, 1.0]);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let one = leveltrig(&["sweep", "--config", &cfg, "--threads", "1"]);
    let four = leveltrig(&["sweep", "--config", &cfg, "--threads", "4"]);
    assert_eq!(code(&one), 0);
    assert_eq!(code(&four), 0);
    let (a, b) = (String::from_utf8(one.stdout).unwrap(), String::from_utf8(four.stdout).unwrap());
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
}

#[test]
fn seed_override_changes_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n = 3\np = inf\nruns = 200\nh = 1e-3\n");
    let a = leveltrig(&["run", "--config", &cfg, "--seed", "1"]);
    let b = leveltrig(&["run", "--config", &cfg, "--seed", "2"]);
    let c = leveltrig(&["run", "--config", &cfg, "--seed", "1"]);
    let (a, b, c) = (
        without_wall_time(&String::from_utf8(a.stdout).unwrap()),
        without_wall_time(&String::from_utf8(b.stdout).unwrap()),
        without_wall_time(&String::from_utf8(c.stdout).unwrap()),
    );
    assert_ne!(a, b);
    assert_eq!(a, c);
}

#[test]
fn invalid_config_exits_with_one_and_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "n = 2\nh = -1\n");
    let out = leveltrig(&["run", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("h"), "{err}");

    let unknown = write(dir.path(), "unknown.cfg", "n = 2\nbogus = 1\n");
    let out = leveltrig(&["run", "--config", &unknown]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("bogus"));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(code(&leveltrig(&["run", "--runs", "many"])), 1);
    assert_eq!(code(&leveltrig(&["run", "--threads", "0", "--runs", "10"])), 1);
    assert_eq!(code(&leveltrig(&["frobnicate"])), 1);
}

#[test]
fn truncated_run_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "short.cfg", "n = 2\np = 2\nruns = 10\nh = 1e-3\nmax_steps = 1\n");
    let out = leveltrig(&["run", "--config", &cfg]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_files_exit_with_three() {
    assert_eq!(code(&leveltrig(&["run", "--config", "/nonexistent/run.cfg"])), 3);
    assert_eq!(code(&leveltrig(&["fig1", "--input", "/nonexistent/rows.csv"])), 3);
}

#[test]
fn fig2_without_baseline_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", "n_grid = 3\np_grid = inf\nruns = 100\nh = 1e-3\n");
    let rows = dir.path().join("rows.csv");
    assert_eq!(code(&leveltrig(&["sweep", "--config", &cfg, "--out", rows.to_str().unwrap()])), 0);
    let out = leveltrig(&["fig2", "--input", rows.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("n=3"));
}

#[test]
fn check_subcommand_passes() {
    let out = leveltrig(&["check"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}
