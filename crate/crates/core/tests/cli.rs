//! The `ipc` binary: exit codes, CSV schema and replay.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ipc");
const HEADER: &str = "iter,data_passes,wall_seconds,f_value,g_value,oracle_Fgap_bound,stationarity_estimate";

fn ipc(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("IPC_OUTPUT_DIR")
        .output()
        .expect("binary starts")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn simple(output: &str, seed: u64) -> String {
    format!("problem = simple_example\nrho_hat = 6\nT = 5\nK = 2000\nseed = {seed}\noutput = {output}\n")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// rows without the wall-clock column
fn stable_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(2);
            cells.join(",")
        })
        .collect()
}

#[test]
fn run_writes_schema_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.cfg", &simple("a.csv", 3));
    write(dir.path(), "b.cfg", &simple("b.csv", 3));
    for cfg in ["a.cfg", "b.cfg"] {
        let o = ipc(dir.path(), &["run", cfg]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 1 + 6);
    let mut last_passes = -1.0;
    for (t, l) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert_eq!(cells[0].parse::<usize>().unwrap(), t);
        let passes: f64 = cells[1].parse().unwrap();
        assert!(passes >= last_passes);
        last_passes = passes;
        cells[3].parse::<f64>().unwrap();
    }
    assert_eq!(stable_rows(&dir.path().join("a.csv")), stable_rows(&dir.path().join("b.csv")));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    write(dir.path(), "c.cfg", &simple("c.csv", 1));
    let o = Command::new(BIN)
        .args(["run", "c.cfg"])
        .current_dir(dir.path())
        .env("IPC_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("c.csv").exists());
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn batch_runs_in_parallel_and_rejects_shared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.cfg", &simple("a.csv", 1));
    write(dir.path(), "b.cfg", &simple("b.csv", 2));
    write(dir.path(), "c.cfg", &simple("a.csv", 3));
    let o = ipc(dir.path(), &["run", "--jobs", "2", "a.cfg", "b.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("a.csv").exists() && dir.path().join("b.csv").exists());

    let o = ipc(dir.path(), &["run", "--jobs", "2", "a.cfg", "c.cfg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("another configuration"));
}

#[test]
fn every_error_path_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unknown.cfg", "problem = simple_example\nstepsize = 3\n");
    write(dir.path(), "both.cfg", "problem = simple_example\ndataset = x.svm\nmodel = fairness\n");
    write(dir.path(), "modulus.cfg", "problem = simple_example\nrho_hat = 2\n");
    write(dir.path(), "nodata.cfg", "dataset = missing.svm\nmodel = fairness\n");
    write(dir.path(), "infeasible.cfg", "problem = simple_example\nx0 = 1, 0\nT = 2\nK = 10\n");
    for cfg in ["unknown.cfg", "both.cfg", "modulus.cfg", "nodata.cfg", "infeasible.cfg", "absent.cfg"] {
        let o = ipc(dir.path(), &["run", cfg]);
        assert!(!o.status.success(), "{cfg} should fail");
        assert!(stderr(&o).starts_with("error:"), "{cfg}: {}", stderr(&o));
    }
    assert!(!dir.path().join("infeasible.csv").exists());
    let o = ipc(dir.path(), &["run"]);
    assert!(!o.status.success());
}

#[test]
fn feascheck_reports_both_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "vertex.cfg", "problem = simple_example\nx0 = 1, 0\n");
    write(dir.path(), "well.cfg", "problem = double_well\nepsilon = 0.1\n");
    let o = ipc(dir.path(), &["feascheck", "vertex.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status: feasible"));
    let o = ipc(dir.path(), &["feascheck", "well.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status: stationary_infeasible"));
}

#[test]
fn measure_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.cfg", "problem = simple_example\nrho_hat = 10\nmeter_eps = 0.05\n");
    write(dir.path(), "vertex.txt", "0, 1\n");
    let o = ipc(dir.path(), &["measure", "s.cfg", "--point", "vertex.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let d: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("distance_estimate: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(d < 0.05, "{out}");

    let o = ipc(dir.path(), &["validate", "s.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ipc(dir.path(), &["measure", "s.cfg", "--point", "absent.txt"]);
    assert!(!o.status.success());
}
