//! End-to-end tests of the `nisqsim` binary: every report must be
//! deterministic, machine formats must parse, and the golden timing
//! numbers must survive the CLI layer unchanged.

use nisqsim::qasm::parse_program;
use nisqsim::synth::qv_circuit;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nisqsim"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 report")
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = run(&[]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "stderr was: {err}");
}

#[test]
fn noise_reports_are_deterministic_and_parse_as_json() {
    let program = fixture("benchmarks/bell.qasm");
    let device = fixture("configs/uniform5.json");
    let args = [
        "noise",
        "--program",
        program.to_str().unwrap(),
        "--device",
        device.to_str().unwrap(),
        "--trials",
        "512",
        "--seed",
        "9",
        "--format",
        "json",
    ];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(first, second, "same invocation must print the same bytes");

    let doc: serde_json::Value = serde_json::from_str(&first).expect("valid json");
    assert_eq!(doc["params"]["command"], "noise");
    assert_eq!(doc["params"]["seed"], 9);
    let total: u64 = doc["distribution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["count"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 512, "counts must account for every trial");
}

#[test]
fn timing_preserves_the_golden_burst_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("burst.qasm");
    std::fs::write(
        &path,
        "qreg q[4];\ncreg c[4];\n\
         u(pi/2,0,pi) q[0];\nu(pi/2,0,pi) q[1];\nu(pi/2,0,pi) q[2];\n\
         u(pi,0,pi) q[3];\nu(pi/2,0,pi) q[3];\n",
    )
    .unwrap();
    let text = stdout_of(&[
        "timing",
        "--program",
        path.to_str().unwrap(),
        "--utilization",
        "0,20",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["total_time_ns"], 60.0);
    assert_eq!(doc["utilization"]["da_busy_fraction"], 1.0);
    assert_eq!(doc["utilization"]["da_peak_active"], 3);
}

#[test]
fn sweep_time_never_increases_with_more_channels() {
    let program = fixture("benchmarks/bv4.qasm");
    let text = stdout_of(&[
        "sweep",
        "--program",
        program.to_str().unwrap(),
        "--da-channels",
        "3,4,5,11,inf",
        "--format",
        "csv",
    ]);
    let times: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|line| line.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(times.len(), 5);
    assert!(times.windows(2).all(|w| w[1] <= w[0]), "times were {times:?}");
}

#[test]
fn encode_then_decode_reproduces_the_program() {
    let dir = tempfile::tempdir().unwrap();
    let source = fixture("benchmarks/mod15_mult7.qasm");
    let binary = dir.path().join("program.bin");
    let out = run(&[
        "encode",
        "--program",
        source.to_str().unwrap(),
        "--out",
        binary.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let decoded = stdout_of(&["decode", "--input", binary.to_str().unwrap()]);
    let original = parse_program(&std::fs::read_to_string(&source).unwrap()).unwrap();
    assert_eq!(decoded, original.to_string());
}

#[test]
fn synth_subcommand_matches_the_library_generator() {
    let text = stdout_of(&["synth", "--depth", "2", "--seed", "2"]);
    assert_eq!(text, qv_circuit(2, 2).to_string());
}

#[test]
fn out_flag_writes_exactly_the_stdout_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let program = fixture("benchmarks/bell.qasm");
    let base = [
        "noise",
        "--program",
        program.to_str().unwrap(),
        "--trials",
        "64",
        "--seed",
        "4",
    ];
    let printed = stdout_of(&base);
    let mut with_out = base.to_vec();
    with_out.extend(["--out", report.to_str().unwrap()]);
    let out = run(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "--out must route the report to the file");
    assert_eq!(std::fs::read_to_string(&report).unwrap(), printed);
}

#[test]
fn compare_normalizes_times_to_the_first_program() {
    let bv4 = fixture("benchmarks/bv4.qasm");
    let bv5 = fixture("benchmarks/bv5.qasm");

    // A program compared against itself must report ratios of exactly 1.
    let text = stdout_of(&["compare", bv4.to_str().unwrap(), bv4.to_str().unwrap(), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = doc["programs"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["ratio"], 1.0);
    assert_eq!(rows[1]["ratio_no_meas"], 1.0);

    // A wider variant of the same algorithm runs longer, and dropping the
    // measurements shortens both programs.
    let text = stdout_of(&["compare", bv4.to_str().unwrap(), bv5.to_str().unwrap(), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = doc["programs"].as_array().unwrap();
    assert_eq!(rows[0]["ratio"], 1.0);
    assert!(rows[1]["ratio"].as_f64().unwrap() > 1.0);
    for row in rows {
        assert!(
            row["time_no_meas_ns"].as_f64().unwrap() < row["time_ns"].as_f64().unwrap(),
            "row was: {row}"
        );
    }
}

#[test]
fn savings_confirms_engine_agreement() {
    let program = fixture("benchmarks/wstate3.qasm");
    let device = fixture("configs/uniform5.json");
    let text = stdout_of(&[
        "savings",
        "--program",
        program.to_str().unwrap(),
        "--device",
        device.to_str().unwrap(),
        "--trials",
        "256",
        "--seed",
        "5",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["identical_outcomes"], true);
    let point = &doc["points"].as_array().unwrap()[0];
    assert!(point["savings"].as_f64().unwrap() > 0.0);
    let normalized = point["normalized_matvec"].as_f64().unwrap();
    assert!(normalized > 0.0 && normalized < 1.0, "normalized was {normalized}");
}

#[test]
fn cosim_counts_active_reset_fires() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reset.qasm");
    std::fs::write(
        &path,
        "qreg q[1];\ncreg c[1];\nu(pi,0,pi) q[0];\nmeasure q[0] -> c[0];\n\
         if (c[0]==1) u(pi,0,pi) q[0];\nmeasure q[0] -> c[0];\n",
    )
    .unwrap();
    let text = stdout_of(&[
        "cosim",
        "--program",
        path.to_str().unwrap(),
        "--trials",
        "32",
        "--seed",
        "1",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    // A deterministically excited qubit triggers the correction on every
    // trial, after which the register reads zero.
    assert_eq!(doc["conditional_fires_total"], 32);
    let rows = doc["distribution"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["outcome"], "0");
    assert_eq!(rows[0]["count"], 32);
}
