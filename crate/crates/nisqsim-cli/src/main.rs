//! Command-line front end: Monte-Carlo noisy runs, control-system timing,
//! co-simulation, channel sweeps, engine-savings reports, side-by-side
//! program timing, binary program files and benchmark synthesis.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nisqsim::control::{
    channel_sweep, critical_path_ps, simulate, strip_measurements, utilization, ChannelCount,
    ConstantOutcomes, ControlConfig,
};
use nisqsim::cosim::{cosimulate, CosimOptions};
use nisqsim::encode::{read_program_file, write_program_file};
use nisqsim::layer::{build_layers, LayeredCircuit};
use nisqsim::mc::{
    exact_noisy_oracle, fidelity, generate_traces, noiseless_distribution, run_bruteforce,
    run_optimized, run_unordered, savings, OutputDistribution, Reference, RunResult,
    ORACLE_MAX_POSITIONS,
};
use nisqsim::noise::{validate_against_device, DeviceErrorModel};
use nisqsim::program::{Instruction, Program};
use nisqsim::qasm::parse_program;
use nisqsim::synth::qv_circuit;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "nisqsim",
    version,
    about = "Noisy Monte-Carlo simulation and control-system timing for small quantum programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Optimized,
    Brute,
    Unordered,
}

impl EngineKind {
    fn name(self) -> &'static str {
        match self {
            EngineKind::Optimized => "optimized",
            EngineKind::Brute => "brute",
            EngineKind::Unordered => "unordered",
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ControlArgs {
    /// Control-system config JSON.
    #[arg(long, conflicts_with = "preset")]
    control: Option<PathBuf>,
    /// Built-in control profile (qcb-baseline, ibm-experimental).
    #[arg(long)]
    preset: Option<String>,
}

impl ControlArgs {
    fn resolve(&self) -> Result<(ControlConfig, String)> {
        if let Some(path) = &self.control {
            let cfg = ControlConfig::load(path)
                .with_context(|| format!("loading control config {}", path.display()))?;
            return Ok((cfg, path.display().to_string()));
        }
        if let Some(name) = &self.preset {
            let cfg = ControlConfig::preset(name)
                .ok_or_else(|| anyhow!("unknown preset {name:?} (try qcb-baseline)"))?;
            return Ok((cfg, format!("preset:{name}")));
        }
        Ok((ControlConfig::qcb_baseline(), "preset:qcb-baseline".into()))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte-Carlo noisy simulation of a program.
    Noise {
        #[arg(long)]
        program: PathBuf,
        /// Device error model JSON (default: noiseless).
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = EngineKind::Optimized)]
        engine: EngineKind,
        /// Also compute the exact noisy distribution (small circuits only).
        #[arg(long)]
        oracle: bool,
        /// Score the run against this expected outcome (binary, bit 0 rightmost).
        #[arg(long)]
        expect: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Schedule a program on the control system and report latencies.
    Timing {
        #[arg(long)]
        program: PathBuf,
        #[command(flatten)]
        control: ControlArgs,
        /// Also report channel occupancy over `START,END` (ns).
        #[arg(long)]
        utilization: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Joint noisy-state and timing simulation.
    Cosim {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        device: Option<PathBuf>,
        #[command(flatten)]
        control: ControlArgs,
        #[arg(long, default_value_t = 1024)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Basis state the qubits start in.
        #[arg(long, default_value_t = 0)]
        initial: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Total time as a function of the DA channel pool size.
    Sweep {
        #[arg(long)]
        program: PathBuf,
        #[command(flatten)]
        control: ControlArgs,
        /// Comma-separated pool sizes, e.g. `3,11,inf`.
        #[arg(long, default_value = "3,11,inf")]
        da_channels: String,
        /// Strip measurements (and conditionals) first.
        #[arg(long)]
        no_measure: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Time two or more program variants side by side under one controller
    /// profile, with and without their measurement instructions.
    Compare {
        /// Program files; ratios are normalized to the first one.
        #[arg(required = true, num_args = 2..)]
        programs: Vec<PathBuf>,
        #[command(flatten)]
        control: ControlArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Matrix-work savings of the optimized engine at several trial counts,
    /// verifying at each count that both engines agree bit for bit.
    Savings {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        device: Option<PathBuf>,
        /// Comma-separated trial counts.
        #[arg(long, default_value = "1024,8192")]
        trials: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Assemble a program into the binary word format.
    Encode {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Disassemble a binary program file back to source.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a volume-style benchmark circuit.
    Synth {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Noise { program, device, trials, seed, engine, oracle, expect, output } => {
            cmd_noise(&program, device.as_deref(), trials, seed, engine, oracle, expect, &output)
        }
        Cmd::Timing { program, control, utilization, output } => {
            cmd_timing(&program, &control, utilization, &output)
        }
        Cmd::Cosim { program, device, control, trials, seed, initial, output } => {
            cmd_cosim(&program, device.as_deref(), &control, trials, seed, initial, &output)
        }
        Cmd::Sweep { program, control, da_channels, no_measure, output } => {
            cmd_sweep(&program, &control, &da_channels, no_measure, &output)
        }
        Cmd::Compare { programs, control, output } => cmd_compare(&programs, &control, &output),
        Cmd::Savings { program, device, trials, seed, output } => {
            cmd_savings(&program, device.as_deref(), &trials, seed, &output)
        }
        Cmd::Encode { program, out } => cmd_encode(&program, &out),
        Cmd::Decode { input, out } => cmd_decode(&input, out.as_deref()),
        Cmd::Synth { depth, seed, out } => cmd_synth(depth, seed, out.as_deref()),
    }
}

// ---------------------------------------------------------------- helpers

fn load_program(path: &Path) -> Result<Program> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading program {}", path.display()))?;
    parse_program(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_device(path: Option<&Path>, qubits: usize) -> Result<(DeviceErrorModel, String)> {
    match path {
        Some(p) => {
            let m = DeviceErrorModel::load(p)
                .with_context(|| format!("loading device model {}", p.display()))?;
            Ok((m, p.display().to_string()))
        }
        None => Ok((DeviceErrorModel::noiseless(qubits), "noiseless".into())),
    }
}

fn layered(program: &Program) -> Result<LayeredCircuit> {
    build_layers(program).map_err(|e| anyhow!("{e}"))
}

/// Write the finished report in one shot, or print it.
fn emit(report: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, report)
            .with_context(|| format!("writing report {}", path.display())),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

/// Outcome words print as binary with classical bit 0 rightmost.
fn bits(word: u64, cbits: usize) -> String {
    (0..cbits.max(1)).rev().map(|i| if word >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(text: &str) -> Result<u64> {
    u64::from_str_radix(text, 2).with_context(|| format!("bad outcome string {text:?}"))
}

fn describe(instr: &Instruction) -> String {
    match instr {
        Instruction::U { theta, phi, lambda, qubit } => {
            format!("u({theta:.4},{phi:.4},{lambda:.4}) q{qubit}")
        }
        Instruction::Cx { control, target } => format!("cx q{control},q{target}"),
        Instruction::Measure { qubit, cbit } => format!("measure q{qubit} -> c{cbit}"),
        Instruction::Reset { qubit } => format!("reset q{qubit}"),
        Instruction::If { cbit, value, inner } => {
            format!("if (c{cbit}=={value}) {}", describe(inner))
        }
        Instruction::Wait { cycles } => format!("wait {cycles}"),
    }
}

fn distribution_json(d: &OutputDistribution) -> Value {
    let rows: Vec<Value> = d
        .counts()
        .map(|(word, count)| {
            json!({
                "outcome": bits(word, d.cbits()),
                "count": count,
                "probability": count as f64 / d.trials() as f64,
            })
        })
        .collect();
    json!(rows)
}

fn distribution_text(d: &OutputDistribution, f: &mut String) {
    let _ = writeln!(f, "{:<12} {:>10} {:>12}", "outcome", "count", "probability");
    for (word, count) in d.counts() {
        let _ = writeln!(
            f,
            "{:<12} {:>10} {:>12.6}",
            bits(word, d.cbits()),
            count,
            count as f64 / d.trials() as f64
        );
    }
}

fn distribution_csv(d: &OutputDistribution) -> String {
    let mut f = String::from("outcome,count,probability\n");
    for (word, count) in d.counts() {
        let _ = writeln!(
            f,
            "{},{},{}",
            bits(word, d.cbits()),
            count,
            count as f64 / d.trials() as f64
        );
    }
    f
}

fn run_engine(kind: EngineKind, ts: &nisqsim::mc::TraceSet) -> Result<RunResult> {
    let run = match kind {
        EngineKind::Optimized => run_optimized(ts),
        EngineKind::Brute => run_bruteforce(ts),
        EngineKind::Unordered => run_unordered(ts),
    }?;
    Ok(run)
}

// ------------------------------------------------------------------ noise

#[allow(clippy::too_many_arguments)]
fn cmd_noise(
    program_path: &Path,
    device_path: Option<&Path>,
    trials: u64,
    seed: u64,
    engine: EngineKind,
    oracle: bool,
    expect: Option<String>,
    output: &OutputArgs,
) -> Result<()> {
    let program = load_program(program_path)?;
    let (device, device_name) = load_device(device_path, program.qubits())?;
    for v in validate_against_device(&program, &device) {
        eprintln!("warning: instruction {}: {}", v.instr_index, v.message);
    }
    let circuit = layered(&program)?;
    let ts = generate_traces(&circuit, &device, trials, seed)?;
    let run = run_engine(engine, &ts)?;

    let ideal = noiseless_distribution(&circuit).ok();
    let score = match (&expect, &ideal) {
        (Some(text), _) => Some(fidelity(&run.distribution, &Reference::Bitstring(parse_bits(text)?))),
        (None, Some(ideal)) => Some(fidelity(&run.distribution, &Reference::Distribution(ideal))),
        (None, None) => None,
    };
    let exact = if oracle { Some(exact_noisy_oracle(&circuit, &device)?) } else { None };

    let (u, cx, m) = program.gate_counts();
    let params = json!({
        "command": "noise",
        "program": program_path.display().to_string(),
        "device": device_name,
        "trials": trials,
        "seed": seed,
        "engine": engine.name(),
    });
    let mut doc = json!({
        "params": params,
        "program_summary": {
            "qubits": program.qubits(), "cbits": program.cbits(),
            "u": u, "cx": cx, "measure": m,
        },
        "distribution": distribution_json(&run.distribution),
        "metrics": {
            "trials": run.metrics.trials,
            "matvec_count": run.metrics.matvec_count,
            "msv_peak": run.metrics.msv_peak,
        },
    });
    if let Some(s) = &score {
        doc["fidelity"] = json!({ "fidelity": s.fidelity, "tvd": s.tvd });
    }
    if let Some(exact) = &exact {
        let rows: Vec<Value> = exact
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(word, &p)| json!({ "outcome": bits(word as u64, program.cbits()), "probability": p }))
            .collect();
        let max_err = exact
            .iter()
            .enumerate()
            .map(|(w, &p)| (run.distribution.probability(w as u64) - p).abs())
            .fold(0.0, f64::max);
        doc["oracle"] = json!({ "distribution": rows, "max_abs_error": max_err });
    }

    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => distribution_csv(&run.distribution),
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: noise");
            let _ = writeln!(
                f,
                "program: {} ({} qubits, {} cbits, {u} u / {cx} cx / {m} measure)",
                program_path.display(),
                program.qubits(),
                program.cbits()
            );
            let _ = writeln!(f, "device: {device_name}");
            let _ = writeln!(f, "engine: {}  trials: {trials}  seed: {seed}", engine.name());
            let _ = writeln!(f);
            distribution_text(&run.distribution, &mut f);
            let _ = writeln!(f);
            let _ = writeln!(f, "matvec_count: {}", run.metrics.matvec_count);
            let _ = writeln!(f, "msv_peak: {}", run.metrics.msv_peak);
            if let Some(s) = &score {
                match (&expect, s.tvd) {
                    (Some(e), _) => {
                        let _ = writeln!(f, "fidelity vs {e}: {:.6}", s.fidelity);
                    }
                    (None, Some(tvd)) => {
                        let _ = writeln!(
                            f,
                            "fidelity vs ideal support: {:.6}  (tvd {:.6})",
                            s.fidelity, tvd
                        );
                    }
                    (None, None) => {
                        let _ = writeln!(f, "fidelity: {:.6}", s.fidelity);
                    }
                }
            }
            if let Some(exact) = &exact {
                let _ = writeln!(f);
                let _ = writeln!(f, "exact distribution (≤{ORACLE_MAX_POSITIONS} error positions):");
                for (word, &p) in exact.iter().enumerate() {
                    if p > 0.0 {
                        let _ = writeln!(f, "{:<12} {:>12.6}", bits(word as u64, program.cbits()), p);
                    }
                }
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ----------------------------------------------------------------- timing

fn cmd_timing(
    program_path: &Path,
    control: &ControlArgs,
    util_window: Option<String>,
    output: &OutputArgs,
) -> Result<()> {
    let program = load_program(program_path)?;
    let (cfg, cfg_name) = control.resolve()?;
    let stats = simulate(&program, &cfg, &mut ConstantOutcomes(0))?;
    let window = match &util_window {
        Some(text) => {
            let (a, b) = text
                .split_once(',')
                .ok_or_else(|| anyhow!("--utilization wants START,END in ns"))?;
            Some((a.trim().parse::<f64>()?, b.trim().parse::<f64>()?))
        }
        None => None,
    };
    let util = window.map(|(a, b)| utilization(&stats, &cfg, a, b));

    let params = json!({
        "command": "timing",
        "program": program_path.display().to_string(),
        "control": cfg_name,
    });
    let records: Vec<Value> = stats
        .records
        .iter()
        .map(|r| {
            json!({
                "instr": r.instr_index,
                "text": describe(&program.instructions()[r.instr_index]),
                "dispatch_ns": r.dispatch_ps as f64 / 1000.0,
                "start_ns": r.start_ps as f64 / 1000.0,
                "end_ns": r.end_ps as f64 / 1000.0,
                "da": r.da, "ad": r.ad,
                "executed": r.executed,
            })
        })
        .collect();
    let mut doc = json!({
        "params": params,
        "total_time_ns": stats.total_time_ns(),
        "critical_path_ns": critical_path_ps(&program, &cfg) as f64 / 1000.0,
        "da_channels_used": stats.da_channels_used,
        "ad_channels_used": stats.ad_channels_used,
        "records": records,
        "warnings": stats.warnings,
    });
    if let Some(u) = &util {
        doc["utilization"] = serde_json::to_value(u)?;
    }

    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut f = String::from("instr,text,dispatch_ns,start_ns,end_ns,da,ad,executed\n");
            for r in &stats.records {
                let _ = writeln!(
                    f,
                    "{},{},{},{},{},{},{},{}",
                    r.instr_index,
                    describe(&program.instructions()[r.instr_index]).replace(',', ";"),
                    r.dispatch_ps as f64 / 1000.0,
                    r.start_ps as f64 / 1000.0,
                    r.end_ps as f64 / 1000.0,
                    r.da.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
                    r.ad.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
                    r.executed
                );
            }
            f
        }
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: timing");
            let _ = writeln!(f, "program: {}", program_path.display());
            let _ = writeln!(f, "control: {cfg_name}");
            let _ = writeln!(f);
            let _ = writeln!(
                f,
                "{:>5}  {:<28} {:>10} {:>10} {:>10}  {:<8} {:<5} run",
                "#", "instruction", "dispatch", "start", "end", "da", "ad"
            );
            for r in &stats.records {
                let _ = writeln!(
                    f,
                    "{:>5}  {:<28} {:>10.1} {:>10.1} {:>10.1}  {:<8} {:<5} {}",
                    r.instr_index,
                    describe(&program.instructions()[r.instr_index]),
                    r.dispatch_ps as f64 / 1000.0,
                    r.start_ps as f64 / 1000.0,
                    r.end_ps as f64 / 1000.0,
                    r.da.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("+"),
                    r.ad.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("+"),
                    if r.executed { "yes" } else { "skip" }
                );
            }
            let _ = writeln!(f);
            let _ = writeln!(f, "total_time_ns: {}", stats.total_time_ns());
            let _ = writeln!(
                f,
                "critical_path_ns: {}",
                critical_path_ps(&program, &cfg) as f64 / 1000.0
            );
            let _ = writeln!(
                f,
                "channels used: {} da, {} ad",
                stats.da_channels_used, stats.ad_channels_used
            );
            if let Some(u) = &util {
                let _ = writeln!(
                    f,
                    "utilization [{}, {}) ns: da {:.1}% (peak {} active), ad {:.1}% (peak {} active)",
                    u.window_start_ns,
                    u.window_end_ns,
                    100.0 * u.da_busy_fraction,
                    u.da_peak_active,
                    100.0 * u.ad_busy_fraction,
                    u.ad_peak_active
                );
            }
            for w in &stats.warnings {
                let _ = writeln!(f, "warning: {w}");
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ------------------------------------------------------------------ cosim

fn cmd_cosim(
    program_path: &Path,
    device_path: Option<&Path>,
    control: &ControlArgs,
    trials: u64,
    seed: u64,
    initial: usize,
    output: &OutputArgs,
) -> Result<()> {
    let program = load_program(program_path)?;
    let (device, device_name) = load_device(device_path, program.qubits())?;
    let (cfg, cfg_name) = control.resolve()?;
    let opts = CosimOptions { trials, seed, initial_basis: initial };
    let res = cosimulate(&program, &device, &cfg, &opts)?;

    let fires: u64 = res.trials.iter().map(|t| t.conditional_fires).sum();
    let params = json!({
        "command": "cosim",
        "program": program_path.display().to_string(),
        "device": device_name,
        "control": cfg_name,
        "trials": trials,
        "seed": seed,
        "initial_basis": initial,
    });
    let doc = json!({
        "params": params,
        "distribution": distribution_json(&res.distribution),
        "mean_time_ns": res.mean_time_ns,
        "conditional_fires_total": fires,
        "sample_total_time_ns": res.sample_schedule.total_time_ns(),
        "warnings": res.sample_schedule.warnings,
    });

    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => distribution_csv(&res.distribution),
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: cosim");
            let _ = writeln!(f, "program: {}", program_path.display());
            let _ = writeln!(f, "device: {device_name}");
            let _ = writeln!(f, "control: {cfg_name}");
            let _ = writeln!(f, "trials: {trials}  seed: {seed}  initial: {initial}");
            let _ = writeln!(f);
            distribution_text(&res.distribution, &mut f);
            let _ = writeln!(f);
            let _ = writeln!(f, "mean_time_ns: {}", res.mean_time_ns);
            let _ = writeln!(f, "conditional fires (all trials): {fires}");
            for w in &res.sample_schedule.warnings {
                let _ = writeln!(f, "warning: {w}");
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ------------------------------------------------------------------ sweep

fn cmd_sweep(
    program_path: &Path,
    control: &ControlArgs,
    da_channels: &str,
    no_measure: bool,
    output: &OutputArgs,
) -> Result<()> {
    let program = load_program(program_path)?;
    let (cfg, cfg_name) = control.resolve()?;
    let counts: Vec<ChannelCount> = da_channels
        .split(',')
        .map(|s| s.trim().parse().map_err(|e: String| anyhow!(e)))
        .collect::<Result<_>>()?;
    let points = channel_sweep(&program, &cfg, &counts, !no_measure)?;

    let params = json!({
        "command": "sweep",
        "program": program_path.display().to_string(),
        "control": cfg_name,
        "da_channels": da_channels,
        "include_measures": !no_measure,
    });
    let rows: Vec<Value> = points
        .iter()
        .map(|p| json!({ "da_channels": p.da_channels.to_string(), "total_time_ns": p.total_time_ns }))
        .collect();
    let doc = json!({ "params": params, "points": rows });

    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut f = String::from("da_channels,total_time_ns\n");
            for p in &points {
                let _ = writeln!(f, "{},{}", p.da_channels, p.total_time_ns);
            }
            f
        }
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: sweep");
            let _ = writeln!(f, "program: {}", program_path.display());
            let _ = writeln!(f, "control: {cfg_name}");
            let _ = writeln!(f, "measurements: {}", if no_measure { "stripped" } else { "included" });
            let _ = writeln!(f);
            let _ = writeln!(f, "{:<12} {:>14}", "da_channels", "total_time_ns");
            for p in &points {
                let _ = writeln!(f, "{:<12} {:>14.1}", p.da_channels.to_string(), p.total_time_ns);
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ---------------------------------------------------------------- compare

fn cmd_compare(program_paths: &[PathBuf], control: &ControlArgs, output: &OutputArgs) -> Result<()> {
    let (cfg, control_name) = control.resolve()?;
    struct Row {
        name: String,
        time_ns: f64,
        time_no_meas_ns: f64,
    }
    let mut rows = Vec::with_capacity(program_paths.len());
    for path in program_paths {
        let program = load_program(path)?;
        let full = simulate(&program, &cfg, &mut ConstantOutcomes(0))
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let gates_only = simulate(&strip_measurements(&program), &cfg, &mut ConstantOutcomes(0))
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        rows.push(Row {
            name: path.display().to_string(),
            time_ns: full.total_time_ns(),
            time_no_meas_ns: gates_only.total_time_ns(),
        });
    }
    // Normalize to the first program; identical inputs must report exactly 1.
    let ratio = |t: f64, base: f64| if t == base { 1.0 } else { t / base };
    let (base_full, base_gates) = (rows[0].time_ns, rows[0].time_no_meas_ns);

    let doc = json!({
        "params": {
            "command": "compare",
            "programs": program_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "control": control_name,
        },
        "programs": rows.iter().map(|r| json!({
            "program": r.name,
            "time_ns": r.time_ns,
            "ratio": ratio(r.time_ns, base_full),
            "time_no_meas_ns": r.time_no_meas_ns,
            "ratio_no_meas": ratio(r.time_no_meas_ns, base_gates),
        })).collect::<Vec<_>>(),
    });
    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut f = String::from("program,time_ns,ratio,time_no_meas_ns,ratio_no_meas\n");
            for r in &rows {
                let _ = writeln!(
                    f,
                    "{},{},{},{},{}",
                    r.name,
                    r.time_ns,
                    ratio(r.time_ns, base_full),
                    r.time_no_meas_ns,
                    ratio(r.time_no_meas_ns, base_gates)
                );
            }
            f
        }
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: compare");
            let _ = writeln!(f, "control: {control_name}");
            let _ = writeln!(f);
            let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(7).max(7);
            let _ = writeln!(
                f,
                "{:<width$} {:>12} {:>7} {:>16} {:>7}",
                "program", "time_ns", "ratio", "time_no_meas_ns", "ratio"
            );
            for r in &rows {
                let _ = writeln!(
                    f,
                    "{:<width$} {:>12.1} {:>7.3} {:>16.1} {:>7.3}",
                    r.name,
                    r.time_ns,
                    ratio(r.time_ns, base_full),
                    r.time_no_meas_ns,
                    ratio(r.time_no_meas_ns, base_gates)
                );
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ---------------------------------------------------------------- savings

fn cmd_savings(
    program_path: &Path,
    device_path: Option<&Path>,
    trials_list: &str,
    seed: u64,
    output: &OutputArgs,
) -> Result<()> {
    let program = load_program(program_path)?;
    let (device, device_name) = load_device(device_path, program.qubits())?;
    let circuit = layered(&program)?;
    let trial_counts: Vec<u64> = trials_list
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad trial count {s:?}")))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &trials in &trial_counts {
        let ts = generate_traces(&circuit, &device, trials, seed)?;
        let opt = run_optimized(&ts)?;
        let brute = run_bruteforce(&ts)?;
        if opt.outcomes != brute.outcomes {
            bail!("engines disagreed on per-trial outcomes at {trials} trials");
        }
        rows.push((trials, opt.metrics, brute.metrics, savings(&opt.metrics, &brute.metrics)));
    }

    let doc = json!({
        "params": {
            "command": "savings",
            "program": program_path.display().to_string(),
            "device": device_name,
            "trials": trial_counts,
            "seed": seed,
        },
        "identical_outcomes": true,
        "points": rows.iter().map(|(t, o, b, s)| json!({
            "trials": t,
            "optimized_matvecs": o.matvec_count,
            "bruteforce_matvecs": b.matvec_count,
            "normalized_matvec": o.matvec_count as f64 / b.matvec_count as f64,
            "msv_peak": o.msv_peak,
            "savings": s,
        })).collect::<Vec<_>>(),
    });
    let report = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut f = String::from(
                "trials,optimized_matvecs,bruteforce_matvecs,normalized_matvec,msv_peak,savings\n",
            );
            for (t, o, b, s) in &rows {
                let _ = writeln!(
                    f,
                    "{t},{},{},{},{},{s}",
                    o.matvec_count,
                    b.matvec_count,
                    o.matvec_count as f64 / b.matvec_count as f64,
                    o.msv_peak
                );
            }
            f
        }
        Format::Text => {
            let mut f = String::new();
            let _ = writeln!(f, "command: savings");
            let _ = writeln!(f, "program: {}", program_path.display());
            let _ = writeln!(f, "device: {device_name}");
            let _ = writeln!(f, "seed: {seed}");
            let _ = writeln!(f, "per-trial outcomes: identical across engines");
            let _ = writeln!(f);
            let _ = writeln!(
                f,
                "{:>10} {:>16} {:>16} {:>11} {:>9} {:>9}",
                "trials", "optimized", "bruteforce", "normalized", "msv_peak", "savings"
            );
            for (t, o, b, s) in &rows {
                let _ = writeln!(
                    f,
                    "{:>10} {:>16} {:>16} {:>11.4} {:>9} {:>8.2}%",
                    t,
                    o.matvec_count,
                    b.matvec_count,
                    o.matvec_count as f64 / b.matvec_count as f64,
                    o.msv_peak,
                    100.0 * s
                );
            }
            f
        }
    };
    emit(report, output.out.as_deref())
}

// ----------------------------------------------------- encode/decode/synth

fn cmd_encode(program_path: &Path, out: &Path) -> Result<()> {
    let program = load_program(program_path)?;
    write_program_file(&program, out)
        .with_context(|| format!("writing binary {}", out.display()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_decode(input: &Path, out: Option<&Path>) -> Result<()> {
    let program = read_program_file(input)
        .with_context(|| format!("reading binary {}", input.display()))?;
    emit(program.to_string(), out)
}

fn cmd_synth(depth: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let program = qv_circuit(depth, seed);
    emit(program.to_string(), out)
}
