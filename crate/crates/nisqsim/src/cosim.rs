//! Co-simulation: the control-system schedule and a noisy statevector,
//! advanced together.
//!
//! Straight-line programs (no conditionals, waits or resets, and only
//! terminal measurements) split cleanly: their schedule cannot depend on
//! measurement results, so the timing is computed once and the quantum
//! side runs through the Monte-Carlo engine — outcome words are
//! bit-identical to [`crate::mc::run_optimized`] on the same seed.
//!
//! Programs with control flow need the state evolved *during* scheduling:
//! each dispatched gate applies its matrix and then rolls the device's
//! error rates for its operand qubits (in operand order), measurements
//! collapse the state mid-circuit and hand their (readout-error-adjusted)
//! bit to the dispatcher for conditional guards, and resets project the
//! qubit to |0⟩. Randomness still comes from the per-trial substreams, so
//! runs are reproducible and independent of trial count.

use crate::control::{simulate, ControlConfig, ControlError, ExecutionListener, ExecutionStats};
use crate::layer::{build_layers, LayerError};
use crate::mc::{generate_traces, run_optimized, McError, OutputDistribution};
use crate::noise::{DeviceErrorModel, ModelError};
use crate::program::{Instruction, Program};
use crate::rng::{injection_stream, measurement_stream};
use crate::state::{cx_matrix, u_matrix, GateMatrix, StateError, StateVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CosimError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error("the device model covers {model} qubits, the program uses {program}")]
    TooFewQubits { program: usize, model: usize },
    #[error("no coupling between qubits {a} and {b} in the device model")]
    MissingEdge { a: usize, b: usize },
    #[error("{cbits} classical bits exceed the outcome-word limit of 64")]
    TooManyCbits { cbits: usize },
    #[error("initial basis state {index} needs more than {qubits} qubits")]
    BadInitialState { index: usize, qubits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosimOptions {
    pub trials: u64,
    pub seed: u64,
    /// Basis state the qubits start in (default all-zeros).
    pub initial_basis: usize,
}

impl Default for CosimOptions {
    fn default() -> Self {
        CosimOptions { trials: 1024, seed: 0, initial_basis: 0 }
    }
}

/// Result of one co-simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub word: u64,
    pub total_time_ps: u64,
    pub conditional_fires: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosimResult {
    pub distribution: OutputDistribution,
    pub trials: Vec<TrialOutcome>,
    /// Complete schedule of the first trial, for reporting.
    pub sample_schedule: ExecutionStats,
    /// Mean wall time per trial in nanoseconds.
    pub mean_time_ns: f64,
}

/// True when the schedule cannot depend on measurement outcomes and all
/// measurements are terminal — the program can then ride the fast
/// Monte-Carlo path.
pub fn is_static(program: &Program) -> bool {
    let instrs = program.instructions();
    for (i, instr) in instrs.iter().enumerate() {
        match instr {
            Instruction::If { .. } | Instruction::Wait { .. } | Instruction::Reset { .. } => {
                return false
            }
            Instruction::Measure { qubit, .. }
                if instrs[i + 1..].iter().any(|later| later.qubits().contains(qubit)) =>
            {
                return false;
            }
            _ => {}
        }
    }
    true
}

/// Run `trials` noisy executions of `program` against the device error
/// model and the control-system timing model together.
pub fn cosimulate(
    program: &Program,
    model: &DeviceErrorModel,
    cfg: &ControlConfig,
    opts: &CosimOptions,
) -> Result<CosimResult, CosimError> {
    if program.qubits() > model.qubits() {
        return Err(CosimError::TooFewQubits {
            program: program.qubits(),
            model: model.qubits(),
        });
    }
    if program.cbits() > 64 {
        return Err(CosimError::TooManyCbits { cbits: program.cbits() });
    }
    if opts.initial_basis >> program.qubits() != 0 {
        return Err(CosimError::BadInitialState {
            index: opts.initial_basis,
            qubits: program.qubits(),
        });
    }
    if is_static(program) && opts.initial_basis == 0 {
        cosimulate_static(program, model, cfg, opts)
    } else {
        cosimulate_dynamic(program, model, cfg, opts)
    }
}

fn cosimulate_static(
    program: &Program,
    model: &DeviceErrorModel,
    cfg: &ControlConfig,
    opts: &CosimOptions,
) -> Result<CosimResult, CosimError> {
    let circuit = build_layers(program)?;
    let ts = generate_traces(&circuit, model, opts.trials, opts.seed)?;
    let run = run_optimized(&ts)?;
    // The schedule is outcome-independent: compute it once.
    let mut zeros = crate::control::ConstantOutcomes(0);
    let stats = simulate(program, cfg, &mut zeros)?;
    let trials = run
        .outcomes
        .iter()
        .map(|&word| TrialOutcome {
            word,
            total_time_ps: stats.total_time_ps,
            conditional_fires: 0,
        })
        .collect();
    Ok(CosimResult {
        distribution: run.distribution,
        trials,
        mean_time_ns: stats.total_time_ns(),
        sample_schedule: stats,
    })
}

/// A gate's matrix plus its operand qubits with their injection rates.
type ArmedGate = (GateMatrix, Vec<(usize, f64)>);

/// Gate matrices and error rates resolved per instruction index, so the
/// per-trial listener does no lookups or validation.
struct PreparedProgram {
    /// For U/CX (directly or inside a conditional); `None` otherwise.
    gates: Vec<Option<ArmedGate>>,
    readout: Vec<f64>,
}

fn prepare(program: &Program, model: &DeviceErrorModel) -> Result<PreparedProgram, CosimError> {
    let mut gates = Vec::with_capacity(program.len());
    for instr in program.instructions() {
        let base = match instr {
            Instruction::If { inner, .. } => inner.as_ref(),
            other => other,
        };
        gates.push(match base {
            Instruction::U { theta, phi, lambda, qubit } => Some((
                u_matrix(*theta, *phi, *lambda)?,
                vec![(*qubit, model.gate1_error(*qubit))],
            )),
            Instruction::Cx { control, target } => {
                let rate = model
                    .cx_error(*control, *target)
                    .ok_or(CosimError::MissingEdge { a: *control, b: *target })?;
                Some((cx_matrix(), vec![(*control, rate), (*target, rate)]))
            }
            _ => None,
        });
    }
    let readout = (0..program.qubits()).map(|q| model.readout_error(q)).collect();
    Ok(PreparedProgram { gates, readout })
}

fn cosimulate_dynamic(
    program: &Program,
    model: &DeviceErrorModel,
    cfg: &ControlConfig,
    opts: &CosimOptions,
) -> Result<CosimResult, CosimError> {
    let prepared = prepare(program, model)?;
    let operators: Vec<GateMatrix> =
        model.operator_set().operators().iter().map(|o| o.matrix.clone()).collect();
    let set = model.operator_set().clone();
    let mut trials = Vec::with_capacity(opts.trials as usize);
    let mut outcomes = Vec::with_capacity(opts.trials as usize);
    let mut sample_schedule = None;
    for trial in 0..opts.trials {
        let mut listener = DynamicListener {
            prepared: &prepared,
            operators: &operators,
            set: &set,
            state: StateVector::from_basis(program.qubits(), opts.initial_basis)?,
            injections: injection_stream(opts.seed, trial),
            measurements: measurement_stream(opts.seed, trial),
            error: None,
        };
        let stats = simulate(program, cfg, &mut listener)?;
        if let Some(e) = listener.error {
            return Err(e.into());
        }
        outcomes.push(stats.outcome_word);
        trials.push(TrialOutcome {
            word: stats.outcome_word,
            total_time_ps: stats.total_time_ps,
            conditional_fires: stats.conditional_fires,
        });
        if sample_schedule.is_none() {
            sample_schedule = Some(stats);
        }
    }
    let mean_time_ns = if trials.is_empty() {
        0.0
    } else {
        trials.iter().map(|t| t.total_time_ps as f64 / 1000.0).sum::<f64>() / trials.len() as f64
    };
    let sample_schedule = match sample_schedule {
        Some(s) => s,
        None => simulate(program, cfg, &mut crate::control::ConstantOutcomes(0))?,
    };
    Ok(CosimResult {
        distribution: OutputDistribution::from_outcomes(program.cbits(), &outcomes),
        trials,
        sample_schedule,
        mean_time_ns,
    })
}

struct DynamicListener<'a> {
    prepared: &'a PreparedProgram,
    operators: &'a [GateMatrix],
    set: &'a crate::noise::OperatorSet,
    state: StateVector,
    injections: ChaCha8Rng,
    measurements: ChaCha8Rng,
    error: Option<StateError>,
}

impl DynamicListener<'_> {
    fn record(&mut self, r: Result<(), StateError>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }
}

impl ExecutionListener for DynamicListener<'_> {
    fn gate(&mut self, instr_index: usize, _instr: &Instruction) {
        if self.error.is_some() {
            return;
        }
        let Some((matrix, operands)) = &self.prepared.gates[instr_index] else {
            return;
        };
        let qubits: Vec<usize> = operands.iter().map(|&(q, _)| q).collect();
        let matrix = matrix.clone();
        let operands = operands.clone();
        let r = self.state.apply(&matrix, &qubits);
        self.record(r);
        for (qubit, rate) in operands {
            // Same draw discipline as trace generation: one uniform for
            // the rate, a second only when the channel fires.
            if self.injections.gen::<f64>() < rate {
                let op = self.set.pick(self.injections.gen::<f64>());
                let m = self.operators[op].clone();
                let r = self.state.apply(&m, &[qubit]);
                self.record(r);
            }
        }
    }

    fn measure(&mut self, _instr_index: usize, qubit: usize, _cbit: usize) -> u8 {
        if self.error.is_some() {
            return 0;
        }
        let mut bit = match self.state.measure_qubit(qubit, &mut self.measurements) {
            Ok(b) => b,
            Err(e) => {
                self.error = Some(e);
                return 0;
            }
        };
        if self.injections.gen::<f64>() < self.prepared.readout[qubit] {
            bit ^= 1;
        }
        bit
    }

    fn reset(&mut self, _instr_index: usize, qubit: usize) {
        if self.error.is_some() {
            return;
        }
        match self.state.measure_qubit(qubit, &mut self.measurements) {
            Ok(1) => {
                let x = crate::state::pauli_x();
                let r = self.state.apply(&x, &[qubit]);
                self.record(r);
            }
            Ok(_) => {}
            Err(e) => self.error = Some(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Reference;
    use crate::qasm::parse_program;

    fn opts(trials: u64, seed: u64) -> CosimOptions {
        CosimOptions { trials, seed, initial_basis: 0 }
    }

    #[test]
    fn static_path_matches_the_monte_carlo_engine_bit_for_bit() {
        let p = parse_program(
            "qreg q[2]; creg c[2]; u(pi/2,0,pi) q[0]; cx q[0],q[1];\n\
             measure q[0] -> c[0]; measure q[1] -> c[1];",
        )
        .unwrap();
        let model = DeviceErrorModel::uniform(2, 0.02, 0.01).unwrap();
        let cfg = ControlConfig::qcb_baseline();
        let res = cosimulate(&p, &model, &cfg, &opts(512, 21)).unwrap();

        let circuit = build_layers(&p).unwrap();
        let ts = generate_traces(&circuit, &model, 512, 21).unwrap();
        let mc = run_optimized(&ts).unwrap();
        let words: Vec<u64> = res.trials.iter().map(|t| t.word).collect();
        assert_eq!(words, mc.outcomes);
        assert_eq!(res.distribution, mc.distribution);
        // Straight-line programs share one schedule across trials.
        assert!(res.trials.iter().all(|t| t.total_time_ps == res.trials[0].total_time_ps));
        assert_eq!(res.mean_time_ns, res.sample_schedule.total_time_ns());
    }

    #[test]
    fn active_reset_restores_an_excited_qubit() {
        let mut src = String::from("qreg q[1]; creg c[1];\n");
        for _ in 0..3 {
            src.push_str("measure q[0] -> c[0];\nif (c[0]==1) u(pi,0,pi) q[0];\n");
        }
        let p = parse_program(&src).unwrap();
        let model = DeviceErrorModel::noiseless(1);
        let cfg = ControlConfig::qcb_baseline();
        let o = CosimOptions { trials: 256, seed: 4, initial_basis: 1 };
        let res = cosimulate(&p, &model, &cfg, &o).unwrap();
        for t in &res.trials {
            assert_eq!(t.word, 0, "qubit must be returned to |0⟩");
            assert_eq!(t.conditional_fires, 1, "exactly the first round corrects");
        }
        // Starting in |0⟩ instead, no correction ever fires.
        let res = cosimulate(&p, &model, &cfg, &opts(64, 4)).unwrap();
        assert!(res.trials.iter().all(|t| t.word == 0 && t.conditional_fires == 0));
    }

    #[test]
    fn skipped_conditionals_cost_no_time() {
        // Guard is false in every trial: the conditional gate contributes
        // nothing to the schedule.
        let p = parse_program(
            "qreg q[1]; creg c[1]; measure q[0] -> c[0]; if (c[0]==1) u(pi,0,pi) q[0];",
        )
        .unwrap();
        let model = DeviceErrorModel::noiseless(1);
        let cfg = ControlConfig::qcb_baseline();
        let res = cosimulate(&p, &model, &cfg, &opts(16, 9)).unwrap();
        for t in &res.trials {
            assert_eq!(t.conditional_fires, 0);
            assert_eq!(t.total_time_ps, 300_000);
        }
        let rec = &res.sample_schedule.records[1];
        assert!(!rec.executed);
        assert_eq!(rec.start_ps, rec.end_ps);
    }

    #[test]
    fn mid_circuit_measurement_collapses_the_state() {
        // H, measure, then X conditioned on 1: the final measurement is
        // deterministic 0 for every trial even though the first is random.
        let p = parse_program(
            "qreg q[1]; creg c[2];\n\
             u(pi/2,0,pi) q[0];\n\
             measure q[0] -> c[0];\n\
             if (c[0]==1) u(pi,0,pi) q[0];\n\
             measure q[0] -> c[1];",
        )
        .unwrap();
        let model = DeviceErrorModel::noiseless(1);
        let cfg = ControlConfig::qcb_baseline();
        let res = cosimulate(&p, &model, &cfg, &opts(128, 6)).unwrap();
        let mut saw_one = false;
        for t in &res.trials {
            assert_eq!(t.word >> 1, 0, "corrected qubit always reads 0");
            saw_one |= t.word & 1 == 1;
        }
        assert!(saw_one, "the superposed first readout must sometimes be 1");
    }

    #[test]
    fn wait_forces_the_dynamic_path_but_not_different_statistics() {
        let src_plain = "qreg q[2]; creg c[2]; u(pi/2,0,pi) q[0]; cx q[0],q[1];\n\
                         measure q[0] -> c[0]; measure q[1] -> c[1];";
        let src_wait = "qreg q[2]; creg c[2]; u(pi/2,0,pi) q[0]; cx q[0],q[1]; wait 4;\n\
                        measure q[0] -> c[0]; measure q[1] -> c[1];";
        let model = DeviceErrorModel::noiseless(2);
        let cfg = ControlConfig::qcb_baseline();
        let plain = cosimulate(&parse_program(src_plain).unwrap(), &model, &cfg, &opts(256, 8))
            .unwrap();
        let waited = cosimulate(&parse_program(src_wait).unwrap(), &model, &cfg, &opts(256, 8))
            .unwrap();
        // Same Bell statistics; the wait only delays the schedule.
        let ideal = [0.5, 0.0, 0.0, 0.5];
        for res in [&plain, &waited] {
            let f = crate::mc::fidelity(&res.distribution, &Reference::Distribution(&ideal));
            assert_eq!(f.fidelity, 1.0);
        }
        assert!(waited.mean_time_ns > plain.mean_time_ns);
    }

    #[test]
    fn dynamic_runs_are_seed_deterministic() {
        let p = parse_program(
            "qreg q[2]; creg c[2]; u(pi/2,0.1,0.3) q[0]; measure q[0] -> c[0];\n\
             if (c[0]==1) u(pi,0,pi) q[1]; measure q[1] -> c[1];",
        )
        .unwrap();
        let model = DeviceErrorModel::uniform(2, 0.05, 0.02).unwrap();
        let cfg = ControlConfig::qcb_baseline();
        let a = cosimulate(&p, &model, &cfg, &opts(128, 17)).unwrap();
        let b = cosimulate(&p, &model, &cfg, &opts(128, 17)).unwrap();
        assert_eq!(a, b);
        let c = cosimulate(&p, &model, &cfg, &opts(128, 18)).unwrap();
        assert_ne!(a.trials, c.trials, "different seeds explore different outcomes");
    }

    #[test]
    fn rejects_programs_wider_than_the_device() {
        let p = parse_program("qreg q[3]; creg c[1]; u(1,0,0) q[2];").unwrap();
        let model = DeviceErrorModel::uniform(2, 0.0, 0.0).unwrap();
        let cfg = ControlConfig::qcb_baseline();
        assert!(matches!(
            cosimulate(&p, &model, &cfg, &opts(1, 0)),
            Err(CosimError::TooFewQubits { program: 3, model: 2 })
        ));
    }

    #[test]
    fn rejects_out_of_range_initial_state() {
        let p = parse_program("qreg q[1]; creg c[1]; measure q[0] -> c[0];").unwrap();
        let model = DeviceErrorModel::noiseless(1);
        let cfg = ControlConfig::qcb_baseline();
        let o = CosimOptions { trials: 1, seed: 0, initial_basis: 2 };
        assert!(matches!(
            cosimulate(&p, &model, &cfg, &o),
            Err(CosimError::BadInitialState { index: 2, qubits: 1 })
        ));
    }
}
