//! Monte-Carlo noisy simulation.
//!
//! A *trial* samples every [`ErrorPosition`](crate::noise::ErrorPosition)
//! of the circuit once, yielding an [`ErrorTrace`]: the unitary injections
//! that fire (by layer and qubit) plus the classical readout flips. The
//! trace is all that distinguishes one trial from another, so trials whose
//! traces share a prefix share simulation work:
//!
//! * [`run_bruteforce`] replays every trace from `|0…0⟩` independently —
//!   the reference implementation.
//! * [`run_optimized`] sorts traces by first injection, walks the circuit
//!   layer by layer keeping one advancing checkpoint, and recursively
//!   branches a copy only where a group of traces injects something. Every
//!   shared prefix is simulated exactly once. Outcomes are bit-identical
//!   to brute force because per-trial randomness is keyed by trial id, not
//!   by execution order.
//! * [`run_unordered`] is the same checkpoint idea *without* the sort — it
//!   must retain a checkpoint per pending first-injection layer. It exists
//!   to measure how much the ordering reduces peak memory.
//!
//! Work is reported as [`SimMetrics`]: `matvec_count` counts gate-matrix
//! applications (gates and injections; measurement sampling is not a
//! matrix product), and `msv_peak` counts the most state vectors ever
//! retained for later reuse (the brute-force engine keeps exactly its one
//! working vector).
//!
//! [`exact_noisy_oracle`] cross-checks the statistics by enumerating every
//! weighted injection assignment exactly, which is tractable for small
//! circuits only.

use crate::layer::{LayerOpKind, LayeredCircuit};
use crate::noise::{
    error_positions, sample_injection, DeviceErrorModel, InjectionOutcome, ModelError,
    PositionKind,
};
use crate::rng::{injection_stream, measurement_stream};
use crate::state::{cx_matrix, u_matrix, GateMatrix, StateError, StateVector};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("instruction {instr_index}: {reason}")]
    Unsupported { instr_index: usize, reason: String },
    #[error("{cbits} classical bits exceed the outcome-word limit of 64")]
    TooManyCbits { cbits: usize },
    #[error("exact enumeration needs ≤{max} error positions, circuit has {got}")]
    OracleTooLarge { got: usize, max: usize },
    #[error("exact enumeration supports ≤3 error operators, model has {0}")]
    OracleOperatorSet(usize),
    #[error("exact enumeration supports ≤{max} classical bits, circuit has {got}")]
    OracleTooWide { got: usize, max: usize },
}

/// One unitary injection of a trace: operator `operator` (index into the
/// model's set) on `qubit` after layer `layer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub layer: u32,
    pub qubit: u32,
    pub operator: u16,
}

impl Injection {
    fn key(&self) -> (u32, u32, u16) {
        (self.layer, self.qubit, self.operator)
    }
}

/// Everything random about one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorTrace {
    pub trial_id: u64,
    /// Fired unitary injections, sorted by `(layer, qubit)`.
    pub injections: Vec<Injection>,
    /// Classical bits to flip once at readout (an even number of fired
    /// flips on the same bit cancels), sorted.
    pub flips: Vec<usize>,
}

/// Traces sort by their injection sequence so that any group sharing a
/// prefix is contiguous (recursively) and first-injection layers are
/// nondecreasing. A trace that *ends* at some depth sorts after the traces
/// that continue past it, and fully error-free traces come last. Ties
/// break by trial id.
fn trace_order(a: &ErrorTrace, b: &ErrorTrace) -> Ordering {
    let mut i = 0;
    loop {
        match (a.injections.get(i), b.injections.get(i)) {
            (Some(x), Some(y)) => match x.key().cmp(&y.key()) {
                Ordering::Equal => i += 1,
                other => return other,
            },
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (None, None) => return a.trial_id.cmp(&b.trial_id),
        }
    }
}

/// A batch of trials over one circuit, ready for either engine.
#[derive(Debug, Clone)]
pub struct TraceSet {
    circuit: LayeredCircuit,
    /// Operator matrices resolved from the model, indexed by `Injection::operator`.
    operators: Vec<[[Complex64; 2]; 2]>,
    traces: Vec<ErrorTrace>,
    seed: u64,
}

impl TraceSet {
    pub fn circuit(&self) -> &LayeredCircuit {
        &self.circuit
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> u64 {
        self.traces.len() as u64
    }

    /// Traces in execution order (sorted; see [`ErrorTrace`]).
    pub fn traces(&self) -> &[ErrorTrace] {
        &self.traces
    }

    /// Longest injection prefix shared by two *distinct* traces.
    pub fn max_shared_prefix(&self) -> usize {
        self.traces
            .windows(2)
            .map(|w| {
                w[0].injections
                    .iter()
                    .zip(&w[1].injections)
                    .take_while(|(a, b)| a == b)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Assemble a trace set directly (sorted on entry). Intended for tests
    /// and tools that need hand-crafted traces.
    pub fn from_parts(
        circuit: LayeredCircuit,
        operators: Vec<[[Complex64; 2]; 2]>,
        mut traces: Vec<ErrorTrace>,
        seed: u64,
    ) -> Result<Self, McError> {
        check_simulable(&circuit)?;
        traces.sort_by(trace_order);
        Ok(TraceSet { circuit, operators, traces, seed })
    }
}

/// The engines replay measurements on terminal states, so a circuit is
/// simulable only if nothing acts on a qubit after it is measured, and
/// resets (which are not unitary) do not appear at all.
fn check_simulable(circuit: &LayeredCircuit) -> Result<(), McError> {
    if circuit.cbits() > 64 {
        return Err(McError::TooManyCbits { cbits: circuit.cbits() });
    }
    for ops in circuit.layers() {
        for op in ops {
            if let LayerOpKind::Reset { .. } = op.kind {
                return Err(McError::Unsupported {
                    instr_index: op.instr_index,
                    reason: "reset is not available under the Monte-Carlo engines \
                             (use the co-simulator)"
                        .into(),
                });
            }
        }
    }
    for (qubit, _, instr_index) in circuit.measurements() {
        if circuit.qubit_used_after(qubit, instr_index) {
            return Err(McError::Unsupported {
                instr_index,
                reason: format!(
                    "qubit {qubit} is used after being measured; the Monte-Carlo \
                     engines need measurements to be terminal (use the co-simulator)"
                ),
            });
        }
    }
    Ok(())
}

/// Sample `trials` traces for `circuit` under `model`, seeded. Trial `i`
/// draws from its own random substream, so the resulting set does not
/// depend on generation order or on how many other trials exist.
pub fn generate_traces(
    circuit: &LayeredCircuit,
    model: &DeviceErrorModel,
    trials: u64,
    seed: u64,
) -> Result<TraceSet, McError> {
    check_simulable(circuit)?;
    let positions = error_positions(circuit, model)?;
    let set = model.operator_set();
    let mut traces = Vec::with_capacity(trials as usize);
    for trial_id in 0..trials {
        let mut rng = injection_stream(seed, trial_id);
        let mut injections = Vec::new();
        let mut flip_parity = BTreeSet::new();
        for pos in &positions {
            match sample_injection(pos, set, &mut rng) {
                None => {}
                Some(InjectionOutcome::Operator(op)) => injections.push(Injection {
                    layer: pos.layer as u32,
                    qubit: pos.qubit as u32,
                    operator: op as u16,
                }),
                Some(InjectionOutcome::Flip { cbit }) => {
                    // XOR parity: two flips of one bit cancel.
                    let first_flip = flip_parity.insert(cbit);
                    if !first_flip {
                        flip_parity.remove(&cbit);
                    }
                }
            }
        }
        traces.push(ErrorTrace {
            trial_id,
            injections,
            flips: flip_parity.into_iter().collect(),
        });
    }
    traces.sort_by(trace_order);
    let operators = model
        .operator_set()
        .operators()
        .iter()
        .map(|o| match &o.matrix {
            GateMatrix::One(m) => *m,
            GateMatrix::Two(_) => unreachable!("error operators are single-qubit"),
        })
        .collect();
    Ok(TraceSet { circuit: circuit.clone(), operators, traces, seed })
}

/// Work accounting for one engine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimMetrics {
    pub trials: u64,
    /// Gate-matrix applications (circuit gates plus injected operators).
    pub matvec_count: u64,
    /// Peak number of state vectors alive at once for later reuse,
    /// counting the engine's working vector as one.
    pub msv_peak: u64,
}

/// Fraction of brute-force matrix work the optimized engine avoided.
pub fn savings(optimized: &SimMetrics, brute: &SimMetrics) -> f64 {
    if brute.matvec_count == 0 {
        return 0.0;
    }
    1.0 - optimized.matvec_count as f64 / brute.matvec_count as f64
}

/// Observed outcome counts over all trials of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDistribution {
    cbits: usize,
    trials: u64,
    counts: BTreeMap<u64, u64>,
}

impl OutputDistribution {
    pub fn from_outcomes(cbits: usize, outcomes: &[u64]) -> Self {
        let mut counts = BTreeMap::new();
        for &bits in outcomes {
            *counts.entry(bits).or_insert(0) += 1;
        }
        OutputDistribution { cbits, trials: outcomes.len() as u64, counts }
    }

    pub fn cbits(&self) -> usize {
        self.cbits
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    /// `(bitstring, count)` in ascending bitstring order.
    pub fn counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn probability(&self, bits: u64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        *self.counts.get(&bits).unwrap_or(&0) as f64 / self.trials as f64
    }

    /// Dense probability vector of length `2^cbits`.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << self.cbits.min(30)];
        for (&bits, &count) in &self.counts {
            out[bits as usize] = count as f64 / self.trials as f64;
        }
        out
    }
}

/// Output of one engine run: per-trial outcome words (indexed by trial
/// id; classical bit `c` is bit `c` of the word), their aggregate
/// distribution and the work metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcomes: Vec<u64>,
    pub distribution: OutputDistribution,
    pub metrics: SimMetrics,
}

enum PreparedGate {
    One { m: [[Complex64; 2]; 2], q: usize },
    Two { m: [[Complex64; 4]; 4], a: usize, b: usize },
}

/// Shared engine state: prepared per-layer gate matrices, the measurement
/// list, and the work counters.
struct Engine<'a> {
    ts: &'a TraceSet,
    layers: Vec<Vec<PreparedGate>>,
    measures: Vec<(usize, usize)>,
    matvecs: u64,
    retained: u64,
    retained_peak: u64,
    outcomes: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(ts: &'a TraceSet) -> Result<Self, McError> {
        let mut layers = Vec::with_capacity(ts.circuit.layer_count());
        for ops in ts.circuit.layers() {
            let mut prepared = Vec::new();
            for op in ops {
                match &op.kind {
                    LayerOpKind::U { theta, phi, lambda, qubit } => {
                        match u_matrix(*theta, *phi, *lambda)? {
                            GateMatrix::One(m) => prepared.push(PreparedGate::One { m, q: *qubit }),
                            GateMatrix::Two(_) => unreachable!(),
                        }
                    }
                    LayerOpKind::Cx { control, target } => match cx_matrix() {
                        GateMatrix::Two(m) => {
                            prepared.push(PreparedGate::Two { m, a: *control, b: *target })
                        }
                        GateMatrix::One(_) => unreachable!(),
                    },
                    LayerOpKind::Measure { .. } | LayerOpKind::Reset { .. } => {}
                }
            }
            layers.push(prepared);
        }
        let measures = ts
            .circuit
            .measurements()
            .into_iter()
            .map(|(q, c, _)| (q, c))
            .collect();
        Ok(Engine {
            ts,
            layers,
            measures,
            matvecs: 0,
            retained: 0,
            retained_peak: 0,
            outcomes: vec![0; ts.trials() as usize],
        })
    }

    /// Peak retained checkpoints, floored at one for the working vector.
    fn msv_peak(&self) -> u64 {
        self.retained_peak.max(1)
    }

    fn retain(&mut self) {
        self.retained += 1;
        self.retained_peak = self.retained_peak.max(self.retained);
    }

    fn release(&mut self) {
        self.retained -= 1;
    }

    fn apply_layer(&mut self, s: &mut StateVector, layer: usize) -> Result<(), McError> {
        for gate in &self.layers[layer] {
            match gate {
                PreparedGate::One { m, q } => s.apply_1q(m, *q)?,
                PreparedGate::Two { m, a, b } => s.apply_2q(m, *a, *b)?,
            }
            self.matvecs += 1;
        }
        Ok(())
    }

    fn inject(&mut self, s: &mut StateVector, inj: &Injection) -> Result<(), McError> {
        s.apply_1q(&self.ts.operators[inj.operator as usize], inj.qubit as usize)?;
        self.matvecs += 1;
        Ok(())
    }

    /// Sample the trace's outcome word from a terminal state: measure each
    /// measured qubit in program order (collapsing a scratch copy), then
    /// apply the trace's readout flips. Randomness is the trial's own
    /// measurement stream, so any engine produces the same word.
    fn measure_trace(&mut self, terminal: &StateVector, trace: &ErrorTrace) -> Result<(), McError> {
        let mut scratch = terminal.fork();
        let mut rng = measurement_stream(self.ts.seed, trace.trial_id);
        let mut word = 0u64;
        for &(qubit, cbit) in &self.measures {
            let bit = scratch.measure_qubit(qubit, &mut rng)?;
            word = (word & !(1u64 << cbit)) | (u64::from(bit) << cbit);
        }
        for &cbit in &trace.flips {
            word ^= 1u64 << cbit;
        }
        self.outcomes[trace.trial_id as usize] = word;
        Ok(())
    }

    fn finish(self, msv_peak: u64) -> RunResult {
        let distribution = OutputDistribution::from_outcomes(self.ts.circuit.cbits(), &self.outcomes);
        RunResult {
            metrics: SimMetrics {
                trials: self.ts.trials(),
                matvec_count: self.matvecs,
                msv_peak,
            },
            outcomes: self.outcomes,
            distribution,
        }
    }
}

/// Reference engine: every trace simulated independently from `|0…0⟩`.
pub fn run_bruteforce(ts: &TraceSet) -> Result<RunResult, McError> {
    let mut eng = Engine::new(ts)?;
    for trace in &ts.traces {
        let mut s = StateVector::new(ts.circuit.qubits())?;
        let mut next_inj = 0;
        for layer in 0..ts.circuit.layer_count() {
            eng.apply_layer(&mut s, layer)?;
            while next_inj < trace.injections.len()
                && trace.injections[next_inj].layer as usize == layer
            {
                let inj = trace.injections[next_inj];
                eng.inject(&mut s, &inj)?;
                next_inj += 1;
            }
        }
        eng.measure_trace(&s, trace)?;
    }
    Ok(eng.finish(1))
}

/// Trace-reordering engine: shared prefixes are simulated once.
pub fn run_optimized(ts: &TraceSet) -> Result<RunResult, McError> {
    let mut eng = Engine::new(ts)?;
    let init = StateVector::new(ts.circuit.qubits())?;
    exec_group(&mut eng, init, 0, &ts.traces, 0)?;
    let peak = eng.msv_peak();
    Ok(eng.finish(peak))
}

/// Simulate a sorted group of traces that share (and have already been
/// applied) their first `depth` injections; `cur` is the group's state and
/// `next_layer` the next unexecuted layer.
fn exec_group(
    eng: &mut Engine,
    mut cur: StateVector,
    mut next_layer: usize,
    traces: &[ErrorTrace],
    depth: usize,
) -> Result<(), McError> {
    // Traces that continue past `depth` sort before those that end at it.
    let split = traces.partition_point(|t| t.injections.len() > depth);
    let (active, finished) = traces.split_at(split);

    let mut at = 0;
    while at < active.len() {
        let inj = active[at].injections[depth];
        let end = at + active[at..].partition_point(|t| t.injections[depth] == inj);
        let group = &active[at..end];

        while next_layer <= inj.layer as usize {
            eng.apply_layer(&mut cur, next_layer)?;
            next_layer += 1;
        }
        let last_work_here = end == active.len() && finished.is_empty();
        if last_work_here {
            // Nothing else needs this checkpoint — hand it to the branch.
            eng.inject(&mut cur, &inj)?;
            return exec_group(eng, cur, next_layer, group, depth + 1);
        }
        let mut branch = cur.fork();
        eng.inject(&mut branch, &inj)?;
        eng.retain(); // `cur` stays parked while the branch runs
        exec_group(eng, branch, next_layer, group, depth + 1)?;
        eng.release();
        at = end;
    }

    if !finished.is_empty() {
        while next_layer < eng.ts.circuit.layer_count() {
            eng.apply_layer(&mut cur, next_layer)?;
            next_layer += 1;
        }
        for trace in finished {
            eng.measure_trace(&cur, trace)?;
        }
    }
    Ok(())
}

/// Checkpointing engine *without* trace ordering: traces run in trial
/// order, so a checkpoint of every layer still awaited by a later trace
/// must be retained. Same outcomes, strictly more memory — the baseline
/// the reordering is measured against.
pub fn run_unordered(ts: &TraceSet) -> Result<RunResult, McError> {
    let mut eng = Engine::new(ts)?;
    let layer_count = ts.circuit.layer_count();
    let mut order: Vec<&ErrorTrace> = ts.traces.iter().collect();
    order.sort_by_key(|t| t.trial_id);

    // Checkpoint key k = state after the first k layers. A trace whose
    // first injection follows layer ℓ needs key ℓ+1; error-free traces
    // need the terminal key.
    let key_of = |t: &ErrorTrace| {
        t.injections
            .first()
            .map_or(layer_count, |inj| (inj.layer as usize + 1).min(layer_count))
    };
    let mut last_use: BTreeMap<usize, usize> = BTreeMap::new();
    for (pos, t) in order.iter().enumerate() {
        last_use.insert(key_of(t), pos);
    }
    let mut suffix_max_key = vec![0usize; order.len() + 1];
    for pos in (0..order.len()).rev() {
        suffix_max_key[pos] = suffix_max_key[pos + 1].max(key_of(order[pos]));
    }

    let mut trunk: Option<StateVector> = Some(StateVector::new(ts.circuit.qubits())?);
    let mut trunk_key = 0usize;
    let mut snapshots: BTreeMap<usize, StateVector> = BTreeMap::new();
    // `retained` counts the live trunk plus snapshots; the per-trace
    // working vector is not counted (same convention as the other engines).
    eng.retain();
    for (pos, trace) in order.iter().enumerate() {
        let key = key_of(trace);
        if key > trunk_key {
            let t = trunk.as_mut().expect("trunk kept while larger keys remain");
            for layer in trunk_key..key {
                // Borrow dance: apply_layer needs &mut eng.
                let mut tmp = std::mem::replace(t, StateVector::new(1)?);
                eng.apply_layer(&mut tmp, layer)?;
                *t = tmp;
                let reached = layer + 1;
                if last_use.get(&reached).is_some_and(|&u| u > pos) {
                    snapshots.insert(reached, t.fork());
                    eng.retain();
                }
            }
            trunk_key = key;
        }
        let base = match &trunk {
            Some(t) if key == trunk_key => t,
            _ => snapshots.get(&key).expect("needed checkpoint was snapshotted"),
        };

        let mut s = base.fork();
        let mut next_inj = 0;
        while next_inj < trace.injections.len()
            && (trace.injections[next_inj].layer as usize) < key
        {
            let inj = trace.injections[next_inj];
            eng.inject(&mut s, &inj)?;
            next_inj += 1;
        }
        for layer in key..layer_count {
            eng.apply_layer(&mut s, layer)?;
            while next_inj < trace.injections.len()
                && trace.injections[next_inj].layer as usize == layer
            {
                let inj = trace.injections[next_inj];
                eng.inject(&mut s, &inj)?;
                next_inj += 1;
            }
        }
        eng.measure_trace(&s, trace)?;

        if last_use.get(&key).is_some_and(|&u| u == pos) && snapshots.remove(&key).is_some() {
            eng.release();
        }
        if trunk.is_some() && suffix_max_key[pos + 1] <= trunk_key {
            // No later trace needs the trunk to advance further; anything
            // at or below its key is already snapshotted.
            if suffix_max_key[pos + 1] < trunk_key
                || snapshots.contains_key(&trunk_key)
                || pos + 1 == order.len()
            {
                trunk = None;
                eng.release();
            }
        }
    }
    let peak = eng.msv_peak();
    Ok(eng.finish(peak))
}

/// Exact outcome distribution over the classical register (normalized),
/// computed by enumerating every weighted assignment of the circuit's
/// error positions. Exponential in position count — guarded by
/// [`ORACLE_MAX_POSITIONS`].
pub const ORACLE_MAX_POSITIONS: usize = 12;
const ORACLE_MAX_CBITS: usize = 20;

pub fn exact_noisy_oracle(
    circuit: &LayeredCircuit,
    model: &DeviceErrorModel,
) -> Result<Vec<f64>, McError> {
    check_simulable(circuit)?;
    if circuit.cbits() > ORACLE_MAX_CBITS {
        return Err(McError::OracleTooWide { got: circuit.cbits(), max: ORACLE_MAX_CBITS });
    }
    // Positions that can never fire contribute no branches, so only the
    // live ones count against the enumeration cap.
    let positions: Vec<_> =
        error_positions(circuit, model)?.into_iter().filter(|p| p.rate > 0.0).collect();
    if positions.len() > ORACLE_MAX_POSITIONS {
        return Err(McError::OracleTooLarge { got: positions.len(), max: ORACLE_MAX_POSITIONS });
    }
    let set = model.operator_set();
    if set.len() > 3 {
        return Err(McError::OracleOperatorSet(set.len()));
    }
    let operators: Vec<[[Complex64; 2]; 2]> = set
        .operators()
        .iter()
        .map(|o| match &o.matrix {
            GateMatrix::One(m) => *m,
            GateMatrix::Two(_) => unreachable!("error operators are single-qubit"),
        })
        .collect();

    let quantum: Vec<_> = positions.iter().filter(|p| p.kind == PositionKind::Quantum).collect();
    let flips: Vec<_> = positions
        .iter()
        .filter_map(|p| match p.kind {
            PositionKind::ReadoutFlip { cbit } => Some((cbit, p.rate)),
            PositionKind::Quantum => None,
        })
        .collect();
    let measures = circuit.measurements();

    let mut dist = vec![0.0f64; 1usize << circuit.cbits()];
    // Depth-first over assignments: choice[i] = None or Some(operator).
    let mut choice: Vec<Option<usize>> = vec![None; quantum.len()];
    enumerate(
        circuit,
        &quantum,
        &operators,
        set,
        &measures,
        &mut choice,
        0,
        1.0,
        &mut dist,
    )?;

    // Readout flips act on the classical distribution.
    for &(cbit, rate) in &flips {
        if rate == 0.0 {
            continue;
        }
        let bit = 1usize << cbit;
        let old = dist.clone();
        for (s, slot) in dist.iter_mut().enumerate() {
            *slot = (1.0 - rate) * old[s] + rate * old[s ^ bit];
        }
    }

    let total: f64 = dist.iter().sum();
    if total > 0.0 {
        for p in &mut dist {
            *p /= total;
        }
    }
    Ok(dist)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    circuit: &LayeredCircuit,
    quantum: &[&crate::noise::ErrorPosition],
    operators: &[[[Complex64; 2]; 2]],
    set: &crate::noise::OperatorSet,
    measures: &[(usize, usize, usize)],
    choice: &mut Vec<Option<usize>>,
    at: usize,
    weight: f64,
    dist: &mut [f64],
) -> Result<(), McError> {
    if weight == 0.0 {
        return Ok(());
    }
    if at == quantum.len() {
        // Simulate this assignment once, deterministically.
        let mut s = StateVector::new(circuit.qubits())?;
        for (layer, ops) in circuit.layers().iter().enumerate() {
            for op in ops {
                match &op.kind {
                    LayerOpKind::U { theta, phi, lambda, qubit } => {
                        match u_matrix(*theta, *phi, *lambda)? {
                            GateMatrix::One(m) => s.apply_1q(&m, *qubit)?,
                            GateMatrix::Two(_) => unreachable!(),
                        }
                    }
                    LayerOpKind::Cx { control, target } => match cx_matrix() {
                        GateMatrix::Two(m) => s.apply_2q(&m, *control, *target)?,
                        GateMatrix::One(_) => unreachable!(),
                    },
                    LayerOpKind::Measure { .. } | LayerOpKind::Reset { .. } => {}
                }
            }
            for (i, pos) in quantum.iter().enumerate() {
                if pos.layer == layer {
                    if let Some(op) = choice[i] {
                        s.apply_1q(&operators[op], pos.qubit)?;
                    }
                }
            }
        }
        // Joint probability of each classical word (unwritten bits zero,
        // rewritten bits resolved by the last measurement in source order).
        for (basis, amp) in s.amplitudes().iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut word = 0usize;
            for &(qubit, cbit, _) in measures {
                let bit = (basis >> qubit) & 1;
                word = (word & !(1usize << cbit)) | (bit << cbit);
            }
            dist[word] += weight * p;
        }
        return Ok(());
    }
    let rate = quantum[at].rate;
    choice[at] = None;
    enumerate(circuit, quantum, operators, set, measures, choice, at + 1, weight * (1.0 - rate), dist)?;
    for op in 0..operators.len() {
        choice[at] = Some(op);
        let w = weight * rate * set.pick_probability(op);
        enumerate(circuit, quantum, operators, set, measures, choice, at + 1, w, dist)?;
    }
    choice[at] = None;
    Ok(())
}

/// Exact outcome distribution of the error-free circuit.
pub fn noiseless_distribution(circuit: &LayeredCircuit) -> Result<Vec<f64>, McError> {
    exact_noisy_oracle(circuit, &DeviceErrorModel::noiseless(circuit.qubits()))
}

/// What an observed distribution is compared against.
pub enum Reference<'a> {
    /// The single correct outcome word.
    Bitstring(u64),
    /// A full probability vector over the classical register
    /// (length `2^cbits`).
    Distribution(&'a [f64]),
}

/// Fidelity of a run, following the "fraction of trials that produced the
/// correct result" convention. Against a distribution, "correct" means
/// landing in the reference's support, and the total-variation distance is
/// reported alongside as a finer-grained comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub tvd: Option<f64>,
}

pub fn fidelity(observed: &OutputDistribution, reference: &Reference) -> FidelityReport {
    match reference {
        Reference::Bitstring(bits) => {
            FidelityReport { fidelity: observed.probability(*bits), tvd: None }
        }
        Reference::Distribution(ideal) => {
            let mut support_mass = 0.0;
            for (bits, count) in observed.counts() {
                let p_ref = ideal.get(bits as usize).copied().unwrap_or(0.0);
                if p_ref > 0.0 {
                    support_mass += count as f64 / observed.trials() as f64;
                }
            }
            let mut tvd = 0.0;
            for (s, &p_ref) in ideal.iter().enumerate() {
                tvd += (observed.probability(s as u64) - p_ref).abs();
            }
            // Observed outcomes beyond the reference vector's range.
            for (bits, count) in observed.counts() {
                if bits as usize >= ideal.len() {
                    tvd += count as f64 / observed.trials() as f64;
                }
            }
            FidelityReport { fidelity: support_mass, tvd: Some(tvd / 2.0) }
        }
    }
}
