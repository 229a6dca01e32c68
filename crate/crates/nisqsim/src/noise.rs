//! Per-device error model: depolarizing-style gate errors plus classical
//! readout flips.
//!
//! Every gate application can be followed by an unwanted operator on each
//! qubit it touched. With error rate `r` and the default operator set
//! {X, Y, Z}, each operator fires with probability `r/3` and nothing
//! happens with probability `1 − r`; a two-qubit gate rolls the dice
//! independently for both operands. A measurement is followed by a
//! classical flip of the recorded bit with the qubit's readout rate.
//!
//! [`error_positions`] lists the places where an injection *may* happen
//! for a layered circuit: exactly one position per (operation,
//! operand-qubit) pair, attached to the end of the operation's layer and
//! ordered by `(layer, qubit)`. Monte-Carlo trials sample these positions
//! independently ([`sample_injection`]).
//!
//! Models are loaded from a JSON document:
//!
//! ```json
//! {
//!   "qubits": 5,
//!   "edges": [[0,1], [0,2]],
//!   "gate1_error": [0.00137, 0.0012, 0.0015, 0.0016, 0.0014],
//!   "cx_error": {"0-1": 0.019, "0-2": 0.022},
//!   "readout_error": [0.031, 0.028, 0.035, 0.044, 0.039],
//!   "t1_us": [52.0, 61.0, 56.0, 47.0, 43.0],
//!   "operators": [{"label": "X", "matrix": [0,0,1,0,1,0,0,0], "weight": 1.0}]
//! }
//! ```
//!
//! `readout_error` defaults to zero, `t1_us` to infinity and `operators`
//! to equally-weighted X, Y, Z. Two-qubit gates are only allowed along
//! `edges` (unordered pairs); `cx_error` must give a rate for every edge.

use crate::layer::{LayerOpKind, LayeredCircuit};
use crate::program::{Instruction, Program};
use crate::state::{pauli_x, pauli_y, pauli_z, GateMatrix, NORM_TOL};
use num_complex::Complex64;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("model must have at least one qubit")]
    NoQubits,
    #[error("`{field}` must list one value per qubit (want {want}, got {got})")]
    BadLength { field: &'static str, want: usize, got: usize },
    #[error("`{field}[{index}]` = {value} is not a probability in [0,1]")]
    RateOutOfRange { field: &'static str, index: usize, value: f64 },
    #[error("edge ({a},{b}) references a qubit outside 0..{qubits}")]
    EdgeOutOfRange { a: usize, b: usize, qubits: usize },
    #[error("edge ({0},{0}) connects a qubit to itself")]
    SelfEdge(usize),
    #[error("edge ({a},{b}) listed twice")]
    DuplicateEdge { a: usize, b: usize },
    #[error("cx_error key `{0}` is not of the form \"i-j\"")]
    BadEdgeKey(String),
    #[error("cx_error key `{a}-{b}` does not match any declared edge")]
    UnknownEdge { a: usize, b: usize },
    #[error("edge ({a},{b}) has no cx_error rate")]
    MissingEdgeRate { a: usize, b: usize },
    #[error("t1_us[{index}] = {value} must be positive")]
    BadT1 { index: usize, value: f64 },
    #[error("error operator `{0}` is not unitary")]
    NonUnitaryOperator(String),
    #[error("error operator `{0}` has a non-positive weight")]
    BadWeight(String),
    #[error("operator list must not be empty")]
    EmptyOperatorSet,
    #[error("two-qubit gate on ({a},{b}) but the device has no such edge")]
    MissingEdge { a: usize, b: usize },
    #[error("circuit uses qubit {qubit} but the device has {qubits}")]
    CircuitTooWide { qubit: usize, qubits: usize },
    #[error("invalid model document: {0}")]
    Json(String),
}

/// A single-qubit unitary that may be injected after an operation, with a
/// relative selection weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorOperator {
    pub label: String,
    pub matrix: GateMatrix,
    pub weight: f64,
}

/// The operators an injection chooses between (weighted).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    ops: Vec<ErrorOperator>,
    total_weight: f64,
}

impl OperatorSet {
    /// Equally weighted Pauli X, Y, Z — the default channel.
    pub fn pauli_xyz() -> Self {
        let ops = vec![
            ErrorOperator { label: "X".into(), matrix: pauli_x(), weight: 1.0 },
            ErrorOperator { label: "Y".into(), matrix: pauli_y(), weight: 1.0 },
            ErrorOperator { label: "Z".into(), matrix: pauli_z(), weight: 1.0 },
        ];
        OperatorSet { total_weight: 3.0, ops }
    }

    pub fn from_operators(ops: Vec<ErrorOperator>) -> Result<Self, ModelError> {
        if ops.is_empty() {
            return Err(ModelError::EmptyOperatorSet);
        }
        for op in &ops {
            if !op.matrix.is_unitary(NORM_TOL) {
                return Err(ModelError::NonUnitaryOperator(op.label.clone()));
            }
            if !(op.weight > 0.0 && op.weight.is_finite()) {
                return Err(ModelError::BadWeight(op.label.clone()));
            }
        }
        let total_weight = ops.iter().map(|o| o.weight).sum();
        Ok(OperatorSet { ops, total_weight })
    }

    pub fn operators(&self) -> &[ErrorOperator] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Probability that a firing injection picks operator `index`.
    pub fn pick_probability(&self, index: usize) -> f64 {
        self.ops[index].weight / self.total_weight
    }

    /// Weighted pick from one uniform draw in [0,1).
    pub(crate) fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, op) in self.ops.iter().enumerate() {
            acc += op.weight / self.total_weight;
            if u < acc {
                return i;
            }
        }
        self.ops.len() - 1
    }
}

/// Error rates and connectivity of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceErrorModel {
    qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    gate1_error: Vec<f64>,
    cx_error: BTreeMap<(usize, usize), f64>,
    readout_error: Vec<f64>,
    t1_s: Vec<f64>,
    operators: OperatorSet,
}

fn norm_edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn check_rates(field: &'static str, rates: &[f64], want: usize) -> Result<(), ModelError> {
    if rates.len() != want {
        return Err(ModelError::BadLength { field, want, got: rates.len() });
    }
    for (index, &value) in rates.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(ModelError::RateOutOfRange { field, index, value });
        }
    }
    Ok(())
}

impl DeviceErrorModel {
    /// Build a model from explicit parts (rates validated, edges normalized).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        qubits: usize,
        edges: &[(usize, usize)],
        gate1_error: Vec<f64>,
        cx_error: &[((usize, usize), f64)],
        readout_error: Vec<f64>,
        t1_s: Vec<f64>,
        operators: OperatorSet,
    ) -> Result<Self, ModelError> {
        if qubits == 0 {
            return Err(ModelError::NoQubits);
        }
        check_rates("gate1_error", &gate1_error, qubits)?;
        check_rates("readout_error", &readout_error, qubits)?;
        if t1_s.len() != qubits {
            return Err(ModelError::BadLength { field: "t1_us", want: qubits, got: t1_s.len() });
        }
        for (index, &value) in t1_s.iter().enumerate() {
            // NaN must be rejected along with non-positive times.
            if value.is_nan() || value <= 0.0 {
                return Err(ModelError::BadT1 { index, value });
            }
        }
        let mut edge_set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(ModelError::SelfEdge(a));
            }
            if a >= qubits || b >= qubits {
                return Err(ModelError::EdgeOutOfRange { a, b, qubits });
            }
            if !edge_set.insert(norm_edge(a, b)) {
                return Err(ModelError::DuplicateEdge { a, b });
            }
        }
        let mut cx_map = BTreeMap::new();
        for &((a, b), rate) in cx_error {
            let key = norm_edge(a, b);
            if !edge_set.contains(&key) {
                return Err(ModelError::UnknownEdge { a: key.0, b: key.1 });
            }
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return Err(ModelError::RateOutOfRange { field: "cx_error", index: a, value: rate });
            }
            cx_map.insert(key, rate);
        }
        for &(a, b) in &edge_set {
            if !cx_map.contains_key(&(a, b)) {
                return Err(ModelError::MissingEdgeRate { a, b });
            }
        }
        Ok(DeviceErrorModel {
            qubits,
            edges: edge_set,
            gate1_error,
            cx_error: cx_map,
            readout_error,
            t1_s,
            operators,
        })
    }

    /// Fully connected device with one gate rate everywhere and one readout
    /// rate on every qubit. Handy for experiments that scan a single `r`.
    pub fn uniform(qubits: usize, gate_rate: f64, readout_rate: f64) -> Result<Self, ModelError> {
        let mut edges = Vec::new();
        for a in 0..qubits {
            for b in a + 1..qubits {
                edges.push((a, b));
            }
        }
        let cx: Vec<_> = edges.iter().map(|&e| (e, gate_rate)).collect();
        Self::from_parts(
            qubits,
            &edges,
            vec![gate_rate; qubits],
            &cx,
            vec![readout_rate; qubits],
            vec![f64::INFINITY; qubits],
            OperatorSet::pauli_xyz(),
        )
    }

    /// Fully connected device with all rates zero.
    pub fn noiseless(qubits: usize) -> Self {
        Self::uniform(qubits, 0.0, 0.0).expect("zero rates are valid")
    }

    /// Parse the JSON document format.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct OperatorDoc {
            label: String,
            matrix: [f64; 8],
            #[serde(default = "weight_one")]
            weight: f64,
        }
        fn weight_one() -> f64 {
            1.0
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ModelDoc {
            qubits: usize,
            #[serde(default)]
            edges: Vec<[usize; 2]>,
            gate1_error: Vec<f64>,
            #[serde(default)]
            cx_error: BTreeMap<String, f64>,
            readout_error: Option<Vec<f64>>,
            t1_us: Option<Vec<f64>>,
            operators: Option<Vec<OperatorDoc>>,
        }

        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let edges: Vec<(usize, usize)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut cx = Vec::new();
        for (key, rate) in &doc.cx_error {
            let (a, b) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| ModelError::BadEdgeKey(key.clone()))?;
            cx.push(((a, b), *rate));
        }
        let readout = doc.readout_error.unwrap_or_else(|| vec![0.0; doc.qubits]);
        let t1_s = doc
            .t1_us
            .map(|v| v.iter().map(|us| us * 1e-6).collect())
            .unwrap_or_else(|| vec![f64::INFINITY; doc.qubits]);
        let operators = match doc.operators {
            None => OperatorSet::pauli_xyz(),
            Some(ops) => OperatorSet::from_operators(
                ops.into_iter()
                    .map(|o| {
                        let m = &o.matrix;
                        let c = |i: usize| Complex64::new(m[2 * i], m[2 * i + 1]);
                        ErrorOperator {
                            label: o.label,
                            matrix: GateMatrix::One([[c(0), c(1)], [c(2), c(3)]]),
                            weight: o.weight,
                        }
                    })
                    .collect(),
            )?,
        };
        Self::from_parts(doc.qubits, &edges, doc.gate1_error, &cx, readout, t1_s, operators)
    }

    /// Load from a JSON file.
    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Json(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&norm_edge(a, b))
    }

    pub fn gate1_error(&self, qubit: usize) -> f64 {
        self.gate1_error[qubit]
    }

    pub fn cx_error(&self, a: usize, b: usize) -> Option<f64> {
        self.cx_error.get(&norm_edge(a, b)).copied()
    }

    pub fn readout_error(&self, qubit: usize) -> f64 {
        self.readout_error[qubit]
    }

    /// Relaxation time in seconds.
    pub fn t1_s(&self, qubit: usize) -> f64 {
        self.t1_s[qubit]
    }

    pub fn operator_set(&self) -> &OperatorSet {
        &self.operators
    }
}

/// One problem found when checking a program against a device.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index of the offending instruction.
    pub instr_index: usize,
    pub message: String,
}

/// Check register width and two-qubit connectivity of `p` against `m`.
/// Returns every violation rather than stopping at the first.
pub fn validate_against_device(p: &Program, m: &DeviceErrorModel) -> Vec<Violation> {
    let mut out = Vec::new();
    for (instr_index, instr) in p.instructions().iter().enumerate() {
        let body = match instr {
            Instruction::If { inner, .. } => inner.as_ref(),
            other => other,
        };
        for q in body.qubits() {
            if q >= m.qubits() {
                out.push(Violation {
                    instr_index,
                    message: format!("qubit {q} outside the device's {} qubits", m.qubits()),
                });
            }
        }
        if let Instruction::Cx { control, target } = body {
            if *control < m.qubits() && *target < m.qubits() && !m.has_edge(*control, *target) {
                out.push(Violation {
                    instr_index,
                    message: format!("cx on ({control},{target}) but the device has no such edge"),
                });
            }
        }
    }
    out
}

/// What kind of injection a position produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionKind {
    /// A unitary operator applied to `qubit` after its layer.
    Quantum,
    /// A classical flip of the bit recorded by a measurement.
    ReadoutFlip { cbit: usize },
}

/// One place where an error may be injected.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPosition {
    /// Layer after whose gates the injection applies.
    pub layer: usize,
    pub qubit: usize,
    /// Probability that this position fires in a given trial.
    pub rate: f64,
    pub kind: PositionKind,
    /// Index of the operation's source instruction.
    pub instr_index: usize,
}

/// All injection positions of a layered circuit under a model: one per
/// (operation, operand-qubit) pair, ordered by `(layer, qubit)`. Reset
/// operations are treated as noiseless.
pub fn error_positions(
    circuit: &LayeredCircuit,
    model: &DeviceErrorModel,
) -> Result<Vec<ErrorPosition>, ModelError> {
    if circuit.qubits() > model.qubits() {
        return Err(ModelError::CircuitTooWide {
            qubit: circuit.qubits() - 1,
            qubits: model.qubits(),
        });
    }
    let mut out = Vec::new();
    for (layer, ops) in circuit.layers().iter().enumerate() {
        for op in ops {
            match &op.kind {
                LayerOpKind::U { qubit, .. } => out.push(ErrorPosition {
                    layer,
                    qubit: *qubit,
                    rate: model.gate1_error(*qubit),
                    kind: PositionKind::Quantum,
                    instr_index: op.instr_index,
                }),
                LayerOpKind::Cx { control, target } => {
                    let rate = model
                        .cx_error(*control, *target)
                        .ok_or(ModelError::MissingEdge { a: *control, b: *target })?;
                    for &qubit in &[*control, *target] {
                        out.push(ErrorPosition {
                            layer,
                            qubit,
                            rate,
                            kind: PositionKind::Quantum,
                            instr_index: op.instr_index,
                        });
                    }
                }
                LayerOpKind::Measure { qubit, cbit } => out.push(ErrorPosition {
                    layer,
                    qubit: *qubit,
                    rate: model.readout_error(*qubit),
                    kind: PositionKind::ReadoutFlip { cbit: *cbit },
                    instr_index: op.instr_index,
                }),
                LayerOpKind::Reset { .. } => {}
            }
        }
    }
    out.sort_by_key(|p| (p.layer, p.qubit));
    Ok(out)
}

/// Roll one position once. Draws one uniform for the rate test and, only
/// for quantum positions that fire, a second uniform to pick the operator.
pub fn sample_injection(
    pos: &ErrorPosition,
    set: &OperatorSet,
    rng: &mut impl rand::Rng,
) -> Option<InjectionOutcome> {
    if rng.gen::<f64>() >= pos.rate {
        return None;
    }
    Some(match pos.kind {
        PositionKind::Quantum => InjectionOutcome::Operator(set.pick(rng.gen::<f64>())),
        PositionKind::ReadoutFlip { cbit } => InjectionOutcome::Flip { cbit },
    })
}

/// Result of a fired injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionOutcome {
    /// Index into the model's operator set.
    Operator(usize),
    /// Flip the named classical bit at readout.
    Flip { cbit: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::build_layers;
    use crate::qasm::parse_program;
    use crate::rng::injection_stream;

    fn bell() -> LayeredCircuit {
        let p = parse_program(
            "qreg q[2]; creg c[2]; u(pi/2,0,pi) q[0]; cx q[0],q[1];\n\
             measure q[0] -> c[0]; measure q[1] -> c[1];",
        )
        .unwrap();
        build_layers(&p).unwrap()
    }

    #[test]
    fn uniform_model_is_fully_connected() {
        let m = DeviceErrorModel::uniform(4, 0.01, 0.02).unwrap();
        assert_eq!(m.edges().count(), 6);
        assert_eq!(m.cx_error(3, 1), Some(0.01));
        assert_eq!(m.gate1_error(2), 0.01);
        assert_eq!(m.readout_error(0), 0.02);
        assert!(m.t1_s(0).is_infinite());
    }

    #[test]
    fn json_document_round_trip() {
        let m = DeviceErrorModel::from_json(
            r#"{
                "qubits": 3,
                "edges": [[0,1],[1,2]],
                "gate1_error": [0.001, 0.002, 0.003],
                "cx_error": {"0-1": 0.02, "1-2": 0.03},
                "readout_error": [0.04, 0.05, 0.06],
                "t1_us": [50.0, 60.0, 70.0]
            }"#,
        )
        .unwrap();
        assert_eq!(m.qubits(), 3);
        assert_eq!(m.gate1_error(0), 0.001);
        assert_eq!(m.cx_error(2, 1), Some(0.03));
        assert_eq!(m.cx_error(0, 2), None);
        assert!(!m.has_edge(0, 2));
        assert_eq!(m.t1_s(1), 60.0 * 1e-6);
    }

    #[test]
    fn rejects_bad_documents() {
        let bad_rate = r#"{"qubits":1,"gate1_error":[1.5]}"#;
        assert!(matches!(
            DeviceErrorModel::from_json(bad_rate),
            Err(ModelError::RateOutOfRange { .. })
        ));
        let bad_len = r#"{"qubits":2,"gate1_error":[0.1]}"#;
        assert!(matches!(DeviceErrorModel::from_json(bad_len), Err(ModelError::BadLength { .. })));
        let missing_rate = r#"{"qubits":2,"edges":[[0,1]],"gate1_error":[0.0,0.0]}"#;
        assert!(matches!(
            DeviceErrorModel::from_json(missing_rate),
            Err(ModelError::MissingEdgeRate { a: 0, b: 1 })
        ));
        let self_edge = r#"{"qubits":2,"edges":[[1,1]],"gate1_error":[0.0,0.0]}"#;
        assert!(matches!(DeviceErrorModel::from_json(self_edge), Err(ModelError::SelfEdge(1))));
    }

    #[test]
    fn custom_operator_set_must_be_unitary() {
        let doc = r#"{
            "qubits": 1, "gate1_error": [0.1],
            "operators": [{"label": "bad", "matrix": [1,0,0,0, 0,0,0.5,0]}]
        }"#;
        assert_eq!(
            DeviceErrorModel::from_json(doc),
            Err(ModelError::NonUnitaryOperator("bad".into()))
        );
    }

    #[test]
    fn positions_cover_each_operand_once_in_layer_qubit_order() {
        let m = DeviceErrorModel::uniform(2, 0.1, 0.2).unwrap();
        let pos = error_positions(&bell(), &m).unwrap();
        let summary: Vec<_> = pos.iter().map(|p| (p.layer, p.qubit, p.kind)).collect();
        assert_eq!(
            summary,
            vec![
                (0, 0, PositionKind::Quantum),
                (1, 0, PositionKind::Quantum),
                (1, 1, PositionKind::Quantum),
                (2, 0, PositionKind::ReadoutFlip { cbit: 0 }),
                (2, 1, PositionKind::ReadoutFlip { cbit: 1 }),
            ]
        );
        // Both halves of the CX carry the same edge rate.
        assert_eq!(pos[1].rate, 0.1);
        assert_eq!(pos[2].rate, 0.1);
        assert_eq!(pos[3].rate, 0.2);
    }

    #[test]
    fn cx_outside_the_edge_set_cannot_be_positioned() {
        let m = DeviceErrorModel::from_json(
            r#"{"qubits":3,"edges":[[0,1]],"gate1_error":[0,0,0],"cx_error":{"0-1":0.1}}"#,
        )
        .unwrap();
        let p = parse_program("qreg q[3]; creg c[3]; cx q[0],q[2];").unwrap();
        let lc = build_layers(&p).unwrap();
        assert_eq!(error_positions(&lc, &m), Err(ModelError::MissingEdge { a: 0, b: 2 }));
    }

    #[test]
    fn device_validation_lists_violations() {
        let m = DeviceErrorModel::from_json(
            r#"{"qubits":5,"edges":[[0,1]],"gate1_error":[0,0,0,0,0],"cx_error":{"0-1":0.1}}"#,
        )
        .unwrap();
        let p = parse_program("qreg q[5]; creg c[5]; cx q[0],q[1]; cx q[0],q[4];").unwrap();
        let v = validate_against_device(&p, &m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].instr_index, 1);
        assert!(v[0].message.contains("(0,4)"));
    }

    #[test]
    fn zero_rate_never_fires_and_full_rate_always_fires() {
        let m = DeviceErrorModel::uniform(1, 0.0, 0.0).unwrap();
        let pos = ErrorPosition {
            layer: 0,
            qubit: 0,
            rate: 0.0,
            kind: PositionKind::Quantum,
            instr_index: 0,
        };
        let mut rng = injection_stream(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_injection(&pos, m.operator_set(), &mut rng), None);
        }

        let sure = ErrorPosition { rate: 1.0, ..pos };
        let mut rng = injection_stream(1, 0);
        for _ in 0..100 {
            assert!(matches!(
                sample_injection(&sure, m.operator_set(), &mut rng),
                Some(InjectionOutcome::Operator(_))
            ));
        }
    }

    #[test]
    fn operator_choice_is_uniform_over_the_default_set() {
        let set = OperatorSet::pauli_xyz();
        let pos = ErrorPosition {
            layer: 0,
            qubit: 0,
            rate: 1.0,
            kind: PositionKind::Quantum,
            instr_index: 0,
        };
        let mut rng = injection_stream(42, 0);
        let mut counts = [0u32; 3];
        let n = 30_000;
        for _ in 0..n {
            match sample_injection(&pos, &set, &mut rng) {
                Some(InjectionOutcome::Operator(i)) => counts[i] += 1,
                other => panic!("rate-1 position must fire, got {other:?}"),
            }
        }
        // Each operator should appear n/3 times within 3σ of a binomial.
        let expect = n as f64 / 3.0;
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expect).abs() < 3.0 * sigma,
                "count {c} too far from {expect}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let set = OperatorSet::pauli_xyz();
        let pos = ErrorPosition {
            layer: 0,
            qubit: 0,
            rate: 0.5,
            kind: PositionKind::Quantum,
            instr_index: 0,
        };
        let run = || {
            let mut rng = injection_stream(9, 4);
            (0..64)
                .map(|_| sample_injection(&pos, &set, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn weighted_operator_sets_respect_weights() {
        let set = OperatorSet::from_operators(vec![
            ErrorOperator { label: "X".into(), matrix: pauli_x(), weight: 3.0 },
            ErrorOperator { label: "Z".into(), matrix: pauli_z(), weight: 1.0 },
        ])
        .unwrap();
        assert_eq!(set.pick_probability(0), 0.75);
        let pos = ErrorPosition {
            layer: 0,
            qubit: 0,
            rate: 1.0,
            kind: PositionKind::Quantum,
            instr_index: 0,
        };
        let mut rng = injection_stream(5, 0);
        let n = 20_000;
        let mut first = 0;
        for _ in 0..n {
            if sample_injection(&pos, &set, &mut rng) == Some(InjectionOutcome::Operator(0)) {
                first += 1;
            }
        }
        let expect = 0.75 * n as f64;
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((first as f64 - expect).abs() < 3.0 * sigma);
    }
}
