//! Greedy as-soon-as-possible layering.
//!
//! A layered circuit groups a straight-line program into layers such that
//! no two operations in one layer touch the same qubit, and every
//! operation sits in the earliest layer its qubit dependencies allow.
//! Layers are where the noise model injects errors (an error fires *after*
//! the gates of its layer), and they are the unit of checkpointing for the
//! trace-reordering Monte-Carlo engine.
//!
//! Only data-flow instructions can be layered; conditionals and waits are
//! control-system concerns and are rejected here.

use crate::program::{Instruction, Program};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayerError {
    #[error("instruction {index} is a control-flow `{kind}` and cannot be layered")]
    ControlFlow { index: usize, kind: &'static str },
}

/// One operation placed in a layer, with a back-pointer to its source
/// instruction.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOp {
    /// Index into the source program's instruction list.
    pub instr_index: usize,
    pub kind: LayerOpKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerOpKind {
    U { theta: f64, phi: f64, lambda: f64, qubit: usize },
    Cx { control: usize, target: usize },
    Measure { qubit: usize, cbit: usize },
    Reset { qubit: usize },
}

impl LayerOpKind {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            LayerOpKind::U { qubit, .. }
            | LayerOpKind::Measure { qubit, .. }
            | LayerOpKind::Reset { qubit } => vec![*qubit],
            LayerOpKind::Cx { control, target } => vec![*control, *target],
        }
    }

    /// True for operations that are a matrix application (U, CX).
    pub fn is_gate(&self) -> bool {
        matches!(self, LayerOpKind::U { .. } | LayerOpKind::Cx { .. })
    }
}

/// A program split into qubit-disjoint layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredCircuit {
    qubits: usize,
    cbits: usize,
    layers: Vec<Vec<LayerOp>>,
}

impl LayeredCircuit {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn cbits(&self) -> usize {
        self.cbits
    }

    pub fn layers(&self) -> &[Vec<LayerOp>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Number of U and CX operations (the matrix applications).
    pub fn gate_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|op| op.kind.is_gate())
            .count()
    }

    /// Measurements in source order as `(qubit, cbit, instr_index)`.
    pub fn measurements(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = self
            .layers
            .iter()
            .flatten()
            .filter_map(|op| match op.kind {
                LayerOpKind::Measure { qubit, cbit } => Some((qubit, cbit, op.instr_index)),
                _ => None,
            })
            .collect();
        out.sort_by_key(|&(_, _, idx)| idx);
        out
    }

    /// True if any operation on `qubit` appears after instruction
    /// `instr_index` in source order.
    pub fn qubit_used_after(&self, qubit: usize, instr_index: usize) -> bool {
        self.layers
            .iter()
            .flatten()
            .any(|op| op.instr_index > instr_index && op.kind.qubits().contains(&qubit))
    }
}

/// Layer a straight-line program. Fails on `if`/`wait`.
pub fn build_layers(p: &Program) -> Result<LayeredCircuit, LayerError> {
    let mut next_free = vec![0usize; p.qubits()];
    let mut layers: Vec<Vec<LayerOp>> = Vec::new();
    for (index, instr) in p.instructions().iter().enumerate() {
        let kind = match instr {
            Instruction::U { theta, phi, lambda, qubit } => LayerOpKind::U {
                theta: *theta,
                phi: *phi,
                lambda: *lambda,
                qubit: *qubit,
            },
            Instruction::Cx { control, target } => {
                LayerOpKind::Cx { control: *control, target: *target }
            }
            Instruction::Measure { qubit, cbit } => {
                LayerOpKind::Measure { qubit: *qubit, cbit: *cbit }
            }
            Instruction::Reset { qubit } => LayerOpKind::Reset { qubit: *qubit },
            Instruction::If { .. } => {
                return Err(LayerError::ControlFlow { index, kind: "if" })
            }
            Instruction::Wait { .. } => {
                return Err(LayerError::ControlFlow { index, kind: "wait" })
            }
        };
        let layer = kind.qubits().iter().map(|&q| next_free[q]).max().unwrap_or(0);
        if layer == layers.len() {
            layers.push(Vec::new());
        }
        for &q in &kind.qubits() {
            next_free[q] = layer + 1;
        }
        layers[layer].push(LayerOp { instr_index: index, kind });
    }
    Ok(LayeredCircuit { qubits: p.qubits(), cbits: p.cbits(), layers })
}
