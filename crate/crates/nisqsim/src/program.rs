//! Program representation: one quantum register, one classical register and
//! a sequence of the six supported instructions.
//!
//! `U(θ,φ,λ)` and `CX` evolve the state, `Measure` records one qubit into
//! one classical bit, `Reset` returns a qubit to `|0⟩`, `If` guards a single
//! non-`If` instruction on one classical bit, and `Wait` delays the
//! controller by a number of clock cycles. Operand validity (index ranges,
//! finite angles, no nested conditionals) is enforced when instructions are
//! added, so every constructed [`Program`] is well formed.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("qubit index {index} out of range for qreg of size {size}")]
    QubitOutOfRange { index: usize, size: usize },
    #[error("classical bit index {index} out of range for creg of size {size}")]
    CbitOutOfRange { index: usize, size: usize },
    #[error("cx needs two distinct qubits, got {0} twice")]
    CxSameQubit(usize),
    #[error("gate angle is not finite")]
    NonFiniteAngle,
    #[error("conditional body must not be another conditional")]
    NestedConditional,
    #[error("register size {0} is invalid (must be at least 1)")]
    BadRegisterSize(usize),
}

/// One instruction of the six-entry set.
#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    U { theta: f64, phi: f64, lambda: f64, qubit: usize },
    Cx { control: usize, target: usize },
    Measure { qubit: usize, cbit: usize },
    Reset { qubit: usize },
    If { cbit: usize, value: u8, inner: Box<Instruction> },
    Wait { cycles: u32 },
}

impl Instruction {
    /// Qubits the instruction touches (conditionals report their body's).
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::U { qubit, .. }
            | Instruction::Measure { qubit, .. }
            | Instruction::Reset { qubit } => vec![*qubit],
            Instruction::Cx { control, target } => vec![*control, *target],
            Instruction::If { inner, .. } => inner.qubits(),
            Instruction::Wait { .. } => vec![],
        }
    }
}

/// A validated program.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    qubits: usize,
    cbits: usize,
    qreg_name: String,
    creg_name: String,
    instructions: Vec<Instruction>,
}

impl Program {
    /// Empty program over `qubits` qubits and `cbits` classical bits, with
    /// the conventional register names `q` and `c`.
    pub fn new(qubits: usize, cbits: usize) -> Result<Self, ProgramError> {
        Self::with_register_names(qubits, cbits, "q", "c")
    }

    /// Empty program with explicit register names (as declared in source).
    pub fn with_register_names(
        qubits: usize,
        cbits: usize,
        qreg_name: &str,
        creg_name: &str,
    ) -> Result<Self, ProgramError> {
        if qubits == 0 {
            return Err(ProgramError::BadRegisterSize(qubits));
        }
        if cbits == 0 {
            return Err(ProgramError::BadRegisterSize(cbits));
        }
        Ok(Program {
            qubits,
            cbits,
            qreg_name: qreg_name.to_string(),
            creg_name: creg_name.to_string(),
            instructions: Vec::new(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn cbits(&self) -> usize {
        self.cbits
    }

    pub fn qreg_name(&self) -> &str {
        &self.qreg_name
    }

    pub fn creg_name(&self) -> &str {
        &self.creg_name
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn check(&self, instr: &Instruction, top_level: bool) -> Result<(), ProgramError> {
        let qubit_ok = |index: usize| {
            if index < self.qubits {
                Ok(())
            } else {
                Err(ProgramError::QubitOutOfRange { index, size: self.qubits })
            }
        };
        let cbit_ok = |index: usize| {
            if index < self.cbits {
                Ok(())
            } else {
                Err(ProgramError::CbitOutOfRange { index, size: self.cbits })
            }
        };
        match instr {
            Instruction::U { theta, phi, lambda, qubit } => {
                if ![theta, phi, lambda].iter().all(|a| a.is_finite()) {
                    return Err(ProgramError::NonFiniteAngle);
                }
                qubit_ok(*qubit)
            }
            Instruction::Cx { control, target } => {
                qubit_ok(*control)?;
                qubit_ok(*target)?;
                if control == target {
                    return Err(ProgramError::CxSameQubit(*control));
                }
                Ok(())
            }
            Instruction::Measure { qubit, cbit } => {
                qubit_ok(*qubit)?;
                cbit_ok(*cbit)
            }
            Instruction::Reset { qubit } => qubit_ok(*qubit),
            Instruction::If { cbit, inner, .. } => {
                if !top_level {
                    return Err(ProgramError::NestedConditional);
                }
                cbit_ok(*cbit)?;
                self.check(inner, false)
            }
            Instruction::Wait { .. } => Ok(()),
        }
    }

    /// Append an instruction after validating its operands.
    pub fn add(&mut self, instr: Instruction) -> Result<(), ProgramError> {
        self.check(&instr, true)?;
        self.instructions.push(instr);
        Ok(())
    }

    /// Counts of (U, CX, Measure) instructions, conditional bodies included.
    pub fn gate_counts(&self) -> (usize, usize, usize) {
        let mut u = 0;
        let mut cx = 0;
        let mut m = 0;
        for instr in &self.instructions {
            let body = match instr {
                Instruction::If { inner, .. } => inner.as_ref(),
                other => other,
            };
            match body {
                Instruction::U { .. } => u += 1,
                Instruction::Cx { .. } => cx += 1,
                Instruction::Measure { .. } => m += 1,
                _ => {}
            }
        }
        (u, cx, m)
    }
}

fn write_instr(f: &mut fmt::Formatter<'_>, p: &Program, instr: &Instruction) -> fmt::Result {
    let q = &p.qreg_name;
    let c = &p.creg_name;
    match instr {
        Instruction::U { theta, phi, lambda, qubit } => {
            write!(f, "u({theta},{phi},{lambda}) {q}[{qubit}];")
        }
        Instruction::Cx { control, target } => write!(f, "cx {q}[{control}],{q}[{target}];"),
        Instruction::Measure { qubit, cbit } => write!(f, "measure {q}[{qubit}] -> {c}[{cbit}];"),
        Instruction::Reset { qubit } => write!(f, "reset {q}[{qubit}];"),
        Instruction::If { cbit, value, inner } => {
            write!(f, "if ({c}[{cbit}]=={value}) ")?;
            write_instr(f, p, inner)
        }
        Instruction::Wait { cycles } => write!(f, "wait {cycles};"),
    }
}

/// Prints the program back out in its source syntax. Angles are printed
/// with the shortest representation that parses back to the same value, so
/// print-then-parse reproduces the program exactly.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qreg {}[{}];", self.qreg_name, self.qubits)?;
        writeln!(f, "creg {}[{}];", self.creg_name, self.cbits)?;
        for instr in &self.instructions {
            write_instr(f, self, instr)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_operands() {
        let mut p = Program::new(2, 2).unwrap();
        assert_eq!(
            p.add(Instruction::U { theta: 0.0, phi: 0.0, lambda: 0.0, qubit: 2 }),
            Err(ProgramError::QubitOutOfRange { index: 2, size: 2 })
        );
        assert_eq!(
            p.add(Instruction::Measure { qubit: 0, cbit: 5 }),
            Err(ProgramError::CbitOutOfRange { index: 5, size: 2 })
        );
        assert_eq!(
            p.add(Instruction::Cx { control: 1, target: 1 }),
            Err(ProgramError::CxSameQubit(1))
        );
        assert_eq!(
            p.add(Instruction::U { theta: f64::NAN, phi: 0.0, lambda: 0.0, qubit: 0 }),
            Err(ProgramError::NonFiniteAngle)
        );
    }

    #[test]
    fn rejects_nested_conditionals() {
        let mut p = Program::new(1, 1).unwrap();
        let inner = Instruction::If {
            cbit: 0,
            value: 1,
            inner: Box::new(Instruction::Reset { qubit: 0 }),
        };
        assert_eq!(
            p.add(Instruction::If { cbit: 0, value: 1, inner: Box::new(inner) }),
            Err(ProgramError::NestedConditional)
        );
    }

    #[test]
    fn conditional_operands_are_validated() {
        let mut p = Program::new(1, 1).unwrap();
        assert_eq!(
            p.add(Instruction::If {
                cbit: 0,
                value: 1,
                inner: Box::new(Instruction::Reset { qubit: 3 }),
            }),
            Err(ProgramError::QubitOutOfRange { index: 3, size: 1 })
        );
    }

    #[test]
    fn gate_counts_include_conditional_bodies() {
        let mut p = Program::new(2, 1).unwrap();
        p.add(Instruction::U { theta: 1.0, phi: 0.0, lambda: 0.0, qubit: 0 }).unwrap();
        p.add(Instruction::Cx { control: 0, target: 1 }).unwrap();
        p.add(Instruction::Measure { qubit: 0, cbit: 0 }).unwrap();
        p.add(Instruction::If {
            cbit: 0,
            value: 1,
            inner: Box::new(Instruction::U { theta: 0.5, phi: 0.0, lambda: 0.0, qubit: 1 }),
        })
        .unwrap();
        assert_eq!(p.gate_counts(), (2, 1, 1));
    }

    #[test]
    fn display_uses_declared_register_names() {
        let mut p = Program::with_register_names(2, 2, "qr", "cr").unwrap();
        p.add(Instruction::Cx { control: 0, target: 1 }).unwrap();
        p.add(Instruction::Measure { qubit: 1, cbit: 0 }).unwrap();
        let text = p.to_string();
        assert!(text.contains("qreg qr[2];"));
        assert!(text.contains("cx qr[0],qr[1];"));
        assert!(text.contains("measure qr[1] -> cr[0];"));
    }
}
