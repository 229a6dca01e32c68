//! Full-statevector simulation primitives.
//!
//! A register of `n` qubits is a dense vector of `2^n` complex amplitudes.
//! Basis indices are little-endian: qubit 0 is the least-significant bit,
//! so for two qubits the order is `|00⟩, |01⟩(q0=1), |10⟩(q1=1), |11⟩`.
//!
//! Applying a gate is one matrix–vector multiplication over every
//! amplitude pair (or quadruple) selected by the operand qubits; each call
//! to [`StateVector::apply_1q`] / [`StateVector::apply_2q`] bumps the
//! vector's `matvecs` counter by one, which is the work metric the
//! Monte-Carlo engines report.

use num_complex::Complex64;
use thiserror::Error;

/// Largest register the dense representation accepts (16 MiB of amplitudes
/// at 20 qubits; a few sizes beyond that are allowed for headroom).
pub const MAX_QUBITS: usize = 24;

/// Tolerance for normalization and unitarity checks.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("register size {0} is outside the supported range 1..={MAX_QUBITS}")]
    BadRegisterSize(usize),
    #[error("qubit {qubit} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("two-qubit gate needs two distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("basis index {index} out of range for a {qubits}-qubit register")]
    BasisOutOfRange { index: usize, qubits: usize },
    #[error("gate angle is not finite: {0}")]
    NonFiniteAngle(f64),
    #[error("operand count {got} does not match gate arity {want}")]
    ArityMismatch { got: usize, want: usize },
}

/// A 2×2 or 4×4 unitary, row-major.
///
/// For two-qubit gates the block index of an amplitude is
/// `bit(first qubit) << 1 | bit(second qubit)`, i.e. the first operand is
/// the more significant bit of the 4-element block. `CX` built by
/// [`cx_matrix`] therefore takes the control as its first operand.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateMatrix {
    /// Number of operand qubits.
    pub fn arity(&self) -> usize {
        match self {
            GateMatrix::One(_) => 1,
            GateMatrix::Two(_) => 2,
        }
    }

    /// Largest deviation of `M†M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        fn defect<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
            let mut worst = 0.0f64;
            for i in 0..N {
                for j in 0..N {
                    let dot: Complex64 = (0..N).map(|k| m[k][i].conj() * m[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - want).norm());
                }
            }
            worst
        }
        match self {
            GateMatrix::One(m) => defect(m),
            GateMatrix::Two(m) => defect(m),
        }
    }

    /// True when `M†M = I` within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }
}

/// The generic single-qubit rotation the `u` instruction applies:
///
/// ```text
/// ⎡ cos(θ/2)            −e^{iλ}·sin(θ/2)      ⎤
/// ⎣ e^{iφ}·sin(θ/2)      e^{i(φ+λ)}·cos(θ/2)  ⎦
/// ```
///
/// `u(π,0,π)` is X, `u(π/2,0,π)` is the Hadamard, `u(0,0,λ)` is a phase.
pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Result<GateMatrix, StateError> {
    for a in [theta, phi, lambda] {
        if !a.is_finite() {
            return Err(StateError::NonFiniteAngle(a));
        }
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let eip = Complex64::cis(phi);
    let eil = Complex64::cis(lambda);
    Ok(GateMatrix::One([
        [Complex64::new(c, 0.0), -eil * s],
        [eip * s, eip * eil * c],
    ]))
}

/// Controlled-X; the first operand qubit is the control.
pub fn cx_matrix() -> GateMatrix {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    GateMatrix::Two([
        [o, z, z, z],
        [z, o, z, z],
        [z, z, z, o],
        [z, z, o, z],
    ])
}

/// Pauli X.
pub fn pauli_x() -> GateMatrix {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    GateMatrix::One([[z, o], [o, z]])
}

/// Pauli Y.
pub fn pauli_y() -> GateMatrix {
    let z = Complex64::new(0.0, 0.0);
    GateMatrix::One([[z, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), z]])
}

/// Pauli Z.
pub fn pauli_z() -> GateMatrix {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    GateMatrix::One([[o, z], [z, -o]])
}

/// Dense statevector with a matrix–vector work counter.
#[derive(Debug, Clone)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: usize,
    matvecs: u64,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn new(qubits: usize) -> Result<Self, StateError> {
        Self::from_basis(qubits, 0)
    }

    /// Computational basis state `|index⟩` (little-endian).
    pub fn from_basis(qubits: usize, index: usize) -> Result<Self, StateError> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(StateError::BadRegisterSize(qubits));
        }
        if index >= 1 << qubits {
            return Err(StateError::BasisOutOfRange { index, qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amps, qubits, matvecs: 0 })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Matrix–vector multiplications applied to this vector so far.
    /// A fresh copy for branching starts at zero (see [`Self::fork`]).
    pub fn matvecs(&self) -> u64 {
        self.matvecs
    }

    /// Copy of the amplitudes.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Clone the amplitudes but reset the work counter, for callers that
    /// account for work per branch.
    pub fn fork(&self) -> Self {
        StateVector { amps: self.amps.clone(), qubits: self.qubits, matvecs: 0 }
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.qubits {
            Err(StateError::QubitOutOfRange { qubit: q, qubits: self.qubits })
        } else {
            Ok(())
        }
    }

    /// Apply a 2×2 matrix to `qubit`. One matvec.
    pub fn apply_1q(&mut self, m: &[[Complex64; 2]; 2], qubit: usize) -> Result<(), StateError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for base in 0..self.amps.len() {
            if base & bit != 0 {
                continue;
            }
            let hi = base | bit;
            let a0 = self.amps[base];
            let a1 = self.amps[hi];
            self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[hi] = m[1][0] * a0 + m[1][1] * a1;
        }
        self.matvecs += 1;
        Ok(())
    }

    /// Apply a 4×4 matrix to the ordered pair `(qa, qb)`; `qa` indexes the
    /// more significant bit of each 4-amplitude block. One matvec.
    pub fn apply_2q(
        &mut self,
        m: &[[Complex64; 4]; 4],
        qa: usize,
        qb: usize,
    ) -> Result<(), StateError> {
        self.check_qubit(qa)?;
        self.check_qubit(qb)?;
        if qa == qb {
            return Err(StateError::DuplicateQubit(qa));
        }
        let (ba, bb) = (1usize << qa, 1usize << qb);
        for base in 0..self.amps.len() {
            if base & (ba | bb) != 0 {
                continue;
            }
            let idx = [base, base | bb, base | ba, base | ba | bb];
            let a = idx.map(|i| self.amps[i]);
            for (row, &i) in idx.iter().enumerate() {
                self.amps[i] = m[row][0] * a[0] + m[row][1] * a[1] + m[row][2] * a[2] + m[row][3] * a[3];
            }
        }
        self.matvecs += 1;
        Ok(())
    }

    /// Apply any [`GateMatrix`] to the listed operand qubits.
    pub fn apply(&mut self, gate: &GateMatrix, qubits: &[usize]) -> Result<(), StateError> {
        match (gate, qubits) {
            (GateMatrix::One(m), [q]) => self.apply_1q(m, *q),
            (GateMatrix::Two(m), [qa, qb]) => self.apply_2q(m, *qa, *qb),
            _ => Err(StateError::ArityMismatch { got: qubits.len(), want: gate.arity() }),
        }
    }

    /// Probability of reading `1` on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> Result<f64, StateError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Sample `qubit` with the caller's generator, collapse the state to
    /// the observed branch and renormalize. Draws exactly one uniform; the
    /// outcome is 1 when the draw lands below `prob_one`.
    pub fn measure_qubit(
        &mut self,
        qubit: usize,
        rng: &mut impl rand::Rng,
    ) -> Result<u8, StateError> {
        let p1 = self.prob_one(qubit)?;
        let outcome = u8::from(rng.gen::<f64>() < p1);
        self.collapse(qubit, outcome)?;
        Ok(outcome)
    }

    /// Project `qubit` onto `outcome` and renormalize. If the branch has
    /// zero probability the state is left as all zeros on purpose — callers
    /// sample outcomes from the state first, so this cannot happen for them.
    pub fn collapse(&mut self, qubit: usize, outcome: u8) -> Result<(), StateError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let keep_hi = outcome != 0;
        let mut kept = 0.0f64;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == keep_hi {
                kept += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if kept > 0.0 {
            let scale = 1.0 / kept.sqrt();
            for a in &mut self.amps {
                *a *= scale;
            }
        }
        Ok(())
    }

    /// `|amplitude|²` per basis index. Sums to 1 within [`NORM_TOL`] for
    /// any state produced by unitary evolution.
    pub fn distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total probability mass (should be 1 within [`NORM_TOL`]).
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn entry(g: &GateMatrix, r: usize, c: usize) -> Complex64 {
        match g {
            GateMatrix::One(m) => m[r][c],
            GateMatrix::Two(m) => m[r][c],
        }
    }

    #[test]
    fn u_of_pi_0_pi_is_pauli_x() {
        let g = u_matrix(PI, 0.0, PI).unwrap();
        let want = [[0.0, 1.0], [1.0, 0.0]];
        for (r, row) in want.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                assert_abs_diff_eq!(entry(&g, r, c).re, w, epsilon = 1e-12);
                assert_abs_diff_eq!(entry(&g, r, c).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn u_of_half_pi_0_pi_is_hadamard() {
        let g = u_matrix(PI / 2.0, 0.0, PI).unwrap();
        let h = FRAC_1_SQRT_2;
        let want = [[h, h], [h, -h]];
        for (r, row) in want.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                assert_abs_diff_eq!(entry(&g, r, c).re, w, epsilon = 1e-12);
                assert_abs_diff_eq!(entry(&g, r, c).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn u_of_zeros_is_identity() {
        let g = u_matrix(0.0, 0.0, 0.0).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_eq!(entry(&g, r, c), Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn u_rejects_non_finite_angles() {
        assert!(matches!(u_matrix(f64::NAN, 0.0, 0.0), Err(StateError::NonFiniteAngle(_))));
        assert!(matches!(u_matrix(0.0, f64::INFINITY, 0.0), Err(StateError::NonFiniteAngle(_))));
    }

    #[test]
    fn named_gates_are_unitary() {
        for g in [pauli_x(), pauli_y(), pauli_z(), cx_matrix()] {
            assert!(g.is_unitary(1e-15));
        }
    }

    #[test]
    fn little_endian_indexing() {
        // X on qubit 1 of |00⟩ lands on basis index 2, not 1.
        let mut s = StateVector::new(2).unwrap();
        s.apply(&pauli_x(), &[1]).unwrap();
        let d = s.distribution();
        assert_eq!(d[2], 1.0);
        assert_eq!(d[0] + d[1] + d[3], 0.0);
    }

    #[test]
    fn hadamard_then_cx_builds_bell_pair() {
        let mut s = StateVector::new(2).unwrap();
        let h = u_matrix(PI / 2.0, 0.0, PI).unwrap();
        s.apply(&h, &[0]).unwrap();
        s.apply(&cx_matrix(), &[0, 1]).unwrap();
        let d = s.distribution();
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d[3], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1] + d[2], 0.0, epsilon = 1e-24);
        assert_eq!(s.matvecs(), 2);
    }

    #[test]
    fn cx_first_operand_is_the_control() {
        // |01⟩ (q0=1): CX(0→1) flips the target; CX(1→0) must not.
        let mut s = StateVector::from_basis(2, 1).unwrap();
        s.apply(&cx_matrix(), &[0, 1]).unwrap();
        assert_eq!(s.distribution()[3], 1.0);

        let mut s = StateVector::from_basis(2, 1).unwrap();
        s.apply(&cx_matrix(), &[1, 0]).unwrap();
        assert_eq!(s.distribution()[1], 1.0);
    }

    #[test]
    fn measurement_of_basis_states_is_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut s = StateVector::from_basis(3, 0b100).unwrap();
        assert_eq!(s.measure_qubit(2, &mut rng).unwrap(), 1);
        assert_eq!(s.measure_qubit(0, &mut rng).unwrap(), 0);
    }

    #[test]
    fn measurement_collapses_entangled_partner() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..32 {
            let mut s = StateVector::new(2).unwrap();
            let h = u_matrix(PI / 2.0, 0.0, PI).unwrap();
            s.apply(&h, &[0]).unwrap();
            s.apply(&cx_matrix(), &[0, 1]).unwrap();
            let b0 = s.measure_qubit(0, &mut rng).unwrap();
            let b1 = s.measure_qubit(1, &mut rng).unwrap();
            assert_eq!(b0, b1, "Bell pair halves must agree");
            assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = NORM_TOL);
        }
    }

    #[test]
    fn errors_on_bad_operands() {
        let mut s = StateVector::new(2).unwrap();
        assert!(matches!(
            s.apply(&pauli_x(), &[5]),
            Err(StateError::QubitOutOfRange { qubit: 5, qubits: 2 })
        ));
        assert!(matches!(
            s.apply(&cx_matrix(), &[1, 1]),
            Err(StateError::DuplicateQubit(1))
        ));
        assert!(matches!(
            s.apply(&cx_matrix(), &[0]),
            Err(StateError::ArityMismatch { got: 1, want: 2 })
        ));
        assert!(StateVector::new(0).is_err());
        assert!(StateVector::new(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn twenty_qubit_register_works() {
        let mut s = StateVector::new(20).unwrap();
        let h = u_matrix(PI / 2.0, 0.0, PI).unwrap();
        s.apply(&h, &[0]).unwrap();
        for q in 0..19 {
            s.apply(&cx_matrix(), &[q, q + 1]).unwrap();
        }
        // GHZ state: all mass on |0…0⟩ and |1…1⟩.
        let d = s.distribution();
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(d[(1 << 20) - 1], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = NORM_TOL);
        assert_eq!(s.matvecs(), 20);
    }

    #[test]
    fn fork_resets_the_work_counter() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(&pauli_x(), &[0]).unwrap();
        assert_eq!(s.matvecs(), 1);
        let f = s.fork();
        assert_eq!(f.matvecs(), 0);
        assert_eq!(f.amplitudes(), s.amplitudes());
    }
}
