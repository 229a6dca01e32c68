//! Seeded generator of volume-style benchmark circuits.
//!
//! The generated circuits target a 5-qubit device with the "bowtie"
//! coupling map — edges (0,1), (0,2), (1,2), (2,3), (2,4), (3,4) — and
//! use only native gate directions: a block's middle two-qubit gate runs
//! logically reversed, so it is wrapped in basis-change pairs the way a
//! directionality pass would emit it.
//!
//! A circuit is an initial layer of random single-qubit rotations, then
//! `depth` dense layers. Each dense layer picks one of the five disjoint
//! edge pairs at random, runs an entangling block on both edges and a
//! lone rotation on the remaining idle qubit. Gate totals are exactly
//! `5 + 25·depth` single-qubit gates and `6·depth` two-qubit gates, plus
//! one final measurement per qubit.
//!
//! Everything is drawn from one seeded stream, so `(depth, seed)` fully
//! determines the circuit.

use crate::program::{Instruction, Program};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

pub const QV_QUBITS: usize = 5;

/// The bowtie coupling map, native direction first-to-second.
pub const QV_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)];

/// All ways to pick two qubit-disjoint edges from the bowtie.
const DISJOINT_PAIRS: [((usize, usize), (usize, usize)); 5] = [
    ((0, 1), (2, 3)),
    ((0, 1), (2, 4)),
    ((0, 1), (3, 4)),
    ((0, 2), (3, 4)),
    ((1, 2), (3, 4)),
];

/// `u(π/2, 0, π)` — the basis-change gate used for direction reversal.
pub fn hadamard(qubit: usize) -> Instruction {
    Instruction::U { theta: FRAC_PI_2, phi: 0.0, lambda: PI, qubit }
}

/// `u(π, 0, π)` — a bit flip.
pub fn not_gate(qubit: usize) -> Instruction {
    Instruction::U { theta: PI, phi: 0.0, lambda: PI, qubit }
}

fn random_u(rng: &mut ChaCha8Rng, qubit: usize) -> Instruction {
    Instruction::U {
        theta: rng.gen::<f64>() * TAU,
        phi: rng.gen::<f64>() * TAU,
        lambda: rng.gen::<f64>() * TAU,
        qubit,
    }
}

/// One entangling block on the edge `(a, b)`: rotations and three
/// two-qubit gates, the middle one logically reversed and therefore
/// wrapped in basis changes (12 single-qubit + 3 two-qubit gates).
fn block(p: &mut Program, rng: &mut ChaCha8Rng, (a, b): (usize, usize)) {
    let add = |p: &mut Program, i: Instruction| p.add(i).expect("generated gate is valid");
    add(p, random_u(rng, a));
    add(p, random_u(rng, b));
    add(p, Instruction::Cx { control: a, target: b });
    add(p, random_u(rng, a));
    add(p, random_u(rng, b));
    add(p, hadamard(a));
    add(p, hadamard(b));
    add(p, Instruction::Cx { control: a, target: b });
    add(p, hadamard(a));
    add(p, hadamard(b));
    add(p, random_u(rng, a));
    add(p, random_u(rng, b));
    add(p, Instruction::Cx { control: a, target: b });
    add(p, random_u(rng, a));
    add(p, random_u(rng, b));
}

/// Generate the volume-style benchmark circuit for `(depth, seed)`.
pub fn qv_circuit(depth: usize, seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Program::new(QV_QUBITS, QV_QUBITS).expect("fixed register sizes are valid");
    for q in 0..QV_QUBITS {
        p.add(random_u(&mut rng, q)).expect("init layer is valid");
    }
    for _ in 0..depth {
        let (e1, e2) = DISJOINT_PAIRS[rng.gen_range(0..DISJOINT_PAIRS.len())];
        block(&mut p, &mut rng, e1);
        block(&mut p, &mut rng, e2);
        let idle = (0..QV_QUBITS)
            .find(|&q| ![e1.0, e1.1, e2.0, e2.1].contains(&q))
            .expect("two disjoint edges leave one qubit idle");
        p.add(random_u(&mut rng, idle)).expect("idle rotation is valid");
    }
    for q in 0..QV_QUBITS {
        p.add(Instruction::Measure { qubit: q, cbit: q }).expect("final readout is valid");
    }
    p
}
