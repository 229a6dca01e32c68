//! Simulation toolkit for small noisy quantum programs and the classical
//! control hardware that executes them.
//!
//! The crate has two halves that share one program representation:
//!
//! * **Noisy program simulation** — full-statevector simulation of a
//!   six-instruction OpenQASM subset under a per-device depolarizing +
//!   readout error model. Monte-Carlo trials are evaluated either
//!   one-by-one ([`mc::run_bruteforce`]) or through a trace-reordering
//!   engine ([`mc::run_optimized`]) that shares every common
//!   error-free prefix between trials and reports how much work it saved.
//! * **Control-system timing** — a behavioral, latency-accurate model of a
//!   classical controller (instruction dispatch, D/A–A/D channel
//!   scheduling, measurement feedback) that reports execution time and
//!   per-channel utilization for the same programs ([`control`]), and can
//!   be co-simulated against the quantum state ([`cosim`]).
//!
//! Conventions used throughout (documented once here, relied on everywhere):
//!
//! * Basis states are numbered little-endian: qubit 0 is the
//!   least-significant bit of a basis index, so `|q1 q0⟩ = |01⟩` is index 1.
//! * `CX` lists the control qubit first.
//! * Classical bitstrings use the same convention: classical bit 0 is the
//!   least-significant bit of a recorded outcome.

pub mod control;
pub mod cosim;
pub mod encode;
pub mod layer;
pub mod mc;
pub mod noise;
pub mod program;
pub mod qasm;
pub mod rng;
pub mod state;
pub mod synth;
