//! Simulation and analysis of semi-quantum finite automata: measure-once
//! quantum automata, one-way and two-way quantum automata with classical
//! control, and the classical baselines they are measured against.
//!
//! The crate builds the standard machine families — the promised string
//! equality checker, the unary mod-p recognizer, and the exact-length
//! recognizer — and verifies their acceptance probabilities, error bounds,
//! expected running times, and state counts three ways: exact closed-form
//! analysis over `a + b√2` rationals, dense brute-force evolution, and
//! seeded Monte Carlo sampling.

pub mod analysis;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod exact;
pub mod machine;
pub mod montecarlo;
pub mod quantum;
