//! Measure-once one-way quantum finite automata (no classical control):
//! one unitary per input symbol, a final unitary, then a single projective
//! measurement onto an accepting set of basis states.

use super::{AcceptanceMode, Language};
use crate::error::{Result, SqfaError};
use crate::quantum::{GateSpec, StateVector, UnitaryOp};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq)]
pub struct Moqfa {
    pub name: String,
    pub quantum_dim: usize,
    pub input_alphabet: Vec<char>,
    pub initial: StateVector,
    pub symbol_gates: BTreeMap<char, GateSpec>,
    pub final_gate: GateSpec,
    /// Accepting basis indices.
    pub accepting: BTreeSet<usize>,
    pub mode: AcceptanceMode,
    pub language: Option<Language>,
}

impl Moqfa {
    pub fn validate(&self) -> Result<()> {
        let loc = |what: &str| format!("{}.{}", self.name, what);
        if self.quantum_dim == 0 {
            return Err(SqfaError::ill_formed(loc("quantum_dim"), "zero quantum dimension"));
        }
        let mut sorted = self.input_alphabet.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != self.input_alphabet {
            return Err(SqfaError::ill_formed(
                loc("input_alphabet"),
                "alphabet must be sorted and duplicate-free",
            ));
        }
        if self.initial.dim() != self.quantum_dim {
            return Err(SqfaError::ill_formed(loc("initial"), "initial state has wrong dimension"));
        }
        self.initial.check_normalized(&loc("initial"))?;
        for &c in &self.input_alphabet {
            let at = format!("{}.symbol_gates[{c}]", self.name);
            let Some(g) = self.symbol_gates.get(&c) else {
                return Err(SqfaError::ill_formed(at, "missing gate for alphabet symbol"));
            };
            if g.dim() != self.quantum_dim {
                return Err(SqfaError::ill_formed(at, "gate dimension mismatch"));
            }
            g.matrix()?.check_unitary(&at)?;
        }
        for c in self.symbol_gates.keys() {
            if !self.input_alphabet.contains(c) {
                return Err(SqfaError::ill_formed(
                    format!("{}.symbol_gates[{c}]", self.name),
                    "gate for a symbol outside the alphabet",
                ));
            }
        }
        if self.final_gate.dim() != self.quantum_dim {
            return Err(SqfaError::ill_formed(loc("final_gate"), "gate dimension mismatch"));
        }
        self.final_gate.matrix()?.check_unitary(&loc("final_gate"))?;
        if self.accepting.iter().any(|&i| i >= self.quantum_dim) {
            return Err(SqfaError::ill_formed(loc("accepting"), "basis index out of range"));
        }
        Ok(())
    }

    /// Materialize all gates once for repeated evaluation.
    pub fn compile(&self) -> Result<CompiledMoqfa<'_>> {
        self.validate()?;
        let mut gates = BTreeMap::new();
        for (&c, g) in &self.symbol_gates {
            gates.insert(c, g.matrix()?);
        }
        Ok(CompiledMoqfa { machine: self, gates, final_gate: self.final_gate.matrix()? })
    }

    pub fn acceptance_probability(&self, word: &[char]) -> Result<f64> {
        self.compile()?.acceptance_probability(word)
    }
}

pub struct CompiledMoqfa<'m> {
    pub machine: &'m Moqfa,
    gates: BTreeMap<char, UnitaryOp>,
    final_gate: UnitaryOp,
}

impl<'m> CompiledMoqfa<'m> {
    /// State after reading `word` and applying the final unitary.
    pub fn final_state(&self, word: &[char]) -> Result<StateVector> {
        let mut v = self.machine.initial.clone();
        for &c in word {
            let u = self.gates.get(&c).ok_or_else(|| {
                SqfaError::InvalidArgument(format!(
                    "symbol '{c}' is not in the input alphabet of {}",
                    self.machine.name
                ))
            })?;
            v = u.apply(&v);
        }
        Ok(self.final_gate.apply(&v))
    }

    pub fn acceptance_probability(&self, word: &[char]) -> Result<f64> {
        let v = self.final_state(word)?;
        let p: f64 = self.machine.accepting.iter().map(|&i| v.amps[i].norm_sqr()).sum();
        Ok(p.clamp(0.0, 1.0))
    }
}
