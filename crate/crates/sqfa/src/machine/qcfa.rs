//! Quantum finite automata with classical control.
//!
//! [`TwoWayQcfa`] is the general model: a constant-size quantum register
//! driven by a classical two-way finite control. Each classical state and
//! tape symbol selects a quantum action (a unitary or a projective
//! measurement); the classical transition function consumes the measurement
//! outcome and moves the head. One step = one classical transition. Halting
//! is checked immediately after every transition.
//!
//! [`OneWayQcfa`] is the measure-once one-way restriction: the head sweeps
//! left marker → input → right marker applying one unitary per cell, then a
//! single projective measurement decides the verdict.

use super::{tape_symbol, AcceptanceMode, HeadMove, Language, StateId, TapeSym};
use crate::error::{Result, SqfaError};
use crate::quantum::{GateSpec, ProjectiveMeasurement, StateVector, UnitaryOp, TOL_PRUNE};
use std::collections::{BTreeMap, BTreeSet};

/// A quantum action attached to one (classical state, tape symbol) pair.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumAction {
    Unitary(GateSpec),
    Measure(ProjectiveMeasurement),
}

/// Structural hints used by the closed-form analysis: they do not affect
/// execution semantics and are verified, not trusted, by the analyzer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Annotations {
    /// Classical state whose (state, head = 0) configuration is the renewal
    /// point of the machine's halting loop.
    pub reset_state: Option<StateId>,
    /// Embedded one-dimensional random-walk gadgets.
    pub walks: Vec<WalkAnnotation>,
}

/// A symmetric random walk over head positions `0..=n+1` entered at cell 1
/// in `entry`, absorbing at either marker; `members` lists every classical
/// state that participates in the walk loop.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkAnnotation {
    pub entry: StateId,
    pub members: BTreeSet<StateId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoWayQcfa {
    pub name: String,
    pub quantum_dim: usize,
    pub classical_states: Vec<String>,
    pub input_alphabet: Vec<char>,
    pub initial_quantum: StateVector,
    pub initial_classical: StateId,
    pub accepting: BTreeSet<StateId>,
    pub rejecting: BTreeSet<StateId>,
    pub mode: AcceptanceMode,
    pub language: Option<Language>,
    /// Quantum action per (classical state, tape symbol).
    pub theta: BTreeMap<(StateId, TapeSym), QuantumAction>,
    /// Classical successor and head move for unitary actions.
    pub delta_unitary: BTreeMap<(StateId, TapeSym), (StateId, HeadMove)>,
    /// Classical successor and head move per measurement outcome.
    pub delta_measure: BTreeMap<(StateId, TapeSym, i64), (StateId, HeadMove)>,
    pub annotations: Annotations,
}

impl TwoWayQcfa {
    pub fn is_halting(&self, s: StateId) -> bool {
        self.accepting.contains(&s) || self.rejecting.contains(&s)
    }

    fn tape_syms(&self) -> Vec<TapeSym> {
        let mut syms = vec![TapeSym::Left, TapeSym::Right];
        syms.extend(self.input_alphabet.iter().map(|&c| TapeSym::Sym(c)));
        syms
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.classical_states[s]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.classical_states.len();
        let loc = |what: &str| format!("{}.{}", self.name, what);
        if n == 0 {
            return Err(SqfaError::ill_formed(loc("classical_states"), "no classical states"));
        }
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
        if self.initial_classical >= n {
            return Err(SqfaError::ill_formed(loc("initial_classical"), "state id out of range"));
        }
        if self.initial_quantum.dim() != self.quantum_dim {
            return Err(SqfaError::ill_formed(
                loc("initial_quantum"),
                "initial state has wrong dimension",
            ));
        }
        self.initial_quantum.check_normalized(&loc("initial_quantum"))?;
        for set in [&self.accepting, &self.rejecting] {
            for &s in set {
                if s >= n {
                    return Err(SqfaError::ill_formed(
                        loc("halting states"),
                        format!("state id {s} out of range"),
                    ));
                }
            }
        }
        if !self.accepting.is_disjoint(&self.rejecting) {
            return Err(SqfaError::ill_formed(
                loc("halting states"),
                "accepting and rejecting sets overlap",
            ));
        }

        // Totality: every non-halting state must carry a complete action and
        // transition for every tape symbol.
        for s in 0..n {
            if self.is_halting(s) {
                continue;
            }
            for sym in self.tape_syms() {
                let key = (s, sym);
                let at = format!(
                    "{}.theta[{}, {}]",
                    self.name,
                    self.classical_states[s],
                    sym.describe()
                );
                match self.theta.get(&key) {
                    None => {
                        return Err(SqfaError::ill_formed(
                            at,
                            "missing quantum action (transition function must be total)",
                        ))
                    }
                    Some(QuantumAction::Unitary(g)) => {
                        if g.dim() != self.quantum_dim {
                            return Err(SqfaError::ill_formed(
                                at,
                                format!(
                                    "gate dimension {} does not match quantum_dim {}",
                                    g.dim(),
                                    self.quantum_dim
                                ),
                            ));
                        }
                        g.matrix()?.check_unitary(&at)?;
                        let Some(&(t, _)) = self.delta_unitary.get(&key) else {
                            return Err(SqfaError::ill_formed(
                                at,
                                "unitary action has no classical transition",
                            ));
                        };
                        if t >= n {
                            return Err(SqfaError::ill_formed(at, "transition target out of range"));
                        }
                    }
                    Some(QuantumAction::Measure(m)) => {
                        if m.dim() != self.quantum_dim {
                            return Err(SqfaError::ill_formed(
                                at,
                                "measurement dimension does not match quantum_dim",
                            ));
                        }
                        for label in m.labels() {
                            let Some(&(t, _)) = self.delta_measure.get(&(s, sym, label)) else {
                                return Err(SqfaError::ill_formed(
                                    at,
                                    format!("no classical transition for outcome {label}"),
                                ));
                            };
                            if t >= n {
                                return Err(SqfaError::ill_formed(
                                    at,
                                    format!("transition target for outcome {label} out of range"),
                                ));
                            }
                        }
                    }
                }
            }
        }

        if let Some(r) = self.annotations.reset_state {
            if r >= n {
                return Err(SqfaError::ill_formed(
                    loc("annotations.reset_state"),
                    "state id out of range",
                ));
            }
        }
        for (i, w) in self.annotations.walks.iter().enumerate() {
            if w.entry >= n || w.members.iter().any(|&s| s >= n) {
                return Err(SqfaError::ill_formed(
                    format!("{}.annotations.walks[{i}]", self.name),
                    "state id out of range",
                ));
            }
            if !w.members.contains(&w.entry) {
                return Err(SqfaError::ill_formed(
                    format!("{}.annotations.walks[{i}]", self.name),
                    "walk members must include the entry state",
                ));
            }
        }
        Ok(())
    }
}

/// A machine configuration mid-run.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub classical: StateId,
    pub head: usize,
    pub quantum: StateVector,
    /// Classical transitions taken so far.
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepBranch {
    Continue(Configuration),
    Halt { accept: bool, steps: u64 },
}

/// A two-way machine with all gates materialized and actions laid out in a
/// dense table for fast stepping.
pub struct CompiledTwoWay<'m> {
    pub machine: &'m TwoWayQcfa,
    nsyms: usize,
    actions: Vec<Option<CompiledAction>>,
}

#[derive(Clone, Debug)]
pub enum CompiledAction {
    Unitary { u: UnitaryOp, next: StateId, mv: HeadMove },
    Measure { meas: ProjectiveMeasurement, arms: BTreeMap<i64, (StateId, HeadMove)> },
}

impl<'m> CompiledTwoWay<'m> {
    pub fn new(machine: &'m TwoWayQcfa) -> Result<Self> {
        machine.validate()?;
        let nsyms = 2 + machine.input_alphabet.len();
        let nstates = machine.classical_states.len();
        let mut actions: Vec<Option<CompiledAction>> = vec![None; nstates * nsyms];
        for ((s, sym), action) in &machine.theta {
            if machine.is_halting(*s) {
                // Halting states never act; stray entries (a loaded document
                // may carry them) are not required to have transitions.
                continue;
            }
            let idx = s * nsyms + Self::sym_slot(machine, *sym)?;
            let compiled = match action {
                QuantumAction::Unitary(g) => {
                    let &(next, mv) = machine.delta_unitary.get(&(*s, *sym)).expect("validated");
                    CompiledAction::Unitary { u: g.matrix()?, next, mv }
                }
                QuantumAction::Measure(m) => {
                    let mut arms = BTreeMap::new();
                    for label in m.labels() {
                        let &(next, mv) =
                            machine.delta_measure.get(&(*s, *sym, label)).expect("validated");
                        arms.insert(label, (next, mv));
                    }
                    CompiledAction::Measure { meas: m.clone(), arms }
                }
            };
            actions[idx] = Some(compiled);
        }
        Ok(CompiledTwoWay { machine, nsyms, actions })
    }

    fn sym_slot(machine: &TwoWayQcfa, sym: TapeSym) -> Result<usize> {
        match sym {
            TapeSym::Left => Ok(0),
            TapeSym::Right => Ok(1),
            TapeSym::Sym(c) => machine
                .input_alphabet
                .binary_search(&c)
                .map(|i| 2 + i)
                .map_err(|_| {
                    SqfaError::InvalidArgument(format!(
                        "symbol '{c}' is not in the input alphabet of {}",
                        machine.name
                    ))
                }),
        }
    }

    /// Precompute the dense symbol-slot id for each tape position of `word`
    /// (including both markers), so stepping is pure array indexing.
    pub fn tape_slots(&self, word: &[char]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(word.len() + 2);
        for pos in 0..word.len() + 2 {
            out.push(Self::sym_slot(self.machine, tape_symbol(word, pos))?);
        }
        Ok(out)
    }

    pub fn action(&self, s: StateId, slot: usize) -> Option<&CompiledAction> {
        self.actions[s * self.nsyms + slot].as_ref()
    }

    pub fn initial_configuration(&self) -> Configuration {
        Configuration {
            classical: self.machine.initial_classical,
            head: 0,
            quantum: self.machine.initial_quantum.clone(),
            steps: 0,
        }
    }

    fn moved_head(&self, head: usize, mv: HeadMove, tape_len: usize, s: StateId) -> Result<usize> {
        let h = head as i64 + mv.offset();
        if h < 0 || h >= tape_len as i64 {
            return Err(SqfaError::ill_formed(
                format!("{}.delta[{}]", self.machine.name, self.machine.state_name(s)),
                format!("head moved off the tape (to position {h})"),
            ));
        }
        Ok(h as usize)
    }

    /// Take one step from `cfg`, returning every branch with its probability.
    /// `tape` must come from [`CompiledTwoWay::tape_slots`] for the word.
    pub fn step(&self, cfg: &Configuration, tape: &[usize]) -> Result<Vec<(f64, StepBranch)>> {
        let slot = tape[cfg.head];
        let action = self.action(cfg.classical, slot).ok_or_else(|| {
            SqfaError::ill_formed(
                format!(
                    "{}.theta[{}]",
                    self.machine.name,
                    self.machine.state_name(cfg.classical)
                ),
                "reached a configuration with no action (halting state stepped?)",
            )
        })?;
        let steps = cfg.steps + 1;
        match action {
            CompiledAction::Unitary { u, next, mv } => {
                let head = self.moved_head(cfg.head, *mv, tape.len(), cfg.classical)?;
                let quantum = u.apply(&cfg.quantum);
                Ok(vec![(1.0, self.classify(*next, head, quantum, steps))])
            }
            CompiledAction::Measure { meas, arms } => {
                let mut out = Vec::new();
                for (label, p, collapsed) in meas.branch(&cfg.quantum) {
                    let &(next, mv) = arms.get(&label).expect("validated arm");
                    let head = self.moved_head(cfg.head, mv, tape.len(), cfg.classical)?;
                    out.push((p, self.classify(next, head, collapsed, steps)));
                }
                Ok(out)
            }
        }
    }

    fn classify(
        &self,
        next: StateId,
        head: usize,
        quantum: StateVector,
        steps: u64,
    ) -> StepBranch {
        if self.machine.accepting.contains(&next) {
            StepBranch::Halt { accept: true, steps }
        } else if self.machine.rejecting.contains(&next) {
            StepBranch::Halt { accept: false, steps }
        } else {
            StepBranch::Continue(Configuration { classical: next, head, quantum, steps })
        }
    }
}

/// Measure-once one-way QCFA: one unitary per tape cell (each an implicit
/// head move right), then a single projective measurement at the right
/// end-marker whose outcome, combined with the classical state reached
/// there, selects a terminal verdict state. The verdict accepts exactly when
/// it lands in `accepting`; any other verdict is a terminal non-accepting
/// state, so rejection needs no transitions of its own.
#[derive(Clone, Debug, PartialEq)]
pub struct OneWayQcfa {
    pub name: String,
    pub quantum_dim: usize,
    pub classical_states: Vec<String>,
    pub input_alphabet: Vec<char>,
    pub initial_quantum: StateVector,
    pub initial_classical: StateId,
    pub accepting: BTreeSet<StateId>,
    pub mode: AcceptanceMode,
    pub language: Option<Language>,
    /// `(state, symbol) → (gate, next state)`; the head move is always +1.
    pub steps: BTreeMap<(StateId, TapeSym), (GateSpec, StateId)>,
    pub final_measure: ProjectiveMeasurement,
    /// `(state at the right marker, outcome) → verdict state`.
    pub verdicts: BTreeMap<(StateId, i64), StateId>,
}

impl OneWayQcfa {
    pub fn state_name(&self, s: StateId) -> &str {
        &self.classical_states[s]
    }

    fn tape_syms(&self) -> Vec<TapeSym> {
        let mut syms = vec![TapeSym::Left, TapeSym::Right];
        syms.extend(self.input_alphabet.iter().map(|&c| TapeSym::Sym(c)));
        syms
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.classical_states.len();
        let loc = |what: &str| format!("{}.{}", self.name, what);
        if n == 0 {
            return Err(SqfaError::ill_formed(loc("classical_states"), "no classical states"));
        }
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
        if self.initial_classical >= n {
            return Err(SqfaError::ill_formed(loc("initial_classical"), "state id out of range"));
        }
        if self.initial_quantum.dim() != self.quantum_dim {
            return Err(SqfaError::ill_formed(
                loc("initial_quantum"),
                "initial state has wrong dimension",
            ));
        }
        self.initial_quantum.check_normalized(&loc("initial_quantum"))?;
        if self.final_measure.dim() != self.quantum_dim {
            return Err(SqfaError::ill_formed(
                loc("final_measure"),
                "measurement dimension does not match quantum_dim",
            ));
        }
        for &s in &self.accepting {
            if s >= n {
                return Err(SqfaError::ill_formed(
                    loc("accepting"),
                    format!("state id {s} out of range"),
                ));
            }
        }

        // States that scan: any state with at least one step entry must have
        // one per tape symbol, with a well-formed gate and in-range target.
        let scanning: BTreeSet<StateId> = self.steps.keys().map(|&(s, _)| s).collect();
        if !scanning.contains(&self.initial_classical) {
            return Err(SqfaError::ill_formed(
                loc("initial_classical"),
                "initial state has no step entries",
            ));
        }
        for &s in &scanning {
            for sym in self.tape_syms() {
                let at = format!(
                    "{}.steps[{}, {}]",
                    self.name,
                    self.classical_states[s],
                    sym.describe()
                );
                let Some((g, t)) = self.steps.get(&(s, sym)) else {
                    return Err(SqfaError::ill_formed(
                        at,
                        "missing step (one-way scan must be total)",
                    ));
                };
                if g.dim() != self.quantum_dim {
                    return Err(SqfaError::ill_formed(
                        at,
                        format!(
                            "gate dimension {} does not match quantum_dim {}",
                            g.dim(),
                            self.quantum_dim
                        ),
                    ));
                }
                g.matrix()?.check_unitary(&at)?;
                if *t >= n {
                    return Err(SqfaError::ill_formed(at, "target state out of range"));
                }
                // Mid-sweep targets must be able to keep scanning; targets of
                // the right-marker step feed the final measurement instead.
                if sym != TapeSym::Right && !scanning.contains(t) {
                    return Err(SqfaError::ill_formed(
                        at,
                        format!(
                            "target {} cannot process the next tape cell",
                            self.classical_states[*t]
                        ),
                    ));
                }
            }
        }

        // Verdicts must cover every (right-marker target, outcome) pair.
        for (&(s, sym), &(_, t)) in &self.steps {
            if sym != TapeSym::Right {
                continue;
            }
            for label in self.final_measure.labels() {
                let at = format!(
                    "{}.verdicts[{}, {label}]",
                    self.name, self.classical_states[t]
                );
                let Some(&v) = self.verdicts.get(&(t, label)) else {
                    return Err(SqfaError::ill_formed(
                        at,
                        format!(
                            "no verdict for outcome {label} after right-marker state {} (from {})",
                            self.classical_states[t], self.classical_states[s]
                        ),
                    ));
                };
                if v >= n {
                    return Err(SqfaError::ill_formed(at, "verdict state out of range"));
                }
            }
        }
        Ok(())
    }
}

/// One-way machine with gates materialized once; use for sweeps over many
/// words.
pub struct CompiledOneWay<'m> {
    pub machine: &'m OneWayQcfa,
    gates: BTreeMap<(StateId, TapeSym), (UnitaryOp, StateId)>,
}

impl<'m> CompiledOneWay<'m> {
    pub fn new(machine: &'m OneWayQcfa) -> Result<Self> {
        machine.validate()?;
        let mut gates = BTreeMap::new();
        for (&key, (g, t)) in &machine.steps {
            gates.insert(key, (g.matrix()?, *t));
        }
        Ok(CompiledOneWay { machine, gates })
    }

    /// Run the deterministic part of the machine: the full sweep including
    /// the right-marker step, but not the final measurement. Returns the
    /// classical state and quantum state at the measurement point.
    pub fn evolve(&self, word: &[char]) -> Result<(StateId, StateVector)> {
        let mut s = self.machine.initial_classical;
        let mut v = self.machine.initial_quantum.clone();
        for pos in 0..word.len() + 2 {
            let sym = tape_symbol(word, pos);
            let (u, t) = self.gates.get(&(s, sym)).ok_or_else(|| {
                SqfaError::ill_formed(
                    format!(
                        "{}.steps[{}, {}]",
                        self.machine.name,
                        self.machine.state_name(s),
                        sym.describe()
                    ),
                    "reached a configuration with no step",
                )
            })?;
            v = u.apply(&v);
            s = *t;
        }
        Ok((s, v))
    }

    /// Final-measurement branches for a word: `(verdict state, probability)`,
    /// merged per verdict.
    pub fn verdict_distribution(&self, word: &[char]) -> Result<Vec<(StateId, f64)>> {
        let (s, v) = self.evolve(word)?;
        let mut per_verdict: BTreeMap<StateId, f64> = BTreeMap::new();
        for (label, p, _) in self.machine.final_measure.branch(&v) {
            let &verdict = self.machine.verdicts.get(&(s, label)).ok_or_else(|| {
                SqfaError::ill_formed(
                    format!("{}.verdicts[{}, {label}]", self.machine.name, self.machine.state_name(s)),
                    "missing verdict",
                )
            })?;
            *per_verdict.entry(verdict).or_insert(0.0) += p;
        }
        Ok(per_verdict.into_iter().collect())
    }

    /// Probability that the word is accepted.
    pub fn acceptance_probability(&self, word: &[char]) -> Result<f64> {
        let mut p_acc = 0.0;
        for (verdict, p) in self.verdict_distribution(word)? {
            if self.machine.accepting.contains(&verdict) {
                p_acc += p;
            }
        }
        // Clamp tiny excursions from floating-point accumulation.
        Ok(p_acc.clamp(0.0, 1.0))
    }
}

/// Drop measurement branches below the pruning floor and renormalize the
/// survivors' probabilities — used by analyses that must account for all
/// probability mass.
pub fn renormalized_branches(branches: Vec<(f64, StepBranch)>) -> Vec<(f64, StepBranch)> {
    let total: f64 = branches.iter().map(|(p, _)| p).sum();
    if total <= TOL_PRUNE {
        return Vec::new();
    }
    branches.into_iter().map(|(p, b)| (p / total, b)).collect()
}
