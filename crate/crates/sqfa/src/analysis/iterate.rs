//! Per-iteration analysis of two-way machines.
//!
//! One pass of the halting loop is enumerated branch by branch, from the
//! loop head (the annotated reset state at the left end-marker) until every
//! branch either halts or returns to the loop head. The planar quantum
//! state is tracked symbolically alongside the numeric vector, so that
//! measurement probabilities come out as exact rationals whenever the
//! accumulated rotation angle is a rational multiple of pi; annotated
//! random-walk segments are replaced by their absorption law instead of
//! being unrolled.

use crate::analysis::walk::walk_absorption;
use crate::error::{Result, SqfaError};
use crate::exact::{rat, sin_sq_pi, Prob, Rat, Scalar};
use crate::machine::{tape_symbol, HeadMove, QuantumAction, StateId, TapeSym, TwoWayQcfa};
use crate::quantum::{GateSpec, ProjectiveMeasurement, StateVector, UnitaryOp, TOL_PRUNE};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Symbolic form of a 2-dimensional quantum state reachable by the planar
/// rotation gates: `rotation((r + s*sqrt(2)) * pi)` applied to `|0>`, where
/// both coefficients are rational. `Tilted` covers the state right after a
/// `CosSqRotation` on a basis state, which is all that is needed to make
/// the subsequent measurement exact. Anything else degrades to `Opaque`
/// and the numeric vector takes over.
#[derive(Clone, Debug, PartialEq)]
enum ExactForm {
    Angle { r: Rat, s: Rat },
    Tilted { p0: Rat },
    Opaque,
}

fn mod2(r: Rat) -> Rat {
    let two = rat(2, 1);
    let mut m = &r - (&r / &two).floor() * &two;
    if m.is_negative() {
        m += two;
    }
    m
}

impl ExactForm {
    fn for_initial(v: &StateVector) -> ExactForm {
        if v.dim() == 2
            && (v.amps[0] - 1.0).norm() == 0.0
            && v.amps[1].norm() == 0.0
        {
            ExactForm::Angle { r: Rat::zero(), s: Rat::zero() }
        } else {
            ExactForm::Opaque
        }
    }

    fn apply(&self, g: &GateSpec) -> ExactForm {
        match (self, g) {
            (form, GateSpec::Identity { .. }) => form.clone(),
            (ExactForm::Angle { r, s }, GateSpec::RotationPi { num, den }) if *den != 0 => {
                ExactForm::Angle { r: mod2(r + rat(*num, *den)), s: s.clone() }
            }
            (ExactForm::Angle { r, s }, GateSpec::RotationSqrt2Pi { num, den }) if *den != 0 => {
                ExactForm::Angle { r: r.clone(), s: s + rat(*num, *den) }
            }
            (ExactForm::Angle { r, s }, GateSpec::CosSqRotation { cos_sq }) if s.is_zero() => {
                // On |0> (r = 0 or 1, up to sign) the post-rotation weight
                // on index 0 is cos_sq; on |1> (r = 1/2 or 3/2) it is the
                // complement.
                if r.denom().is_one() {
                    ExactForm::Tilted { p0: cos_sq.clone() }
                } else if (r * rat(2, 1)).denom().is_one() {
                    ExactForm::Tilted { p0: Rat::one() - cos_sq }
                } else {
                    ExactForm::Opaque
                }
            }
            _ => ExactForm::Opaque,
        }
    }

    /// Exact probability of an outcome set, when the form knows it.
    fn outcome_prob(&self, set: &BTreeSet<usize>, dim: usize) -> Option<Rat> {
        if set.len() == dim {
            return Some(Rat::one());
        }
        if dim != 2 || set.len() != 1 {
            return None;
        }
        let on_one = set.contains(&1);
        match self {
            ExactForm::Angle { r, s } if s.is_zero() => {
                let p1 = sin_sq_pi(r)?;
                Some(if on_one { p1 } else { Rat::one() - p1 })
            }
            ExactForm::Tilted { p0 } => {
                Some(if on_one { Rat::one() - p0 } else { p0.clone() })
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
struct QState {
    num: StateVector,
    exact: ExactForm,
}

/// Measurement branches with exact probabilities where available.
/// Collapsing onto a single basis state resets the symbolic form (and the
/// numeric vector) exactly, which is what keeps long runs drift-free.
fn measure_branches(q: &QState, meas: &ProjectiveMeasurement) -> Vec<(i64, Prob, QState)> {
    let dim = meas.dim();
    let mut out = Vec::new();
    for (label, set) in meas.outcomes() {
        let prob = match q.exact.outcome_prob(set, dim) {
            Some(p) => {
                if p.is_zero() {
                    continue;
                }
                Prob::exact(p)
            }
            None => {
                let mass = q.num.mass_on(set);
                if mass < TOL_PRUNE {
                    continue;
                }
                Prob::Approx(mass)
            }
        };
        let collapsed = if set.len() == dim {
            q.clone()
        } else if set.len() == 1 {
            let i = *set.iter().next().unwrap();
            let exact = if dim == 2 {
                ExactForm::Angle {
                    r: if i == 0 { Rat::zero() } else { rat(1, 2) },
                    s: Rat::zero(),
                }
            } else {
                ExactForm::Opaque
            };
            QState { num: StateVector::basis(dim, i), exact }
        } else {
            let mut num = q.num.clone();
            for (k, a) in num.amps.iter_mut().enumerate() {
                if !set.contains(&k) {
                    *a = Default::default();
                }
            }
            num.prune_and_renormalize();
            QState { num, exact: ExactForm::Opaque }
        };
        out.push((*label, prob, collapsed));
    }
    out
}

/// The law of one iteration of the halting loop on a fixed input word.
/// `p_accept + p_reject + p_continue = 1`; `expected_steps` is the
/// unconditional expected number of classical transitions in the pass.
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub p_accept: Prob,
    pub p_reject: Prob,
    pub p_continue: Prob,
    pub expected_steps: Scalar,
    /// Number of distinct leaves the enumeration produced.
    pub branches: usize,
}

enum Table {
    Unitary { spec: GateSpec, matrix: UnitaryOp, next: StateId, mv: HeadMove },
    Measure { meas: ProjectiveMeasurement, arms: BTreeMap<i64, (StateId, HeadMove)> },
}

struct Node {
    p: Prob,
    classical: StateId,
    head: usize,
    q: QState,
    steps: Scalar,
    depth: u32,
}

pub fn iteration_analysis(machine: &TwoWayQcfa, word: &str) -> Result<IterationOutcome> {
    machine.validate()?;
    let chars: Vec<char> = word.chars().collect();
    for &c in &chars {
        if !machine.input_alphabet.contains(&c) {
            return Err(SqfaError::InvalidArgument(format!(
                "symbol '{c}' is not in the input alphabet of {}",
                machine.name
            )));
        }
    }
    let n = chars.len();

    let anchor = machine.annotations.reset_state.unwrap_or(machine.initial_classical);
    if anchor != machine.initial_classical {
        return Err(SqfaError::Unsupported(format!(
            "loop analysis needs the reset state to be the initial state, but {} resets to {}",
            machine.name,
            machine.state_name(anchor)
        )));
    }
    if machine.is_halting(machine.initial_classical) {
        let accept = machine.accepting.contains(&machine.initial_classical);
        return Ok(IterationOutcome {
            p_accept: if accept { Prob::one() } else { Prob::zero() },
            p_reject: if accept { Prob::zero() } else { Prob::one() },
            p_continue: Prob::zero(),
            expected_steps: Scalar::zero(),
            branches: 1,
        });
    }

    // Materialize the action tables once, keeping the gate specs around for
    // the symbolic updates.
    let mut tables: BTreeMap<(StateId, TapeSym), Table> = BTreeMap::new();
    for ((s, sym), action) in &machine.theta {
        if machine.is_halting(*s) {
            continue;
        }
        let table = match action {
            QuantumAction::Unitary(g) => {
                let &(next, mv) = machine.delta_unitary.get(&(*s, *sym)).ok_or_else(|| {
                    SqfaError::ill_formed(
                        &machine.name,
                        format!("missing transition for state {s} on {}", sym.describe()),
                    )
                })?;
                Table::Unitary { spec: g.clone(), matrix: g.matrix()?, next, mv }
            }
            QuantumAction::Measure(m) => {
                let mut arms = BTreeMap::new();
                for label in m.labels() {
                    let &(next, mv) =
                        machine.delta_measure.get(&(*s, *sym, label)).ok_or_else(|| {
                            SqfaError::ill_formed(
                                &machine.name,
                                format!("missing arm {label} for state {s} on {}", sym.describe()),
                            )
                        })?;
                    arms.insert(label, (next, mv));
                }
                Table::Measure { meas: m.clone(), arms }
            }
        };
        tables.insert((*s, *sym), table);
    }

    let walk_entries: BTreeSet<StateId> =
        machine.annotations.walks.iter().map(|w| w.entry).collect();

    let init_q = QState {
        num: machine.initial_quantum.clone(),
        exact: ExactForm::for_initial(&machine.initial_quantum),
    };
    let quantum_close = |v: &StateVector| {
        v.amps
            .iter()
            .zip(&machine.initial_quantum.amps)
            .all(|(a, b)| (a - b).norm() < 1e-9)
    };

    let depth_budget: u32 = 10_000 + 200 * (n as u32 + 2);
    let node_budget: usize = 1_000_000;
    let mut nodes = 0usize;
    let mut leaves = 0usize;

    let mut p_acc = Prob::zero();
    let mut p_rej = Prob::zero();
    let mut p_cont = Prob::zero();
    let mut e_steps = Scalar::zero();

    let mut stack = vec![Node {
        p: Prob::one(),
        classical: machine.initial_classical,
        head: 0,
        q: init_q.clone(),
        steps: Scalar::zero(),
        depth: 0,
    }];

    // Halt targets and pushes share this bookkeeping.
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > node_budget {
            return Err(SqfaError::Nontermination(format!(
                "loop analysis of {} on '{word}' exceeded {node_budget} branches",
                machine.name
            )));
        }

        // Renewal leaf: back at the loop head with the quantum state reset.
        if node.depth > 0 && node.classical == anchor && node.head == 0 {
            let same = match (&node.q.exact, &init_q.exact) {
                (ExactForm::Angle { r, s }, ExactForm::Angle { r: r0, s: s0 }) => {
                    r == r0 && s == s0
                }
                _ => false,
            };
            if !same && !quantum_close(&node.q.num) {
                return Err(SqfaError::Unsupported(format!(
                    "{} re-enters its loop head with a changed quantum state; \
                     the renewal analysis does not apply",
                    machine.name
                )));
            }
            p_cont = p_cont.add(&node.p);
            e_steps = e_steps.add(&node.p.mul(&node.steps));
            leaves += 1;
            continue;
        }

        // Annotated walk segment: substitute the absorption law.
        if node.head == 1 && n >= 1 && walk_entries.contains(&node.classical) {
            if node.q.num.mass_on(&BTreeSet::from([0])) < 1.0 - 1e-9 {
                return Err(SqfaError::Unsupported(format!(
                    "{} enters walk state {} with the coin away from its origin",
                    machine.name,
                    machine.state_name(node.classical)
                )));
            }
            let stats = walk_absorption(n as u64)?;
            let sides = [
                (stats.p_right, stats.machine_steps_right, n + 1),
                (1.0 - stats.p_right, stats.machine_steps_left, 0),
            ];
            for (p_side, extra, new_head) in sides {
                if p_side < TOL_PRUNE {
                    continue;
                }
                if node.depth + 1 > depth_budget {
                    return Err(budget_error(machine, word));
                }
                stack.push(Node {
                    p: node.p.mul(&Prob::Approx(p_side)),
                    classical: node.classical,
                    head: new_head,
                    q: node.q.clone(),
                    steps: node.steps.add(&Scalar::Approx(extra)),
                    depth: node.depth + 1,
                });
            }
            continue;
        }

        let sym = tape_symbol(&chars, node.head);
        let Some(table) = tables.get(&(node.classical, sym)) else {
            return Err(SqfaError::ill_formed(
                &machine.name,
                format!(
                    "no action for state {} on {}",
                    machine.state_name(node.classical),
                    sym.describe()
                ),
            ));
        };

        let mut emit = |p: Prob,
                        next: StateId,
                        mv: HeadMove,
                        q: QState,
                        steps: Scalar,
                        depth: u32,
                        stack: &mut Vec<Node>|
         -> Result<()> {
            let head = match mv {
                HeadMove::Left => node.head.checked_sub(1).ok_or_else(|| {
                    SqfaError::ill_formed(&machine.name, "head moved off the left end".to_string())
                })?,
                HeadMove::Stay => node.head,
                HeadMove::Right => {
                    if node.head + 1 > n + 1 {
                        return Err(SqfaError::ill_formed(
                            &machine.name,
                            "head moved off the right end".to_string(),
                        ));
                    }
                    node.head + 1
                }
            };
            if machine.accepting.contains(&next) {
                p_acc = p_acc.add(&p);
                e_steps = e_steps.add(&p.mul(&steps));
                leaves += 1;
            } else if machine.rejecting.contains(&next) {
                p_rej = p_rej.add(&p);
                e_steps = e_steps.add(&p.mul(&steps));
                leaves += 1;
            } else {
                if depth > depth_budget {
                    return Err(budget_error(machine, word));
                }
                stack.push(Node { p, classical: next, head, q, steps, depth });
            }
            Ok(())
        };

        match table {
            Table::Unitary { spec, matrix, next, mv } => {
                let q2 = QState { num: matrix.apply(&node.q.num), exact: node.q.exact.apply(spec) };
                let steps2 = node.steps.add(&Scalar::one());
                emit(node.p.clone(), *next, *mv, q2, steps2, node.depth + 1, &mut stack)?;
            }
            Table::Measure { meas, arms } => {
                let steps2 = node.steps.add(&Scalar::one());
                for (label, prob, q2) in measure_branches(&node.q, meas) {
                    let &(next, mv) = arms.get(&label).ok_or_else(|| {
                        SqfaError::ill_formed(
                            &machine.name,
                            format!("no arm for measurement outcome {label}"),
                        )
                    })?;
                    emit(
                        node.p.mul(&prob),
                        next,
                        mv,
                        q2,
                        steps2.clone(),
                        node.depth + 1,
                        &mut stack,
                    )?;
                }
            }
        }
    }

    let total = p_acc.add(&p_rej).add(&p_cont);
    if (total.value() - 1.0).abs() > 1e-6 {
        return Err(SqfaError::ill_formed(
            &machine.name,
            format!("iteration branch probabilities sum to {}", total.value()),
        ));
    }

    Ok(IterationOutcome {
        p_accept: p_acc,
        p_reject: p_rej,
        p_continue: p_cont,
        expected_steps: e_steps,
        branches: leaves,
    })
}

fn budget_error(machine: &TwoWayQcfa, word: &str) -> SqfaError {
    SqfaError::Nontermination(format!(
        "a branch of {} on '{word}' neither halted nor returned to the loop head within budget",
        machine.name
    ))
}

/// Closed-form totals of the halting loop under the model that treats the
/// per-iteration accept and reject checks as independent events: with
/// per-pass probabilities `a` and `r`, the accept series sums to
/// `a / (a + r - a*r)`, the reject series to `r / (a + r - a*r)`, and the
/// expected number of iterations to `1 / (a + r - a*r)`.
///
/// When both `a` and `r` are positive the two series overlap (a pass can
/// fire both checks) and the totals exceed 1 by the overlap mass. The
/// totals are exact whenever one of the two probabilities is zero — which
/// is the case for every promise-respecting input of the machines built
/// here, since their loops are one-sided.
#[derive(Clone, Debug)]
pub struct LoopTotals {
    pub p_accept_total: Prob,
    pub p_reject_total: Prob,
    pub expected_iterations: Scalar,
}

pub fn loop_total(p_accept: &Prob, p_reject: &Prob) -> Result<LoopTotals> {
    for p in [p_accept, p_reject] {
        let v = p.value();
        if !(0.0..=1.0 + 1e-12).contains(&v) {
            return Err(SqfaError::InvalidArgument(format!(
                "per-iteration probability {v} is outside [0, 1]"
            )));
        }
    }
    let denom = p_accept.add(p_reject).sub(&p_accept.mul(p_reject));
    if denom.is_exact_zero() || denom.value() <= 0.0 {
        return Err(SqfaError::Nontermination(
            "the loop can neither accept nor reject: totals diverge".to_string(),
        ));
    }
    let div = |num: &Scalar| {
        num.div(&denom).ok_or_else(|| {
            SqfaError::InvalidArgument("degenerate loop denominator".to_string())
        })
    };
    Ok(LoopTotals {
        p_accept_total: div(p_accept)?,
        p_reject_total: div(p_reject)?,
        expected_iterations: div(&Scalar::one())?,
    })
}
