//! Seeded Monte Carlo simulation of single runs and aggregate estimates.
//!
//! Every run is a pure function of `(machine, word, seed)`; estimates fan
//! runs out over independent ChaCha streams so the aggregate is identical
//! no matter how the work is scheduled.
//!
//! The sampler for a `(machine, word)` pair is built once and reused across
//! runs. For the two-qubit two-way machines the inner loop runs on a flat
//! action table with the amplitudes held in two registers, so a run costs a
//! handful of arithmetic ops per transition and one uniform draw per
//! measurement.

use crate::error::{Result, SqfaError};
use crate::machine::qcfa::{CompiledAction, CompiledOneWay, CompiledTwoWay};
use crate::machine::{Machine, Membership};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RunOutcome {
    Accept,
    Reject,
    /// Hit the step cap before halting.
    Censored,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunResult {
    pub outcome: RunOutcome,
    /// Classical transitions taken (two-way) or cells consumed plus the
    /// final verdict lookup convention of the model (one-way).
    pub steps: u64,
    /// Times the machine passed through its loop anchor, counting the
    /// initial entry; 1 for machines without a restart loop.
    pub iterations: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub n_runs: u64,
    pub censored: u64,
    /// Acceptance frequency among uncensored runs.
    pub p_accept_hat: f64,
    /// Three-sigma binomial half-width around `p_accept_hat`.
    pub ci_halfwidth: f64,
    /// Mean steps over uncensored runs.
    pub mean_steps: f64,
    pub mean_iterations: f64,
}

/// Default cap: generous multiple of the analytic expectation when the
/// caller knows one, otherwise ten million transitions.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// One-shot sampling state for a fixed `(machine, word)` pair.
enum Sampler<'m> {
    /// Deterministic models: every run is the same.
    Fixed { accept: bool, steps: u64 },
    /// Models whose run reduces to a coin with known bias.
    Bernoulli { p: f64, steps: u64 },
    /// One-way machines: the verdict distribution is fixed by the word;
    /// runs sample from it. Branches hold cumulative probabilities.
    Verdicts { cumulative: Vec<(bool, f64)>, steps: u64 },
    TwoWay(TwoWaySampler<'m>),
}

struct TwoWaySampler<'m> {
    compiled: CompiledTwoWay<'m>,
    slots: Vec<usize>,
    fast: FastTable,
}

/// Register behavior the flat tables are generic over. The constructed
/// machines use only real gates, so the common case runs on two `f64`
/// registers; complex entries fall back to `Complex64` registers.
trait Register: Copy + Send + Sync {
    fn from_amplitude(a: Complex64) -> Option<Self>;
    fn norm_sqr(self) -> f64;
    const ZERO: Self;
    const ONE: Self;
    fn mul_add2(u: &[Self; 4], a0: Self, a1: Self) -> (Self, Self);
}

impl Register for f64 {
    fn from_amplitude(a: Complex64) -> Option<f64> {
        (a.im == 0.0).then_some(a.re)
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    fn mul_add2(u: &[f64; 4], a0: f64, a1: f64) -> (f64, f64) {
        (u[0] * a0 + u[1] * a1, u[2] * a0 + u[3] * a1)
    }
}

impl Register for Complex64 {
    fn from_amplitude(a: Complex64) -> Option<Complex64> {
        Some(a)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    fn mul_add2(u: &[Complex64; 4], a0: Complex64, a1: Complex64) -> (Complex64, Complex64) {
        (u[0] * a0 + u[1] * a1, u[2] * a0 + u[3] * a1)
    }
}

/// Flat action table for two-way machines with a 2-dimensional register and
/// only binary `{|0>},{|1>}` measurements — which covers every machine this
/// crate constructs. Collapse snaps the register to an exact basis state
/// (the dropped global phase is unobservable), so long runs accumulate no
/// norm drift.
enum FastTable {
    Real(ActionTable<f64>),
    Complex(ActionTable<Complex64>),
    /// Registers above dimension 2 or non-binary measurements: runs use the
    /// reference loop over the compiled machine instead.
    Unsupported,
}

impl FastTable {
    fn build(compiled: &CompiledTwoWay) -> FastTable {
        if let Some(t) = ActionTable::<f64>::build(compiled) {
            FastTable::Real(t)
        } else if let Some(t) = ActionTable::<Complex64>::build(compiled) {
            FastTable::Complex(t)
        } else {
            FastTable::Unsupported
        }
    }
}

struct ActionTable<R> {
    nsyms: usize,
    actions: Vec<FastAction<R>>,
    /// 0 = keep running, 1 = accept, 2 = reject; indexed by classical state.
    halt: Vec<u8>,
    initial_state: u32,
    initial_amps: (R, R),
}

#[derive(Clone, Copy)]
enum FastAction<R> {
    Missing,
    Unitary { u: [R; 4], next: u32, dh: i32 },
    /// Binary measurement in the computational basis: arm 0 fires on
    /// outcome `{|0>}`, arm 1 on `{|1>}`.
    Binary { next: [u32; 2], dh: [i32; 2] },
}

impl<R: Register> ActionTable<R> {
    fn build(compiled: &CompiledTwoWay) -> Option<ActionTable<R>> {
        let m = compiled.machine;
        if m.quantum_dim != 2 || m.initial_quantum.dim() != 2 {
            return None;
        }
        let nsyms = 2 + m.input_alphabet.len();
        let nstates = m.classical_states.len();
        let mut actions = vec![FastAction::Missing; nstates * nsyms];
        for s in 0..nstates {
            for slot in 0..nsyms {
                let Some(action) = compiled.action(s, slot) else { continue };
                actions[s * nsyms + slot] = match action {
                    CompiledAction::Unitary { u, next, mv } => {
                        if u.dim() != 2 {
                            return None;
                        }
                        let entry = |i, j| R::from_amplitude(u.at(i, j));
                        FastAction::Unitary {
                            u: [entry(0, 0)?, entry(0, 1)?, entry(1, 0)?, entry(1, 1)?],
                            next: *next as u32,
                            dh: mv.offset() as i32,
                        }
                    }
                    CompiledAction::Measure { meas, arms } => {
                        let outcomes = meas.outcomes();
                        if meas.dim() != 2 || outcomes.len() != 2 {
                            return None;
                        }
                        let mut next = [0u32; 2];
                        let mut dh = [0i32; 2];
                        for (label, set) in outcomes {
                            if set.len() != 1 {
                                return None;
                            }
                            let basis = *set.iter().next().expect("nonempty");
                            let &(n, mv) = arms.get(label)?;
                            next[basis] = n as u32;
                            dh[basis] = mv.offset() as i32;
                        }
                        FastAction::Binary { next, dh }
                    }
                };
            }
        }
        let halt = (0..nstates)
            .map(|s| {
                if m.accepting.contains(&s) {
                    1
                } else if m.rejecting.contains(&s) {
                    2
                } else {
                    0
                }
            })
            .collect();
        Some(ActionTable {
            nsyms,
            actions,
            halt,
            initial_state: m.initial_classical as u32,
            initial_amps: (
                R::from_amplitude(m.initial_quantum.amps[0])?,
                R::from_amplitude(m.initial_quantum.amps[1])?,
            ),
        })
    }

    fn run(&self, slots: &[usize], rng: &mut ChaCha8Rng, step_cap: u64) -> Result<RunResult> {
        let (mut a0, mut a1) = self.initial_amps;
        let mut s = self.initial_state as usize;
        let mut head: i64 = 0;
        let tape_len = slots.len() as i64;
        let anchor = (self.initial_state as usize, 0i64);
        let mut steps: u64 = 0;
        let mut iterations: u64 = 1;
        while steps < step_cap {
            let dh = match self.actions[s * self.nsyms + slots[head as usize]] {
                FastAction::Missing => {
                    return Err(SqfaError::ill_formed(
                        format!("state {s}"),
                        "missing transition",
                    ));
                }
                FastAction::Unitary { u, next, dh } => {
                    (a0, a1) = R::mul_add2(&u, a0, a1);
                    s = next as usize;
                    dh
                }
                FastAction::Binary { next, dh } => {
                    let m0 = a0.norm_sqr();
                    let p0 = m0 / (m0 + a1.norm_sqr());
                    let outcome = usize::from(rng.gen::<f64>() >= p0);
                    (a0, a1) = if outcome == 0 { (R::ONE, R::ZERO) } else { (R::ZERO, R::ONE) };
                    s = next[outcome] as usize;
                    dh[outcome]
                }
            };
            steps += 1;
            head += dh as i64;
            if head < 0 || head >= tape_len {
                return Err(SqfaError::ill_formed(
                    format!("state {s}"),
                    format!("head moved off the tape (to position {head})"),
                ));
            }
            match self.halt[s] {
                1 => return Ok(RunResult { outcome: RunOutcome::Accept, steps, iterations }),
                2 => return Ok(RunResult { outcome: RunOutcome::Reject, steps, iterations }),
                _ => {}
            }
            if (s, head) == anchor {
                iterations += 1;
            }
        }
        Ok(RunResult { outcome: RunOutcome::Censored, steps, iterations })
    }
}

impl<'m> Sampler<'m> {
    fn new(machine: &'m Machine, word: &str) -> Result<Self> {
        let chars = machine.check_word(word)?;
        match machine {
            Machine::Dfa(dfa) => Ok(Sampler::Fixed {
                accept: dfa.run(word)?,
                steps: chars.len() as u64,
            }),
            Machine::Moqfa(m) => Ok(Sampler::Bernoulli {
                p: m.acceptance_probability(&chars)?.clamp(0.0, 1.0),
                steps: chars.len() as u64,
            }),
            Machine::OneWay(m) => {
                let compiled = CompiledOneWay::new(m)?;
                let branches = compiled.verdict_distribution(&chars)?;
                let mut cumulative = Vec::with_capacity(branches.len());
                let mut acc = 0.0;
                for (verdict, w) in branches {
                    acc += w.max(0.0);
                    cumulative.push((m.accepting.contains(&verdict), acc));
                }
                Ok(Sampler::Verdicts { cumulative, steps: chars.len() as u64 + 2 })
            }
            Machine::TwoWay(m) => {
                let compiled = CompiledTwoWay::new(m)?;
                let slots = compiled.tape_slots(&chars)?;
                let fast = FastTable::build(&compiled);
                Ok(Sampler::TwoWay(TwoWaySampler { compiled, slots, fast }))
            }
        }
    }

    fn run(&self, rng: &mut ChaCha8Rng, step_cap: u64) -> Result<RunResult> {
        match self {
            Sampler::Fixed { accept, steps } => Ok(one_shot(*accept, *steps)),
            Sampler::Bernoulli { p, steps } => Ok(one_shot(rng.gen_bool(*p), *steps)),
            Sampler::Verdicts { cumulative, steps } => {
                let total = cumulative.last().map_or(0.0, |&(_, c)| c);
                let u = rng.gen::<f64>() * total;
                let accept = cumulative
                    .iter()
                    .find(|&&(_, c)| u < c)
                    .or(cumulative.last())
                    .map_or(false, |&(a, _)| a);
                Ok(one_shot(accept, *steps))
            }
            Sampler::TwoWay(t) => match &t.fast {
                FastTable::Real(table) => table.run(&t.slots, rng, step_cap),
                FastTable::Complex(table) => table.run(&t.slots, rng, step_cap),
                FastTable::Unsupported => run_two_way(&t.compiled, &t.slots, rng, step_cap),
            },
        }
    }
}

fn one_shot(accept: bool, steps: u64) -> RunResult {
    RunResult {
        outcome: if accept { RunOutcome::Accept } else { RunOutcome::Reject },
        steps,
        iterations: 1,
    }
}

/// Simulate one run. Deterministic in `(machine, word, seed)`.
pub fn simulate_run(machine: &Machine, word: &str, seed: u64, step_cap: u64) -> Result<RunResult> {
    let sampler = Sampler::new(machine, word)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sampler.run(&mut rng, step_cap)
}

/// Reference loop for two-way machines the fast table cannot express
/// (registers above dimension 2 or non-binary measurements).
fn run_two_way(
    compiled: &CompiledTwoWay,
    slots: &[usize],
    rng: &mut ChaCha8Rng,
    step_cap: u64,
) -> Result<RunResult> {
    let machine = compiled.machine;
    let mut classical = machine.initial_classical;
    let mut head: usize = 0;
    let mut q = machine.initial_quantum.clone();
    let mut steps: u64 = 0;
    let anchor = (classical, head);
    let mut iterations: u64 = 1;
    while steps < step_cap {
        let action = compiled.action(classical, slots[head]).ok_or_else(|| {
            SqfaError::ill_formed(
                format!("{}.theta[{}]", machine.name, machine.state_name(classical)),
                "missing transition",
            )
        })?;
        let (next, mv) = match action {
            CompiledAction::Unitary { u, next, mv } => {
                q = u.apply(&q);
                (*next, *mv)
            }
            CompiledAction::Measure { meas, arms } => {
                let label = meas.sample_collapse(&mut q, rng.gen::<f64>());
                let &(next, mv) = arms.get(&label).expect("arms cover all labels");
                (next, mv)
            }
        };
        steps += 1;
        classical = next;
        let h = head as i64 + mv.offset();
        if h < 0 || h >= slots.len() as i64 {
            return Err(SqfaError::ill_formed(
                format!("{}.delta[{}]", machine.name, machine.state_name(classical)),
                format!("head moved off the tape (to position {h})"),
            ));
        }
        head = h as usize;
        if machine.is_halting(classical) {
            return Ok(RunResult {
                outcome: if machine.accepting.contains(&classical) {
                    RunOutcome::Accept
                } else {
                    RunOutcome::Reject
                },
                steps,
                iterations,
            });
        }
        if (classical, head) == anchor {
            iterations += 1;
        }
    }
    Ok(RunResult { outcome: RunOutcome::Censored, steps, iterations })
}

/// Aggregate `n_runs` independent runs. Run `i` draws from stream `i` of a
/// ChaCha generator seeded with `seed`, so the estimate does not depend on
/// scheduling order, only on `(machine, word, n_runs, seed, step_cap)`.
pub fn estimate(
    machine: &Machine,
    word: &str,
    n_runs: u64,
    seed: u64,
    step_cap: u64,
) -> Result<Estimate> {
    if n_runs == 0 {
        return Err(SqfaError::InvalidArgument("n_runs must be positive".into()));
    }
    let sampler = Sampler::new(machine, word)?;
    let totals = (0..n_runs)
        .into_par_iter()
        .map(|run| -> Result<(u64, u64, u128, u128)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run);
            let r = sampler.run(&mut rng, step_cap)?;
            Ok(match r.outcome {
                RunOutcome::Accept => (1, 0, r.steps as u128, r.iterations as u128),
                RunOutcome::Reject => (0, 0, r.steps as u128, r.iterations as u128),
                RunOutcome::Censored => (0, 1, 0, 0),
            })
        })
        .try_reduce(
            || (0, 0, 0, 0),
            |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)),
        )?;
    let (accepts, censored, step_sum, iter_sum) = totals;
    let live = n_runs - censored;
    if live == 0 {
        return Err(SqfaError::Unsupported(format!(
            "all {n_runs} runs were censored at the step cap {step_cap}; \
             no estimate is possible"
        )));
    }
    let p = accepts as f64 / live as f64;
    Ok(Estimate {
        n_runs,
        censored,
        p_accept_hat: p,
        ci_halfwidth: 3.0 * (p * (1.0 - p) / live as f64).sqrt(),
        mean_steps: step_sum as f64 / live as f64,
        mean_iterations: iter_sum as f64 / live as f64,
    })
}

/// Convenience cap for a word with known analytic expectation.
pub fn cap_for(expected_steps: f64) -> u64 {
    if expected_steps.is_finite() && expected_steps > 0.0 {
        ((expected_steps * 100.0).ceil() as u64).max(1_000)
    } else {
        DEFAULT_STEP_CAP
    }
}

/// Membership is not used by the simulator itself; re-exported check for
/// callers pairing estimates with ground truth.
pub fn ground_truth(machine: &Machine, word: &str) -> Option<Membership> {
    machine.language().map(|l| l.classify(word))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::acceptance;
    use crate::constructions::{dfa_mod, eq_1qcfa, len_2qcfa, mod_2qcfa};

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let m = Machine::TwoWay(mod_2qcfa(3, 0.25).unwrap());
        let a = simulate_run(&m, "aaaa", 7, 1_000_000).unwrap();
        let b = simulate_run(&m, "aaaa", 7, 1_000_000).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn fast_and_reference_loops_agree_in_distribution() {
        let machine = Machine::TwoWay(mod_2qcfa(3, 0.25).unwrap());
        let sampler = match Sampler::new(&machine, "aaaa").unwrap() {
            Sampler::TwoWay(t) => t,
            _ => unreachable!(),
        };
        // The constructed machines are all-real: they get the f64 table.
        let fast = match &sampler.fast {
            FastTable::Real(t) => t,
            _ => panic!("expected the real-register fast table"),
        };
        let runs = 20_000u64;
        let mut fast_acc = 0u64;
        let mut slow_acc = 0u64;
        let mut fast_steps = 0u64;
        let mut slow_steps = 0u64;
        for i in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(4242);
            rng.set_stream(i);
            let r = fast.run(&sampler.slots, &mut rng, 1_000_000).unwrap();
            fast_acc += u64::from(r.outcome == RunOutcome::Accept);
            fast_steps += r.steps;
            let mut rng = ChaCha8Rng::seed_from_u64(4242);
            rng.set_stream(i);
            let r = run_two_way(&sampler.compiled, &sampler.slots, &mut rng, 1_000_000).unwrap();
            slow_acc += u64::from(r.outcome == RunOutcome::Accept);
            slow_steps += r.steps;
        }
        // Same seeds, same machine: the paths consume randomness
        // identically, so the tallies agree exactly.
        assert_eq!(fast_acc, slow_acc);
        assert_eq!(fast_steps, slow_steps);
    }

    #[test]
    fn dfa_runs_are_exact() {
        let m = Machine::Dfa(dfa_mod(3).unwrap());
        let r = simulate_run(&m, "aaa", 0, 100).unwrap();
        assert_eq!(r.outcome, RunOutcome::Accept);
        assert_eq!(r.steps, 3);
        let r = simulate_run(&m, "aaaa", 0, 100).unwrap();
        assert_eq!(r.outcome, RunOutcome::Reject);
    }

    #[test]
    fn equality_runs_take_exactly_the_scan_length() {
        // One-way runs cost |w| + 2 steps: both markers are read, the
        // final verdict lookup is free. For x#y that is 2n + 3.
        let m = Machine::OneWay(eq_1qcfa(4).unwrap());
        let r = simulate_run(&m, "0110#0110", 42, 100).unwrap();
        assert_eq!(r.outcome, RunOutcome::Accept);
        assert_eq!(r.steps, 11);
        // Hamming distance n/2 = 2: rejected with certainty.
        let r = simulate_run(&m, "0110#0101", 42, 100).unwrap();
        assert_eq!(r.outcome, RunOutcome::Reject);
    }

    #[test]
    fn mod_member_estimate_matches_the_exact_law() {
        let machine = Machine::TwoWay(mod_2qcfa(3, 0.25).unwrap());
        let word = "aaa";
        let exact = acceptance(&machine, word).unwrap();
        let est = estimate(&machine, word, 20_000, 12345, 100_000).unwrap();
        assert_eq!(est.censored, 0);
        assert!((est.p_accept_hat - 1.0).abs() < 1e-12, "members always accept");
        let es = exact.expected_steps.value();
        // Steps have heavier tails than a binomial; allow 5% relative slack
        // at this run count.
        assert!(
            (est.mean_steps - es).abs() < 0.05 * es,
            "mean steps {} vs analytic {es}",
            est.mean_steps
        );
        // Geometric with success probability 4eps/p^2 = 1/9: mean 9.
        assert!((est.mean_iterations - 9.0).abs() < 0.3, "{}", est.mean_iterations);
    }

    #[test]
    fn mod_nonmember_estimate_matches_the_renewal_law() {
        let machine = Machine::TwoWay(mod_2qcfa(3, 0.25).unwrap());
        let word = "aaaa";
        let exact = acceptance(&machine, word).unwrap();
        let est = estimate(&machine, word, 20_000, 999, 100_000).unwrap();
        let pa = exact.p_accept.value();
        assert!(
            (est.p_accept_hat - pa).abs() <= est.ci_halfwidth + 1e-12,
            "phat {} exact {pa} ci {}",
            est.p_accept_hat,
            est.ci_halfwidth
        );
    }

    #[test]
    fn len_member_estimate_converges() {
        let machine = Machine::TwoWay(len_2qcfa(2, 0.5).unwrap());
        let word = "aa";
        let exact = acceptance(&machine, word).unwrap();
        let es = exact.expected_steps.value();
        let est = estimate(&machine, word, 4_000, 77, cap_for(es)).unwrap();
        assert!((est.p_accept_hat - 1.0).abs() < 1e-12);
        assert!((est.censored as f64) < 0.01 * 4_000.0);
        assert!(
            (est.mean_steps - es).abs() < 0.10 * es,
            "mean steps {} vs analytic {es}",
            est.mean_steps
        );
    }

    #[test]
    fn censoring_is_reported_not_fatal() {
        let machine = Machine::TwoWay(mod_2qcfa(5, 0.25).unwrap());
        // Cap far below one pass over the word: every run censors.
        let err = estimate(&machine, "aaaaa", 50, 3, 4).unwrap_err();
        assert!(err.to_string().contains("censored"));
        let r = simulate_run(&machine, "aaaaa", 3, 4).unwrap();
        assert_eq!(r.outcome, RunOutcome::Censored);
        assert!(r.steps >= 4);
    }
}
