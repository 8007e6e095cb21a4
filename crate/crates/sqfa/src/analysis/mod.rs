//! Exact analysis: acceptance probabilities and expected running times for
//! every machine model, plus verification against acceptance modes and the
//! state-complexity report.

pub mod iterate;
pub mod oneway;
pub mod report;
pub mod verify;
pub mod walk;

use crate::error::{Result, SqfaError};
use crate::exact::{Prob, Scalar};
use crate::machine::Machine;
use crate::quantum::TOL_PRUNE;

/// Total acceptance law of a machine on one word.
#[derive(Clone, Debug)]
pub struct AcceptanceResult {
    pub p_accept: Prob,
    pub p_reject: Prob,
    /// Expected number of classical transitions until halting (for a DFA or
    /// measure-once machine: the number of symbols consumed).
    pub expected_steps: Scalar,
}

/// Acceptance probabilities and expected steps, computed analytically.
///
/// Two-way machines are composed from their per-iteration law by the
/// renewal argument: if one pass accepts with probability `a`, rejects with
/// `r` and otherwise restarts, the totals are `a/(a+r)` and `r/(a+r)`, and
/// the expected step count is the per-pass expectation divided by `a+r`.
/// For the one-sided machines built here one of `a`, `r` is always zero,
/// so these totals coincide with the independent-checks closed forms of
/// [`iterate::loop_total`]; when both are positive the renewal composition
/// is the exact law of the machine (the two checks are mutually exclusive
/// within a pass), which is what Monte Carlo runs converge to.
pub fn acceptance(machine: &Machine, word: &str) -> Result<AcceptanceResult> {
    let chars = machine.check_word(word)?;
    match machine {
        Machine::Dfa(d) => {
            let accepted = d.run(word)?;
            let (one, zero) = (Prob::one(), Prob::zero());
            Ok(AcceptanceResult {
                p_accept: if accepted { one.clone() } else { zero.clone() },
                p_reject: if accepted { zero } else { one },
                expected_steps: Scalar::from_u64(chars.len() as u64),
            })
        }
        Machine::Moqfa(m) => {
            let p = m.acceptance_probability(&chars)?;
            Ok(AcceptanceResult {
                p_accept: Prob::Approx(p),
                p_reject: Prob::Approx(1.0 - p),
                expected_steps: Scalar::from_u64(chars.len() as u64),
            })
        }
        Machine::OneWay(m) => oneway::acceptance_oneway(m, &chars),
        Machine::TwoWay(m) => {
            let it = iterate::iteration_analysis(m, word)?;
            if it.p_continue.is_exact_zero() || it.p_continue.value() < TOL_PRUNE {
                return Ok(AcceptanceResult {
                    p_accept: it.p_accept,
                    p_reject: it.p_reject,
                    expected_steps: it.expected_steps,
                });
            }
            let halt = it.p_accept.add(&it.p_reject);
            if halt.is_exact_zero() || halt.value() <= 0.0 {
                return Err(SqfaError::Nontermination(format!(
                    "{} halts with probability zero on '{word}'",
                    m.name
                )));
            }
            let over_halt = |x: &Scalar| {
                x.div(&halt).ok_or_else(|| {
                    SqfaError::Nontermination(format!(
                        "{} halts with probability zero on '{word}'",
                        m.name
                    ))
                })
            };
            Ok(AcceptanceResult {
                p_accept: over_halt(&it.p_accept)?,
                p_reject: over_halt(&it.p_reject)?,
                expected_steps: over_halt(&it.expected_steps)?,
            })
        }
    }
}
