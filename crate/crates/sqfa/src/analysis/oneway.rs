//! Acceptance of one-way machines by direct evolution: there is no loop to
//! analyze, so the probabilities are read off the final verdict
//! distribution.

use crate::analysis::AcceptanceResult;
use crate::error::Result;
use crate::exact::{Prob, Scalar};
use crate::machine::qcfa::{CompiledOneWay, OneWayQcfa};

/// Evolve through the left marker, the input, and the right marker, take
/// the single measurement, and sum the verdict weights. Steps count the
/// `|w| + 2` per-cell transitions; delivering the verdict is not a step.
pub fn acceptance_oneway(m: &OneWayQcfa, chars: &[char]) -> Result<AcceptanceResult> {
    let compiled = CompiledOneWay::new(m)?;
    let mut p_accept = 0.0;
    for (verdict, p) in compiled.verdict_distribution(chars)? {
        if m.accepting.contains(&verdict) {
            p_accept += p;
        }
    }
    p_accept = p_accept.clamp(0.0, 1.0);
    Ok(AcceptanceResult {
        p_accept: Prob::Approx(p_accept),
        p_reject: Prob::Approx(1.0 - p_accept),
        expected_steps: Scalar::from_u64(chars.len() as u64 + 2),
    })
}
