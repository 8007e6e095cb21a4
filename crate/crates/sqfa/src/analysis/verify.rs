//! Verification of a machine against its acceptance mode over a set of
//! words: every word is classified by the target language, its acceptance
//! law is computed analytically, and the mode inequality is checked with
//! the margin recorded.

use crate::analysis::acceptance;
use crate::error::{Result, SqfaError};
use crate::machine::{AcceptanceMode, Language, Machine, Membership};
use crate::quantum::TOL_NORM;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct VerificationRow {
    pub word: String,
    /// yes / no / outside-promise.
    pub classification: String,
    pub p_accept: f64,
    /// Exact rational, when the analysis produced one.
    pub p_accept_exact: Option<String>,
    pub p_reject: f64,
    pub p_reject_exact: Option<String>,
    pub expected_steps: f64,
    /// Slack in the binding inequality; negative means violated.
    /// Outside-promise words carry an infinite margin and never fail.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub machine: String,
    pub mode: String,
    pub rows: Vec<VerificationRow>,
    pub words_checked: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub max_expected_steps: f64,
    pub overall_pass: bool,
}

fn classification_label(m: Membership) -> &'static str {
    match m {
        Membership::Member => "yes",
        Membership::NonMember => "no",
        Membership::OutsidePromise => "outside-promise",
    }
}

fn mode_label(mode: &AcceptanceMode) -> String {
    match mode {
        AcceptanceMode::OneSided { eps } => format!("one-sided(eps={eps})"),
        AcceptanceMode::ErrorProb { eps } => format!("error-prob(eps={eps})"),
        AcceptanceMode::CutPoint { lambda, gap } => format!("cut-point({lambda}±{gap})"),
        AcceptanceMode::Exact => "exact".to_string(),
    }
}

/// Margin of the binding inequality for one word. Positive = satisfied
/// with room; the pass check allows `TOL_NORM` of numerical slack.
fn mode_margin(mode: &AcceptanceMode, membership: Membership, pa: f64, pr: f64) -> f64 {
    match membership {
        Membership::OutsidePromise => f64::INFINITY,
        Membership::Member => match mode {
            AcceptanceMode::OneSided { .. } | AcceptanceMode::Exact => pa - 1.0,
            AcceptanceMode::ErrorProb { eps } => pa - (1.0 - eps),
            AcceptanceMode::CutPoint { lambda, gap } => pa - (lambda + gap),
        },
        Membership::NonMember => match mode {
            AcceptanceMode::OneSided { eps } => pr - (1.0 - eps),
            AcceptanceMode::Exact => pr - 1.0,
            AcceptanceMode::ErrorProb { eps } => pr - (1.0 - eps),
            AcceptanceMode::CutPoint { lambda, gap } => (lambda - gap) - pa,
        },
    }
}

/// Check `machine` against `mode` with words classified by `language`.
/// Words are evaluated concurrently; the report is assembled in a fixed
/// order (by length, then lexicographically) regardless of scheduling.
pub fn verify_mode(
    machine: &Machine,
    mode: &AcceptanceMode,
    language: &Language,
    words: &[String],
) -> Result<VerificationReport> {
    let mut rows = words
        .par_iter()
        .map(|word| -> Result<VerificationRow> {
            let membership = language.classify(word);
            let r = acceptance(machine, word)?;
            let (pa, pr) = (r.p_accept.value(), r.p_reject.value());
            let margin = mode_margin(mode, membership, pa, pr);
            Ok(VerificationRow {
                word: word.clone(),
                classification: classification_label(membership).to_string(),
                p_accept: pa,
                p_accept_exact: r.p_accept.as_exact().map(|x| x.to_string()),
                p_reject: pr,
                p_reject_exact: r.p_reject.as_exact().map(|x| x.to_string()),
                expected_steps: r.expected_steps.value(),
                margin,
                pass: margin >= -TOL_NORM,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| (a.word.len(), &a.word).cmp(&(b.word.len(), &b.word)));

    let failures = rows.iter().filter(|r| !r.pass).count();
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let max_expected_steps = rows.iter().map(|r| r.expected_steps).fold(0.0, f64::max);
    Ok(VerificationReport {
        machine: machine.name().to_string(),
        mode: mode_label(mode),
        words_checked: rows.len(),
        failures,
        min_margin,
        max_expected_steps,
        overall_pass: failures == 0,
        rows,
    })
}

/// Verify a machine against its own declared mode and language.
pub fn verify_machine(machine: &Machine, words: &[String]) -> Result<VerificationReport> {
    let language = machine.language().ok_or_else(|| {
        SqfaError::InvalidArgument(format!(
            "{} declares no target language to verify against",
            machine.name()
        ))
    })?;
    verify_mode(machine, &machine.mode(), language, words)
}

/// `a^l` for every length in the iterator.
pub fn unary_words(lengths: impl IntoIterator<Item = u64>) -> Vec<String> {
    lengths.into_iter().map(|l| "a".repeat(l as usize)).collect()
}

/// Every promise instance of the equality problem at block length `n`:
/// all `x#x`, and all `x#y` with Hamming distance exactly `n/2`.
/// Exponential in `n`; refuse beyond n = 16.
pub fn eq_promise_words_exhaustive(n: usize) -> Result<Vec<String>> {
    if n == 0 || n > 16 {
        return Err(SqfaError::InvalidArgument(format!(
            "exhaustive promise enumeration needs 1 <= n <= 16, got {n}"
        )));
    }
    let render = |bits: u32| -> String {
        (0..n).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
    };
    let mut words = Vec::new();
    for xv in 0u32..1 << n {
        let x = render(xv);
        words.push(format!("{x}#{x}"));
    }
    if n % 2 == 0 {
        for xv in 0u32..1 << n {
            let x = render(xv);
            for mask in 0u32..1 << n {
                if mask.count_ones() as usize == n / 2 {
                    words.push(format!("{x}#{}", render(xv ^ mask)));
                }
            }
        }
    }
    Ok(words)
}

/// `count` random members and `count` random no-instances of the promise,
/// deterministic in the seed.
pub fn eq_promise_words_sampled(n: usize, count: usize, seed: u64) -> Result<Vec<String>> {
    if n == 0 || n % 2 != 0 {
        return Err(SqfaError::InvalidArgument(format!(
            "promise sampling needs even n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(2 * count);
    let random_x = |rng: &mut ChaCha8Rng| -> String {
        (0..n).map(|_| if rng.gen_bool(0.5) { '1' } else { '0' }).collect()
    };
    for _ in 0..count {
        let x = random_x(&mut rng);
        words.push(format!("{x}#{x}"));
    }
    let mut positions: Vec<usize> = (0..n).collect();
    for _ in 0..count {
        let x = random_x(&mut rng);
        positions.shuffle(&mut rng);
        let mut y: Vec<char> = x.chars().collect();
        for &i in positions.iter().take(n / 2) {
            y[i] = if y[i] == '0' { '1' } else { '0' };
        }
        let y: String = y.into_iter().collect();
        words.push(format!("{x}#{y}"));
    }
    Ok(words)
}
