//! Absorption analysis for the symmetric random walk driven by the quantum
//! coin in the exact-length machine: the head starts at cell 1 and wanders
//! over cells `0..=n+1` until one of the end markers absorbs it.
//!
//! All quantities come from O(n) tridiagonal solves of the first-step
//! equations; the closed forms (`p_right = 1/(n+1)`, `E[tosses] = n`, …)
//! are kept in the tests as independent oracles.

use crate::error::{Result, SqfaError};

/// Statistics of one walk segment, starting from cell 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkStats {
    /// Interior cells (the input length).
    pub n: u64,
    /// Probability of being absorbed at the right marker.
    pub p_right: f64,
    /// Expected number of coin tosses, unconditional.
    pub expected_tosses: f64,
    /// Expected tosses conditioned on right absorption.
    pub expected_tosses_right: f64,
    /// Expected tosses conditioned on left absorption.
    pub expected_tosses_left: f64,
    /// Expected machine steps conditioned on right absorption.
    pub machine_steps_right: f64,
    /// Expected machine steps conditioned on left absorption.
    pub machine_steps_left: f64,
}

/// Solve a tridiagonal system with constant coefficients
/// `-x[i-1] + 2 x[i] - x[i+1] = d[i]` for `i = 1..=n` and zero boundary
/// values, by the standard forward-elimination / back-substitution sweep.
fn solve_tridiag(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    if n == 0 {
        return vec![];
    }
    // Eliminate the subdiagonal: c'[i] and d'[i] per the Thomas recurrences
    // with a = c = -1, b = 2.
    let mut c_p = vec![0.0; n];
    let mut d_p = vec![0.0; n];
    c_p[0] = -0.5;
    d_p[0] = d[0] / 2.0;
    for i in 1..n {
        let denom = 2.0 + c_p[i - 1];
        c_p[i] = -1.0 / denom;
        d_p[i] = (d[i] + d_p[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_p[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_p[i] - c_p[i] * x[i + 1];
    }
    x
}

/// Absorption statistics of the walk over `n` interior cells, started at
/// cell 1. Each toss costs 2 machine steps (rotate + measure); a toss that
/// moves left costs one more (the restoring rotation), so machine steps per
/// segment are `2·E[tosses] + E[left moves]`, conditioned per exit side.
pub fn walk_absorption(n: u64) -> Result<WalkStats> {
    let nu = usize::try_from(n)
        .map_err(|_| SqfaError::InvalidArgument("walk length is too large".into()))?;
    if nu == 0 {
        // Cell 1 already is the right marker: absorbed immediately.
        return Ok(WalkStats {
            n,
            p_right: 1.0,
            expected_tosses: 0.0,
            expected_tosses_right: 0.0,
            expected_tosses_left: 0.0,
            machine_steps_right: 0.0,
            machine_steps_left: 0.0,
        });
    }

    // u[i] = P(absorb right | start i): homogeneous except for the right
    // boundary feeding the last equation.
    let mut d = vec![0.0; nu];
    d[nu - 1] = 1.0;
    let u = solve_tridiag(&d);
    let u_at = |i: isize| -> f64 {
        if i <= 0 {
            0.0
        } else if i as usize > nu {
            1.0
        } else {
            u[i as usize - 1]
        }
    };

    // t[i] = E[tosses | start i].
    let t = solve_tridiag(&vec![2.0; nu]);

    // v[i] = E[tosses · 1{right}]: first-step gives rhs u[i-1] + u[i+1].
    let dv: Vec<f64> = (1..=nu as isize).map(|i| u_at(i - 1) + u_at(i + 1)).collect();
    let v = solve_tridiag(&dv);

    // l[i] = E[left moves · 1{right}]: rhs u[i-1] (a left first step adds
    // one left move on the paths that still end right).
    let dl: Vec<f64> = (1..=nu as isize).map(|i| u_at(i - 1)).collect();
    let l = solve_tridiag(&dl);

    // m[i] = E[left moves] unconditional: rhs 1/2·... the first step is a
    // left move with probability 1/2, so rhs = 1.
    let m = solve_tridiag(&vec![1.0; nu]);

    let (p_right, tosses, v1, l1, m1) = (u[0], t[0], v[0], l[0], m[0]);
    let p_left = 1.0 - p_right;
    let tosses_right = v1 / p_right;
    let tosses_left = (tosses - v1) / p_left.max(f64::MIN_POSITIVE);
    let left_moves_right = l1 / p_right;
    let left_moves_left = (m1 - l1) / p_left.max(f64::MIN_POSITIVE);

    Ok(WalkStats {
        n,
        p_right,
        expected_tosses: tosses,
        expected_tosses_right: tosses_right,
        expected_tosses_left: tosses_left,
        machine_steps_right: 2.0 * tosses_right + left_moves_right,
        machine_steps_left: 2.0 * tosses_left + left_moves_left,
    })
}
