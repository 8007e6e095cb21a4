//! Quantum state vectors, unitaries, projective measurements, and the
//! symbolic gate language shared by all machine models.

use crate::error::{Result, SqfaError};
use crate::exact::Rat;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Norm / probability-sum agreement tolerance.
pub const TOL_NORM: f64 = 1e-9;
/// Maximum allowed deviation of `U† U` from the identity.
pub const TOL_UNITARY: f64 = 1e-9;
/// Amplitudes with `|a|^2` below this are pruned to zero after measurement
/// collapse; measurement branches below it are treated as impossible.
pub const TOL_PRUNE: f64 = 1e-12;

pub type Amplitude = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amps: Vec<Amplitude>,
}

impl StateVector {
    pub fn new(amps: Vec<Amplitude>) -> Self {
        StateVector { amps }
    }

    /// Computational basis state `|idx>` in the given dimension.
    pub fn basis(dim: usize, idx: usize) -> Self {
        assert!(idx < dim, "basis index out of range");
        let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
        amps[idx] = Amplitude::new(1.0, 0.0);
        StateVector { amps }
    }

    /// Real uniform superposition `(1/sqrt(d)) (1, ..., 1)`.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        StateVector { amps: vec![Amplitude::new(a, 0.0); dim] }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self, location: &str) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > TOL_NORM {
            return Err(SqfaError::ill_formed(
                location,
                format!("state vector has squared norm {n}, expected 1"),
            ));
        }
        Ok(())
    }

    /// Zero out amplitudes with `|a|^2 < TOL_PRUNE`, then rescale to unit
    /// norm. Used after measurement collapse.
    pub fn prune_and_renormalize(&mut self) {
        for a in &mut self.amps {
            if a.norm_sqr() < TOL_PRUNE {
                *a = Amplitude::new(0.0, 0.0);
            }
        }
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// Probability mass on a set of basis indices.
    pub fn mass_on(&self, indices: &BTreeSet<usize>) -> f64 {
        indices.iter().map(|&i| self.amps[i].norm_sqr()).sum()
    }
}

/// Dense unitary operator, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    dim: usize,
    m: Vec<Amplitude>,
}

impl UnitaryOp {
    pub fn from_rows(rows: Vec<Vec<Amplitude>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(SqfaError::InvalidArgument("matrix is not square".into()));
        }
        Ok(UnitaryOp { dim, m: rows.into_iter().flatten().collect() })
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Amplitude::new(1.0, 0.0);
        }
        UnitaryOp { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Amplitude {
        self.m[i * self.dim + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Amplitude {
        &mut self.m[i * self.dim + j]
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim(), "dimension mismatch in apply");
        let mut out = vec![Amplitude::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            let mut acc = Amplitude::new(0.0, 0.0);
            let row = &self.m[i * self.dim..(i + 1) * self.dim];
            for (j, &u) in row.iter().enumerate() {
                acc += u * v.amps[j];
            }
            out[i] = acc;
        }
        StateVector::new(out)
    }

    /// `self * other` (matrix product).
    pub fn matmul(&self, other: &UnitaryOp) -> UnitaryOp {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let d = self.dim;
        let mut m = vec![Amplitude::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.m[i * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    m[i * d + j] += a * other.m[k * d + j];
                }
            }
        }
        UnitaryOp { dim: d, m }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> UnitaryOp {
        let d = self.dim;
        let mut out = UnitaryOp::identity(d);
        for i in 0..d {
            for j in 0..d {
                *out.at_mut(i, j) = self.at(j, i).conj();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &UnitaryOp) -> UnitaryOp {
        let (d1, d2) = (self.dim, other.dim);
        let d = d1 * d2;
        let mut m = vec![Amplitude::new(0.0, 0.0); d * d];
        for i1 in 0..d1 {
            for j1 in 0..d1 {
                let a = self.at(i1, j1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..d2 {
                    for j2 in 0..d2 {
                        m[(i1 * d2 + i2) * d + (j1 * d2 + j2)] = a * other.at(i2, j2);
                    }
                }
            }
        }
        UnitaryOp { dim: d, m }
    }

    /// `max_ij |(U† U - I)_ij|` — zero for a perfect unitary.
    pub fn unitarity_deviation(&self) -> f64 {
        let g = self.dagger().matmul(self);
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                let dev = (g.at(i, j) - Amplitude::new(expect, 0.0)).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    pub fn check_unitary(&self, location: &str) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev > TOL_UNITARY {
            return Err(SqfaError::ill_formed(
                location,
                format!("matrix is not unitary (deviation {dev:.3e})"),
            ));
        }
        Ok(())
    }
}

/// Real planar rotation by `theta`:
/// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> UnitaryOp {
    let (s, c) = theta.sin_cos();
    UnitaryOp {
        dim: 2,
        m: vec![
            Amplitude::new(c, 0.0),
            Amplitude::new(-s, 0.0),
            Amplitude::new(s, 0.0),
            Amplitude::new(c, 0.0),
        ],
    }
}

/// Extend a unit vector `v` to a full unitary whose first column is `v`.
///
/// Uses a Householder reflection: with `β = v₁/|v₁|` (or 1 when `v₁ = 0`) and
/// `w = β e₁ − v`, the reflector `H = I − 2 w w† / ‖w‖²` exchanges `v` and
/// `β e₁`, so `U = H · diag(β, 1, …, 1)` maps `e₁` to `v`. For a real `v`
/// with `v₁ > 0` this reduces to the symmetric involution `H` itself, so the
/// result equals its own inverse.
pub fn complete_unitary_from_first_column(col: &[Amplitude]) -> Result<UnitaryOp> {
    let d = col.len();
    if d == 0 {
        return Err(SqfaError::InvalidArgument("empty column".into()));
    }
    let norm_sq: f64 = col.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > TOL_NORM {
        return Err(SqfaError::InvalidArgument(format!(
            "column has squared norm {norm_sq}, expected 1"
        )));
    }

    let beta = if col[0].norm() > 1e-14 { col[0] / col[0].norm() } else { Amplitude::new(1.0, 0.0) };

    // w = β e₁ − v
    let mut w: Vec<Amplitude> = col.iter().map(|a| -a).collect();
    w[0] += beta;
    let w_norm_sq: f64 = w.iter().map(|a| a.norm_sqr()).sum();

    let mut u = if w_norm_sq < 1e-24 {
        // v is already β e₁ up to rounding.
        UnitaryOp::identity(d)
    } else {
        let scale = 2.0 / w_norm_sq;
        let mut h = UnitaryOp::identity(d);
        for i in 0..d {
            for j in 0..d {
                *h.at_mut(i, j) -= w[i] * w[j].conj() * scale;
            }
        }
        h
    };

    // Right-multiply by diag(β, 1, …, 1): scales the first column by β.
    for i in 0..d {
        let x = u.at(i, 0) * beta;
        *u.at_mut(i, 0) = x;
    }

    u.check_unitary("completed unitary")?;
    for i in 0..d {
        if (u.at(i, 0) - col[i]).norm() > 1e-9 {
            return Err(SqfaError::InvalidArgument(
                "completion does not reproduce the requested first column".into(),
            ));
        }
    }
    Ok(u)
}

/// A projective measurement in the computational basis, described as a
/// partition of basis indices into labeled outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveMeasurement {
    dim: usize,
    outcomes: Vec<(i64, BTreeSet<usize>)>,
}

impl ProjectiveMeasurement {
    pub fn new(dim: usize, outcomes: Vec<(i64, BTreeSet<usize>)>) -> Result<Self> {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut labels: BTreeSet<i64> = BTreeSet::new();
        for (label, set) in &outcomes {
            if !labels.insert(*label) {
                return Err(SqfaError::ill_formed(
                    "measurement",
                    format!("duplicate outcome label {label}"),
                ));
            }
            if set.is_empty() {
                return Err(SqfaError::ill_formed(
                    "measurement",
                    format!("outcome {label} projects onto no basis states"),
                ));
            }
            for &i in set {
                if i >= dim {
                    return Err(SqfaError::ill_formed(
                        "measurement",
                        format!("outcome {label} references basis index {i} >= dim {dim}"),
                    ));
                }
                if !seen.insert(i) {
                    return Err(SqfaError::ill_formed(
                        "measurement",
                        format!("basis index {i} appears in two outcomes"),
                    ));
                }
            }
        }
        if seen.len() != dim {
            return Err(SqfaError::ill_formed(
                "measurement",
                format!(
                    "outcomes cover {} of {} basis states; projectors must sum to the identity",
                    seen.len(),
                    dim
                ),
            ));
        }
        Ok(ProjectiveMeasurement { dim, outcomes })
    }

    /// Full computational-basis measurement: outcome `i` projects on `|i>`.
    pub fn computational(dim: usize) -> Self {
        let outcomes = (0..dim).map(|i| (i as i64, BTreeSet::from([i]))).collect();
        ProjectiveMeasurement { dim, outcomes }
    }

    /// Two-outcome measurement splitting the basis into `set0` (label 0) and
    /// its complement (label 1).
    pub fn binary(dim: usize, set0: BTreeSet<usize>) -> Result<Self> {
        let set1: BTreeSet<usize> = (0..dim).filter(|i| !set0.contains(i)).collect();
        Self::new(dim, vec![(0, set0), (1, set1)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[(i64, BTreeSet<usize>)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        self.outcomes.iter().map(|(l, _)| *l)
    }

    /// All outcome branches with probability at least `TOL_PRUNE`, each with
    /// its collapsed, renormalized post-measurement state.
    pub fn branch(&self, v: &StateVector) -> Vec<(i64, f64, StateVector)> {
        assert_eq!(self.dim, v.dim(), "dimension mismatch in measurement");
        let mut out = Vec::with_capacity(self.outcomes.len());
        for (label, set) in &self.outcomes {
            let p = v.mass_on(set);
            if p < TOL_PRUNE {
                continue;
            }
            let mut collapsed = v.clone();
            for (i, a) in collapsed.amps.iter_mut().enumerate() {
                if !set.contains(&i) {
                    *a = Amplitude::new(0.0, 0.0);
                }
            }
            collapsed.prune_and_renormalize();
            out.push((*label, p, collapsed));
        }
        out
    }

    /// Sample one outcome using a uniform draw `u ∈ [0, 1)`, collapsing `v`
    /// in place. Returns the outcome label.
    pub fn sample_collapse(&self, v: &mut StateVector, u: f64) -> i64 {
        let mut acc = 0.0;
        let mut chosen = self.outcomes.len() - 1;
        for (k, (_, set)) in self.outcomes.iter().enumerate() {
            acc += v.mass_on(set);
            if u < acc {
                chosen = k;
                break;
            }
        }
        let (label, set) = &self.outcomes[chosen];
        for (i, a) in v.amps.iter_mut().enumerate() {
            if !set.contains(&i) {
                *a = Amplitude::new(0.0, 0.0);
            }
        }
        v.prune_and_renormalize();
        *label
    }
}

/// Symbolic gate descriptions. Machines store these rather than raw
/// matrices so that saved machine documents stay readable and the analysis
/// engine can recognize structure (rational rotation angles, tilts).
#[derive(Clone, Debug, PartialEq)]
pub enum GateSpec {
    Identity { dim: usize },
    /// `rotation((num/den) · π)`.
    RotationPi { num: i64, den: i64 },
    /// `rotation((num/den) · √2 · π)`.
    RotationSqrt2Pi { num: i64, den: i64 },
    /// Arbitrary-angle planar rotation.
    Rotation { theta: f64 },
    /// Planar rotation specified by its exact squared cosine: first column
    /// `(√c, √(1−c))`.
    CosSqRotation { cos_sq: Rat },
    /// Diagonal ±1 gate: flips the sign of the listed basis states.
    SignFlip { dim: usize, flips: BTreeSet<usize> },
    /// Householder completion of the given first column.
    Reflector { column: Vec<Amplitude> },
    BlockDiag(Vec<GateSpec>),
    Tensor(Box<GateSpec>, Box<GateSpec>),
    Explicit { matrix: UnitaryOp },
}

impl GateSpec {
    pub fn dim(&self) -> usize {
        match self {
            GateSpec::Identity { dim } => *dim,
            GateSpec::RotationPi { .. }
            | GateSpec::RotationSqrt2Pi { .. }
            | GateSpec::Rotation { .. }
            | GateSpec::CosSqRotation { .. } => 2,
            GateSpec::SignFlip { dim, .. } => *dim,
            GateSpec::Reflector { column } => column.len(),
            GateSpec::BlockDiag(blocks) => blocks.iter().map(|b| b.dim()).sum(),
            GateSpec::Tensor(a, b) => a.dim() * b.dim(),
            GateSpec::Explicit { matrix } => matrix.dim(),
        }
    }

    /// Materialize the dense matrix.
    pub fn matrix(&self) -> Result<UnitaryOp> {
        match self {
            GateSpec::Identity { dim } => Ok(UnitaryOp::identity(*dim)),
            GateSpec::RotationPi { num, den } => {
                if *den == 0 {
                    return Err(SqfaError::InvalidArgument("rotation with zero denominator".into()));
                }
                Ok(rotation(PI * (*num as f64) / (*den as f64)))
            }
            GateSpec::RotationSqrt2Pi { num, den } => {
                if *den == 0 {
                    return Err(SqfaError::InvalidArgument("rotation with zero denominator".into()));
                }
                Ok(rotation(PI * std::f64::consts::SQRT_2 * (*num as f64) / (*den as f64)))
            }
            GateSpec::Rotation { theta } => Ok(rotation(*theta)),
            GateSpec::CosSqRotation { cos_sq } => {
                let c = cos_sq
                    .to_f64()
                    .ok_or_else(|| SqfaError::InvalidArgument("cos_sq out of f64 range".into()))?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(SqfaError::InvalidArgument(format!(
                        "cos_sq must lie in [0,1], got {c}"
                    )));
                }
                let (cos, sin) = (c.sqrt(), (1.0 - c).max(0.0).sqrt());
                UnitaryOp::from_rows(vec![
                    vec![Amplitude::new(cos, 0.0), Amplitude::new(-sin, 0.0)],
                    vec![Amplitude::new(sin, 0.0), Amplitude::new(cos, 0.0)],
                ])
            }
            GateSpec::SignFlip { dim, flips } => {
                let mut u = UnitaryOp::identity(*dim);
                for &i in flips {
                    if i >= *dim {
                        return Err(SqfaError::InvalidArgument(format!(
                            "sign flip index {i} out of range for dim {dim}"
                        )));
                    }
                    *u.at_mut(i, i) = Amplitude::new(-1.0, 0.0);
                }
                Ok(u)
            }
            GateSpec::Reflector { column } => complete_unitary_from_first_column(column),
            GateSpec::BlockDiag(blocks) => {
                let dim = self.dim();
                let mut u = UnitaryOp::identity(dim);
                let mut off = 0;
                for b in blocks {
                    let bd = b.dim();
                    let bm = b.matrix()?;
                    for i in 0..bd {
                        for j in 0..bd {
                            *u.at_mut(off + i, off + j) = bm.at(i, j);
                        }
                    }
                    off += bd;
                }
                Ok(u)
            }
            GateSpec::Tensor(a, b) => Ok(a.matrix()?.kron(&b.matrix()?)),
            GateSpec::Explicit { matrix } => Ok(matrix.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn re(x: f64) -> Amplitude {
        Amplitude::new(x, 0.0)
    }

    #[test]
    fn rotation_matches_definition() {
        let u = rotation(0.3);
        assert_abs_diff_eq!(u.at(0, 0).re, 0.3f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.at(0, 1).re, -(0.3f64.sin()), epsilon = 1e-15);
        assert_abs_diff_eq!(u.at(1, 0).re, 0.3f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.at(1, 1).re, 0.3f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_composes_additively() {
        let a = rotation(0.4);
        let b = rotation(1.1);
        let ab = a.matmul(&b);
        let direct = rotation(1.5);
        for i in 0..2 {
            for j in 0..2 {
                assert!((ab.at(i, j) - direct.at(i, j)).norm() < 1e-12);
            }
        }
    }

    /// Independent oracle: complete the same column by Gram–Schmidt against
    /// the standard basis, then compare column spans — both must be unitary
    /// with the same first column.
    fn gram_schmidt_completion(col: &[Amplitude]) -> Vec<Vec<Amplitude>> {
        let d = col.len();
        let mut cols: Vec<Vec<Amplitude>> = vec![col.to_vec()];
        for k in 0..d {
            if cols.len() == d {
                break;
            }
            // candidate e_k
            let mut v = vec![re(0.0); d];
            v[k] = re(1.0);
            for c in &cols {
                let ip: Amplitude = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for i in 0..d {
                    v[i] -= ip * c[i];
                }
            }
            let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-8 {
                for a in &mut v {
                    *a /= n;
                }
                cols.push(v);
            }
        }
        cols
    }

    #[test]
    fn householder_completion_has_requested_first_column_and_is_unitary() {
        for col in [
            vec![re(1.0), re(0.0), re(0.0)],
            vec![re(0.6), re(0.8)],
            vec![re(0.5); 4],
            vec![re(-0.5); 4],
            vec![re(0.0), re(1.0)],
            vec![
                Amplitude::new(0.5, 0.5),
                Amplitude::new(0.5, -0.5),
            ],
        ] {
            let u = complete_unitary_from_first_column(&col).unwrap();
            assert!(u.unitarity_deviation() < 1e-12);
            for (i, want) in col.iter().enumerate() {
                assert!((u.at(i, 0) - want).norm() < 1e-12);
            }
            // Oracle agreement: Gram–Schmidt also finds a unitary completion
            // with the same first column (bases may differ beyond column 0).
            let gs = gram_schmidt_completion(&col);
            assert_eq!(gs.len(), col.len());
            for (i, want) in col.iter().enumerate() {
                assert!((gs[0][i] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_reflector_is_an_involution() {
        // For a real first column with positive first entry the completion is
        // a symmetric reflection: U · U = I, so U equals its own inverse.
        let col: Vec<Amplitude> = (0..5).map(|_| re(1.0 / 5f64.sqrt())).collect();
        let u = complete_unitary_from_first_column(&col).unwrap();
        let sq = u.matmul(&u);
        assert!(sq.unitarity_deviation() < 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((sq.at(i, j) - re(expect)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn completion_rejects_unnormalized_column() {
        let col = vec![re(1.0), re(1.0)];
        assert!(complete_unitary_from_first_column(&col).is_err());
    }

    #[test]
    fn measurement_requires_a_partition() {
        // Overlapping outcomes
        assert!(ProjectiveMeasurement::new(
            2,
            vec![(0, BTreeSet::from([0])), (1, BTreeSet::from([0, 1]))]
        )
        .is_err());
        // Missing coverage
        assert!(ProjectiveMeasurement::new(3, vec![(0, BTreeSet::from([0]))]).is_err());
        // Good
        assert!(ProjectiveMeasurement::binary(3, BTreeSet::from([0])).is_ok());
    }

    #[test]
    fn measurement_branches_carry_collapsed_states() {
        let m = ProjectiveMeasurement::binary(2, BTreeSet::from([0])).unwrap();
        let v = rotation(PI / 6.0).apply(&StateVector::basis(2, 0));
        let branches = m.branch(&v);
        assert_eq!(branches.len(), 2);
        let (l0, p0, s0) = &branches[0];
        let (l1, p1, s1) = &branches[1];
        assert_eq!((*l0, *l1), (0, 1));
        assert_abs_diff_eq!(*p0, (PI / 6.0).cos().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(p0 + p1, 1.0, epsilon = 1e-12);
        assert!((s0.amps[0].norm() - 1.0).abs() < 1e-12 && s0.amps[1].norm() < 1e-12);
        assert!((s1.amps[1].norm() - 1.0).abs() < 1e-12 && s1.amps[0].norm() < 1e-12);
    }

    #[test]
    fn gate_specs_materialize_consistently() {
        let r = GateSpec::RotationPi { num: 1, den: 3 }.matrix().unwrap();
        assert_abs_diff_eq!(r.at(0, 0).re, (PI / 3.0).cos(), epsilon = 1e-15);

        let c = GateSpec::CosSqRotation { cos_sq: rat(1, 9) }.matrix().unwrap();
        assert_abs_diff_eq!(c.at(0, 0).re, 1.0 / 3.0, epsilon = 1e-15);
        assert!(c.unitarity_deviation() < 1e-15);

        let f = GateSpec::SignFlip { dim: 3, flips: BTreeSet::from([1]) }.matrix().unwrap();
        assert_eq!(f.at(1, 1), re(-1.0));
        assert_eq!(f.at(0, 0), re(1.0));

        let b = GateSpec::BlockDiag(vec![
            GateSpec::RotationPi { num: 1, den: 2 },
            GateSpec::Identity { dim: 1 },
        ]);
        assert_eq!(b.dim(), 3);
        let bm = b.matrix().unwrap();
        assert!(bm.unitarity_deviation() < 1e-12);
        assert_eq!(bm.at(2, 2), re(1.0));
        assert_abs_diff_eq!(bm.at(1, 0).re, 1.0, epsilon = 1e-15);

        let t = GateSpec::Tensor(
            Box::new(GateSpec::Identity { dim: 2 }),
            Box::new(GateSpec::RotationPi { num: 1, den: 2 }),
        );
        assert_eq!(t.dim(), 4);
        assert!(t.matrix().unwrap().unitarity_deviation() < 1e-12);
    }

    proptest! {
        #[test]
        fn unitaries_preserve_norm(theta in -6.3f64..6.3, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            prop_assume!(a.abs() + b.abs() > 1e-3);
            let n = (a * a + b * b).sqrt();
            let v = StateVector::new(vec![re(a / n), re(b / n)]);
            let u = rotation(theta);
            let w = u.apply(&v);
            prop_assert!((w.norm_sq() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kron_dims_and_unitarity(t1 in -3.2f64..3.2, t2 in -3.2f64..3.2) {
            let u = rotation(t1).kron(&rotation(t2));
            prop_assert_eq!(u.dim(), 4);
            prop_assert!(u.unitarity_deviation() < 1e-12);
        }

        #[test]
        fn measurement_probabilities_sum_to_one(theta in -6.3f64..6.3) {
            let v = rotation(theta).apply(&StateVector::basis(2, 0));
            let m = ProjectiveMeasurement::computational(2);
            let total: f64 = m.branch(&v).iter().map(|(_, p, _)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn householder_on_random_real_columns(xs in proptest::collection::vec(-1.0f64..1.0, 2..6)) {
            let n: f64 = xs.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(n > 1e-2);
            let col: Vec<Amplitude> = xs.iter().map(|&x| re(x / n)).collect();
            let u = complete_unitary_from_first_column(&col).unwrap();
            prop_assert!(u.unitarity_deviation() < 1e-10);
            for (i, want) in col.iter().enumerate() {
                prop_assert!((u.at(i, 0) - want).norm() < 1e-10);
            }
        }
    }
}
