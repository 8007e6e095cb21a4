//! Exact-or-approximate scalar arithmetic.
//!
//! Probabilities and expectations in this crate are carried as [`Scalar`]s: an
//! exact rational whenever every ingredient is rational, and an `f64`
//! otherwise (irrational rotation angles, random-walk solves). Exactness is
//! contagious downward only — any operation touching an approximate value
//! yields an approximate value, except for the two algebraic short-circuits
//! `0 * x = 0` and `1 * x = x`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use std::fmt;

pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// The exact rational value of a finite double (every finite `f64` is a
/// dyadic rational). `None` for NaN/infinities.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_f64(x)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `sin^2(r * pi)` when it is rational, i.e. when the reduced denominator of
/// `r` is one of 1, 2, 3, 4, 6 (Niven's theorem: these are the only rational
/// multiples of pi whose sine squares to a rational).
pub fn sin_sq_pi(r: &Rat) -> Option<Rat> {
    // sin^2 has period 1 in r and depends only on the reduced denominator.
    let den = r.denom().to_i64()?;
    match den {
        1 => Some(Rat::zero()),
        2 => Some(Rat::one()),
        3 => Some(rat(3, 4)),
        4 => Some(rat(1, 2)),
        6 => Some(rat(1, 4)),
        _ => None,
    }
}

/// `cos^2(r * pi)` when rational; `cos^2(x) = sin^2(x + pi/2)`.
pub fn cos_sq_pi(r: &Rat) -> Option<Rat> {
    sin_sq_pi(&(r + rat(1, 2)))
}

/// A nonnegative scalar that is either exactly known or a double.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rat),
    Approx(f64),
}

/// Probabilities are scalars in `[0, 1]`.
pub type Prob = Scalar;

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Rat::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(Rat::one())
    }

    pub fn exact(r: Rat) -> Self {
        Scalar::Exact(r)
    }

    pub fn from_u64(n: u64) -> Self {
        Scalar::Exact(Rat::from_integer(BigInt::from(n)))
    }

    pub fn value(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rat_to_f64(r),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rat> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Scalar::Exact(r) if r.is_zero())
    }

    pub fn is_exact_one(&self) -> bool {
        matches!(self, Scalar::Exact(r) if r.is_one())
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            _ => Scalar::Approx(self.value() + other.value()),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        if other.is_exact_zero() {
            return self.clone();
        }
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a - b),
            _ => Scalar::Approx(self.value() - other.value()),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        // An exactly-impossible branch stays impossible no matter how fuzzy
        // the other factor is, and certainty is a neutral element.
        if self.is_exact_zero() || other.is_exact_zero() {
            return Scalar::zero();
        }
        if self.is_exact_one() {
            return other.clone();
        }
        if other.is_exact_one() {
            return self.clone();
        }
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            _ => Scalar::Approx(self.value() * other.value()),
        }
    }

    /// `self / other`; `None` when `other` is exactly zero.
    pub fn div(&self, other: &Scalar) -> Option<Scalar> {
        if other.is_exact_zero() {
            return None;
        }
        if self.is_exact_zero() {
            return Some(Scalar::zero());
        }
        if other.is_exact_one() {
            return Some(self.clone());
        }
        Some(match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::Approx(self.value() / other.value()),
        })
    }

    pub fn one_minus(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(Rat::one() - r),
            Scalar::Approx(x) => Scalar::Approx(1.0 - x),
        }
    }

    /// Exact equality when both sides are exact, otherwise |a-b| <= tol.
    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => (self.value() - other.value()).abs() <= tol,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// Format a scalar for human output: six significant digits, with the exact
/// rational appended when one is known and not already obvious.
pub fn display_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Exact(r) if r.denom().is_one() => format!("{}", r.numer()),
        Scalar::Exact(_) => format!("{} (= {})", sig6(s.value()), s),
        Scalar::Approx(x) => sig6(*x),
    }
}

fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let prec = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.prec$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rational_of_double_is_exact_binary_value() {
        // 0.25 is dyadic: exactly 1/4.
        assert_eq!(rat_from_f64(0.25).unwrap(), rat(1, 4));
        assert_eq!(rat_from_f64(0.5).unwrap(), rat(1, 2));
        // 0.1 is not 1/10 in binary; round-tripping recovers the double.
        let r = rat_from_f64(0.1).unwrap();
        assert_ne!(r, rat(1, 10));
        assert_eq!(rat_to_f64(&r), 0.1);
    }

    #[test]
    fn sin_sq_lookup_matches_known_angles() {
        assert_eq!(sin_sq_pi(&rat_i(3)).unwrap(), rat_i(0));
        assert_eq!(sin_sq_pi(&rat(1, 2)).unwrap(), rat_i(1));
        assert_eq!(sin_sq_pi(&rat(1, 3)).unwrap(), rat(3, 4));
        assert_eq!(sin_sq_pi(&rat(2, 3)).unwrap(), rat(3, 4));
        assert_eq!(sin_sq_pi(&rat(1, 4)).unwrap(), rat(1, 2));
        assert_eq!(sin_sq_pi(&rat(1, 6)).unwrap(), rat(1, 4));
        assert_eq!(sin_sq_pi(&rat(5, 6)).unwrap(), rat(1, 4));
        assert!(sin_sq_pi(&rat(1, 5)).is_none());
        assert!(sin_sq_pi(&rat(1, 12)).is_none());
        assert_eq!(cos_sq_pi(&rat_i(2)).unwrap(), rat_i(1));
        assert_eq!(cos_sq_pi(&rat(1, 3)).unwrap(), rat(1, 4));
    }

    proptest! {
        // The rational lookup must agree with floating-point sine wherever
        // it claims a value.
        #[test]
        fn sin_sq_agrees_with_f64(num in -48i64..48, den in 1i64..48) {
            let r = rat(num, den);
            if let Some(exact) = sin_sq_pi(&r) {
                let x = (num as f64) / (den as f64) * std::f64::consts::PI;
                let direct = x.sin().powi(2);
                prop_assert!((rat_to_f64(&exact) - direct).abs() < 1e-9);
            }
        }

        #[test]
        fn scalar_mul_short_circuits(x in 0.0f64..1.0) {
            let z = Scalar::zero().mul(&Scalar::Approx(x));
            prop_assert!(z.is_exact_zero());
            let o = Scalar::one().mul(&Scalar::Approx(x));
            prop_assert!(matches!(o, Scalar::Approx(v) if v == x));
        }

        #[test]
        fn scalar_arith_matches_f64(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (sa, sb) = (Scalar::Approx(a), Scalar::Approx(b));
            prop_assert!((sa.add(&sb).value() - (a + b)).abs() < 1e-12);
            prop_assert!((sa.mul(&sb).value() - (a * b)).abs() < 1e-12);
            prop_assert!((sa.one_minus().value() - (1.0 - a)).abs() < 1e-12);
        }
    }
}
