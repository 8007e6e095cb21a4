//! Machine models: deterministic automata, measure-once quantum automata,
//! and one-way / two-way quantum automata with classical control.

pub mod dfa;
pub mod moqfa;
pub mod qcfa;
pub mod serial;

pub use dfa::Dfa;
pub use moqfa::Moqfa;
pub use qcfa::{
    Annotations, CompiledTwoWay, Configuration, OneWayQcfa, QuantumAction, StepBranch, TwoWayQcfa,
    WalkAnnotation,
};

use crate::error::{Result, SqfaError};

pub type StateId = usize;

/// What the tape head can see. Position 0 holds the left end-marker, the
/// input occupies positions `1..=n`, and position `n+1` holds the right
/// end-marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TapeSym {
    Left,
    Sym(char),
    Right,
}

impl TapeSym {
    pub fn describe(&self) -> String {
        match self {
            TapeSym::Left => "left".into(),
            TapeSym::Right => "right".into(),
            TapeSym::Sym(c) => c.to_string(),
        }
    }
}

/// Tape symbol at `pos` for the given input word (`0` = left marker,
/// `n+1` = right marker).
pub fn tape_symbol(word: &[char], pos: usize) -> TapeSym {
    if pos == 0 {
        TapeSym::Left
    } else if pos <= word.len() {
        TapeSym::Sym(word[pos - 1])
    } else {
        TapeSym::Right
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeadMove {
    Left,
    Stay,
    Right,
}

impl HeadMove {
    pub fn offset(&self) -> i64 {
        match self {
            HeadMove::Left => -1,
            HeadMove::Stay => 0,
            HeadMove::Right => 1,
        }
    }
}

/// The acceptance guarantee a machine claims for its language.
#[derive(Clone, Debug, PartialEq)]
pub enum AcceptanceMode {
    /// Members accepted with probability 1; non-members rejected with
    /// probability at least `1 − eps`.
    OneSided { eps: f64 },
    /// Both sides decided with error at most `eps`.
    ErrorProb { eps: f64 },
    /// Accept exactly the words with acceptance probability above `lambda`,
    /// with an `gap`-isolated cut-point.
    CutPoint { lambda: f64, gap: f64 },
    /// No error on either side.
    Exact,
}

/// Ground-truth language classifications for the families built in
/// [`crate::constructions`].
#[derive(Clone, Debug, PartialEq)]
pub enum Language {
    /// Unary words `a^{kp}` with `k ≥ 1`. The empty word is a non-member,
    /// although the mod machines accept it; verification sweeps therefore
    /// start at length 1.
    Mod { p: u64 },
    /// Unary words `a^k` with `k = m` exactly.
    Len { m: u64 },
    /// Promise problem on words `x#y`, `|x| = |y| = n` over `{0,1}`:
    /// yes-instances have `x = y`, no-instances differ in exactly `n/2`
    /// positions; everything else is outside the promise.
    EqPromise { n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    OutsidePromise,
}

impl Language {
    pub fn classify(&self, word: &str) -> Membership {
        match self {
            Language::Mod { p } => {
                if word.chars().any(|c| c != 'a') {
                    return Membership::OutsidePromise;
                }
                let k = word.chars().count() as u64;
                if k > 0 && *p != 0 && k % p == 0 {
                    Membership::Member
                } else {
                    Membership::NonMember
                }
            }
            Language::Len { m } => {
                if word.chars().any(|c| c != 'a') {
                    return Membership::OutsidePromise;
                }
                if word.chars().count() as u64 == *m {
                    Membership::Member
                } else {
                    Membership::NonMember
                }
            }
            Language::EqPromise { n } => {
                let chars: Vec<char> = word.chars().collect();
                if chars.len() != 2 * n + 1 || chars[*n] != '#' {
                    return Membership::OutsidePromise;
                }
                let (x, y) = (&chars[..*n], &chars[n + 1..]);
                if x.iter().chain(y.iter()).any(|&c| c != '0' && c != '1') {
                    return Membership::OutsidePromise;
                }
                let d = x.iter().zip(y.iter()).filter(|(a, b)| a != b).count();
                if d == 0 {
                    Membership::Member
                } else if d == n / 2 && n % 2 == 0 {
                    Membership::NonMember
                } else {
                    Membership::OutsidePromise
                }
            }
        }
    }
}

/// Any machine the toolkit can evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum Machine {
    Dfa(Dfa),
    Moqfa(Moqfa),
    OneWay(OneWayQcfa),
    TwoWay(TwoWayQcfa),
}

impl Machine {
    pub fn name(&self) -> &str {
        match self {
            Machine::Dfa(m) => &m.name,
            Machine::Moqfa(m) => &m.name,
            Machine::OneWay(m) => &m.name,
            Machine::TwoWay(m) => &m.name,
        }
    }

    pub fn model(&self) -> &'static str {
        match self {
            Machine::Dfa(_) => "dfa",
            Machine::Moqfa(_) => "moqfa",
            Machine::OneWay(_) => "1qcfa",
            Machine::TwoWay(_) => "2qcfa",
        }
    }

    /// Number of quantum basis states (0 for classical machines).
    pub fn quantum_dim(&self) -> usize {
        match self {
            Machine::Dfa(_) => 0,
            Machine::Moqfa(m) => m.quantum_dim,
            Machine::OneWay(m) => m.quantum_dim,
            Machine::TwoWay(m) => m.quantum_dim,
        }
    }

    /// Number of classical states (0 for the purely quantum model).
    pub fn classical_count(&self) -> usize {
        match self {
            Machine::Dfa(m) => m.states.len(),
            Machine::Moqfa(_) => 0,
            Machine::OneWay(m) => m.classical_states.len(),
            Machine::TwoWay(m) => m.classical_states.len(),
        }
    }

    pub fn input_alphabet(&self) -> &[char] {
        match self {
            Machine::Dfa(m) => &m.alphabet,
            Machine::Moqfa(m) => &m.input_alphabet,
            Machine::OneWay(m) => &m.input_alphabet,
            Machine::TwoWay(m) => &m.input_alphabet,
        }
    }

    pub fn language(&self) -> Option<&Language> {
        match self {
            Machine::Dfa(m) => m.language.as_ref(),
            Machine::Moqfa(m) => m.language.as_ref(),
            Machine::OneWay(m) => m.language.as_ref(),
            Machine::TwoWay(m) => m.language.as_ref(),
        }
    }

    pub fn mode(&self) -> AcceptanceMode {
        match self {
            Machine::Dfa(_) => AcceptanceMode::Exact,
            Machine::Moqfa(m) => m.mode.clone(),
            Machine::OneWay(m) => m.mode.clone(),
            Machine::TwoWay(m) => m.mode.clone(),
        }
    }

    /// Check every structural invariant of the machine.
    pub fn validate(&self) -> Result<()> {
        match self {
            Machine::Dfa(m) => m.validate(),
            Machine::Moqfa(m) => m.validate(),
            Machine::OneWay(m) => m.validate(),
            Machine::TwoWay(m) => m.validate(),
        }
    }

    /// Reject words containing symbols outside the input alphabet.
    pub fn check_word(&self, word: &str) -> Result<Vec<char>> {
        let chars: Vec<char> = word.chars().collect();
        for &c in &chars {
            if !self.input_alphabet().contains(&c) {
                return Err(SqfaError::InvalidArgument(format!(
                    "symbol '{c}' is not in the input alphabet of {}",
                    self.name()
                )));
            }
        }
        Ok(chars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_layout_has_markers_at_both_ends() {
        let w: Vec<char> = "ab".chars().collect();
        assert_eq!(tape_symbol(&w, 0), TapeSym::Left);
        assert_eq!(tape_symbol(&w, 1), TapeSym::Sym('a'));
        assert_eq!(tape_symbol(&w, 2), TapeSym::Sym('b'));
        assert_eq!(tape_symbol(&w, 3), TapeSym::Right);
    }

    #[test]
    fn mod_language_counts_multiples_including_empty() {
        let l = Language::Mod { p: 3 };
        assert_eq!(l.classify(""), Membership::NonMember); // k >= 1 required
        assert_eq!(l.classify("aaa"), Membership::Member);
        assert_eq!(l.classify("aaaa"), Membership::NonMember);
        assert_eq!(l.classify("ab"), Membership::OutsidePromise);
    }

    #[test]
    fn len_language_is_a_single_length() {
        let l = Language::Len { m: 2 };
        assert_eq!(l.classify("aa"), Membership::Member);
        assert_eq!(l.classify("a"), Membership::NonMember);
        assert_eq!(l.classify(""), Membership::NonMember);
    }

    #[test]
    fn eq_promise_classifies_by_hamming_distance() {
        let l = Language::EqPromise { n: 4 };
        assert_eq!(l.classify("0101#0101"), Membership::Member);
        assert_eq!(l.classify("0101#0110"), Membership::NonMember); // distance 2 = n/2
        assert_eq!(l.classify("0101#1110"), Membership::OutsidePromise); // distance 3
        assert_eq!(l.classify("0101#010"), Membership::OutsidePromise);
        assert_eq!(l.classify("01010101"), Membership::OutsidePromise);
    }
}
