//! Machine factories: the unary mod-counting and exact-length two-way
//! machines, the single-measurement equality machine, the random
//! block-rotation mod machine, classical baselines, and the intersection
//! construction that trades quantum states against classical states.

use crate::error::{Result, SqfaError};
use crate::exact::{rat, rat_from_f64, Rat};
use crate::machine::qcfa::OneWayQcfa;
use crate::machine::{
    AcceptanceMode, Annotations, Dfa, HeadMove, Language, Moqfa, QuantumAction, StateId, TapeSym,
    TwoWayQcfa, WalkAnnotation,
};
use crate::quantum::{Amplitude, GateSpec, ProjectiveMeasurement, StateVector};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

fn check_eps(eps: f64) -> Result<Rat> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SqfaError::InvalidArgument(format!(
            "error bound eps must lie in (0, 1), got {eps}"
        )));
    }
    rat_from_f64(eps).ok_or_else(|| SqfaError::InvalidArgument("eps is not finite".into()))
}

fn as_i64(x: u64, what: &str) -> Result<i64> {
    i64::try_from(x).map_err(|_| SqfaError::InvalidArgument(format!("{what} is too large")))
}

/// Minimal-by-construction DFA for the unary language `{ a^k : k ≡ 0 mod p }`:
/// a `p`-cycle counting the residue.
pub fn dfa_mod(p: u64) -> Result<Dfa> {
    if p == 0 {
        return Err(SqfaError::InvalidArgument("modulus p must be positive".into()));
    }
    let p = p as usize;
    Ok(Dfa {
        name: format!("dfa-mod-p{p}"),
        states: (0..p).map(|i| format!("r{i}")).collect(),
        alphabet: vec!['a'],
        start: 0,
        accepting: BTreeSet::from([0]),
        transitions: (0..p).map(|i| vec![(i + 1) % p]).collect(),
        language: Some(Language::Mod { p: p as u64 }),
    })
}

/// DFA for `{ a^m }`: a chain of `m+1` counters plus a dead state.
pub fn dfa_len(m: u64) -> Result<Dfa> {
    let m = m as usize;
    let dead = m + 1;
    let mut transitions: Vec<Vec<StateId>> = (0..=m).map(|i| vec![i + 1]).collect();
    transitions.push(vec![dead]); // dead loops
    Ok(Dfa {
        name: format!("dfa-len-m{m}"),
        states: (0..=m).map(|i| format!("c{i}")).chain(["dead".to_string()]).collect(),
        alphabet: vec!['a'],
        start: 0,
        accepting: BTreeSet::from([m]),
        transitions,
        language: Some(Language::Len { m: m as u64 }),
    })
}

/// Two-way machine for `{ a^k : k ≡ 0 mod p }` with one-sided error `eps`,
/// two quantum basis states and seven classical states.
///
/// Each halting-loop iteration: rotate the quantum state by `π/p` per input
/// symbol, measure at the right end-marker (`|q1>` rejects), tilt the
/// surviving `|q0>` by the `cos² = 4·eps/p²` rotation and measure again
/// (`|q0>` accepts), otherwise restore `|q0>` and rewind for a new pass.
/// Members are never rejected and accept with probability exactly
/// `4·eps/p²` per iteration; non-members reject with probability
/// `sin²(kπ/p) ≥ 4/p²` per iteration.
pub fn mod_2qcfa(p: u64, eps: f64) -> Result<TwoWayQcfa> {
    let eps_r = check_eps(eps)?;
    if p == 0 {
        return Err(SqfaError::InvalidArgument("modulus p must be positive".into()));
    }
    let p_i = as_i64(p, "p")?;

    // 4·eps/p², clamped to 1 for the degenerate p = 1 machine (the language
    // is then all of a*, and the loop accepts immediately).
    let mut cos_sq = rat(4, 1) * &eps_r / rat(p_i, 1) / rat(p_i, 1);
    if cos_sq > Rat::one() {
        cos_sq = Rat::one();
    }

    const START: StateId = 0;
    const SCAN: StateId = 1;
    const CHECK3: StateId = 2;
    const CHECK4: StateId = 3;
    const RESET: StateId = 4;
    const ACC: StateId = 5;
    const REJ: StateId = 6;

    let mut theta = BTreeMap::new();
    let mut du = BTreeMap::new();
    let mut dm = BTreeMap::new();
    let id = || GateSpec::Identity { dim: 2 };
    let a = TapeSym::Sym('a');

    // Pass over the input, rotating per symbol.
    theta.insert((START, TapeSym::Left), QuantumAction::Unitary(id()));
    du.insert((START, TapeSym::Left), (SCAN, HeadMove::Right));
    // Rewind back to the left end-marker after a failed iteration.
    theta.insert((START, a), QuantumAction::Unitary(id()));
    du.insert((START, a), (START, HeadMove::Left));
    theta.insert((START, TapeSym::Right), QuantumAction::Unitary(id()));
    du.insert((START, TapeSym::Right), (START, HeadMove::Left));

    theta.insert((SCAN, a), QuantumAction::Unitary(GateSpec::RotationPi { num: 1, den: p_i }));
    du.insert((SCAN, a), (SCAN, HeadMove::Right));
    theta.insert(
        (SCAN, TapeSym::Right),
        QuantumAction::Measure(ProjectiveMeasurement::binary(2, BTreeSet::from([0]))?),
    );
    dm.insert((SCAN, TapeSym::Right, 0), (CHECK3, HeadMove::Stay));
    dm.insert((SCAN, TapeSym::Right, 1), (REJ, HeadMove::Stay));

    theta.insert(
        (CHECK3, TapeSym::Right),
        QuantumAction::Unitary(GateSpec::CosSqRotation { cos_sq }),
    );
    du.insert((CHECK3, TapeSym::Right), (CHECK4, HeadMove::Stay));

    theta.insert(
        (CHECK4, TapeSym::Right),
        QuantumAction::Measure(ProjectiveMeasurement::binary(2, BTreeSet::from([0]))?),
    );
    dm.insert((CHECK4, TapeSym::Right, 0), (ACC, HeadMove::Stay));
    dm.insert((CHECK4, TapeSym::Right, 1), (RESET, HeadMove::Stay));

    // Map the collapsed |q1> back to |q0> and start a new iteration.
    theta.insert(
        (RESET, TapeSym::Right),
        QuantumAction::Unitary(GateSpec::RotationPi { num: -1, den: 2 }),
    );
    du.insert((RESET, TapeSym::Right), (START, HeadMove::Left));

    // Unreachable (state, symbol) pairs: totality fillers into rejection.
    for s in [SCAN, CHECK3, CHECK4, RESET] {
        for sym in [TapeSym::Left, a] {
            theta.entry((s, sym)).or_insert_with(|| QuantumAction::Unitary(id()));
            du.entry((s, sym)).or_insert((REJ, HeadMove::Stay));
        }
    }

    let m = TwoWayQcfa {
        name: format!("mod-2qcfa-p{p}-eps{eps}"),
        quantum_dim: 2,
        classical_states: ["start", "scan", "check3", "check4", "reset", "acc", "rej"]
            .into_iter()
            .map(String::from)
            .collect(),
        input_alphabet: vec!['a'],
        initial_quantum: StateVector::basis(2, 0),
        initial_classical: START,
        accepting: BTreeSet::from([ACC]),
        rejecting: BTreeSet::from([REJ]),
        mode: AcceptanceMode::OneSided { eps },
        language: Some(Language::Mod { p }),
        theta,
        delta_unitary: du,
        delta_measure: dm,
        annotations: Annotations { reset_state: Some(START), walks: vec![] },
    };
    m.validate()?;
    Ok(m)
}

/// Two-way machine for `{ a^m }` with one-sided error `eps`, two quantum
/// basis states and nineteen classical states.
///
/// Each iteration: rotate by `−√2·mπ` at the left marker and `√2·π` per
/// symbol (net `√2·(n−m)π`), measure at the right marker (`|q1>` rejects;
/// impossible exactly when `n = m`), then run two quantum-coin random walks
/// from cell 1 absorbing at the markers. Only if both walks end at the right
/// marker — probability `1/(n+1)²` — apply the `cos² = eps/(2m²)` tilt and
/// measure, accepting on `|q0>`. Anything else restores `|q0>` and rewinds.
pub fn len_2qcfa(m: u64, eps: f64) -> Result<TwoWayQcfa> {
    let eps_r = check_eps(eps)?;
    if m == 0 {
        return Err(SqfaError::InvalidArgument("target length m must be positive".into()));
    }
    let m_i = as_i64(m, "m")?;
    let cos_sq = eps_r / rat(2, 1) / rat(m_i, 1) / rat(m_i, 1);

    const START: StateId = 0;
    const SCAN: StateId = 1;
    const W1BACK: StateId = 2;
    const W1ROT: StateId = 3;
    const W1MEAS: StateId = 4;
    const W1FIX: StateId = 5;
    const W2BACK_OK: StateId = 6;
    const W2ROT_OK: StateId = 7;
    const W2MEAS_OK: StateId = 8;
    const W2FIX_OK: StateId = 9;
    const W2BACK_FAIL: StateId = 10;
    const W2ROT_FAIL: StateId = 11;
    const W2MEAS_FAIL: StateId = 12;
    const W2FIX_FAIL: StateId = 13;
    const AML: StateId = 14;
    const MEAS4: StateId = 15;
    const FIX4: StateId = 16;
    const ACC: StateId = 17;
    const REJ: StateId = 18;

    let names: Vec<String> = [
        "start", "scan", "w1back", "w1rot", "w1meas", "w1fix", "w2back_ok", "w2rot_ok",
        "w2meas_ok", "w2fix_ok", "w2back_fail", "w2rot_fail", "w2meas_fail", "w2fix_fail", "aml",
        "meas4", "fix4", "acc", "rej",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut theta = BTreeMap::new();
    let mut du = BTreeMap::new();
    let mut dm = BTreeMap::new();
    let id = || GateSpec::Identity { dim: 2 };
    let a = TapeSym::Sym('a');
    let binary = ProjectiveMeasurement::binary(2, BTreeSet::from([0]))?;

    macro_rules! unitary {
        ($s:expr, $sym:expr, $g:expr, $t:expr, $mv:expr) => {{
            theta.insert(($s, $sym), QuantumAction::Unitary($g));
            du.insert(($s, $sym), ($t, $mv));
        }};
    }

    // Length comparison pass.
    unitary!(START, TapeSym::Left, GateSpec::RotationSqrt2Pi { num: -m_i, den: 1 }, SCAN, HeadMove::Right);
    unitary!(START, a, id(), START, HeadMove::Left);
    unitary!(START, TapeSym::Right, id(), START, HeadMove::Left);
    unitary!(SCAN, a, GateSpec::RotationSqrt2Pi { num: 1, den: 1 }, SCAN, HeadMove::Right);
    theta.insert((SCAN, TapeSym::Right), QuantumAction::Measure(binary.clone()));
    dm.insert((SCAN, TapeSym::Right, 0), (W1BACK, HeadMove::Stay));
    dm.insert((SCAN, TapeSym::Right, 1), (REJ, HeadMove::Stay));

    // First walk: return to cell 1, then toss the quantum coin until a
    // marker absorbs the head. Landing state records which marker.
    unitary!(W1BACK, a, id(), W1BACK, HeadMove::Left);
    unitary!(W1BACK, TapeSym::Right, id(), W1BACK, HeadMove::Left);
    unitary!(W1BACK, TapeSym::Left, id(), W1ROT, HeadMove::Right);
    unitary!(W1ROT, a, GateSpec::RotationPi { num: 1, den: 4 }, W1MEAS, HeadMove::Stay);
    theta.insert((W1MEAS, a), QuantumAction::Measure(binary.clone()));
    dm.insert((W1MEAS, a, 0), (W1ROT, HeadMove::Right));
    dm.insert((W1MEAS, a, 1), (W1FIX, HeadMove::Stay));
    unitary!(W1FIX, a, GateSpec::RotationPi { num: -1, den: 2 }, W1ROT, HeadMove::Left);
    unitary!(W1ROT, TapeSym::Right, id(), W2BACK_OK, HeadMove::Stay);
    unitary!(W1ROT, TapeSym::Left, id(), W2BACK_FAIL, HeadMove::Stay);

    // Second walk, remembering whether the first ended at the right marker.
    unitary!(W2BACK_OK, a, id(), W2BACK_OK, HeadMove::Left);
    unitary!(W2BACK_OK, TapeSym::Right, id(), W2BACK_OK, HeadMove::Left);
    unitary!(W2BACK_OK, TapeSym::Left, id(), W2ROT_OK, HeadMove::Right);
    unitary!(W2ROT_OK, a, GateSpec::RotationPi { num: 1, den: 4 }, W2MEAS_OK, HeadMove::Stay);
    theta.insert((W2MEAS_OK, a), QuantumAction::Measure(binary.clone()));
    dm.insert((W2MEAS_OK, a, 0), (W2ROT_OK, HeadMove::Right));
    dm.insert((W2MEAS_OK, a, 1), (W2FIX_OK, HeadMove::Stay));
    unitary!(W2FIX_OK, a, GateSpec::RotationPi { num: -1, den: 2 }, W2ROT_OK, HeadMove::Left);
    unitary!(W2ROT_OK, TapeSym::Right, id(), AML, HeadMove::Stay);
    unitary!(W2ROT_OK, TapeSym::Left, id(), START, HeadMove::Stay);

    unitary!(W2BACK_FAIL, a, id(), W2BACK_FAIL, HeadMove::Left);
    unitary!(W2BACK_FAIL, TapeSym::Right, id(), W2BACK_FAIL, HeadMove::Left);
    unitary!(W2BACK_FAIL, TapeSym::Left, id(), W2ROT_FAIL, HeadMove::Right);
    unitary!(W2ROT_FAIL, a, GateSpec::RotationPi { num: 1, den: 4 }, W2MEAS_FAIL, HeadMove::Stay);
    theta.insert((W2MEAS_FAIL, a), QuantumAction::Measure(binary.clone()));
    dm.insert((W2MEAS_FAIL, a, 0), (W2ROT_FAIL, HeadMove::Right));
    dm.insert((W2MEAS_FAIL, a, 1), (W2FIX_FAIL, HeadMove::Stay));
    unitary!(W2FIX_FAIL, a, GateSpec::RotationPi { num: -1, den: 2 }, W2ROT_FAIL, HeadMove::Left);
    unitary!(W2ROT_FAIL, TapeSym::Right, id(), START, HeadMove::Stay);
    unitary!(W2ROT_FAIL, TapeSym::Left, id(), START, HeadMove::Stay);

    // Amplification tail: both walks ended right.
    unitary!(AML, TapeSym::Right, GateSpec::CosSqRotation { cos_sq }, MEAS4, HeadMove::Stay);
    theta.insert((MEAS4, TapeSym::Right), QuantumAction::Measure(binary));
    dm.insert((MEAS4, TapeSym::Right, 0), (ACC, HeadMove::Stay));
    dm.insert((MEAS4, TapeSym::Right, 1), (FIX4, HeadMove::Stay));
    unitary!(FIX4, TapeSym::Right, GateSpec::RotationPi { num: -1, den: 2 }, START, HeadMove::Stay);

    // Totality fillers for unreachable (state, symbol) pairs.
    for s in 0..ACC {
        for sym in [TapeSym::Left, a, TapeSym::Right] {
            theta.entry((s, sym)).or_insert_with(|| QuantumAction::Unitary(id()));
            du.entry((s, sym)).or_insert((REJ, HeadMove::Stay));
        }
    }

    let machine = TwoWayQcfa {
        name: format!("len-2qcfa-m{m}-eps{eps}"),
        quantum_dim: 2,
        classical_states: names,
        input_alphabet: vec!['a'],
        initial_quantum: StateVector::basis(2, 0),
        initial_classical: START,
        accepting: BTreeSet::from([ACC]),
        rejecting: BTreeSet::from([REJ]),
        mode: AcceptanceMode::OneSided { eps },
        language: Some(Language::Len { m }),
        theta,
        delta_unitary: du,
        delta_measure: dm,
        annotations: Annotations {
            reset_state: Some(START),
            walks: vec![
                WalkAnnotation { entry: W1ROT, members: BTreeSet::from([W1ROT, W1MEAS, W1FIX]) },
                WalkAnnotation {
                    entry: W2ROT_OK,
                    members: BTreeSet::from([W2ROT_OK, W2MEAS_OK, W2FIX_OK]),
                },
                WalkAnnotation {
                    entry: W2ROT_FAIL,
                    members: BTreeSet::from([W2ROT_FAIL, W2MEAS_FAIL, W2FIX_FAIL]),
                },
            ],
        },
    };
    machine.validate()?;
    Ok(machine)
}

/// One-way machine deciding the equality promise problem on `x#y`
/// (`|x| = |y| = n`, equal vs. Hamming distance `n/2`) exactly, with `n`
/// quantum basis states.
///
/// The uniform-column reflector spreads amplitude over all `n` basis states;
/// the `i`-th symbol of each half flips the sign of basis state `i−1` when
/// it is `1`; the same reflector then maps the state back onto `|0>` with
/// amplitude `(1/n) Σᵢ (−1)^{xᵢ+yᵢ}` — exactly ±1 for equal halves and
/// exactly 0 at Hamming distance `n/2`.
pub fn eq_1qcfa(n: usize) -> Result<OneWayQcfa> {
    if n == 0 {
        return Err(SqfaError::InvalidArgument("block length n must be positive".into()));
    }
    let uniform: Vec<Amplitude> =
        vec![Amplitude::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let reflector = || GateSpec::Reflector { column: uniform.clone() };
    let id = || GateSpec::Identity { dim: n };

    // States: init, pos1..pos_{n+1}, acc, rej.
    let init: StateId = 0;
    let pos = |i: usize| i; // pos_i has id i, for i = 1..=n+1
    let acc: StateId = n + 2;
    let rej: StateId = n + 3;
    let mut names = vec!["init".to_string()];
    names.extend((1..=n + 1).map(|i| format!("pos{i}")));
    names.push("acc".into());
    names.push("rej".into());

    let mut steps = BTreeMap::new();
    steps.insert((init, TapeSym::Left), (reflector(), pos(1)));
    for i in 1..=n {
        steps.insert((pos(i), TapeSym::Sym('0')), (id(), pos(i + 1)));
        steps.insert(
            (pos(i), TapeSym::Sym('1')),
            (GateSpec::SignFlip { dim: n, flips: BTreeSet::from([i - 1]) }, pos(i + 1)),
        );
    }
    steps.insert((pos(n + 1), TapeSym::Sym('#')), (id(), pos(1)));
    steps.insert((pos(n + 1), TapeSym::Right), (reflector(), pos(n + 1)));

    // Totality fillers for words outside the promise (wrong shape): loop in
    // place; their verdicts are unconstrained.
    let scanning: Vec<StateId> = (0..=n + 1).collect();
    for &s in &scanning {
        for sym in [TapeSym::Left, TapeSym::Sym('#'), TapeSym::Sym('0'), TapeSym::Sym('1'), TapeSym::Right]
        {
            steps.entry((s, sym)).or_insert((id(), s));
        }
    }

    let mut verdicts = BTreeMap::new();
    for &s in &scanning {
        for label in 0..n as i64 {
            let v = if s == pos(n + 1) && label == 0 { acc } else { rej };
            verdicts.insert((s, label), v);
        }
    }

    let machine = OneWayQcfa {
        name: format!("eq-1qcfa-n{n}"),
        quantum_dim: n,
        classical_states: names,
        input_alphabet: vec!['#', '0', '1'],
        initial_quantum: StateVector::basis(n, 0),
        initial_classical: init,
        accepting: BTreeSet::from([acc]),
        mode: AcceptanceMode::Exact,
        language: Some(Language::EqPromise { n }),
        steps,
        final_measure: ProjectiveMeasurement::computational(n),
        verdicts,
    };
    machine.validate()?;
    Ok(machine)
}

/// Fast acceptance sweep used by the certifier: blockwise rotation tracking,
/// O(k) per input symbol. `gs` are the per-block odd multipliers; returns
/// the acceptance probabilities of `a^1 .. a^max_len`.
fn block_acceptances(p: u64, gs: &[u64], max_len: usize) -> Vec<f64> {
    let k = gs.len();
    let thetas: Vec<f64> =
        gs.iter().map(|&g| std::f64::consts::PI * g as f64 / p as f64).collect();
    // Each block starts at (1, 0); the accept amplitude after i symbols is
    // (1/k) Σ_j cos(i·θ_j) — the uniform initial weights 1/√k enter twice.
    let mut cos_sin: Vec<(f64, f64)> = vec![(1.0, 0.0); k];
    let mut out = Vec::with_capacity(max_len);
    for _ in 0..max_len {
        for (j, cs) in cos_sin.iter_mut().enumerate() {
            let (s, c) = thetas[j].sin_cos();
            *cs = (cs.0 * c - cs.1 * s, cs.0 * s + cs.1 * c);
        }
        let amp: f64 = cos_sin.iter().map(|cs| cs.0).sum::<f64>() / k as f64;
        out.push((amp * amp).min(1.0));
    }
    out
}

fn certify_blocks(p: u64, eps: f64, gs: &[u64]) -> bool {
    // Acceptance is periodic in the word length with period dividing 2p, so
    // sweeping one full period certifies all lengths.
    let accs = block_acceptances(p, gs, 2 * p as usize);
    accs.iter().enumerate().all(|(idx, &acc)| {
        let i = idx as u64 + 1;
        if i % p == 0 {
            acc >= 1.0 - 1e-9
        } else {
            acc <= eps + 1e-9
        }
    })
}

/// Measure-once machine for `{ a^k : k ≡ 0 mod p }` accepting members with
/// probability 1 and non-members with probability at most `eps`, built from
/// `k` planar blocks rotating by `π·g_j/p` with odd multipliers `g_j` drawn
/// at random and certified over a full period. The block count is the
/// smallest that certifies within 1000 draws; it never needs to exceed
/// `⌈4 ln(2p)/eps⌉`.
pub fn moqfa_mod(p: u64, eps: f64, seed: u64) -> Result<Moqfa> {
    check_eps(eps)?;
    if p == 0 {
        return Err(SqfaError::InvalidArgument("modulus p must be positive".into()));
    }
    let k_max = ((4.0 * (2.0 * p as f64).ln() / eps).ceil() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut certified: Option<Vec<u64>> = None;
    'search: for k in 1..=k_max {
        for _ in 0..1000 {
            let gs: Vec<u64> = (0..k).map(|_| 2 * rng.gen_range(0..p) + 1).collect();
            if certify_blocks(p, eps, &gs) {
                certified = Some(gs);
                break 'search;
            }
        }
    }
    let gs = certified.ok_or_else(|| {
        SqfaError::ConstructionFailed(format!(
            "no block multiset certified for p={p}, eps={eps} within {k_max} blocks x 1000 draws"
        ))
    })?;

    let k = gs.len();
    let dim = 2 * k;
    let p_i = as_i64(p, "p")?;
    let gate = GateSpec::BlockDiag(
        gs.iter()
            .map(|&g| GateSpec::RotationPi { num: g as i64, den: p_i })
            .collect(),
    );
    // ψ0: weight 1/√k on the first component of each block.
    let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
    for j in 0..k {
        amps[2 * j] = Amplitude::new(1.0 / (k as f64).sqrt(), 0.0);
    }
    let initial = StateVector::new(amps);
    let machine = Moqfa {
        name: format!("moqfa-mod-p{p}-eps{eps}"),
        quantum_dim: dim,
        input_alphabet: vec!['a'],
        initial: initial.clone(),
        symbol_gates: BTreeMap::from([('a', gate)]),
        final_gate: GateSpec::Reflector { column: initial.amps },
        accepting: BTreeSet::from([0]),
        mode: AcceptanceMode::OneSided { eps },
        language: Some(Language::Mod { p }),
    };
    machine.validate()?;
    Ok(machine)
}

/// Wrap a measure-once machine as a one-way QCFA with three classical
/// states (run / accept / reject).
pub fn lift_moqfa(m: &Moqfa) -> Result<OneWayQcfa> {
    m.validate()?;
    const RUN: StateId = 0;
    const ACC: StateId = 1;
    const REJ: StateId = 2;
    let mut steps = BTreeMap::new();
    steps.insert((RUN, TapeSym::Left), (GateSpec::Identity { dim: m.quantum_dim }, RUN));
    for (&c, g) in &m.symbol_gates {
        steps.insert((RUN, TapeSym::Sym(c)), (g.clone(), RUN));
    }
    steps.insert((RUN, TapeSym::Right), (m.final_gate.clone(), RUN));
    let final_measure = ProjectiveMeasurement::binary(m.quantum_dim, m.accepting.clone())?;
    let machine = OneWayQcfa {
        name: format!("{}-lifted", m.name),
        quantum_dim: m.quantum_dim,
        classical_states: vec!["run".into(), "acc".into(), "rej".into()],
        input_alphabet: m.input_alphabet.clone(),
        initial_quantum: m.initial.clone(),
        initial_classical: RUN,
        accepting: BTreeSet::from([ACC]),
        mode: m.mode.clone(),
        language: m.language.clone(),
        steps,
        final_measure,
        verdicts: BTreeMap::from([((RUN, 0), ACC), ((RUN, 1), REJ)]),
    };
    machine.validate()?;
    Ok(machine)
}

/// Wrap a DFA as a one-way QCFA with a trivial (1-dimensional) quantum
/// register and one extra accepting halt state; rejection is simply ending
/// in a non-accepting verdict, so no reject state is added.
pub fn lift_dfa(d: &Dfa) -> Result<OneWayQcfa> {
    d.validate()?;
    let q = d.states.len();
    let halt_acc: StateId = q;
    let id = || GateSpec::Identity { dim: 1 };
    let mut steps = BTreeMap::new();
    for s in 0..q {
        steps.insert((s, TapeSym::Left), (id(), s));
        for (k, &c) in d.alphabet.iter().enumerate() {
            steps.insert((s, TapeSym::Sym(c)), (id(), d.transitions[s][k]));
        }
        steps.insert((s, TapeSym::Right), (id(), s));
    }
    let mut verdicts = BTreeMap::new();
    for s in 0..q {
        verdicts.insert((s, 0), if d.accepting.contains(&s) { halt_acc } else { s });
    }
    let mut names = d.states.clone();
    names.push("halt_acc".into());
    let machine = OneWayQcfa {
        name: format!("{}-lifted", d.name),
        quantum_dim: 1,
        classical_states: names,
        input_alphabet: d.alphabet.clone(),
        initial_quantum: StateVector::basis(1, 0),
        initial_classical: d.start,
        accepting: BTreeSet::from([halt_acc]),
        mode: AcceptanceMode::Exact,
        language: d.language.clone(),
        steps,
        final_measure: ProjectiveMeasurement::computational(1),
        verdicts,
    };
    machine.validate()?;
    Ok(machine)
}

/// Product of two one-way machines accepting the intersection of their
/// languages: classical states are all pairs, quantum registers are
/// tensored, and a word is accepted exactly when both verdicts accept.
pub fn intersect_1qcfa(a: &OneWayQcfa, b: &OneWayQcfa, name: &str) -> Result<OneWayQcfa> {
    a.validate()?;
    b.validate()?;
    if a.input_alphabet != b.input_alphabet {
        return Err(SqfaError::InvalidArgument(format!(
            "cannot intersect machines over different alphabets ({} vs {})",
            a.name, b.name
        )));
    }
    let (n1, n2) = (a.classical_states.len(), b.classical_states.len());
    let (d1, d2) = (a.quantum_dim, b.quantum_dim);
    let pair = |s1: StateId, s2: StateId| s1 * n2 + s2;

    let mut names = Vec::with_capacity(n1 * n2);
    for s1 in 0..n1 {
        for s2 in 0..n2 {
            names.push(format!("{}|{}", a.classical_states[s1], b.classical_states[s2]));
        }
    }

    // Tensor the per-cell gates for every pair of scanning states.
    let mut steps = BTreeMap::new();
    let mut syms = vec![TapeSym::Left, TapeSym::Right];
    syms.extend(a.input_alphabet.iter().map(|&c| TapeSym::Sym(c)));
    for sym in syms {
        for (&(s1, sym1), (g1, t1)) in &a.steps {
            if sym1 != sym {
                continue;
            }
            for (&(s2, sym2), (g2, t2)) in &b.steps {
                if sym2 != sym {
                    continue;
                }
                steps.insert(
                    (pair(s1, s2), sym),
                    (
                        GateSpec::Tensor(Box::new(g1.clone()), Box::new(g2.clone())),
                        pair(*t1, *t2),
                    ),
                );
            }
        }
    }

    // Product measurement: outcome (l1, l2) with index set S1 × S2.
    let l2_count = b.final_measure.outcomes().len() as i64;
    let mut outcomes = Vec::new();
    for (l1, s1) in a.final_measure.outcomes() {
        for (l2, s2) in b.final_measure.outcomes() {
            let mut set = BTreeSet::new();
            for &i in s1 {
                for &j in s2 {
                    set.insert(i * d2 + j);
                }
            }
            outcomes.push((l1 * l2_count + l2, set));
        }
    }
    let final_measure = ProjectiveMeasurement::new(d1 * d2, outcomes)?;

    let mut verdicts = BTreeMap::new();
    for (&(s1, l1), &v1) in &a.verdicts {
        for (&(s2, l2), &v2) in &b.verdicts {
            verdicts.insert((pair(s1, s2), l1 * l2_count + l2), pair(v1, v2));
        }
    }

    let mut accepting = BTreeSet::new();
    for &a1 in &a.accepting {
        for &a2 in &b.accepting {
            accepting.insert(pair(a1, a2));
        }
    }

    // Tensor the initial states.
    let mut amps = vec![Amplitude::new(0.0, 0.0); d1 * d2];
    for (i, &x) in a.initial_quantum.amps.iter().enumerate() {
        for (j, &y) in b.initial_quantum.amps.iter().enumerate() {
            amps[i * d2 + j] = x * y;
        }
    }

    let machine = OneWayQcfa {
        name: name.to_string(),
        quantum_dim: d1 * d2,
        classical_states: names,
        input_alphabet: a.input_alphabet.clone(),
        initial_quantum: StateVector::new(amps),
        initial_classical: pair(a.initial_classical, b.initial_classical),
        accepting,
        mode: a.mode.clone(),
        language: None,
        steps,
        final_measure,
        verdicts,
    };
    machine.validate()?;
    Ok(machine)
}

/// All splits `p = q1 · q2` with coprime factors both larger than 1,
/// ordered by `q1`.
pub fn tradeoff_partitions(p: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut q1 = 2;
    while q1 < p {
        if p % q1 == 0 {
            let q2 = p / q1;
            if q2 > 1 && gcd(q1, q2) == 1 {
                out.push((q1, q2));
            }
        }
        q1 += 1;
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The quantum/classical trade-off machine for `{ a^k : k ≡ 0 mod p }` with
/// `p = q1 · q2` coprime: a random block machine handles the mod-`q1` part
/// in the quantum register while a `q2`-cycle DFA rides along classically.
/// Classical states: `3 · (q2 + 1)`.
pub fn tradeoff_1qcfa(p: u64, q1: u64, eps: f64, seed: u64) -> Result<OneWayQcfa> {
    if q1 < 2 || p % q1 != 0 {
        return Err(SqfaError::InvalidArgument(format!("q1={q1} must be a divisor of p={p}, > 1")));
    }
    let q2 = p / q1;
    if q2 < 2 {
        return Err(SqfaError::InvalidArgument(format!(
            "q2 = p/q1 = {q2} must be > 1 for a nontrivial split"
        )));
    }
    if gcd(q1, q2) != 1 {
        return Err(SqfaError::InvalidArgument(format!(
            "q1={q1} and q2={q2} must be coprime so that the intersection is the mod-{p} language"
        )));
    }
    let quantum_part = lift_moqfa(&moqfa_mod(q1, eps, seed)?)?;
    let classical_part = lift_dfa(&dfa_mod(q2)?)?;
    let mut m = intersect_1qcfa(
        &quantum_part,
        &classical_part,
        &format!("tradeoff-1qcfa-p{p}-q1{q1}-q2{q2}-eps{eps}"),
    )?;
    m.mode = AcceptanceMode::OneSided { eps };
    m.language = Some(Language::Mod { p });
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::qcfa::CompiledOneWay;
    use crate::machine::Machine;

    #[test]
    fn dfa_families_recognize_their_languages() {
        let d3 = dfa_mod(3).unwrap();
        for k in 0..10usize {
            assert_eq!(d3.run(&"a".repeat(k)).unwrap(), k % 3 == 0, "k={k}");
        }
        assert_eq!(d3.minimize().states.len(), 3);

        let l2 = dfa_len(2).unwrap();
        for k in 0..6usize {
            assert_eq!(l2.run(&"a".repeat(k)).unwrap(), k == 2, "k={k}");
        }
        assert_eq!(l2.states.len(), 4);
        assert_eq!(l2.minimize().states.len(), 4);
    }

    #[test]
    fn mod_machine_shape() {
        let m = mod_2qcfa(3, 0.25).unwrap();
        assert_eq!(m.quantum_dim, 2);
        assert_eq!(m.classical_states.len(), 7);
        assert_eq!(m.annotations.reset_state, Some(0));
        Machine::TwoWay(m).validate().unwrap();
        // Degenerate p = 1 is permitted and clamps the tilt.
        mod_2qcfa(1, 0.5).unwrap();
        assert!(mod_2qcfa(0, 0.5).is_err());
        assert!(mod_2qcfa(3, 0.0).is_err());
        assert!(mod_2qcfa(3, 1.0).is_err());
    }

    #[test]
    fn len_machine_shape() {
        let m = len_2qcfa(2, 0.5).unwrap();
        assert_eq!(m.quantum_dim, 2);
        assert_eq!(m.classical_states.len(), 19);
        assert_eq!(m.annotations.walks.len(), 3);
        Machine::TwoWay(m).validate().unwrap();
    }

    /// Independent oracle for the equality machine: the accept amplitude
    /// must be `(1/n) Σᵢ (−1)^{xᵢ+yᵢ}` straight from the word.
    fn eq_oracle(x: &str, y: &str) -> f64 {
        let n = x.len();
        let s: i64 = x
            .bytes()
            .zip(y.bytes())
            .map(|(a, b)| if a == b { 1i64 } else { -1 })
            .sum();
        let amp = s as f64 / n as f64;
        amp * amp
    }

    #[test]
    fn eq_machine_matches_the_inner_product_oracle() {
        let n = 4;
        let m = eq_1qcfa(n).unwrap();
        assert_eq!(m.quantum_dim, n);
        assert_eq!(m.classical_states.len(), n + 4);
        let c = CompiledOneWay::new(&m).unwrap();
        for xv in 0..(1u32 << n) {
            for yv in 0..(1u32 << n) {
                let x: String = (0..n).map(|i| if xv >> i & 1 == 1 { '1' } else { '0' }).collect();
                let y: String = (0..n).map(|i| if yv >> i & 1 == 1 { '1' } else { '0' }).collect();
                let w: Vec<char> = format!("{x}#{y}").chars().collect();
                let p = c.acceptance_probability(&w).unwrap();
                assert!(
                    (p - eq_oracle(&x, &y)).abs() < 1e-9,
                    "x={x} y={y}: machine {p} vs oracle {}",
                    eq_oracle(&x, &y)
                );
            }
        }
    }

    #[test]
    fn block_certifier_agrees_with_dense_machine() {
        for (p, eps, seed) in [(2u64, 0.5, 7u64), (3, 0.5, 7), (5, 0.5, 7), (5, 0.25, 11)] {
            let m = moqfa_mod(p, eps, seed).unwrap();
            let c = m.compile().unwrap();
            // Recover the multipliers from the gate to drive the fast path.
            let GateSpec::BlockDiag(blocks) = &m.symbol_gates[&'a'] else { panic!() };
            let gs: Vec<u64> = blocks
                .iter()
                .map(|b| match b {
                    GateSpec::RotationPi { num, .. } => *num as u64,
                    _ => panic!("unexpected block gate"),
                })
                .collect();
            let fast = block_acceptances(p, &gs, 2 * p as usize);
            for (idx, &want) in fast.iter().enumerate() {
                let w: Vec<char> = std::iter::repeat('a').take(idx + 1).collect();
                let got = c.acceptance_probability(&w).unwrap();
                assert!((got - want).abs() < 1e-9, "p={p} len={}: {got} vs {want}", idx + 1);
            }
            // And the machine really is certified: members 1, others <= eps.
            for (idx, &acc) in fast.iter().enumerate() {
                let i = idx as u64 + 1;
                if i % p == 0 {
                    assert!(acc >= 1.0 - 1e-9, "p={p} member length {i}: {acc}");
                } else {
                    assert!(acc <= eps + 1e-9, "p={p} length {i}: {acc} > {eps}");
                }
            }
        }
    }

    #[test]
    fn moqfa_mod_is_deterministic_in_the_seed() {
        let a = moqfa_mod(5, 0.5, 42).unwrap();
        let b = moqfa_mod(5, 0.5, 42).unwrap();
        assert_eq!(a, b);
        // Block count stays within the certified bound.
        let k_max = (4.0 * (10.0f64).ln() / 0.5).ceil() as usize;
        assert!(a.quantum_dim / 2 <= k_max);
    }

    #[test]
    fn tradeoff_machine_has_the_advertised_shape() {
        let m = tradeoff_1qcfa(6, 2, 0.25, 3).unwrap();
        let q2 = 3;
        assert_eq!(m.classical_states.len(), 3 * (q2 + 1));
        let inner = moqfa_mod(2, 0.25, 3).unwrap();
        assert_eq!(m.quantum_dim, inner.quantum_dim);
        // The intersection dims example: 3 classical x 4 classical -> 12.
        let a = lift_moqfa(&inner).unwrap();
        let b = lift_dfa(&dfa_mod(3).unwrap()).unwrap();
        assert_eq!(a.classical_states.len(), 3);
        assert_eq!(b.classical_states.len(), 4);
        let prod = intersect_1qcfa(&a, &b, "x").unwrap();
        assert_eq!(prod.classical_states.len(), 12);
    }

    #[test]
    fn tradeoff_partitions_enumerate_coprime_splits() {
        assert_eq!(tradeoff_partitions(6), vec![(2, 3), (3, 2)]);
        assert_eq!(tradeoff_partitions(12), vec![(3, 4), (4, 3)]);
        assert_eq!(tradeoff_partitions(30), vec![(2, 15), (3, 10), (5, 6), (6, 5), (10, 3), (15, 2)]);
        assert!(tradeoff_partitions(4).is_empty()); // 2·2 is not coprime
        assert!(tradeoff_partitions(7).is_empty()); // prime
    }

    #[test]
    fn tradeoff_rejects_bad_splits() {
        assert!(tradeoff_1qcfa(4, 2, 0.25, 0).is_err()); // not coprime
        assert!(tradeoff_1qcfa(6, 5, 0.25, 0).is_err()); // not a divisor
        assert!(tradeoff_1qcfa(6, 6, 0.25, 0).is_err()); // q2 = 1
    }

    #[test]
    fn intersection_accepts_exactly_the_conjunction() {
        let m = tradeoff_1qcfa(6, 2, 0.5, 9).unwrap();
        let c = CompiledOneWay::new(&m).unwrap();
        for k in 0..=24usize {
            let w: Vec<char> = std::iter::repeat('a').take(k).collect();
            let p = c.acceptance_probability(&w).unwrap();
            if k % 6 == 0 {
                assert!(p >= 1.0 - 1e-9, "k={k}: {p}");
            } else {
                assert!(p <= 0.5 + 1e-9, "k={k}: {p}");
            }
        }
    }
}
