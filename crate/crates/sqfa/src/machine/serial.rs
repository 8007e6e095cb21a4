//! Loading and saving machines as JSON documents.
//!
//! The on-disk format references classical states by name, writes complex
//! amplitudes as `[re, im]` pairs, exact rationals as `"n/d"` strings, and
//! keeps gates in their symbolic form so documents stay reviewable.

use super::dfa::Dfa;
use super::moqfa::Moqfa;
use super::qcfa::{Annotations, OneWayQcfa, QuantumAction, TwoWayQcfa, WalkAnnotation};
use super::{AcceptanceMode, HeadMove, Language, Machine, TapeSym};
use crate::error::{Result, SqfaError};
use crate::exact::Rat;
use crate::quantum::{Amplitude, GateSpec, ProjectiveMeasurement, StateVector, UnitaryOp};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

pub const FORMAT_VERSION: u32 = 1;

type Cx = (f64, f64);

fn cx(a: &Amplitude) -> Cx {
    (a.re, a.im)
}

fn uncx(c: &Cx) -> Amplitude {
    Amplitude::new(c.0, c.1)
}

fn vec_cx(v: &StateVector) -> Vec<Cx> {
    v.amps.iter().map(cx).collect()
}

fn unvec_cx(v: &[Cx]) -> StateVector {
    StateVector::new(v.iter().map(uncx).collect())
}

fn rat_str(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rat(s: &str, location: &str) -> Result<Rat> {
    Rat::from_str(s).map_err(|e| SqfaError::load(location, format!("bad rational '{s}': {e}")))
}

fn sym_str(sym: &TapeSym) -> String {
    sym.describe()
}

fn parse_sym(s: &str, location: &str) -> Result<TapeSym> {
    match s {
        "left" => Ok(TapeSym::Left),
        "right" => Ok(TapeSym::Right),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(TapeSym::Sym(c)),
                _ => Err(SqfaError::load(
                    location,
                    format!("symbol must be 'left', 'right', or a single character, got '{s}'"),
                )),
            }
        }
    }
}

fn mv_str(mv: &HeadMove) -> &'static str {
    match mv {
        HeadMove::Left => "left",
        HeadMove::Stay => "stay",
        HeadMove::Right => "right",
    }
}

fn parse_mv(s: &str, location: &str) -> Result<HeadMove> {
    match s {
        "left" => Ok(HeadMove::Left),
        "stay" => Ok(HeadMove::Stay),
        "right" => Ok(HeadMove::Right),
        _ => Err(SqfaError::load(location, format!("bad head move '{s}'"))),
    }
}

fn parse_char(s: &str, location: &str) -> Result<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(SqfaError::load(location, format!("expected a single character, got '{s}'"))),
    }
}

fn resolve(names: &[String], name: &str, location: &str) -> Result<usize> {
    names.iter().position(|n| n == name).ok_or_else(|| {
        SqfaError::load(location, format!("unknown classical state '{name}'"))
    })
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(rename_all = "snake_case")]
enum GateDoc {
    Identity { dim: usize },
    RotationPi { num: i64, den: i64 },
    RotationSqrt2Pi { num: i64, den: i64 },
    Rotation { theta: f64 },
    CosSqRotation { cos_sq: String },
    SignFlip { dim: usize, flips: Vec<usize> },
    Reflector { column: Vec<Cx> },
    BlockDiag { blocks: Vec<GateDoc> },
    Tensor { factors: Vec<GateDoc> },
    Explicit { rows: Vec<Vec<Cx>> },
}

fn gate_doc(g: &GateSpec) -> GateDoc {
    match g {
        GateSpec::Identity { dim } => GateDoc::Identity { dim: *dim },
        GateSpec::RotationPi { num, den } => GateDoc::RotationPi { num: *num, den: *den },
        GateSpec::RotationSqrt2Pi { num, den } => {
            GateDoc::RotationSqrt2Pi { num: *num, den: *den }
        }
        GateSpec::Rotation { theta } => GateDoc::Rotation { theta: *theta },
        GateSpec::CosSqRotation { cos_sq } => GateDoc::CosSqRotation { cos_sq: rat_str(cos_sq) },
        GateSpec::SignFlip { dim, flips } => {
            GateDoc::SignFlip { dim: *dim, flips: flips.iter().copied().collect() }
        }
        GateSpec::Reflector { column } => GateDoc::Reflector { column: column.iter().map(cx).collect() },
        GateSpec::BlockDiag(blocks) => GateDoc::BlockDiag { blocks: blocks.iter().map(gate_doc).collect() },
        GateSpec::Tensor(a, b) => GateDoc::Tensor { factors: vec![gate_doc(a), gate_doc(b)] },
        GateSpec::Explicit { matrix } => {
            let d = matrix.dim();
            GateDoc::Explicit {
                rows: (0..d)
                    .map(|i| (0..d).map(|j| cx(&matrix.at(i, j))).collect())
                    .collect(),
            }
        }
    }
}

fn gate_from_doc(doc: &GateDoc, location: &str) -> Result<GateSpec> {
    Ok(match doc {
        GateDoc::Identity { dim } => GateSpec::Identity { dim: *dim },
        GateDoc::RotationPi { num, den } => {
            if *den == 0 {
                return Err(SqfaError::load(location, "rotation denominator is zero"));
            }
            GateSpec::RotationPi { num: *num, den: *den }
        }
        GateDoc::RotationSqrt2Pi { num, den } => {
            if *den == 0 {
                return Err(SqfaError::load(location, "rotation denominator is zero"));
            }
            GateSpec::RotationSqrt2Pi { num: *num, den: *den }
        }
        GateDoc::Rotation { theta } => GateSpec::Rotation { theta: *theta },
        GateDoc::CosSqRotation { cos_sq } => {
            GateSpec::CosSqRotation { cos_sq: parse_rat(cos_sq, location)? }
        }
        GateDoc::SignFlip { dim, flips } => {
            GateSpec::SignFlip { dim: *dim, flips: flips.iter().copied().collect() }
        }
        GateDoc::Reflector { column } => {
            GateSpec::Reflector { column: column.iter().map(uncx).collect() }
        }
        GateDoc::BlockDiag { blocks } => GateSpec::BlockDiag(
            blocks
                .iter()
                .enumerate()
                .map(|(i, b)| gate_from_doc(b, &format!("{location}.blocks[{i}]")))
                .collect::<Result<Vec<_>>>()?,
        ),
        GateDoc::Tensor { factors } => {
            if factors.len() != 2 {
                return Err(SqfaError::load(location, "tensor gate must have two factors"));
            }
            GateSpec::Tensor(
                Box::new(gate_from_doc(&factors[0], &format!("{location}.factors[0]"))?),
                Box::new(gate_from_doc(&factors[1], &format!("{location}.factors[1]"))?),
            )
        }
        GateDoc::Explicit { rows } => {
            let matrix = UnitaryOp::from_rows(
                rows.iter().map(|r| r.iter().map(uncx).collect()).collect(),
            )
            .map_err(|e| SqfaError::load(location, e.to_string()))?;
            GateSpec::Explicit { matrix }
        }
    })
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct OutcomeDoc {
    label: i64,
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct MeasurementDoc {
    outcomes: Vec<OutcomeDoc>,
}

fn measurement_doc(m: &ProjectiveMeasurement) -> MeasurementDoc {
    MeasurementDoc {
        outcomes: m
            .outcomes()
            .iter()
            .map(|(label, set)| OutcomeDoc { label: *label, indices: set.iter().copied().collect() })
            .collect(),
    }
}

fn measurement_from_doc(doc: &MeasurementDoc, dim: usize, location: &str) -> Result<ProjectiveMeasurement> {
    ProjectiveMeasurement::new(
        dim,
        doc.outcomes
            .iter()
            .map(|o| (o.label, o.indices.iter().copied().collect::<BTreeSet<usize>>()))
            .collect(),
    )
    .map_err(|e| SqfaError::load(location, e.to_string()))
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct AcceptanceDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

fn acceptance_doc(m: &AcceptanceMode) -> AcceptanceDoc {
    match m {
        AcceptanceMode::OneSided { eps } => {
            AcceptanceDoc { kind: "one_sided".into(), eps: Some(*eps), lambda: None, gap: None }
        }
        AcceptanceMode::ErrorProb { eps } => {
            AcceptanceDoc { kind: "error_prob".into(), eps: Some(*eps), lambda: None, gap: None }
        }
        AcceptanceMode::CutPoint { lambda, gap } => AcceptanceDoc {
            kind: "cut_point".into(),
            eps: None,
            lambda: Some(*lambda),
            gap: Some(*gap),
        },
        AcceptanceMode::Exact => {
            AcceptanceDoc { kind: "exact".into(), eps: None, lambda: None, gap: None }
        }
    }
}

fn acceptance_from_doc(doc: &AcceptanceDoc, location: &str) -> Result<AcceptanceMode> {
    match doc.kind.as_str() {
        "one_sided" => Ok(AcceptanceMode::OneSided {
            eps: doc.eps.ok_or_else(|| SqfaError::load(location, "one_sided needs eps"))?,
        }),
        "error_prob" => Ok(AcceptanceMode::ErrorProb {
            eps: doc.eps.ok_or_else(|| SqfaError::load(location, "error_prob needs eps"))?,
        }),
        "cut_point" => Ok(AcceptanceMode::CutPoint {
            lambda: doc.lambda.ok_or_else(|| SqfaError::load(location, "cut_point needs lambda"))?,
            gap: doc.gap.ok_or_else(|| SqfaError::load(location, "cut_point needs gap"))?,
        }),
        "exact" => Ok(AcceptanceMode::Exact),
        other => Err(SqfaError::load(location, format!("unknown acceptance kind '{other}'"))),
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct LanguageDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

fn language_doc(l: &Language) -> LanguageDoc {
    match l {
        Language::Mod { p } => LanguageDoc { kind: "mod".into(), p: Some(*p), m: None, n: None },
        Language::Len { m } => LanguageDoc { kind: "len".into(), p: None, m: Some(*m), n: None },
        Language::EqPromise { n } => {
            LanguageDoc { kind: "eq_promise".into(), p: None, m: None, n: Some(*n) }
        }
    }
}

fn language_from_doc(doc: &LanguageDoc, location: &str) -> Result<Language> {
    match doc.kind.as_str() {
        "mod" => Ok(Language::Mod {
            p: doc.p.ok_or_else(|| SqfaError::load(location, "mod language needs p"))?,
        }),
        "len" => Ok(Language::Len {
            m: doc.m.ok_or_else(|| SqfaError::load(location, "len language needs m"))?,
        }),
        "eq_promise" => Ok(Language::EqPromise {
            n: doc.n.ok_or_else(|| SqfaError::load(location, "eq_promise language needs n"))?,
        }),
        other => Err(SqfaError::load(location, format!("unknown language kind '{other}'"))),
    }
}

fn alphabet_doc(alphabet: &[char]) -> Vec<String> {
    alphabet.iter().map(|c| c.to_string()).collect()
}

fn alphabet_from_doc(doc: &[String], location: &str) -> Result<Vec<char>> {
    doc.iter()
        .enumerate()
        .map(|(i, s)| parse_char(s, &format!("{location}[{i}]")))
        .collect()
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct DfaDoc {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<LanguageDoc>,
    states: Vec<String>,
    alphabet: Vec<String>,
    start: String,
    accepting: Vec<String>,
    /// One row per state, one entry per alphabet symbol.
    transitions: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct MoqfaDoc {
    name: String,
    acceptance: AcceptanceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<LanguageDoc>,
    quantum_dim: usize,
    alphabet: Vec<String>,
    initial: Vec<Cx>,
    symbol_gates: BTreeMap<String, GateDoc>,
    final_gate: GateDoc,
    accepting: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct OneWayStepDoc {
    state: String,
    symbol: String,
    gate: GateDoc,
    next: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct VerdictDoc {
    state: String,
    outcome: i64,
    verdict: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct OneWayDoc {
    name: String,
    acceptance: AcceptanceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<LanguageDoc>,
    quantum_dim: usize,
    classical_states: Vec<String>,
    alphabet: Vec<String>,
    initial_quantum: Vec<Cx>,
    initial_classical: String,
    accepting: Vec<String>,
    steps: Vec<OneWayStepDoc>,
    final_measure: MeasurementDoc,
    verdicts: Vec<VerdictDoc>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct ArmDoc {
    outcome: i64,
    next: String,
    #[serde(rename = "move")]
    mv: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct TwoWayEntryDoc {
    state: String,
    symbol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    unitary: Option<GateDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    next: Option<String>,
    #[serde(rename = "move", skip_serializing_if = "Option::is_none")]
    mv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure: Option<MeasurementDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arms: Option<Vec<ArmDoc>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct WalkDoc {
    entry: String,
    members: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug, Default)]
struct AnnotationsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    reset_state: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    walks: Vec<WalkDoc>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct TwoWayDoc {
    name: String,
    acceptance: AcceptanceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<LanguageDoc>,
    quantum_dim: usize,
    classical_states: Vec<String>,
    alphabet: Vec<String>,
    initial_quantum: Vec<Cx>,
    initial_classical: String,
    accepting: Vec<String>,
    rejecting: Vec<String>,
    transitions: Vec<TwoWayEntryDoc>,
    #[serde(default)]
    annotations: AnnotationsDoc,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "model")]
enum ModelDoc {
    #[serde(rename = "dfa")]
    Dfa(DfaDoc),
    #[serde(rename = "moqfa")]
    Moqfa(MoqfaDoc),
    #[serde(rename = "1qcfa")]
    OneWay(OneWayDoc),
    #[serde(rename = "2qcfa")]
    TwoWay(TwoWayDoc),
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct Doc {
    format_version: u32,
    #[serde(flatten)]
    model: ModelDoc,
}

fn to_doc(machine: &Machine) -> Doc {
    let model = match machine {
        Machine::Dfa(m) => ModelDoc::Dfa(DfaDoc {
            name: m.name.clone(),
            language: m.language.as_ref().map(language_doc),
            states: m.states.clone(),
            alphabet: alphabet_doc(&m.alphabet),
            start: m.states[m.start].clone(),
            accepting: m.accepting.iter().map(|&s| m.states[s].clone()).collect(),
            transitions: m
                .transitions
                .iter()
                .map(|row| row.iter().map(|&t| m.states[t].clone()).collect())
                .collect(),
        }),
        Machine::Moqfa(m) => ModelDoc::Moqfa(MoqfaDoc {
            name: m.name.clone(),
            acceptance: acceptance_doc(&m.mode),
            language: m.language.as_ref().map(language_doc),
            quantum_dim: m.quantum_dim,
            alphabet: alphabet_doc(&m.input_alphabet),
            initial: vec_cx(&m.initial),
            symbol_gates: m
                .symbol_gates
                .iter()
                .map(|(c, g)| (c.to_string(), gate_doc(g)))
                .collect(),
            final_gate: gate_doc(&m.final_gate),
            accepting: m.accepting.iter().copied().collect(),
        }),
        Machine::OneWay(m) => ModelDoc::OneWay(OneWayDoc {
            name: m.name.clone(),
            acceptance: acceptance_doc(&m.mode),
            language: m.language.as_ref().map(language_doc),
            quantum_dim: m.quantum_dim,
            classical_states: m.classical_states.clone(),
            alphabet: alphabet_doc(&m.input_alphabet),
            initial_quantum: vec_cx(&m.initial_quantum),
            initial_classical: m.classical_states[m.initial_classical].clone(),
            accepting: m.accepting.iter().map(|&s| m.classical_states[s].clone()).collect(),
            steps: m
                .steps
                .iter()
                .map(|(&(s, sym), (g, t))| OneWayStepDoc {
                    state: m.classical_states[s].clone(),
                    symbol: sym_str(&sym),
                    gate: gate_doc(g),
                    next: m.classical_states[*t].clone(),
                })
                .collect(),
            final_measure: measurement_doc(&m.final_measure),
            verdicts: m
                .verdicts
                .iter()
                .map(|(&(s, outcome), &v)| VerdictDoc {
                    state: m.classical_states[s].clone(),
                    outcome,
                    verdict: m.classical_states[v].clone(),
                })
                .collect(),
        }),
        Machine::TwoWay(m) => {
            let mut transitions = Vec::new();
            for (&(s, sym), action) in &m.theta {
                let entry = match action {
                    QuantumAction::Unitary(g) => {
                        let &(t, mv) = m.delta_unitary.get(&(s, sym)).expect("validated");
                        TwoWayEntryDoc {
                            state: m.classical_states[s].clone(),
                            symbol: sym_str(&sym),
                            unitary: Some(gate_doc(g)),
                            next: Some(m.classical_states[t].clone()),
                            mv: Some(mv_str(&mv).into()),
                            measure: None,
                            arms: None,
                        }
                    }
                    QuantumAction::Measure(meas) => TwoWayEntryDoc {
                        state: m.classical_states[s].clone(),
                        symbol: sym_str(&sym),
                        unitary: None,
                        next: None,
                        mv: None,
                        measure: Some(measurement_doc(meas)),
                        arms: Some(
                            meas.labels()
                                .map(|label| {
                                    let &(t, mv) =
                                        m.delta_measure.get(&(s, sym, label)).expect("validated");
                                    ArmDoc {
                                        outcome: label,
                                        next: m.classical_states[t].clone(),
                                        mv: mv_str(&mv).into(),
                                    }
                                })
                                .collect(),
                        ),
                    },
                };
                transitions.push(entry);
            }
            ModelDoc::TwoWay(TwoWayDoc {
                name: m.name.clone(),
                acceptance: acceptance_doc(&m.mode),
                language: m.language.as_ref().map(language_doc),
                quantum_dim: m.quantum_dim,
                classical_states: m.classical_states.clone(),
                alphabet: alphabet_doc(&m.input_alphabet),
                initial_quantum: vec_cx(&m.initial_quantum),
                initial_classical: m.classical_states[m.initial_classical].clone(),
                accepting: m.accepting.iter().map(|&s| m.classical_states[s].clone()).collect(),
                rejecting: m.rejecting.iter().map(|&s| m.classical_states[s].clone()).collect(),
                transitions,
                annotations: AnnotationsDoc {
                    reset_state: m
                        .annotations
                        .reset_state
                        .map(|s| m.classical_states[s].clone()),
                    walks: m
                        .annotations
                        .walks
                        .iter()
                        .map(|w| WalkDoc {
                            entry: m.classical_states[w.entry].clone(),
                            members: w
                                .members
                                .iter()
                                .map(|&s| m.classical_states[s].clone())
                                .collect(),
                        })
                        .collect(),
                },
            })
        }
    };
    Doc { format_version: FORMAT_VERSION, model }
}

fn from_doc(doc: Doc) -> Result<Machine> {
    if doc.format_version != FORMAT_VERSION {
        return Err(SqfaError::load(
            "format_version",
            format!("unsupported version {} (expected {FORMAT_VERSION})", doc.format_version),
        ));
    }
    let machine = match doc.model {
        ModelDoc::Dfa(d) => {
            let loc = |f: &str| format!("{}.{}", d.name, f);
            let alphabet = alphabet_from_doc(&d.alphabet, &loc("alphabet"))?;
            let start = resolve(&d.states, &d.start, &loc("start"))?;
            let accepting = d
                .accepting
                .iter()
                .map(|s| resolve(&d.states, s, &loc("accepting")))
                .collect::<Result<BTreeSet<_>>>()?;
            if d.transitions.len() != d.states.len() {
                return Err(SqfaError::load(
                    loc("transitions"),
                    "need exactly one row per state",
                ));
            }
            let transitions = d
                .transitions
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .map(|t| resolve(&d.states, t, &format!("{}.transitions[{}]", d.name, d.states[i])))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Machine::Dfa(Dfa {
                name: d.name.clone(),
                language: d.language.as_ref().map(|l| language_from_doc(l, &loc("language"))).transpose()?,
                states: d.states,
                alphabet,
                start,
                accepting,
                transitions,
            })
        }
        ModelDoc::Moqfa(d) => {
            let loc = |f: &str| format!("{}.{}", d.name, f);
            let alphabet = alphabet_from_doc(&d.alphabet, &loc("alphabet"))?;
            let mut symbol_gates = BTreeMap::new();
            for (s, g) in &d.symbol_gates {
                let at = format!("{}.symbol_gates[{s}]", d.name);
                symbol_gates.insert(parse_char(s, &at)?, gate_from_doc(g, &at)?);
            }
            Machine::Moqfa(Moqfa {
                name: d.name.clone(),
                quantum_dim: d.quantum_dim,
                input_alphabet: alphabet,
                initial: unvec_cx(&d.initial),
                symbol_gates,
                final_gate: gate_from_doc(&d.final_gate, &loc("final_gate"))?,
                accepting: d.accepting.iter().copied().collect(),
                mode: acceptance_from_doc(&d.acceptance, &loc("acceptance"))?,
                language: d.language.as_ref().map(|l| language_from_doc(l, &loc("language"))).transpose()?,
            })
        }
        ModelDoc::OneWay(d) => {
            let loc = |f: &str| format!("{}.{}", d.name, f);
            let alphabet = alphabet_from_doc(&d.alphabet, &loc("alphabet"))?;
            let mut steps = BTreeMap::new();
            for (i, s) in d.steps.iter().enumerate() {
                let at = format!("{}.steps[{i}]", d.name);
                let key = (resolve(&d.classical_states, &s.state, &at)?, parse_sym(&s.symbol, &at)?);
                if steps
                    .insert(key, (gate_from_doc(&s.gate, &at)?, resolve(&d.classical_states, &s.next, &at)?))
                    .is_some()
                {
                    return Err(SqfaError::load(
                        at,
                        format!("duplicate step for ({}, {})", s.state, s.symbol),
                    ));
                }
            }
            let mut verdicts = BTreeMap::new();
            for (i, v) in d.verdicts.iter().enumerate() {
                let at = format!("{}.verdicts[{i}]", d.name);
                let key = (resolve(&d.classical_states, &v.state, &at)?, v.outcome);
                if verdicts.insert(key, resolve(&d.classical_states, &v.verdict, &at)?).is_some() {
                    return Err(SqfaError::load(at, "duplicate verdict entry"));
                }
            }
            Machine::OneWay(OneWayQcfa {
                name: d.name.clone(),
                quantum_dim: d.quantum_dim,
                initial_quantum: unvec_cx(&d.initial_quantum),
                initial_classical: resolve(&d.classical_states, &d.initial_classical, &loc("initial_classical"))?,
                accepting: d
                    .accepting
                    .iter()
                    .map(|s| resolve(&d.classical_states, s, &loc("accepting")))
                    .collect::<Result<BTreeSet<_>>>()?,
                mode: acceptance_from_doc(&d.acceptance, &loc("acceptance"))?,
                language: d.language.as_ref().map(|l| language_from_doc(l, &loc("language"))).transpose()?,
                final_measure: measurement_from_doc(&d.final_measure, d.quantum_dim, &loc("final_measure"))?,
                steps,
                verdicts,
                classical_states: d.classical_states,
                input_alphabet: alphabet,
            })
        }
        ModelDoc::TwoWay(d) => {
            let loc = |f: &str| format!("{}.{}", d.name, f);
            let alphabet = alphabet_from_doc(&d.alphabet, &loc("alphabet"))?;
            let mut theta = BTreeMap::new();
            let mut delta_unitary = BTreeMap::new();
            let mut delta_measure = BTreeMap::new();
            for (i, e) in d.transitions.iter().enumerate() {
                let at = format!("{}.transitions[{i}]", d.name);
                let s = resolve(&d.classical_states, &e.state, &at)?;
                let sym = parse_sym(&e.symbol, &at)?;
                match (&e.unitary, &e.measure) {
                    (Some(g), None) => {
                        let (Some(next), Some(mv)) = (&e.next, &e.mv) else {
                            return Err(SqfaError::load(
                                at,
                                "unitary transition needs 'next' and 'move'",
                            ));
                        };
                        theta.insert((s, sym), QuantumAction::Unitary(gate_from_doc(g, &at)?));
                        delta_unitary.insert(
                            (s, sym),
                            (resolve(&d.classical_states, next, &at)?, parse_mv(mv, &at)?),
                        );
                    }
                    (None, Some(m)) => {
                        let Some(arms) = &e.arms else {
                            return Err(SqfaError::load(at, "measurement transition needs 'arms'"));
                        };
                        theta.insert(
                            (s, sym),
                            QuantumAction::Measure(measurement_from_doc(m, d.quantum_dim, &at)?),
                        );
                        for arm in arms {
                            delta_measure.insert(
                                (s, sym, arm.outcome),
                                (
                                    resolve(&d.classical_states, &arm.next, &at)?,
                                    parse_mv(&arm.mv, &at)?,
                                ),
                            );
                        }
                    }
                    _ => {
                        return Err(SqfaError::load(
                            at,
                            "transition must have exactly one of 'unitary' or 'measure'",
                        ))
                    }
                }
            }
            let annotations = Annotations {
                reset_state: d
                    .annotations
                    .reset_state
                    .as_ref()
                    .map(|s| resolve(&d.classical_states, s, &loc("annotations.reset_state")))
                    .transpose()?,
                walks: d
                    .annotations
                    .walks
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let at = format!("{}.annotations.walks[{i}]", d.name);
                        Ok(WalkAnnotation {
                            entry: resolve(&d.classical_states, &w.entry, &at)?,
                            members: w
                                .members
                                .iter()
                                .map(|s| resolve(&d.classical_states, s, &at))
                                .collect::<Result<BTreeSet<_>>>()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            Machine::TwoWay(TwoWayQcfa {
                name: d.name.clone(),
                quantum_dim: d.quantum_dim,
                initial_quantum: unvec_cx(&d.initial_quantum),
                initial_classical: resolve(&d.classical_states, &d.initial_classical, &loc("initial_classical"))?,
                accepting: d
                    .accepting
                    .iter()
                    .map(|s| resolve(&d.classical_states, s, &loc("accepting")))
                    .collect::<Result<BTreeSet<_>>>()?,
                rejecting: d
                    .rejecting
                    .iter()
                    .map(|s| resolve(&d.classical_states, s, &loc("rejecting")))
                    .collect::<Result<BTreeSet<_>>>()?,
                mode: acceptance_from_doc(&d.acceptance, &loc("acceptance"))?,
                language: d.language.as_ref().map(|l| language_from_doc(l, &loc("language"))).transpose()?,
                theta,
                delta_unitary,
                delta_measure,
                annotations,
                classical_states: d.classical_states,
                input_alphabet: alphabet,
            })
        }
    };
    machine.validate()?;
    Ok(machine)
}

/// Serialize a machine to a pretty-printed JSON string.
pub fn machine_to_json(machine: &Machine) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_doc(machine))?)
}

/// Parse and validate a machine from a JSON string.
pub fn machine_from_json(json: &str) -> Result<Machine> {
    let doc: Doc = serde_json::from_str(json)?;
    from_doc(doc)
}

/// Save a machine document to a file.
pub fn spec_save(machine: &Machine, path: &Path) -> Result<()> {
    machine.validate()?;
    std::fs::write(path, machine_to_json(machine)? + "\n")?;
    Ok(())
}

/// Load and validate a machine document from a file.
pub fn spec_load(path: &Path) -> Result<Machine> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        SqfaError::load(path.display().to_string(), format!("cannot read file: {e}"))
    })?;
    machine_from_json(&text)
}
