//! Deterministic finite automata, used as classical baselines for the
//! state-count comparisons.

use super::{Language, StateId};
use crate::error::{Result, SqfaError};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Debug, PartialEq)]
pub struct Dfa {
    pub name: String,
    /// State names; ids are indices into this vector.
    pub states: Vec<String>,
    /// Sorted, duplicate-free input alphabet.
    pub alphabet: Vec<char>,
    pub start: StateId,
    pub accepting: BTreeSet<StateId>,
    /// `transitions[state][symbol_index]` = successor state.
    pub transitions: Vec<Vec<StateId>>,
    pub language: Option<Language>,
}

impl Dfa {
    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        if n == 0 {
            return Err(SqfaError::ill_formed(self.loc("states"), "no states"));
        }
        if self.start >= n {
            return Err(SqfaError::ill_formed(self.loc("start"), "start state out of range"));
        }
        let mut sorted = self.alphabet.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != self.alphabet {
            return Err(SqfaError::ill_formed(
                self.loc("alphabet"),
                "alphabet must be sorted and duplicate-free",
            ));
        }
        for &s in &self.accepting {
            if s >= n {
                return Err(SqfaError::ill_formed(
                    self.loc("accepting"),
                    format!("state id {s} out of range"),
                ));
            }
        }
        if self.transitions.len() != n {
            return Err(SqfaError::ill_formed(
                self.loc("transitions"),
                "transition table must have one row per state",
            ));
        }
        for (s, row) in self.transitions.iter().enumerate() {
            if row.len() != self.alphabet.len() {
                return Err(SqfaError::ill_formed(
                    format!("{}.transitions[{}]", self.name, self.states[s]),
                    "transition function must be total over the alphabet",
                ));
            }
            for (k, &t) in row.iter().enumerate() {
                if t >= n {
                    return Err(SqfaError::ill_formed(
                        format!(
                            "{}.transitions[{}][{}]",
                            self.name, self.states[s], self.alphabet[k]
                        ),
                        format!("target state id {t} out of range"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn loc(&self, field: &str) -> String {
        format!("{}.{}", self.name, field)
    }

    fn sym_index(&self, c: char) -> Result<usize> {
        self.alphabet.binary_search(&c).map_err(|_| {
            SqfaError::InvalidArgument(format!(
                "symbol '{c}' is not in the alphabet of {}",
                self.name
            ))
        })
    }

    /// Run the automaton; `Ok(true)` iff the word is accepted.
    pub fn run(&self, word: &str) -> Result<bool> {
        let mut s = self.start;
        for c in word.chars() {
            s = self.transitions[s][self.sym_index(c)?];
        }
        Ok(self.accepting.contains(&s))
    }

    /// Minimal DFA for the same language: drop unreachable states, merge
    /// equivalent ones (Moore partition refinement), and renumber states in
    /// breadth-first order from the start state so equal languages yield
    /// structurally equal automata.
    pub fn minimize(&self) -> Dfa {
        let k = self.alphabet.len();

        // Reachable states.
        let mut reach = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.start]);
        reach[self.start] = true;
        while let Some(s) = queue.pop_front() {
            for &t in &self.transitions[s] {
                if !reach[t] {
                    reach[t] = true;
                    queue.push_back(t);
                }
            }
        }
        let reachable: Vec<StateId> = (0..self.states.len()).filter(|&s| reach[s]).collect();

        // Moore refinement: start from {accepting, non-accepting}, split by
        // successor-block signatures until stable.
        let mut block = vec![0usize; self.states.len()];
        for &s in &reachable {
            block[s] = usize::from(self.accepting.contains(&s));
        }
        loop {
            let mut sig_to_block: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            let mut next = vec![0usize; self.states.len()];
            for &s in &reachable {
                let sig: Vec<usize> = (0..k).map(|a| block[self.transitions[s][a]]).collect();
                let id = sig_to_block.len();
                let b = *sig_to_block.entry((block[s], sig)).or_insert(id);
                next[s] = b;
            }
            let stable = reachable.iter().all(|&s| next[s] == block[s])
                && sig_to_block.len()
                    == reachable.iter().map(|&s| block[s]).collect::<BTreeSet<_>>().len();
            block = next;
            if stable {
                break;
            }
        }

        // Canonical renumbering: BFS over blocks from the start block.
        let start_block = block[self.start];
        let mut order: BTreeMap<usize, usize> = BTreeMap::new();
        order.insert(start_block, 0);
        let mut bfs = VecDeque::from([start_block]);
        // representative state per block
        let mut rep: BTreeMap<usize, StateId> = BTreeMap::new();
        for &s in &reachable {
            rep.entry(block[s]).or_insert(s);
        }
        while let Some(b) = bfs.pop_front() {
            let s = rep[&b];
            for a in 0..k {
                let tb = block[self.transitions[s][a]];
                if !order.contains_key(&tb) {
                    order.insert(tb, order.len());
                    bfs.push_back(tb);
                }
            }
        }

        let m = order.len();
        let mut states = vec![String::new(); m];
        let mut transitions = vec![vec![0usize; k]; m];
        let mut accepting = BTreeSet::new();
        for (&b, &id) in &order {
            let s = rep[&b];
            states[id] = format!("q{id}");
            for a in 0..k {
                transitions[id][a] = order[&block[self.transitions[s][a]]];
            }
            if self.accepting.contains(&s) {
                accepting.insert(id);
            }
        }

        Dfa {
            name: format!("{}-min", self.name),
            states,
            alphabet: self.alphabet.clone(),
            start: 0,
            accepting,
            transitions,
            language: self.language.clone(),
        }
    }
}
