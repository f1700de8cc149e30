//! Weighted word lattices over the tropical semiring.
//!
//! Arc costs are negative natural-log probabilities. State 0 is the start
//! state. A lattice is acyclic and trim: every state lies on some path from
//! the start to a final state.

mod bias;
mod text;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bias::{build_biasing_fst, compose_bias, BiasingFst, MatchCursor, CONTEXT_SIZE_WARNING};
pub use text::{format_lattice, format_lattices, parse_lattice, parse_lattices};

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice has no states")]
    Empty,
    #[error("arc {0} references a state outside the lattice")]
    BadState(usize),
    #[error("arc {index} has invalid word {word:?}")]
    BadWord { index: usize, word: String },
    #[error("non-finite cost on {0}")]
    BadCost(String),
    #[error("lattice contains a cycle")]
    Cyclic,
    #[error("state {0} is not reachable from the start")]
    Unreachable(usize),
    #[error("state {0} cannot reach a final state")]
    DeadEnd(usize),
    #[error("no path from the start to a final state")]
    NoPath,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("biasing set is empty")]
    EmptySequenceSet,
    #[error("boosted sequence {0} is empty")]
    EmptySequence(usize),
    #[error("discount {0} must be a finite value <= 0")]
    PositiveDiscount(f64),
    #[error("{0} sequences exceed the limit of {1}")]
    TooManySequences(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub src: usize,
    pub dst: usize,
    pub word: String,
    pub cost: f64,
}

impl Arc {
    pub fn new(src: usize, dst: usize, word: impl Into<String>, cost: f64) -> Self {
        Arc {
            src,
            dst,
            word: word.into(),
            cost,
        }
    }
}

/// Acyclic weighted word graph. Construct through [`Lattice::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice", into = "RawLattice")]
pub struct Lattice {
    num_states: usize,
    arcs: Vec<Arc>,
    finals: Vec<(usize, f64)>,
    #[serde(skip)]
    topo: Vec<usize>,
    #[serde(skip)]
    out_arcs: Vec<Vec<usize>>,
    #[serde(skip)]
    final_cost: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawLattice {
    num_states: usize,
    arcs: Vec<Arc>,
    finals: Vec<(usize, f64)>,
}

impl TryFrom<RawLattice> for Lattice {
    type Error = LatticeError;

    fn try_from(raw: RawLattice) -> Result<Self, Self::Error> {
        Lattice::new(raw.num_states, raw.arcs, raw.finals)
    }
}

impl From<Lattice> for RawLattice {
    fn from(l: Lattice) -> Self {
        RawLattice {
            num_states: l.num_states,
            arcs: l.arcs,
            finals: l.finals,
        }
    }
}

/// Minimum-cost path through a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BestPath {
    pub tokens: Vec<String>,
    pub cost: f64,
    /// Indices into [`Lattice::arcs`] along the path.
    pub arcs: Vec<usize>,
}

impl Lattice {
    pub fn new(
        num_states: usize,
        arcs: Vec<Arc>,
        finals: Vec<(usize, f64)>,
    ) -> Result<Self, LatticeError> {
        if num_states == 0 {
            return Err(LatticeError::Empty);
        }
        let mut out_arcs = vec![Vec::new(); num_states];
        let mut in_degree = vec![0usize; num_states];
        for (i, a) in arcs.iter().enumerate() {
            if a.src >= num_states || a.dst >= num_states {
                return Err(LatticeError::BadState(i));
            }
            if !crate::model::is_normalized_token(&a.word) {
                return Err(LatticeError::BadWord {
                    index: i,
                    word: a.word.clone(),
                });
            }
            if !a.cost.is_finite() {
                return Err(LatticeError::BadCost(format!("arc {i}")));
            }
            out_arcs[a.src].push(i);
            in_degree[a.dst] += 1;
        }
        let mut final_cost = vec![None; num_states];
        for &(s, c) in &finals {
            if s >= num_states {
                return Err(LatticeError::BadState(s));
            }
            if !c.is_finite() {
                return Err(LatticeError::BadCost(format!("final state {s}")));
            }
            // Duplicate final entries keep the cheaper weight (tropical sum).
            final_cost[s] = Some(final_cost[s].map_or(c, |old: f64| old.min(c)));
        }

        // Kahn's algorithm, smallest ready state first for a stable order.
        let mut ready: std::collections::BTreeSet<usize> =
            (0..num_states).filter(|&s| in_degree[s] == 0).collect();
        let mut topo = Vec::with_capacity(num_states);
        while let Some(s) = ready.pop_first() {
            topo.push(s);
            for &ai in &out_arcs[s] {
                let d = arcs[ai].dst;
                in_degree[d] -= 1;
                if in_degree[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if topo.len() != num_states {
            return Err(LatticeError::Cyclic);
        }

        let lattice = Lattice {
            num_states,
            arcs,
            finals,
            topo,
            out_arcs,
            final_cost,
        };
        lattice.check_trim()?;
        Ok(lattice)
    }

    fn check_trim(&self) -> Result<(), LatticeError> {
        let mut reach = vec![false; self.num_states];
        reach[0] = true;
        for &s in &self.topo {
            if reach[s] {
                for &ai in &self.out_arcs[s] {
                    reach[self.arcs[ai].dst] = true;
                }
            }
        }
        let mut coreach: Vec<bool> = self.final_cost.iter().map(Option::is_some).collect();
        for &s in self.topo.iter().rev() {
            if self.out_arcs[s].iter().any(|&ai| coreach[self.arcs[ai].dst]) {
                coreach[s] = true;
            }
        }
        if !coreach[0] {
            return Err(LatticeError::NoPath);
        }
        if let Some(s) = reach.iter().position(|r| !r) {
            return Err(LatticeError::Unreachable(s));
        }
        if let Some(s) = coreach.iter().position(|c| !c) {
            return Err(LatticeError::DeadEnd(s));
        }
        Ok(())
    }

    /// Re-runs construction checks; useful after deserialization through
    /// foreign code paths.
    pub fn validate(&self) -> Result<(), LatticeError> {
        Lattice::new(self.num_states, self.arcs.clone(), self.finals.clone()).map(|_| ())
    }

    /// Single-path lattice spelling out `words` with the given per-arc costs.
    pub fn linear(words: &[String], costs: &[f64]) -> Result<Self, LatticeError> {
        assert_eq!(words.len(), costs.len(), "one cost per word");
        let arcs = words
            .iter()
            .zip(costs)
            .enumerate()
            .map(|(i, (w, &c))| Arc::new(i, i + 1, w.clone(), c))
            .collect();
        Lattice::new(words.len() + 1, arcs, vec![(words.len(), 0.0)])
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn finals(&self) -> &[(usize, f64)] {
        &self.finals
    }

    pub fn final_cost(&self, state: usize) -> Option<f64> {
        self.final_cost[state]
    }

    pub fn out_arcs(&self, state: usize) -> impl Iterator<Item = (usize, &Arc)> {
        self.out_arcs[state].iter().map(move |&i| (i, &self.arcs[i]))
    }

    /// States in topological order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Minimum-cost path. Among equal-cost paths the lexicographically
    /// smallest token sequence wins.
    pub fn best_path(&self) -> Result<BestPath, LatticeError> {
        // Suffix DP: best[s] = cheapest completion from s.
        let mut best: Vec<Option<(f64, Vec<String>, Vec<usize>)>> = vec![None; self.num_states];
        for &s in self.topo.iter().rev() {
            let mut cand: Option<(f64, Vec<String>, Vec<usize>)> =
                self.final_cost[s].map(|c| (c, Vec::new(), Vec::new()));
            for &ai in &self.out_arcs[s] {
                let a = &self.arcs[ai];
                let Some((tail_cost, tail_tokens, tail_arcs)) = &best[a.dst] else {
                    continue;
                };
                let cost = a.cost + tail_cost;
                let better = match &cand {
                    None => true,
                    Some((c, toks, _)) => match cost.total_cmp(c) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => {
                            cmp_prefixed(&a.word, tail_tokens, toks) == Ordering::Less
                        }
                    },
                };
                if better {
                    let mut toks = Vec::with_capacity(tail_tokens.len() + 1);
                    toks.push(a.word.clone());
                    toks.extend_from_slice(tail_tokens);
                    let mut arcs = Vec::with_capacity(tail_arcs.len() + 1);
                    arcs.push(ai);
                    arcs.extend_from_slice(tail_arcs);
                    cand = Some((cost, toks, arcs));
                }
            }
            best[s] = cand;
        }
        best[0]
            .take()
            .map(|(cost, tokens, arcs)| BestPath { tokens, cost, arcs })
            .ok_or(LatticeError::NoPath)
    }

    /// Forward log-probabilities: `alpha[s] = ln Σ_{paths start→s} exp(-cost)`.
    fn forward(&self) -> Vec<f64> {
        let mut alpha = vec![f64::NEG_INFINITY; self.num_states];
        alpha[0] = 0.0;
        for &s in &self.topo {
            if alpha[s] == f64::NEG_INFINITY {
                continue;
            }
            for &ai in &self.out_arcs[s] {
                let a = &self.arcs[ai];
                alpha[a.dst] = log_add(alpha[a.dst], alpha[s] - a.cost);
            }
        }
        alpha
    }

    /// Backward log-probabilities including the final weight.
    fn backward(&self) -> Vec<f64> {
        let mut beta: Vec<f64> = self
            .final_cost
            .iter()
            .map(|c| c.map_or(f64::NEG_INFINITY, |c| -c))
            .collect();
        for &s in self.topo.iter().rev() {
            for &ai in &self.out_arcs[s] {
                let a = &self.arcs[ai];
                beta[s] = log_add(beta[s], beta[a.dst] - a.cost);
            }
        }
        beta
    }

    /// Posterior probability of every arc, aligned with [`Lattice::arcs`].
    pub fn word_posteriors(&self) -> Result<Vec<f64>, LatticeError> {
        let alpha = self.forward();
        let beta = self.backward();
        let total = beta[0];
        if total == f64::NEG_INFINITY {
            return Err(LatticeError::NoPath);
        }
        Ok(self
            .arcs
            .iter()
            .map(|a| (alpha[a.src] - a.cost + beta[a.dst] - total).exp().clamp(0.0, 1.0))
            .collect())
    }

    /// Posterior probability that a path visits each state.
    pub fn state_posteriors(&self) -> Result<Vec<f64>, LatticeError> {
        let alpha = self.forward();
        let beta = self.backward();
        let total = beta[0];
        if total == f64::NEG_INFINITY {
            return Err(LatticeError::NoPath);
        }
        Ok(alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a + b - total).exp().clamp(0.0, 1.0))
            .collect())
    }
}

/// Compares `[head] ++ tail` with `other` lexicographically.
fn cmp_prefixed(head: &str, tail: &[String], other: &[String]) -> Ordering {
    match other.first() {
        None => Ordering::Greater,
        Some(first) => head
            .cmp(first.as_str())
            .then_with(|| tail.iter().cmp(other[1..].iter())),
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Best path of a lattice together with per-token confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub best: BestPath,
    pub confidences: Vec<f64>,
}

impl Decoded {
    pub fn avg_confidence(&self) -> Option<f64> {
        (!self.confidences.is_empty())
            .then(|| self.confidences.iter().sum::<f64>() / self.confidences.len() as f64)
    }
}

/// Decodes the best path and scores each of its words by arc posterior.
pub fn decode(lattice: &Lattice) -> Result<Decoded, LatticeError> {
    let best = lattice.best_path()?;
    let post = lattice.word_posteriors()?;
    let confidences = best.arcs.iter().map(|&i| post[i]).collect();
    Ok(Decoded { best, confidences })
}
