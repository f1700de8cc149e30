//! Contextual biasing: a trie of boosted word sequences composed with a
//! recognition lattice.
//!
//! Matching runs left to right from the trie root. A token that cannot
//! extend the current partial match sends the matcher back to the root,
//! where the same token is tried again. Every time the matcher enters a
//! node that ends a boosted sequence, the tokens consumed since the last
//! such node in the current attempt are credited `discount` each, so a
//! full 5-token match at -0.2 contributes -1.0 while an abandoned prefix
//! contributes nothing. After a leaf the next token always restarts at the
//! root, so matches never overlap.

use std::collections::{BTreeMap, HashMap};

use super::{Arc, Lattice, LatticeError};

/// Above this many boosted sequences recognition tends to degrade.
pub const CONTEXT_SIZE_WARNING: usize = 1000;
const MAX_SEQUENCES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Default)]
struct Node {
    children: BTreeMap<String, usize>,
    /// Tokens credited on entering this node (0 unless it ends a sequence).
    credit: u32,
    /// Depth of the deepest accepting node on the root path, self included.
    accept_depth: u32,
    depth: u32,
}

/// Deterministic trie over boosted token sequences with a uniform
/// per-token discount.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasingFst {
    nodes: Vec<Node>,
    discount: f64,
    sequences: usize,
}

pub const ROOT: usize = 0;

impl BiasingFst {
    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Number of distinct boosted sequences.
    pub fn len(&self) -> usize {
        self.sequences
    }

    pub fn is_empty(&self) -> bool {
        self.sequences == 0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Consumes `word` from trie node `node`, returning the next node and
    /// the weight emitted on the transition.
    pub fn step(&self, node: usize, word: &str) -> (usize, f64) {
        if let Some(&c) = self.nodes[node].children.get(word) {
            return (c, self.weight(c));
        }
        if node != ROOT {
            if let Some(&c) = self.nodes[ROOT].children.get(word) {
                return (c, self.weight(c));
            }
        }
        (ROOT, 0.0)
    }

    fn weight(&self, node: usize) -> f64 {
        match self.nodes[node].credit {
            0 => 0.0,
            n => n as f64 * self.discount,
        }
    }

    /// Total discount the matcher assigns to a token sequence.
    pub fn score_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut cursor = MatchCursor::new(self);
        tokens.iter().map(|t| cursor.push(t.as_ref())).sum()
    }
}

/// Incremental matcher state over a [`BiasingFst`].
#[derive(Debug, Clone)]
pub struct MatchCursor<'a> {
    fst: &'a BiasingFst,
    node: usize,
}

impl<'a> MatchCursor<'a> {
    pub fn new(fst: &'a BiasingFst) -> Self {
        MatchCursor { fst, node: ROOT }
    }

    pub fn push(&mut self, word: &str) -> f64 {
        let (next, w) = self.fst.step(self.node, word);
        self.node = next;
        w
    }
}

/// Builds the biasing trie. Duplicate sequences collapse into one path.
pub fn build_biasing_fst<S: AsRef<str>>(
    sequences: &[Vec<S>],
    discount_per_token: f64,
) -> Result<BiasingFst, LatticeError> {
    if sequences.is_empty() {
        return Err(LatticeError::EmptySequenceSet);
    }
    if !(discount_per_token <= 0.0) || !discount_per_token.is_finite() {
        return Err(LatticeError::PositiveDiscount(discount_per_token));
    }
    if sequences.len() > MAX_SEQUENCES {
        return Err(LatticeError::TooManySequences(sequences.len(), MAX_SEQUENCES));
    }
    if sequences.len() > CONTEXT_SIZE_WARNING {
        log::warn!(
            "{} boosted sequences; biasing loses effectiveness above {}",
            sequences.len(),
            CONTEXT_SIZE_WARNING
        );
    }
    let mut nodes = vec![Node::default()];
    let mut accepting = vec![false];
    for (i, seq) in sequences.iter().enumerate() {
        if seq.is_empty() {
            return Err(LatticeError::EmptySequence(i));
        }
        let mut cur = ROOT;
        for tok in seq {
            let tok = tok.as_ref();
            cur = match nodes[cur].children.get(tok) {
                Some(&c) => c,
                None => {
                    let id = nodes.len();
                    let depth = nodes[cur].depth + 1;
                    nodes.push(Node {
                        depth,
                        ..Node::default()
                    });
                    accepting.push(false);
                    nodes[cur].children.insert(tok.to_string(), id);
                    id
                }
            };
        }
        accepting[cur] = true;
    }
    // Node ids grow with depth along every root path, so parents come first.
    let mut parent = vec![ROOT; nodes.len()];
    for (p, n) in nodes.iter().enumerate() {
        for &c in n.children.values() {
            parent[c] = p;
        }
    }
    let mut sequences_count = 0;
    for id in 1..nodes.len() {
        let inherited = nodes[parent[id]].accept_depth;
        if accepting[id] {
            sequences_count += 1;
            nodes[id].credit = nodes[id].depth - inherited;
            nodes[id].accept_depth = nodes[id].depth;
        } else {
            nodes[id].accept_depth = inherited;
        }
    }
    Ok(BiasingFst {
        nodes,
        discount: discount_per_token,
        sequences: sequences_count,
    })
}

/// Composes a lattice with a biasing FST.
///
/// The result accepts exactly the same word sequences; each path's cost is
/// shifted by the discount the matcher assigns to its words.
pub fn compose_bias(lattice: &Lattice, fst: &BiasingFst) -> Lattice {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut per_state: Vec<Vec<usize>> = vec![Vec::new(); lattice.num_states()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut intern = |q: usize, n: usize, pairs: &mut Vec<(usize, usize)>, per_state: &mut Vec<Vec<usize>>| {
        *ids.entry((q, n)).or_insert_with(|| {
            pairs.push((q, n));
            per_state[q].push(n);
            pairs.len() - 1
        })
    };
    intern(0, ROOT, &mut pairs, &mut per_state);

    let mut arcs = Vec::new();
    for &q in lattice.topo_order() {
        // Trie nodes paired with q are final once every predecessor of q
        // has been expanded, which topological order guarantees.
        let nodes = per_state[q].clone();
        for n in nodes {
            let from = intern(q, n, &mut pairs, &mut per_state);
            for (_, a) in lattice.out_arcs(q) {
                let (next, w) = fst.step(n, &a.word);
                let to = intern(a.dst, next, &mut pairs, &mut per_state);
                arcs.push(Arc::new(from, to, a.word.clone(), a.cost + w));
            }
        }
    }
    let finals = pairs
        .iter()
        .enumerate()
        .filter_map(|(id, &(q, _))| lattice.final_cost(q).map(|c| (id, c)))
        .collect();
    Lattice::new(pairs.len(), arcs, finals).expect("composition of a trim acyclic lattice is trim and acyclic")
}
