//! Reference implementations used to cross-check the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use atc2_core::lattice::{Arc, Lattice};
use rand::Rng;

/// Word-level edit distance by the textbook full-matrix recurrence.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Discount a set of boosted sequences assigns to `tokens`, tracked as a
/// growing partial match rather than a trie walk.
pub fn bias_oracle(sequences: &[Vec<String>], discount: f64, tokens: &[String]) -> f64 {
    let set: BTreeSet<&[String]> = sequences.iter().map(Vec::as_slice).collect();
    let is_prefix = |p: &[String]| set.iter().any(|s| s.starts_with(p));
    let is_leaf = |p: &[String]| !set.iter().any(|s| s.len() > p.len() && s.starts_with(p));
    let mut cur: Vec<String> = Vec::new();
    let mut credited = 0usize;
    let mut total = 0.0;
    for t in tokens {
        if !cur.is_empty() && is_leaf(&cur) {
            cur.clear();
            credited = 0;
        }
        let mut extended = cur.clone();
        extended.push(t.clone());
        if is_prefix(&extended) {
            cur = extended;
        } else if is_prefix(std::slice::from_ref(t)) {
            cur = vec![t.clone()];
            credited = 0;
        } else {
            cur.clear();
            credited = 0;
            continue;
        }
        if set.contains(cur.as_slice()) {
            total += discount * (cur.len() - credited) as f64;
            credited = cur.len();
        }
    }
    total
}

/// Every complete path of an acyclic lattice as (tokens, cost).
pub fn all_paths(l: &Lattice) -> Vec<(Vec<String>, f64)> {
    fn walk(l: &Lattice, s: usize, words: &mut Vec<String>, cost: f64, out: &mut Vec<(Vec<String>, f64)>) {
        if let Some(f) = l.final_cost(s) {
            out.push((words.clone(), cost + f));
        }
        for a in l.arcs().iter().filter(|a| a.src == s) {
            words.push(a.word.clone());
            walk(l, a.dst, words, cost + a.cost, out);
            words.pop();
        }
    }
    let mut out = Vec::new();
    walk(l, 0, &mut Vec::new(), 0.0, &mut out);
    out
}

/// Cheapest path after biasing, ties to the lexicographically smallest
/// token sequence, found by enumerating every path.
pub fn best_biased_path(l: &Lattice, sequences: &[Vec<String>], discount: f64) -> (Vec<String>, f64) {
    all_paths(l)
        .into_iter()
        .map(|(w, c)| {
            let b = bias_oracle(sequences, discount, &w);
            (w, c + b)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .expect("lattice has a path")
}

pub const SMALL_VOCAB: [&str; 5] = ["alfa", "bravo", "charlie", "delta", "echo"];

/// Random acyclic lattice with `n` states: a backbone chain plus extra
/// forward arcs, costs on a quarter grid so sums are exact.
pub fn random_lattice(rng: &mut impl Rng, n: usize) -> Lattice {
    let word = |rng: &mut dyn rand::RngCore| SMALL_VOCAB[rng.gen_range(0..SMALL_VOCAB.len())].to_string();
    let cost = |rng: &mut dyn rand::RngCore| f64::from(rng.gen_range(0..12u32)) * 0.25;
    let mut arcs = Vec::new();
    for s in 0..n - 1 {
        arcs.push(Arc::new(s, s + 1, word(rng), cost(rng)));
    }
    let extra = rng.gen_range(0..=(16 - arcs.len().min(16)).min(8));
    for _ in 0..extra {
        let a = rng.gen_range(0..n - 1);
        let b = rng.gen_range(a + 1..n);
        arcs.push(Arc::new(a, b, word(rng), cost(rng)));
    }
    let mut finals = vec![(n - 1, cost(rng))];
    if n > 2 && rng.gen_bool(0.3) {
        finals.push((rng.gen_range(1..n - 1), cost(rng)));
    }
    Lattice::new(n, arcs, finals).expect("backbone keeps every state live")
}

pub fn random_sequences(rng: &mut impl Rng) -> Vec<Vec<String>> {
    (0..rng.gen_range(1..=4))
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| SMALL_VOCAB[rng.gen_range(0..SMALL_VOCAB.len())].to_string())
                .collect()
        })
        .collect()
}

/// Jaccard error rate by trying every mapping of reference speakers onto
/// hypothesis clusters and keeping the best mean overlap.
pub fn jer_by_assignment(reference: &[(u8, usize, usize)], hypothesis: &[(u8, usize, usize)]) -> f64 {
    let group = |xs: &[(u8, usize, usize)]| {
        let mut m: BTreeMap<u8, BTreeSet<usize>> = BTreeMap::new();
        for &(l, s, e) in xs {
            m.entry(l).or_default().extend(s..e);
        }
        m.retain(|_, v| !v.is_empty());
        m.into_values().collect::<Vec<_>>()
    };
    let spk = group(reference);
    let clu = group(hypothesis);
    let jac = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| {
        let i = a.intersection(b).count();
        i as f64 / (a.len() + b.len() - i) as f64
    };
    if clu.is_empty() {
        return 1.0;
    }
    let mut best: f64 = 0.0;
    let combos = clu.len().pow(spk.len() as u32);
    for mut code in 0..combos {
        let mut sum = 0.0;
        for s in &spk {
            sum += jac(s, &clu[code % clu.len()]);
            code /= clu.len();
        }
        best = best.max(sum / spk.len() as f64);
    }
    1.0 - best
}

/// Closed-form quality score of the six raw inputs.
pub fn quality_oracle(snr: f64, spk: f64, ratio: f64, eld: f64, conf: f64, words: f64) -> f64 {
    let e = std::f64::consts::E;
    (snr + e).ln() + (spk + e).ln() + (ratio + e).ln() + 3.0 * eld + 3.0 * conf + (words + e).ln()
}
