//! Word error rate by Levenshtein alignment.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Hit,
    Substitution,
    Deletion,
    Insertion,
}

/// One column of an alignment. Deletions have no hypothesis index and
/// insertions no reference index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub op: EditOp,
    pub ref_idx: Option<usize>,
    pub hyp_idx: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub hits: usize,
    pub pairs: Vec<AlignedPair>,
}

impl AlignmentResult {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn ref_len(&self) -> usize {
        self.substitutions + self.deletions + self.hits
    }

    pub fn hyp_len(&self) -> usize {
        self.substitutions + self.insertions + self.hits
    }

    pub fn rate(&self) -> f64 {
        self.errors() as f64 / self.ref_len().max(1) as f64
    }
}

/// Aligns `hyp` against `reference` with unit edit costs.
///
/// Among optimal alignments the backtrace prefers, from the end of both
/// sequences, a hit over a substitution over a deletion over an insertion.
pub fn align<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hyp: &[H]) -> AlignmentResult {
    let n = reference.len();
    let m = hyp.len();
    let w = m + 1;
    let mut dp = vec![0u32; (n + 1) * w];
    for j in 0..=m {
        dp[j] = j as u32;
    }
    for i in 1..=n {
        dp[i * w] = i as u32;
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            let diag = dp[(i - 1) * w + j - 1] + u32::from(!same);
            let up = dp[(i - 1) * w + j] + 1;
            let left = dp[i * w + j - 1] + 1;
            dp[i * w + j] = diag.min(up).min(left);
        }
    }

    let mut out = AlignmentResult::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            let diag = dp[(i - 1) * w + j - 1];
            if same && diag == here {
                out.hits += 1;
                out.pairs.push(pair(EditOp::Hit, Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && diag + 1 == here {
                out.substitutions += 1;
                out.pairs.push(pair(EditOp::Substitution, Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[(i - 1) * w + j] + 1 == here {
            out.deletions += 1;
            out.pairs.push(pair(EditOp::Deletion, Some(i - 1), None));
            i -= 1;
        } else {
            out.insertions += 1;
            out.pairs.push(pair(EditOp::Insertion, None, Some(j - 1)));
            j -= 1;
        }
    }
    out.pairs.reverse();
    out
}

fn pair(op: EditOp, ref_idx: Option<usize>, hyp_idx: Option<usize>) -> AlignedPair {
    AlignedPair {
        op,
        ref_idx,
        hyp_idx,
    }
}

/// Alignment and `(S + D + I) / max(1, |ref|)`.
pub fn wer<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hyp: &[H]) -> (AlignmentResult, f64) {
    let a = align(reference, hyp);
    let rate = a.rate();
    (a, rate)
}

/// Two-line aligned diff: reference over hypothesis, `*` for gaps, with
/// an op marker line underneath.
pub fn render_alignment<R: AsRef<str>, H: AsRef<str>>(
    reference: &[R],
    hyp: &[H],
    alignment: &AlignmentResult,
) -> String {
    let mut r_line = String::from("REF:");
    let mut h_line = String::from("HYP:");
    let mut o_line = String::from("    ");
    for p in &alignment.pairs {
        let r = p.ref_idx.map_or("*", |i| reference[i].as_ref());
        let h = p.hyp_idx.map_or("*", |i| hyp[i].as_ref());
        let width = r.len().max(h.len());
        let mark = match p.op {
            EditOp::Hit => " ",
            EditOp::Substitution => "S",
            EditOp::Deletion => "D",
            EditOp::Insertion => "I",
        };
        r_line.push_str(&format!(" {r:<width$}"));
        h_line.push_str(&format!(" {h:<width$}"));
        o_line.push_str(&format!(" {mark:<width$}"));
    }
    format!("{}\n{}\n{}", r_line, h_line, o_line.trim_end())
}
