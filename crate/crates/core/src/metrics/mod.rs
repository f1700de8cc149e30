//! Evaluation metrics: WER, callsign-restricted WER, callsign accuracy,
//! span precision/recall/F1 and Jaccard error rate.

mod wer;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotatedTranscript, EntityLabel, Turn};
use crate::textnorm::{expand_callsign, AirlineTable};

pub use wer::{align, render_alignment, wer, AlignedPair, AlignmentResult, EditOp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("reference contains no callsign spans")]
    NoEntities,
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("reference has {reference} tokens but hypothesis has {hypothesis}")]
    LengthMismatch { reference: usize, hypothesis: usize },
    #[error("reference has no speakers")]
    EmptyReference,
    #[error("{refs} references but {hyps} hypotheses")]
    CountMismatch { refs: usize, hyps: usize },
}

/// Errors on reference callsign words, with the reference word count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityErrors {
    pub errors: usize,
    pub ref_words: usize,
}

impl Add for EntityErrors {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        EntityErrors {
            errors: self.errors + o.errors,
            ref_words: self.ref_words + o.ref_words,
        }
    }
}

/// Counts errors the full-utterance alignment places on reference callsign
/// words. Insertions count only when they fall strictly inside a span.
pub fn entity_errors<H: AsRef<str>>(reference: &AnnotatedTranscript, hyp: &[H]) -> EntityErrors {
    let inside: Vec<Option<usize>> = {
        let mut v = vec![None; reference.tokens.len()];
        for (k, e) in reference.spans(EntityLabel::Callsign).enumerate() {
            for slot in &mut v[e.start..e.end] {
                *slot = Some(k);
            }
        }
        v
    };
    let ref_words = inside.iter().filter(|s| s.is_some()).count();
    let alignment = align(&reference.tokens, hyp);
    let mut errors = 0;
    let mut last_ref: Option<usize> = None;
    for (idx, p) in alignment.pairs.iter().enumerate() {
        match p.op {
            EditOp::Hit => {}
            EditOp::Substitution | EditOp::Deletion => {
                if p.ref_idx.and_then(|r| inside[r]).is_some() {
                    errors += 1;
                }
            }
            EditOp::Insertion => {
                let next_ref = alignment.pairs[idx..].iter().find_map(|q| q.ref_idx);
                let span_before = last_ref.and_then(|r| inside[r]);
                let span_after = next_ref.and_then(|r| inside[r]);
                if span_before.is_some() && span_before == span_after {
                    errors += 1;
                }
            }
        }
        if let Some(r) = p.ref_idx {
            last_ref = Some(r);
        }
    }
    EntityErrors { errors, ref_words }
}

/// Callsign word error rate over a corpus.
pub fn entity_wer<H: AsRef<str>>(
    refs: &[AnnotatedTranscript],
    hyps: &[Vec<H>],
) -> Result<f64, MetricError> {
    if refs.len() != hyps.len() {
        return Err(MetricError::CountMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let total = refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| entity_errors(r, h))
        .fold(EntityErrors::default(), Add::add);
    if total.ref_words == 0 {
        return Err(MetricError::NoEntities);
    }
    Ok(total.errors as f64 / total.ref_words as f64)
}

/// Reference callsign for one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceCallsign {
    /// ICAO code; any of its verbalizations is accepted.
    Code(String),
    /// Literal reference word sequence.
    Tokens(Vec<String>),
}

impl ReferenceCallsign {
    pub fn accepted(&self, table: &AirlineTable) -> BTreeSet<Vec<String>> {
        match self {
            ReferenceCallsign::Tokens(t) => BTreeSet::from([t.clone()]),
            ReferenceCallsign::Code(code) => expand_callsign(code, table)
                .map(|e| e.verbalizations.into_iter().map(|v| v.tokens).collect())
                .unwrap_or_default(),
        }
    }
}

/// True when any hypothesis callsign span equals an accepted form.
pub fn callsign_correct(
    reference: &ReferenceCallsign,
    hyp_spans: &[Vec<String>],
    table: &AirlineTable,
) -> bool {
    let accepted = reference.accepted(table);
    hyp_spans.iter().any(|s| accepted.contains(s))
}

/// Fraction of utterances whose callsign was recognized.
pub fn callsign_accuracy(
    cases: &[(ReferenceCallsign, Vec<Vec<String>>)],
    table: &AirlineTable,
) -> Result<f64, MetricError> {
    if cases.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let correct = cases
        .iter()
        .filter(|(r, h)| callsign_correct(r, h, table))
        .count();
    Ok(correct as f64 / cases.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Add for Counts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Counts {
    pub fn prf(self) -> Prf {
        prf(self.tp, self.fp, self.fn_)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1; each is 0 when its denominator is 0.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> Prf {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

/// Exact-match span counts for one label.
pub fn span_counts(
    reference: &AnnotatedTranscript,
    hyp: &AnnotatedTranscript,
    label: EntityLabel,
) -> Result<Counts, MetricError> {
    if reference.tokens.len() != hyp.tokens.len() {
        return Err(MetricError::LengthMismatch {
            reference: reference.tokens.len(),
            hypothesis: hyp.tokens.len(),
        });
    }
    let r: BTreeSet<(usize, usize)> = reference.spans(label).map(|e| (e.start, e.end)).collect();
    let h: BTreeSet<(usize, usize)> = hyp.spans(label).map(|e| (e.start, e.end)).collect();
    let tp = r.intersection(&h).count();
    Ok(Counts {
        tp,
        fp: h.len() - tp,
        fn_: r.len() - tp,
    })
}

pub fn span_prf(
    reference: &AnnotatedTranscript,
    hyp: &AnnotatedTranscript,
    label: EntityLabel,
) -> Result<Prf, MetricError> {
    span_counts(reference, hyp, label).map(Counts::prf)
}

/// Jaccard error rate over labelled token ranges.
///
/// Each reference speaker is scored against the hypothesis cluster with
/// the highest Jaccard overlap; JER is one minus the mean overlap.
pub fn jer<R: Ord, H: Ord>(
    reference: &[(R, usize, usize)],
    hypothesis: &[(H, usize, usize)],
) -> Result<f64, MetricError> {
    let speakers = group(reference);
    if speakers.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let clusters = group(hypothesis);
    let total: f64 = speakers
        .values()
        .map(|spk| {
            clusters
                .values()
                .map(|c| {
                    let inter = spk.intersection(c).count();
                    let union = spk.len() + c.len() - inter;
                    if union == 0 {
                        0.0
                    } else {
                        inter as f64 / union as f64
                    }
                })
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(1.0 - total / speakers.len() as f64)
}

fn group<L: Ord>(ranges: &[(L, usize, usize)]) -> BTreeMap<&L, BTreeSet<usize>> {
    let mut out: BTreeMap<&L, BTreeSet<usize>> = BTreeMap::new();
    for (label, start, end) in ranges {
        out.entry(label).or_default().extend(*start..*end);
    }
    out.retain(|_, v| !v.is_empty());
    out
}

/// [`jer`] over speaker turns.
pub fn turn_jer(reference: &[Turn], hypothesis: &[Turn]) -> Result<f64, MetricError> {
    let r: Vec<_> = reference.iter().map(|t| (t.role, t.start, t.end)).collect();
    let h: Vec<_> = hypothesis.iter().map(|t| (t.role, t.start, t.end)).collect();
    jer(&r, &h)
}
