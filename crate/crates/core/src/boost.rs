//! Batch contextual boosting of recognition lattices and its evaluation.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::{build_biasing_fst, compose_bias, BestPath, Lattice, LatticeError};
use crate::metrics::{align, callsign_accuracy, entity_errors, EntityErrors, MetricError, ReferenceCallsign};
use crate::model::{ContextStore, EntityLabel};
use crate::synth::SynthCorpus;
use crate::textnorm::{expand_callsign, expansions_to_ngrams, AirlineTable, NgramMode};
use crate::understand::{tag_entities, PhraseologyGrammar};

/// Which callsigns are boosted for a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    /// No boosting.
    Baseline,
    /// Every word of every context callsign, one at a time.
    Unigram,
    /// Whole verbalizations of every context callsign.
    Ngram,
    /// Whole verbalizations of the reference callsign only.
    GroundTruth,
}

impl BoostMode {
    pub const ALL: [BoostMode; 4] = [
        BoostMode::Baseline,
        BoostMode::Unigram,
        BoostMode::Ngram,
        BoostMode::GroundTruth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoostMode::Baseline => "baseline",
            BoostMode::Unigram => "unigram",
            BoostMode::Ngram => "ngram",
            BoostMode::GroundTruth => "gt",
        }
    }
}

impl FromStr for BoostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" | "none" => Ok(BoostMode::Baseline),
            "unigram" => Ok(BoostMode::Unigram),
            "ngram" => Ok(BoostMode::Ngram),
            "gt" | "ground_truth" => Ok(BoostMode::GroundTruth),
            other => Err(format!("unknown boost mode {other:?}")),
        }
    }
}

/// Boosted token sequences for a set of ICAO callsigns. Codes that cannot
/// be expanded are skipped.
pub fn context_sequences(callsigns: &[String], table: &AirlineTable, mode: NgramMode) -> Vec<Vec<String>> {
    let verbalizations: Vec<_> = callsigns
        .iter()
        .filter_map(|c| expand_callsign(c, table).ok())
        .flat_map(|e| e.verbalizations)
        .collect();
    expansions_to_ngrams(&verbalizations, mode)
}

/// Best path after boosting `sequences`; plain best path when there is
/// nothing to boost.
pub fn rescore(lattice: &Lattice, sequences: &[Vec<String>], discount: f64) -> Result<BestPath, LatticeError> {
    if sequences.is_empty() {
        return lattice.best_path();
    }
    let fst = build_biasing_fst(sequences, discount)?;
    compose_bias(lattice, &fst).best_path()
}

/// Lattice plus the callsigns to boost for it.
#[derive(Debug, Clone)]
pub struct BoostJob<'a> {
    pub lattice: &'a Lattice,
    pub callsigns: Vec<String>,
}

/// Rescores every job on `threads` workers (see [`crate::par::map`]).
pub fn rescore_batch(
    jobs: &[BoostJob<'_>],
    table: &AirlineTable,
    mode: NgramMode,
    discount: f64,
    threads: usize,
) -> Vec<Result<BestPath, LatticeError>> {
    crate::par::map(jobs, threads, |j| {
        rescore(j.lattice, &context_sequences(&j.callsigns, table, mode), discount)
    })
}

/// Same as [`rescore_batch`] on the calling thread.
pub fn rescore_batch_sequential(
    jobs: &[BoostJob<'_>],
    table: &AirlineTable,
    mode: NgramMode,
    discount: f64,
) -> Vec<Result<BestPath, LatticeError>> {
    crate::par::map_sequential(jobs, |j| {
        rescore(j.lattice, &context_sequences(&j.callsigns, table, mode), discount)
    })
}

/// Corpus scores for one boosting mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub mode: BoostMode,
    pub wer: f64,
    pub entity_wer: f64,
    pub callsign_acc: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BoostError {
    #[error("record {0} has no lattice")]
    MissingLattice(String),
    #[error("record {0} has no reference")]
    MissingReference(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("bad reference: {0}")]
    Reference(String),
}

/// Callsigns boosted for record `idx` of `corpus` under `mode`.
fn boosted_callsigns(corpus: &SynthCorpus, store: &ContextStore, idx: usize, mode: BoostMode) -> Vec<String> {
    match mode {
        BoostMode::Baseline => Vec::new(),
        BoostMode::Unigram | BoostMode::Ngram => store.context_at(corpus.records[idx].captured_at).callsigns,
        BoostMode::GroundTruth => vec![corpus.references[idx].callsign.clone()],
    }
}

/// Decodes every record of a generated corpus under `mode` and scores WER,
/// callsign WER and callsign accuracy against the references.
pub fn evaluate_boosting(
    corpus: &SynthCorpus,
    mode: BoostMode,
    discount: f64,
    threads: usize,
) -> Result<BoostReport, BoostError> {
    let grammar = PhraseologyGrammar::default();
    let table = &grammar.airlines;
    if corpus.records.len() != corpus.references.len() {
        return Err(MetricError::CountMismatch {
            refs: corpus.references.len(),
            hyps: corpus.records.len(),
        }
        .into());
    }
    let mut jobs = Vec::with_capacity(corpus.records.len());
    for (i, r) in corpus.records.iter().enumerate() {
        let lattice = r.lattice.as_ref().ok_or_else(|| BoostError::MissingLattice(r.id.clone()))?;
        jobs.push(BoostJob {
            lattice,
            callsigns: boosted_callsigns(corpus, &corpus.context, i, mode),
        });
    }
    let ngram = if mode == BoostMode::Unigram {
        NgramMode::Unigram
    } else {
        NgramMode::Ngram
    };
    let hyps = rescore_batch(&jobs, table, ngram, discount, threads)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut errors = 0;
    let mut ref_words = 0;
    let mut entity = EntityErrors::default();
    let mut cases = Vec::with_capacity(hyps.len());
    for (reference, hyp) in corpus.references.iter().zip(&hyps) {
        let truth = reference.annotation().map_err(|e| BoostError::Reference(e.to_string()))?;
        let a = align(&truth.tokens, &hyp.tokens);
        errors += a.errors();
        ref_words += a.ref_len();
        entity = entity + entity_errors(&truth, &hyp.tokens);
        let tagged = tag_entities(&hyp.tokens, &grammar, None);
        let spans = tagged
            .spans(EntityLabel::Callsign)
            .map(|s| tagged.span_tokens(s).to_vec())
            .collect();
        cases.push((ReferenceCallsign::Code(reference.callsign.clone()), spans));
    }
    if entity.ref_words == 0 {
        return Err(MetricError::NoEntities.into());
    }
    Ok(BoostReport {
        mode,
        wer: errors as f64 / ref_words.max(1) as f64,
        entity_wer: entity.errors as f64 / entity.ref_words as f64,
        callsign_acc: callsign_accuracy(&cases, table)?,
    })
}
