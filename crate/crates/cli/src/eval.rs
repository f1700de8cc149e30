//! `atc2 eval`: corpus-level scores against generated references.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{anyhow, Context};
use atc2_core::eld::LinearTextModel;
use atc2_core::metrics::{align, callsign_accuracy, entity_errors, span_counts, turn_jer, Counts, EntityErrors, Prf, ReferenceCallsign};
use atc2_core::model::{EntityLabel, Role, Token};
use atc2_core::synth::{default_role_model, Dialogue, Reference};
use atc2_core::understand::{detect_role, diarize_text, tag_entities, PhraseologyGrammar};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::io::{read_jsonl, Fail, ResultExt};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Task {
    /// Word and callsign error rates of hypotheses.
    Asr,
    /// Entity span P/R/F1 of the grammar tagger on reference transcripts.
    Ner,
    /// Speaker role detection on reference transcripts.
    Srd,
    /// Text diarization of dialogues, scored by JER.
    Diar,
}

/// One hypothesis line: `words` (from `boost`) or a processed record's
/// `transcript`.
#[derive(Deserialize)]
struct Hypothesis {
    id: String,
    #[serde(default)]
    words: Option<Vec<String>>,
    #[serde(default)]
    transcript: Option<Vec<Token>>,
}

#[derive(Serialize)]
pub struct Score {
    #[serde(flatten)]
    counts: Counts,
    #[serde(flatten)]
    prf: Prf,
}

impl From<Counts> for Score {
    fn from(counts: Counts) -> Self {
        Score { counts, prf: counts.prf() }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum Report {
    Asr {
        utterances: usize,
        wer: f64,
        entity_wer: f64,
        callsign_acc: f64,
    },
    Spans {
        utterances: usize,
        labels: BTreeMap<&'static str, Score>,
    },
    Roles {
        utterances: usize,
        accuracy: f64,
        roles: BTreeMap<String, Score>,
    },
    Diar {
        dialogues: usize,
        mean_jer: f64,
    },
}

pub fn run(task: Task, references: &Path, hyps: Option<&Path>, model: Option<&Path>) -> Result<Report, Fail> {
    let grammar = PhraseologyGrammar::default();
    match task {
        Task::Asr => {
            let hyps = hyps.ok_or_else(|| Fail::Config(anyhow!("--task asr needs --hyps")))?;
            asr(&read_jsonl(references)?, &read_jsonl(hyps)?, &grammar)
        }
        Task::Ner => ner(&english(read_jsonl(references)?), &grammar),
        Task::Srd => {
            let model = match model {
                Some(p) => LinearTextModel::load(p)
                    .with_context(|| format!("loading {}", p.display()))
                    .input()?,
                None => default_role_model(),
            };
            srd(&english(read_jsonl(references)?), &model)
        }
        Task::Diar => diar(&read_jsonl(references)?, &grammar),
    }
}

fn english(refs: Vec<Reference>) -> Vec<Reference> {
    refs.into_iter().filter(|r| r.english).collect()
}

fn annotation(r: &Reference) -> Result<atc2_core::model::AnnotatedTranscript, Fail> {
    r.annotation().with_context(|| format!("reference {}", r.id)).input()
}

fn asr(refs: &[Reference], hyps: &[Hypothesis], grammar: &PhraseologyGrammar) -> Result<Report, Fail> {
    let by_id: HashMap<&str, &Hypothesis> = hyps.iter().map(|h| (h.id.as_str(), h)).collect();
    let mut errors = 0;
    let mut ref_words = 0;
    let mut entity = EntityErrors::default();
    let mut cases = Vec::with_capacity(refs.len());
    for r in refs {
        let truth = annotation(r)?;
        let hyp = by_id
            .get(r.id.as_str())
            .ok_or_else(|| Fail::Input(anyhow!("no hypothesis for reference {}", r.id)))?;
        let words: Vec<String> = match (&hyp.words, &hyp.transcript) {
            (Some(w), _) => w.clone(),
            (None, Some(t)) => t.iter().map(|t| t.word.clone()).collect(),
            (None, None) => Vec::new(),
        };
        let a = align(&truth.tokens, &words);
        errors += a.errors();
        ref_words += a.ref_len();
        entity = entity + entity_errors(&truth, &words);
        let tagged = tag_entities(&words, grammar, None);
        let spans = tagged
            .spans(EntityLabel::Callsign)
            .map(|s| tagged.span_tokens(s).to_vec())
            .collect();
        cases.push((ReferenceCallsign::Code(r.callsign.clone()), spans));
    }
    if ref_words == 0 {
        return Err(Fail::Input(anyhow!("references contain no words")));
    }
    let ratio = |e: usize, n: usize| if n == 0 { 0.0 } else { e as f64 / n as f64 };
    Ok(Report::Asr {
        utterances: refs.len(),
        wer: ratio(errors, ref_words),
        entity_wer: ratio(entity.errors, entity.ref_words),
        callsign_acc: callsign_accuracy(&cases, &grammar.airlines).input()?,
    })
}

fn ner(refs: &[Reference], grammar: &PhraseologyGrammar) -> Result<Report, Fail> {
    let mut totals: BTreeMap<&'static str, Counts> = BTreeMap::new();
    for r in refs {
        let truth = annotation(r)?;
        let hyp = tag_entities(&truth.tokens, grammar, None);
        for label in EntityLabel::ALL {
            let c = span_counts(&truth, &hyp, label)
                .with_context(|| format!("reference {}", r.id))
                .input()?;
            *totals.entry(label.as_str()).or_default() += c;
        }
    }
    Ok(Report::Spans {
        utterances: refs.len(),
        labels: totals.into_iter().map(|(k, c)| (k, c.into())).collect(),
    })
}

fn srd(refs: &[Reference], model: &LinearTextModel) -> Result<Report, Fail> {
    let mut correct = 0;
    let mut counts: BTreeMap<Role, Counts> = [Role::Atco, Role::Pilot].into_iter().map(|r| (r, Counts::default())).collect();
    for r in refs {
        let truth = annotation(r)?;
        let (role, _) = detect_role(&truth.tokens, model)
            .with_context(|| format!("reference {}", r.id))
            .input()?;
        if role == r.role {
            correct += 1;
            counts.entry(role).or_default().tp += 1;
        } else {
            counts.entry(role).or_default().fp += 1;
            counts.entry(r.role).or_default().fn_ += 1;
        }
    }
    if refs.is_empty() {
        return Err(Fail::Input(anyhow!("no English references to score")));
    }
    Ok(Report::Roles {
        utterances: refs.len(),
        accuracy: correct as f64 / refs.len() as f64,
        roles: counts.into_iter().map(|(r, c)| (r.to_string(), c.into())).collect(),
    })
}

fn diar(dialogues: &[Dialogue], grammar: &PhraseologyGrammar) -> Result<Report, Fail> {
    if dialogues.is_empty() {
        return Err(Fail::Input(anyhow!("no dialogues to score")));
    }
    let mut sum = 0.0;
    for d in dialogues {
        let truth = d.annotation().with_context(|| format!("dialogue {}", d.id)).input()?;
        let hyp = diarize_text(&truth.tokens, grammar);
        sum += turn_jer(&truth.turns, &hyp)
            .with_context(|| format!("dialogue {}", d.id))
            .input()?;
    }
    Ok(Report::Diar {
        dialogues: dialogues.len(),
        mean_jer: sum / dialogues.len() as f64,
    })
}
