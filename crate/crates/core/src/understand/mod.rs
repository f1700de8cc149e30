//! Phraseology-grammar entity tagging, speaker-role detection and
//! text-based diarization.

mod diarize;
mod grammar;

use std::collections::BTreeSet;

use crate::eld::{term_counts, EldError, LinearTextModel, THRESHOLD};
use crate::model::{AnnotatedTranscript, ContextList, EntityLabel, EntitySpan, Role};
use crate::textnorm::{expand_callsign, is_digit_word, is_letter_word};

pub use diarize::diarize_text;
pub use grammar::{GrammarError, PhraseologyGrammar, Template, TemplateItem, DEFAULT_GRAMMAR};

/// Minimum overlap score for a partial context match.
pub const CONTEXT_MATCH_THRESHOLD: f64 = 0.8;
/// Minimum length of a spelled callsign found without an airline name.
pub const MIN_SPELLED_CALLSIGN: usize = 4;

/// Tags callsign, value and command spans. Callsigns win conflicts over
/// values, values over commands; context matches win over grammar callsigns.
pub fn tag_entities<S: AsRef<str>>(
    tokens: &[S],
    grammar: &PhraseologyGrammar,
    context: Option<&ContextList>,
) -> AnnotatedTranscript {
    let words: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
    let mut taken = vec![false; words.len()];
    let mut entities = Vec::new();
    let mut claim = |label, start: usize, end: usize, taken: &mut Vec<bool>| {
        if taken[start..end].iter().any(|&t| t) {
            return false;
        }
        taken[start..end].fill(true);
        entities.push(EntitySpan::new(label, start, end));
        true
    };

    if let Some(ctx) = context {
        for (start, end) in context_matches(&words, grammar, ctx) {
            claim(EntityLabel::Callsign, start, end, &mut taken);
        }
    }
    let mut i = 0;
    while i < words.len() {
        match grammar_callsign(&words, i, grammar) {
            Some(end) if claim(EntityLabel::Callsign, i, end, &mut taken) => i = end,
            _ => i += 1,
        }
    }
    for (label, matcher) in [
        (EntityLabel::Value, Matcher::Values),
        (EntityLabel::Command, Matcher::Commands),
    ] {
        let mut i = 0;
        while i < words.len() {
            let end = if taken[i] { None } else { matcher.longest(grammar, &words, i) };
            match end {
                Some(end) if claim(label, i, end, &mut taken) => i = end,
                _ => i += 1,
            }
        }
    }

    let mut out = AnnotatedTranscript::plain(words);
    entities.sort_by_key(|e| e.start);
    out.entities = entities;
    out
}

#[derive(Clone, Copy)]
enum Matcher {
    Values,
    Commands,
}

impl Matcher {
    fn longest(self, g: &PhraseologyGrammar, words: &[String], at: usize) -> Option<usize> {
        match self {
            Matcher::Values => g.value_templates.iter().filter_map(|t| t.longest_match(words, at)).max(),
            Matcher::Commands => longest_phrase(&g.commands, words, at),
        }
    }
}

pub(crate) fn longest_phrase(phrases: &[Vec<String>], words: &[String], at: usize) -> Option<usize> {
    phrases
        .iter()
        .filter(|p| words[at..].starts_with(p))
        .map(|p| at + p.len())
        .max()
}

fn is_spelling_word(w: &str) -> bool {
    is_digit_word(w) || is_letter_word(w)
}

/// End of the callsign starting at `at`: a telephony name followed by
/// digit/letter words, or a long enough run of spelled characters that
/// starts with a letter.
fn grammar_callsign(words: &[String], at: usize, grammar: &PhraseologyGrammar) -> Option<usize> {
    let run = |from: usize| from + words[from..].iter().take_while(|w| is_spelling_word(w)).count();
    let name_end = grammar
        .airlines
        .iter()
        .filter(|(_, name)| words[at..].starts_with(name))
        .map(|(_, name)| at + name.len())
        .max();
    if let Some(name_end) = name_end {
        let end = run(name_end);
        if end > name_end {
            return Some(end);
        }
    }
    if is_letter_word(&words[at]) {
        let end = run(at);
        if end - at >= MIN_SPELLED_CALLSIGN {
            return Some(end);
        }
    }
    None
}

fn lcs(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    for x in a {
        let mut cur = vec![0; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Non-overlapping windows that match a context verbalization with overlap
/// score `lcs / max(len)` of at least [`CONTEXT_MATCH_THRESHOLD`], best first.
fn context_matches(words: &[String], grammar: &PhraseologyGrammar, ctx: &ContextList) -> Vec<(usize, usize)> {
    let mut forms: BTreeSet<Vec<String>> = BTreeSet::new();
    for code in &ctx.callsigns {
        match expand_callsign(code, &grammar.airlines) {
            Ok(e) => forms.extend(e.verbalizations.into_iter().map(|v| v.tokens)),
            Err(e) => log::debug!("skipping context entry: {e}"),
        }
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for form in &forms {
        let k = form.len();
        let vocab: BTreeSet<&String> = form.iter().collect();
        let min_w = ((k as f64 * CONTEXT_MATCH_THRESHOLD).ceil() as usize).max(1);
        let max_w = (k as f64 / CONTEXT_MATCH_THRESHOLD).floor() as usize;
        for start in 0..words.len() {
            if !vocab.contains(&words[start]) {
                continue;
            }
            for w in min_w..=max_w.min(words.len() - start) {
                let window = &words[start..start + w];
                if !vocab.contains(&window[w - 1]) {
                    continue;
                }
                let score = lcs(form, window) as f64 / k.max(w) as f64;
                if score >= CONTEXT_MATCH_THRESHOLD {
                    candidates.push((score, start, start + w));
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then((b.2 - b.1).cmp(&(a.2 - a.1)))
            .then(a.1.cmp(&b.1))
    });
    let mut taken = vec![false; words.len()];
    let mut out = Vec::new();
    for (_, s, e) in candidates {
        if taken[s..e].iter().all(|t| !t) {
            taken[s..e].fill(true);
            out.push((s, e));
        }
    }
    out
}

/// Role decision and the probability of the chosen role.
pub fn detect_role<S: AsRef<str>>(tokens: &[S], model: &LinearTextModel) -> Result<(Role, f64), EldError> {
    let p_atco = model.score(&term_counts(tokens))?;
    Ok(if p_atco >= THRESHOLD {
        (Role::Atco, p_atco)
    } else {
        (Role::Pilot, 1.0 - p_atco)
    })
}

#[cfg(test)]
mod tests;
