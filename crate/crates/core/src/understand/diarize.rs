//! Rule-based speaker segmentation of concatenated transmissions.

use crate::model::{EntityLabel, Role, Turn};

use super::{longest_phrase, tag_entities, PhraseologyGrammar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Callsign,
    Imperative,
    Readback,
    Value,
    Greeting,
    Other,
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    kind: Kind,
    start: usize,
    end: usize,
}

fn units(tokens: &[String], grammar: &PhraseologyGrammar) -> Vec<Unit> {
    let tagged = tag_entities(tokens, grammar, None);
    let mut out = Vec::new();
    let mut entities = tagged.entities.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(e) = entities.next_if(|e| e.start == i) {
            let kind = match e.label {
                EntityLabel::Callsign => Kind::Callsign,
                EntityLabel::Value => Kind::Value,
                EntityLabel::Command if PhraseologyGrammar::is_readback(tagged.span_tokens(e)) => Kind::Readback,
                EntityLabel::Command => Kind::Imperative,
            };
            out.push(Unit { kind, start: e.start, end: e.end });
            i = e.end;
            continue;
        }
        let limit = entities.peek().map_or(tokens.len(), |e| e.start);
        let (kind, end) = match longest_phrase(&grammar.greetings, &tokens[..limit], i) {
            Some(end) => (Kind::Greeting, end),
            None => (Kind::Other, i + 1),
        };
        out.push(Unit { kind, start: i, end });
        i = end;
    }
    out
}

/// Splits `tokens` into speaker turns that partition the token range.
///
/// A callsign followed by more message content opens a new turn; a callsign
/// at the end of a message (followed only by greetings and then another
/// callsign or the end) closes the current one. Greetings between two
/// turns go with the later one. A switch between imperative
/// and readback command forms also starts a new turn. Turns are labelled
/// by callsign position (leading for controllers, trailing for pilots),
/// falling back to the majority command form.
pub fn diarize_text<S: AsRef<str>>(tokens: &[S], grammar: &PhraseologyGrammar) -> Vec<Turn> {
    let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
    if tokens.is_empty() {
        return Vec::new();
    }
    let units = units(&tokens, grammar);
    let next_content = |i: usize| units[i + 1..].iter().find(|u| u.kind != Kind::Greeting);
    let trailing = |i: usize| next_content(i).is_none_or(|u| u.kind == Kind::Callsign);

    let mut starts = vec![0usize];
    let mut has_content = false;
    let mut has_imp = false;
    let mut has_rb = false;
    let mut greeting_run: Option<usize> = None;
    let mut close_pending = false;
    for (i, u) in units.iter().enumerate() {
        if u.kind == Kind::Greeting {
            greeting_run.get_or_insert(u.start);
            continue;
        }
        let boundary = if close_pending {
            Some(greeting_run.unwrap_or(u.start))
        } else {
            match u.kind {
                Kind::Callsign if has_content && !trailing(i) => Some(greeting_run.unwrap_or(u.start)),
                Kind::Imperative if has_rb => Some(u.start),
                Kind::Readback if has_imp => Some(u.start),
                _ => None,
            }
        };
        if let Some(b) = boundary {
            if b > *starts.last().unwrap_or(&0) {
                starts.push(b);
            }
            has_content = false;
            has_imp = false;
            has_rb = false;
        }
        close_pending = u.kind == Kind::Callsign && has_content && trailing(i);
        greeting_run = None;
        has_content = true;
        has_imp |= u.kind == Kind::Imperative;
        has_rb |= u.kind == Kind::Readback;
    }

    let mut turns = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(tokens.len());
        let inside: Vec<&Unit> = units.iter().filter(|u| u.start >= start && u.end <= end).collect();
        turns.push(Turn::new(label(&inside), start, end));
    }
    turns
}

fn label(units: &[&Unit]) -> Role {
    let content: Vec<&&Unit> = units.iter().filter(|u| u.kind != Kind::Greeting).collect();
    let leading = content.first().is_some_and(|u| u.kind == Kind::Callsign);
    let trailing = content.last().is_some_and(|u| u.kind == Kind::Callsign);
    match (leading, trailing) {
        (true, false) => Role::Atco,
        (false, true) => Role::Pilot,
        _ => {
            let imp = content.iter().filter(|u| u.kind == Kind::Imperative).count();
            let rb = content.iter().filter(|u| u.kind == Kind::Readback).count();
            if rb > imp {
                Role::Pilot
            } else {
                Role::Atco
            }
        }
    }
}
