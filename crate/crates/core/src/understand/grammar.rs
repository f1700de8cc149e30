//! Phraseology grammar: command lexicon, value templates, greetings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::is_normalized_token;
use crate::textnorm::{is_digit_word, is_letter_word, AirlineTable};

pub const DEFAULT_GRAMMAR: &str = include_str!("../../data/grammar.json");

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("empty pattern in {0}")]
    EmptyPattern(&'static str),
    #[error("pattern {0:?} is not normalized")]
    NotNormalized(String),
    #[error("bad placeholder in {0:?}")]
    BadPlaceholder(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateItem {
    Word(String),
    /// One or more digit words, optionally with `hundred`/`thousand`.
    Digits,
    /// One ICAO alphabet word.
    Letter,
    OneOf(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub source: String,
    /// Items with an optional flag.
    pub items: Vec<(TemplateItem, bool)>,
}

fn is_number_word(w: &str) -> bool {
    is_digit_word(w) || w == "hundred" || w == "thousand"
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, GrammarError> {
        let bad = || GrammarError::BadPlaceholder(source.to_string());
        let mut items = Vec::new();
        for raw in source.split_whitespace() {
            let (body, optional) = match raw.strip_suffix('?') {
                Some(b) => (b, true),
                None => (raw, false),
            };
            let item = if let Some(inner) = body.strip_prefix('<') {
                let inner = inner.strip_suffix('>').ok_or_else(bad)?;
                match inner {
                    "digits" => TemplateItem::Digits,
                    "letter" => TemplateItem::Letter,
                    alts => {
                        let alts: Vec<String> = alts.split('|').map(String::from).collect();
                        if alts.len() < 2 || alts.iter().any(|a| !is_normalized_token(a)) {
                            return Err(bad());
                        }
                        TemplateItem::OneOf(alts)
                    }
                }
            } else if is_normalized_token(body) {
                TemplateItem::Word(body.to_string())
            } else {
                return Err(GrammarError::NotNormalized(source.to_string()));
            };
            items.push((item, optional));
        }
        if items.iter().all(|(_, opt)| *opt) {
            return Err(GrammarError::EmptyPattern("value_templates"));
        }
        Ok(Template {
            source: source.to_string(),
            items,
        })
    }

    /// Longest match starting at `at`, as an exclusive end index.
    pub fn longest_match(&self, words: &[String], at: usize) -> Option<usize> {
        self.ends(words, 0, at).into_iter().max()
    }

    fn ends(&self, words: &[String], item: usize, at: usize) -> Vec<usize> {
        let Some((it, optional)) = self.items.get(item) else {
            return vec![at];
        };
        let mut out = if *optional { self.ends(words, item + 1, at) } else { Vec::new() };
        let rest = &words[at..];
        let single = |ok: bool| if ok { vec![at + 1] } else { vec![] };
        let nexts = match it {
            TemplateItem::Word(w) => single(rest.first() == Some(w)),
            TemplateItem::Letter => single(rest.first().is_some_and(|w| is_letter_word(w))),
            TemplateItem::OneOf(alts) => single(rest.first().is_some_and(|w| alts.contains(w))),
            TemplateItem::Digits => {
                if rest.first().is_some_and(|w| is_digit_word(w)) {
                    let n = rest.iter().take_while(|w| is_number_word(w)).count();
                    (1..=n).map(|k| at + k).collect()
                } else {
                    vec![]
                }
            }
        };
        for n in nexts {
            out.extend(self.ends(words, item + 1, n));
        }
        out
    }

    /// Tokens for one instance of the template; `digits` fills `<digits>`
    /// and `letter` fills `<letter>`. Optional items are included.
    pub fn instantiate(&self, digits: &[&str], letter: &str, choice: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (item, _) in &self.items {
            match item {
                TemplateItem::Word(w) => out.push(w.clone()),
                TemplateItem::Digits => out.extend(digits.iter().map(|d| d.to_string())),
                TemplateItem::Letter => out.push(letter.to_string()),
                TemplateItem::OneOf(alts) => out.push(alts[choice % alts.len()].clone()),
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGrammar {
    commands: Vec<String>,
    value_templates: Vec<String>,
    #[serde(default)]
    greetings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PhraseologyGrammar {
    pub commands: Vec<Vec<String>>,
    pub value_templates: Vec<Template>,
    pub greetings: Vec<Vec<String>>,
    pub airlines: AirlineTable,
}

fn phrases(list: &[String], what: &'static str) -> Result<Vec<Vec<String>>, GrammarError> {
    list.iter()
        .map(|p| {
            let toks: Vec<String> = p.split_whitespace().map(String::from).collect();
            if toks.is_empty() {
                return Err(GrammarError::EmptyPattern(what));
            }
            if let Some(bad) = toks.iter().find(|t| !is_normalized_token(t)) {
                return Err(GrammarError::NotNormalized(bad.clone()));
            }
            Ok(toks)
        })
        .collect()
}

impl PhraseologyGrammar {
    pub fn from_json(text: &str, airlines: AirlineTable) -> Result<Self, GrammarError> {
        let raw: RawGrammar = serde_json::from_str(text)?;
        Ok(PhraseologyGrammar {
            commands: phrases(&raw.commands, "commands")?,
            value_templates: raw
                .value_templates
                .iter()
                .map(|t| Template::parse(t))
                .collect::<Result<_, _>>()?,
            greetings: phrases(&raw.greetings, "greetings")?,
            airlines,
        })
    }

    pub fn load(path: impl AsRef<Path>, airlines: AirlineTable) -> Result<Self, GrammarError> {
        Self::from_json(&std::fs::read_to_string(path)?, airlines)
    }

    pub fn to_json(&self) -> String {
        let join = |v: &[Vec<String>]| v.iter().map(|p| p.join(" ")).collect();
        let raw = RawGrammar {
            commands: join(&self.commands),
            value_templates: self.value_templates.iter().map(|t| t.source.clone()).collect(),
            greetings: join(&self.greetings),
        };
        serde_json::to_string_pretty(&raw).expect("grammar serializes")
    }

    /// Commands whose verb carries `-ing` (readback forms).
    pub fn is_readback(command: &[String]) -> bool {
        command.first().is_some_and(|w| w.ends_with("ing"))
    }

    pub fn imperatives(&self) -> impl Iterator<Item = &Vec<String>> {
        self.commands.iter().filter(|c| !Self::is_readback(c))
    }

    /// Readback form of an imperative command, if the lexicon has one.
    pub fn readback_of(&self, imperative: &[String]) -> Option<&Vec<String>> {
        self.commands.iter().find(|c| {
            Self::is_readback(c)
                && c.len() == imperative.len()
                && c.iter().zip(imperative).all(|(r, i)| is_ing_form(r, i))
        })
    }
}

/// `r` equals `i` or is one of its regular `-ing` forms.
fn is_ing_form(r: &str, i: &str) -> bool {
    let Some(stem) = r.strip_suffix("ing") else {
        return r == i;
    };
    stem == i
        || i.strip_suffix('e') == Some(stem)
        || (stem.len() == i.len() + 1 && stem.starts_with(i) && stem.ends_with(&i[i.len() - 1..]))
}

impl Default for PhraseologyGrammar {
    fn default() -> Self {
        Self::from_json(DEFAULT_GRAMMAR, AirlineTable::builtin()).expect("built-in grammar is valid")
    }
}
