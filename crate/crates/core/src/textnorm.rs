//! Transcript normalization and callsign verbalization.
//!
//! Normalized text is a sequence of lowercase `[a-z-]+` words with every
//! digit read out on its own ("125" becomes "one two five"). Callsign
//! codes such as `DLH77RM` are expanded into the word sequences a speaker
//! would use on the frequency, which feed the biasing FST.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ICAO_ALPHABET: [&str; 26] = [
    "alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett",
    "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
    "uniform", "victor", "whiskey", "x-ray", "yankee", "zulu",
];

pub const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

pub const NUMBER_WORDS: [&str; 3] = ["decimal", "hundred", "thousand"];

/// Abbreviations read letter by letter on the frequency.
const SPELLED_ABBREVIATIONS: [&str; 14] = [
    "fl", "ils", "qnh", "qfe", "atis", "vor", "dme", "ndb", "rnav", "atc", "vfr", "ifr", "tcas",
    "ga",
];

const DEFAULT_AIRLINES: &str = include_str!("../data/airlines.csv");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextNormError {
    #[error("{0:?} is not a valid callsign code")]
    InvalidCallsign(String),
    #[error("airline table: {0}")]
    Table(String),
}

pub fn letter_word(c: char) -> Option<&'static str> {
    let c = c.to_ascii_lowercase();
    c.is_ascii_lowercase()
        .then(|| ICAO_ALPHABET[(c as u8 - b'a') as usize])
}

pub fn digit_word(c: char) -> Option<&'static str> {
    c.to_digit(10).map(|d| DIGIT_WORDS[d as usize])
}

pub fn is_letter_word(w: &str) -> bool {
    letter_from_word(w).is_some()
}

pub fn is_digit_word(w: &str) -> bool {
    digit_from_word(w).is_some()
}

/// Inverse of [`letter_word`]; also accepts the common "alpha"/"juliet"
/// spellings.
pub fn letter_from_word(w: &str) -> Option<char> {
    match w {
        "alpha" => Some('A'),
        "juliet" => Some('J'),
        _ => ICAO_ALPHABET
            .iter()
            .position(|&l| l == w)
            .map(|i| (b'A' + i as u8) as char),
    }
}

pub fn digit_from_word(w: &str) -> Option<char> {
    match w {
        "niner" => Some('9'),
        _ => DIGIT_WORDS
            .iter()
            .position(|&d| d == w)
            .map(|i| (b'0' + i as u8) as char),
    }
}

/// Maps three-letter ICAO airline designators to telephony names.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AirlineTable {
    entries: BTreeMap<String, Vec<String>>,
}

impl AirlineTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table shipped with the crate, covering common European carriers.
    pub fn builtin() -> Self {
        Self::from_csv(DEFAULT_AIRLINES.as_bytes()).expect("builtin airline table is valid")
    }

    /// Reads `DESIGNATOR,telephony name` rows; a header row is optional.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self, TextNormError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut table = AirlineTable::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| TextNormError::Table(e.to_string()))?;
            let (Some(code), Some(name)) = (row.get(0), row.get(1)) else {
                return Err(TextNormError::Table(format!("row {} needs two columns", i + 1)));
            };
            if i == 0 && code.eq_ignore_ascii_case("designator") {
                continue;
            }
            table.insert(code, name)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, designator: &str, telephony: &str) -> Result<(), TextNormError> {
        let code = designator.trim().to_ascii_uppercase();
        if code.len() != 3 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(TextNormError::Table(format!(
                "designator {designator:?} must be three letters"
            )));
        }
        let name = normalize(telephony);
        if name.is_empty() {
            return Err(TextNormError::Table(format!("empty telephony for {code}")));
        }
        if self.entries.insert(code.clone(), name).is_some() {
            return Err(TextNormError::Table(format!("duplicate designator {code}")));
        }
        Ok(())
    }

    pub fn telephony(&self, designator: &str) -> Option<&[String]> {
        self.entries.get(designator).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every token used by any telephony name.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.entries
            .values()
            .flat_map(|v| v.iter().map(String::as_str))
            .collect()
    }
}

/// Normalizes free text into annotation-style lowercase tokens.
///
/// Digits are verbalized one by one, a decimal separator between digits
/// becomes "decimal", known abbreviations are spelled letter by letter and
/// "niner" is read as "nine". The result is idempotent.
pub fn normalize(text: &str) -> Vec<String> {
    let ascii = deunicode::deunicode(text).to_ascii_lowercase();
    let mut out = Vec::new();
    for raw in ascii.split(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | ','))) {
        for piece in split_decimal_aware(raw) {
            push_normalized(&piece, &mut out);
        }
    }
    out
}

/// Splits on punctuation except a `.`/`,` sitting between two digits,
/// which is rewritten as the word "decimal".
fn split_decimal_aware(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut pieces = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '.' || c == ',' {
            let between_digits = i > 0
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if !cur.is_empty() {
                pieces.push(std::mem::take(&mut cur));
            }
            if between_digits {
                pieces.push("decimal".to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}

fn push_normalized(piece: &str, out: &mut Vec<String>) {
    // Alternate letter and digit runs: "fl120" -> ["fl", "120"].
    let mut run = String::new();
    let mut run_is_digit = false;
    let flush = |run: &mut String, is_digit: bool, out: &mut Vec<String>| {
        if run.is_empty() {
            return;
        }
        if is_digit {
            out.extend(run.chars().filter_map(digit_word).map(String::from));
        } else {
            push_word(run, out);
        }
        run.clear();
    };
    for c in piece.chars() {
        let d = c.is_ascii_digit();
        if !run.is_empty() && d != run_is_digit {
            flush(&mut run, run_is_digit, out);
        }
        run_is_digit = d;
        run.push(c);
    }
    flush(&mut run, run_is_digit, out);
}

fn push_word(word: &str, out: &mut Vec<String>) {
    let word = word.trim_matches('-');
    if word.is_empty() {
        return;
    }
    if word.contains("--") {
        for part in word.split('-').filter(|p| !p.is_empty()) {
            push_word(part, out);
        }
        return;
    }
    if SPELLED_ABBREVIATIONS.contains(&word) {
        out.extend(word.chars().map(String::from));
    } else if word == "niner" {
        out.push("nine".into());
    } else {
        out.push(word.to_string());
    }
}

/// How a callsign is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerbalizationKind {
    /// Telephony name followed by every remaining character.
    Full,
    /// Every character spelled with the ICAO alphabet and digit words.
    Spelled,
    /// Telephony name followed by the last two characters.
    Shortened,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verbalization {
    pub tokens: Vec<String>,
    pub kind: VerbalizationKind,
}

impl Verbalization {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Result of [`expand_callsign`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallsignExpansion {
    pub code: String,
    pub verbalizations: Vec<Verbalization>,
    /// Set when the code looks airline-style but its designator is not in
    /// the table; only the spelled form is produced then.
    pub unknown_designator: bool,
}

impl CallsignExpansion {
    pub fn find(&self, kind: VerbalizationKind) -> Option<&Verbalization> {
        self.verbalizations.iter().find(|v| v.kind == kind)
    }
}

fn callsign_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:[A-Z]{2,3}[A-Z0-9]+|[A-Z0-9]{1,2}-[A-Z0-9]{2,5}|N[0-9][A-Z0-9]{0,4})$")
            .expect("static regex")
    })
}

pub fn is_valid_callsign(code: &str) -> bool {
    callsign_regex().is_match(code)
}

fn spell(chars: &str) -> Vec<String> {
    chars
        .chars()
        .filter_map(|c| digit_word(c).or_else(|| letter_word(c)))
        .map(String::from)
        .collect()
}

fn is_registration(code: &str) -> bool {
    code.contains('-')
        || !code.bytes().any(|b| b.is_ascii_digit())
        || (code.starts_with('N') && code.as_bytes().get(1).is_some_and(u8::is_ascii_digit))
}

/// Expands an ICAO callsign code into its spoken forms.
pub fn expand_callsign(code: &str, table: &AirlineTable) -> Result<CallsignExpansion, TextNormError> {
    if !is_valid_callsign(code) {
        return Err(TextNormError::InvalidCallsign(code.to_string()));
    }
    let spelled = Verbalization {
        tokens: spell(code),
        kind: VerbalizationKind::Spelled,
    };
    if is_registration(code) {
        return Ok(CallsignExpansion {
            code: code.to_string(),
            verbalizations: vec![spelled],
            unknown_designator: false,
        });
    }
    let leading = code.bytes().take_while(u8::is_ascii_uppercase).count();
    let prefix_len = leading.min(3);
    let (designator, suffix) = code.split_at(prefix_len);
    let Some(name) = table.telephony(designator).filter(|_| prefix_len == 3) else {
        return Ok(CallsignExpansion {
            code: code.to_string(),
            verbalizations: vec![spelled],
            unknown_designator: true,
        });
    };
    let full = Verbalization {
        tokens: name.iter().cloned().chain(spell(suffix)).collect(),
        kind: VerbalizationKind::Full,
    };
    let tail_start = suffix.len().saturating_sub(2);
    let shortened = Verbalization {
        tokens: name.iter().cloned().chain(spell(&suffix[tail_start..])).collect(),
        kind: VerbalizationKind::Shortened,
    };
    let mut seen = HashSet::new();
    let verbalizations = [full, spelled, shortened]
        .into_iter()
        .filter(|v| seen.insert(v.tokens.clone()))
        .collect();
    Ok(CallsignExpansion {
        code: code.to_string(),
        verbalizations,
        unknown_designator: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramMode {
    Unigram,
    Ngram,
}

/// Turns verbalizations into the token sequences to boost.
pub fn expansions_to_ngrams(verbalizations: &[Verbalization], mode: NgramMode) -> Vec<Vec<String>> {
    let mut seen = HashSet::new();
    match mode {
        NgramMode::Unigram => verbalizations
            .iter()
            .flat_map(|v| v.tokens.iter())
            .map(|t| vec![t.clone()])
            .filter(|t| seen.insert(t.clone()))
            .collect(),
        NgramMode::Ngram => verbalizations
            .iter()
            .filter(|v| !v.tokens.is_empty() && seen.insert(v.tokens.clone()))
            .map(|v| v.tokens.clone())
            .collect(),
    }
}

/// Recovers an ICAO code from a spoken callsign: telephony name (longest
/// match) followed by digit and letter words.
pub fn callsign_code(tokens: &[String], table: &AirlineTable) -> Option<String> {
    let mut best: Option<(&str, usize)> = None;
    for (code, name) in table.iter() {
        if tokens.starts_with(name) && best.is_none_or(|(_, len)| name.len() > len) {
            best = Some((code, name.len()));
        }
    }
    let (mut code, rest) = match best {
        Some((c, len)) => (c.to_string(), &tokens[len..]),
        None => (String::new(), tokens),
    };
    for w in rest {
        code.push(digit_from_word(w).or_else(|| letter_from_word(w))?);
    }
    is_valid_callsign(&code).then_some(code)
}

/// Closed vocabulary of callsign expansions for `table`.
pub fn expansion_vocabulary(table: &AirlineTable) -> BTreeSet<String> {
    table
        .vocabulary()
        .into_iter()
        .map(String::from)
        .chain(ICAO_ALPHABET.iter().map(|s| s.to_string()))
        .chain(DIGIT_WORDS.iter().map(|s| s.to_string()))
        .chain(NUMBER_WORDS.iter().map(|s| s.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn table() -> AirlineTable {
        let mut t = AirlineTable::new();
        t.insert("DLH", "lufthansa").unwrap();
        t.insert("CSA", "c s a").unwrap();
        t.insert("CSN", "China Southern").unwrap();
        t
    }

    #[test]
    fn normalizes_flight_level() {
        assert_eq!(normalize("Descend FL 120"), words("descend f l one two zero"));
        assert_eq!(normalize("cleared to land"), words("cleared to land"));
        assert_eq!(normalize("FL120"), words("f l one two zero"));
    }

    #[test]
    fn normalizes_punctuation_and_decimals() {
        assert_eq!(
            normalize("Contact tower 118.5, bye!"),
            words("contact tower one one eight decimal five bye")
        );
        assert_eq!(normalize("niner X-Ray"), words("nine x-ray"));
        assert_eq!(normalize("Dobrý den"), words("dobry den"));
        assert!(normalize("  ... !! ").is_empty());
        assert_eq!(normalize("-- a--b -"), words("a b"));
    }

    #[test]
    fn expands_lufthansa() {
        let e = expand_callsign("DLH77RM", &table()).unwrap();
        assert!(!e.unknown_designator);
        assert_eq!(
            e.find(VerbalizationKind::Full).unwrap().text(),
            "lufthansa seven seven romeo mike"
        );
        assert_eq!(
            e.find(VerbalizationKind::Spelled).unwrap().text(),
            "delta lima hotel seven seven romeo mike"
        );
        assert_eq!(
            e.find(VerbalizationKind::Shortened).unwrap().text(),
            "lufthansa romeo mike"
        );
    }

    #[test]
    fn expands_csa() {
        let e = expand_callsign("CSA123", &table()).unwrap();
        assert_eq!(e.find(VerbalizationKind::Full).unwrap().text(), "c s a one two three");
        assert_eq!(e.find(VerbalizationKind::Shortened).unwrap().text(), "c s a two three");
    }

    #[test]
    fn short_suffix_drops_duplicate_shortened_form() {
        let e = expand_callsign("CSA12", &table()).unwrap();
        assert_eq!(e.verbalizations.len(), 2);
        assert!(e.find(VerbalizationKind::Shortened).is_none());
    }

    #[test]
    fn unknown_designator_falls_back_to_spelling() {
        let e = expand_callsign("XX1", &table()).unwrap();
        assert!(e.unknown_designator);
        assert_eq!(e.verbalizations.len(), 1);
        assert_eq!(e.verbalizations[0].text(), "x-ray x-ray one");
        assert!(expand_callsign("QQQ12", &table()).unwrap().unknown_designator);
    }

    #[test]
    fn registrations_are_spelled() {
        let e = expand_callsign("OK-ABC", &table()).unwrap();
        assert!(!e.unknown_designator);
        assert_eq!(e.verbalizations[0].text(), "oscar kilo alfa bravo charlie");
        let e = expand_callsign("OKABC", &table()).unwrap();
        assert_eq!(e.verbalizations[0].kind, VerbalizationKind::Spelled);
    }

    #[test]
    fn rejects_malformed_codes() {
        for bad in ["", "D", "dlh12", "DLH 12", "12"] {
            assert!(expand_callsign(bad, &table()).is_err(), "{bad}");
        }
    }

    #[test]
    fn ngram_modes() {
        let e = expand_callsign("DLH77RM", &table()).unwrap();
        let full = vec![e.find(VerbalizationKind::Full).unwrap().clone()];
        let uni = expansions_to_ngrams(&full, NgramMode::Unigram);
        assert_eq!(uni, vec![words("lufthansa"), words("seven"), words("romeo"), words("mike")]);
        let ngram = expansions_to_ngrams(&full, NgramMode::Ngram);
        assert_eq!(ngram, vec![words("lufthansa seven seven romeo mike")]);

        let other = expand_callsign("CSA17", &table()).unwrap();
        let both = vec![full[0].clone(), other.verbalizations[0].clone()];
        let uni = expansions_to_ngrams(&both, NgramMode::Unigram);
        assert_eq!(uni.iter().filter(|s| s[0] == "seven").count(), 1);
    }

    #[test]
    fn recovers_codes_from_speech() {
        let t = table();
        assert_eq!(
            callsign_code(&words("china southern three two five"), &t).as_deref(),
            Some("CSN325")
        );
        assert_eq!(
            callsign_code(&words("lufthansa seven seven romeo mike"), &t).as_deref(),
            Some("DLH77RM")
        );
        assert_eq!(callsign_code(&words("lufthansa descend"), &t), None);
    }

    #[test]
    fn builtin_table_loads() {
        let t = AirlineTable::builtin();
        assert!(t.len() > 10);
        assert_eq!(t.telephony("DLH").unwrap(), words("lufthansa").as_slice());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "[ -~\\u{e1}\\u{fd}]{0,40}") {
            let once = normalize(&s);
            let twice = normalize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(crate::model::is_normalized_token(t), "{:?}", t);
            }
        }

        #[test]
        fn expansions_stay_in_vocabulary(
            prefix in prop::sample::select(vec!["DLH", "CSA", "CSN", "ABC", "XY"]),
            suffix in "[A-Z0-9]{0,4}[0-9]",
        ) {
            let t = table();
            let vocab = expansion_vocabulary(&t);
            let code = format!("{prefix}{suffix}");
            let e = expand_callsign(&code, &t).unwrap();
            prop_assert!(!e.verbalizations.is_empty());
            for v in &e.verbalizations {
                for tok in &v.tokens {
                    prop_assert!(vocab.contains(tok), "{} not in vocabulary", tok);
                }
            }
        }
    }
}
