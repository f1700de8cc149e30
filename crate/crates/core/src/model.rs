//! Domain types shared by every stage: segment records, annotated
//! transcripts and surveillance context lists.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::Lattice;

/// Upper bound of the SNR range accepted by the quality score.
pub const MAX_SNR_DB: f64 = 40.0;
pub const MIN_SPEAKERS: u32 = 1;
pub const MAX_SPEAKERS: u32 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaggedError {
    #[error("malformed tags: {0}")]
    MalformedTags(String),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
}

/// Word emitted by the recognizer together with its confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub word: String,
    pub conf: f64,
}

impl Token {
    pub fn new(word: impl Into<String>, conf: f64) -> Self {
        Token {
            word: word.into(),
            conf,
        }
    }
}

/// Reason a job was rejected by one of the pipeline gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReasonCode {
    TooNoisy,
    TooShort,
    TooLong,
    NonEnglish,
    /// Nothing in the transcript the language detector could use.
    NoEvidence,
    NoHypothesis,
    MissingField,
    StageFailed,
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReasonCode::TooNoisy => "TOO_NOISY",
            ReasonCode::TooShort => "TOO_SHORT",
            ReasonCode::TooLong => "TOO_LONG",
            ReasonCode::NonEnglish => "NON_ENGLISH",
            ReasonCode::NoEvidence => "NO_EVIDENCE",
            ReasonCode::NoHypothesis => "NO_HYPOTHESIS",
            ReasonCode::MissingField => "MISSING_FIELD",
            ReasonCode::StageFailed => "STAGE_FAILED",
        };
        f.write_str(s)
    }
}

/// Processing state of a segment record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    New,
    Processing,
    Ok,
    Rejected(ReasonCode),
}

/// Audio attached to a record: either a WAV file on disk or inline samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AudioRef {
    Inline { sample_rate: u32, samples: Vec<i16> },
    Path(String),
}

/// One ATC transmission travelling through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub airport_icao: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub captured_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<AudioRef>,
    #[serde(default)]
    pub audio_len: f64,
    #[serde(default)]
    pub speech_len: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_spk: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<Token>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_word_conf: Option<f64>,
    #[serde(default)]
    pub wrd_cnt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eld_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    /// Tagged rendering of the transcript, filled by entity extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tagged: Option<String>,
    /// ICAO code recovered from the tagged callsign span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callsign: Option<String>,
    #[serde(default)]
    pub status: Status,
}

impl SegmentRecord {
    pub fn new(id: impl Into<String>, audio_len: f64, speech_len: f64) -> Self {
        SegmentRecord {
            id: id.into(),
            airport_icao: None,
            frequency_hz: None,
            captured_at: None,
            audio: None,
            audio_len,
            speech_len,
            avg_snr: None,
            num_spk: None,
            lattice: None,
            transcript: None,
            avg_word_conf: None,
            wrd_cnt: 0,
            eld_score: None,
            quality_score: None,
            tagged: None,
            callsign: None,
            status: Status::New,
        }
    }

    /// Clamps the ranged fields and checks the remaining invariants.
    pub fn normalized(mut self) -> Result<Self, RecordError> {
        if self.id.trim().is_empty() {
            return Err(RecordError::MalformedRecord("empty id".into()));
        }
        check_finite("audio_len", self.audio_len)?;
        check_finite("speech_len", self.speech_len)?;
        if self.audio_len < 0.0 || self.speech_len < 0.0 {
            return Err(RecordError::InvariantViolation(
                "lengths must be non-negative".into(),
            ));
        }
        if self.speech_len > self.audio_len {
            return Err(RecordError::InvariantViolation(format!(
                "speech_len {} exceeds audio_len {}",
                self.speech_len, self.audio_len
            )));
        }
        if let Some(snr) = self.avg_snr {
            check_finite("avg_snr", snr)?;
            self.avg_snr = Some(snr.clamp(0.0, MAX_SNR_DB));
        }
        if let Some(n) = self.num_spk {
            self.num_spk = Some(n.clamp(MIN_SPEAKERS, MAX_SPEAKERS));
        }
        check_unit("avg_word_conf", self.avg_word_conf)?;
        check_unit("eld_score", self.eld_score)?;
        if let Some(q) = self.quality_score {
            check_finite("quality_score", q)?;
        }
        if let Some(tokens) = &self.transcript {
            for t in tokens {
                check_unit("transcript confidence", Some(t.conf))?;
            }
            self.wrd_cnt = tokens.len() as u32;
        }
        if let Some(lat) = &self.lattice {
            lat.validate()
                .map_err(|e| RecordError::InvariantViolation(format!("lattice: {e}")))?;
        }
        Ok(self)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("segment records always serialize")
    }
}

fn check_finite(name: &str, v: f64) -> Result<(), RecordError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(RecordError::InvariantViolation(format!("{name} is not finite")))
    }
}

fn check_unit(name: &str, v: Option<f64>) -> Result<(), RecordError> {
    match v {
        Some(x) if !(0.0..=1.0).contains(&x) => Err(RecordError::InvariantViolation(format!(
            "{name} {x} outside [0, 1]"
        ))),
        _ => Ok(()),
    }
}

/// Parses one JSONL line into a record with all invariants enforced.
pub fn parse_segment_record(line: &str) -> Result<SegmentRecord, RecordError> {
    let record: SegmentRecord = serde_json::from_str(line.trim())
        .map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
    record.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityLabel {
    Callsign,
    Command,
    Value,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 3] = [EntityLabel::Callsign, EntityLabel::Command, EntityLabel::Value];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Callsign => "callsign",
            EntityLabel::Command => "command",
            EntityLabel::Value => "value",
        }
    }
}

impl FromStr for EntityLabel {
    type Err = TaggedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "callsign" => Ok(EntityLabel::Callsign),
            "command" => Ok(EntityLabel::Command),
            "value" => Ok(EntityLabel::Value),
            other => Err(TaggedError::MalformedTags(format!("unknown label {other:?}"))),
        }
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labelled token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub label: EntityLabel,
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn new(label: EntityLabel, start: usize, end: usize) -> Self {
        EntitySpan { label, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Atco,
    Pilot,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Atco => "ATCO",
            Role::Pilot => "PILOT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub start: usize,
    pub end: usize,
}

impl Turn {
    pub fn new(role: Role, start: usize, end: usize) -> Self {
        Turn { role, start, end }
    }
}

/// Normalized token sequence with entity spans and speaker turns.
///
/// Tokens outside every entity span are implicitly `UNK`. Turns are either
/// absent (empty) or partition the token range.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotatedTranscript {
    pub tokens: Vec<String>,
    #[serde(default)]
    pub entities: Vec<EntitySpan>,
    #[serde(default)]
    pub turns: Vec<Turn>,
}

impl AnnotatedTranscript {
    /// Validates and canonicalizes (entities sorted by start).
    pub fn new(
        tokens: Vec<String>,
        mut entities: Vec<EntitySpan>,
        turns: Vec<Turn>,
    ) -> Result<Self, TaggedError> {
        entities.sort_by_key(|e| (e.start, e.end, e.label));
        let t = AnnotatedTranscript {
            tokens,
            entities,
            turns,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn plain(tokens: Vec<String>) -> Self {
        AnnotatedTranscript {
            tokens,
            entities: Vec::new(),
            turns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TaggedError> {
        let n = self.tokens.len();
        if let Some(bad) = self.tokens.iter().find(|t| !is_normalized_token(t)) {
            return Err(TaggedError::InvalidAnnotation(format!(
                "token {bad:?} is not normalized"
            )));
        }
        let mut prev_end = 0;
        for (i, e) in self.entities.iter().enumerate() {
            if e.is_empty() || e.end > n {
                return Err(TaggedError::InvalidAnnotation(format!(
                    "entity [{}, {}) out of bounds for {n} tokens",
                    e.start, e.end
                )));
            }
            if i > 0 && e.start < prev_end {
                return Err(TaggedError::InvalidAnnotation(format!(
                    "entity [{}, {}) overlaps its predecessor",
                    e.start, e.end
                )));
            }
            prev_end = e.end;
        }
        if !self.turns.is_empty() {
            let mut cursor = 0;
            for t in &self.turns {
                if t.start != cursor || t.end <= t.start || t.end > n {
                    return Err(TaggedError::InvalidAnnotation(
                        "turns must partition the token range".into(),
                    ));
                }
                cursor = t.end;
            }
            if cursor != n {
                return Err(TaggedError::InvalidAnnotation(
                    "turns do not cover every token".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn spans(&self, label: EntityLabel) -> impl Iterator<Item = &EntitySpan> {
        self.entities.iter().filter(move |e| e.label == label)
    }

    pub fn span_tokens(&self, span: &EntitySpan) -> &[String] {
        &self.tokens[span.start..span.end]
    }
}

/// True for `[a-z-]+` words.
pub fn is_normalized_token(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_lowercase() || b == b'-')
}

/// Renders entity spans as `<label> ... </label>` around their tokens.
pub fn render_tagged(t: &AnnotatedTranscript) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(t.tokens.len() + 2 * t.entities.len());
    let mut entities = t.entities.iter().peekable();
    let mut open: Option<&EntitySpan> = None;
    for (i, tok) in t.tokens.iter().enumerate() {
        if let Some(e) = open.filter(|e| e.end == i) {
            parts.push(format!("</{}>", e.label));
            open = None;
        }
        if let Some(e) = entities.next_if(|e| e.start == i) {
            parts.push(format!("<{}>", e.label));
            open = Some(e);
        }
        parts.push(tok.clone());
    }
    if let Some(e) = open {
        parts.push(format!("</{}>", e.label));
    }
    parts.join(" ")
}

/// Inverse of [`render_tagged`].
pub fn parse_tagged(text: &str) -> Result<AnnotatedTranscript, TaggedError> {
    let mut tokens = Vec::new();
    let mut entities = Vec::new();
    let mut open: Option<(EntityLabel, usize)> = None;
    for item in text.split_whitespace() {
        if let Some(inner) = item.strip_prefix("</").and_then(|s| s.strip_suffix('>')) {
            let label: EntityLabel = inner.parse()?;
            match open.take() {
                Some((l, start)) if l == label => {
                    if start == tokens.len() {
                        return Err(TaggedError::MalformedTags(format!("empty <{label}> span")));
                    }
                    entities.push(EntitySpan::new(label, start, tokens.len()));
                }
                Some((l, _)) => {
                    return Err(TaggedError::MalformedTags(format!(
                        "</{label}> closes <{l}>"
                    )))
                }
                None => {
                    return Err(TaggedError::MalformedTags(format!(
                        "</{label}> without opening tag"
                    )))
                }
            }
        } else if let Some(inner) = item.strip_prefix('<').and_then(|s| s.strip_suffix('>')) {
            let label: EntityLabel = inner.parse()?;
            if let Some((l, _)) = open {
                return Err(TaggedError::MalformedTags(format!(
                    "<{label}> nested inside <{l}>"
                )));
            }
            open = Some((label, tokens.len()));
        } else if item.contains('<') || item.contains('>') {
            return Err(TaggedError::MalformedTags(format!("stray tag text {item:?}")));
        } else {
            tokens.push(item.to_string());
        }
    }
    if let Some((l, _)) = open {
        return Err(TaggedError::MalformedTags(format!("<{l}> is never closed")));
    }
    AnnotatedTranscript::new(tokens, entities, Vec::new())
}

/// Surveillance callsigns valid over a time window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextList {
    pub callsigns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_from: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_to: Option<DateTime<Utc>>,
}

impl ContextList {
    pub fn new(callsigns: Vec<String>) -> Self {
        ContextList {
            callsigns,
            valid_from: None,
            valid_to: None,
        }
    }
}

/// One row of a context CSV: a callsign and the window it was observed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub callsign: String,
    #[serde(default)]
    pub valid_from: Option<DateTime<Utc>>,
    #[serde(default)]
    pub valid_to: Option<DateTime<Utc>>,
}

impl ContextEntry {
    fn covers(&self, at: Option<DateTime<Utc>>) -> bool {
        let Some(at) = at else { return true };
        self.valid_from.is_none_or(|f| f <= at) && self.valid_to.is_none_or(|t| at <= t)
    }
}

/// Time-indexed store of surveillance callsigns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextStore {
    pub entries: Vec<ContextEntry>,
}

impl ContextStore {
    /// Reads `callsign,valid_from,valid_to` rows; the header and the two
    /// timestamp columns are optional.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self, RecordError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
            let Some(code) = row.get(0) else { continue };
            if code.is_empty() || code.starts_with('#') {
                continue;
            }
            if i == 0 && code.eq_ignore_ascii_case("callsign") {
                continue;
            }
            let ts = |idx: usize| -> Result<Option<DateTime<Utc>>, RecordError> {
                match row.get(idx) {
                    None | Some("") => Ok(None),
                    Some(s) => s
                        .parse::<DateTime<Utc>>()
                        .map(Some)
                        .map_err(|e| RecordError::MalformedRecord(format!("{s:?}: {e}"))),
                }
            };
            entries.push(ContextEntry {
                callsign: code.to_ascii_uppercase(),
                valid_from: ts(1)?,
                valid_to: ts(2)?,
            });
        }
        Ok(ContextStore { entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("callsign,valid_from,valid_to\n");
        let fmt = |t: &Option<DateTime<Utc>>| {
            t.map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
                .unwrap_or_default()
        };
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                e.callsign,
                fmt(&e.valid_from),
                fmt(&e.valid_to)
            ));
        }
        out
    }

    /// Distinct callsigns whose window covers `at` (all of them when `at`
    /// is unknown), in first-seen order.
    pub fn context_at(&self, at: Option<DateTime<Utc>>) -> ContextList {
        let mut seen = BTreeSet::new();
        let callsigns = self
            .entries
            .iter()
            .filter(|e| e.covers(at))
            .filter(|e| seen.insert(e.callsign.clone()))
            .map(|e| e.callsign.clone())
            .collect();
        ContextList {
            callsigns,
            valid_from: at,
            valid_to: at,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn minimal_record_parses() {
        let r = parse_segment_record(r#"{"id":"a","audio_len":5.0,"speech_len":4.0,"avg_snr":20}"#)
            .unwrap();
        assert_eq!(r.wrd_cnt, 0);
        assert_eq!(r.avg_snr, Some(20.0));
        assert_eq!(r.status, Status::New);
    }

    #[test]
    fn snr_is_clamped() {
        let r = parse_segment_record(r#"{"id":"a","audio_len":5.0,"speech_len":4.0,"avg_snr":55}"#)
            .unwrap();
        assert_eq!(r.avg_snr, Some(40.0));
    }

    #[test]
    fn speech_longer_than_audio_is_rejected() {
        let err = parse_segment_record(r#"{"id":"b","speech_len":6.0,"audio_len":5.0}"#).unwrap_err();
        assert!(matches!(err, RecordError::InvariantViolation(_)));
    }

    #[test]
    fn missing_id_is_malformed() {
        let err = parse_segment_record(r#"{"audio_len":5.0}"#).unwrap_err();
        assert!(matches!(err, RecordError::MalformedRecord(_)));
        let err = parse_segment_record("not json").unwrap_err();
        assert!(matches!(err, RecordError::MalformedRecord(_)));
    }

    #[test]
    fn word_count_follows_transcript() {
        let r = parse_segment_record(
            r#"{"id":"c","audio_len":2,"speech_len":1,"wrd_cnt":9,
                "transcript":[{"word":"descend","conf":0.9},{"word":"seven","conf":0.4}]}"#,
        )
        .unwrap();
        assert_eq!(r.wrd_cnt, 2);
        let bad = parse_segment_record(
            r#"{"id":"c","audio_len":2,"speech_len":1,"transcript":[{"word":"x","conf":1.5}]}"#,
        );
        assert!(matches!(bad, Err(RecordError::InvariantViolation(_))));
    }

    #[test]
    fn rejected_status_serializes_with_reason() {
        let mut r = SegmentRecord::new("x", 1.0, 0.5);
        r.status = Status::Rejected(ReasonCode::TooNoisy);
        let line = r.to_json_line();
        assert!(line.contains(r#""status":{"rejected":"TOO_NOISY"}"#), "{line}");
        assert_eq!(parse_segment_record(&line).unwrap(), r);
    }

    #[test]
    fn renders_worked_example() {
        let t = AnnotatedTranscript::new(
            toks("runway three four left cleared to land china southern three two five"),
            vec![
                EntitySpan::new(EntityLabel::Callsign, 7, 12),
                EntitySpan::new(EntityLabel::Value, 0, 4),
                EntitySpan::new(EntityLabel::Command, 4, 7),
            ],
            vec![],
        )
        .unwrap();
        let expected = "<value> runway three four left </value> <command> cleared to land </command> \
                        <callsign> china southern three two five </callsign>";
        assert_eq!(render_tagged(&t), expected);
        assert_eq!(parse_tagged(expected).unwrap(), t);
    }

    #[test]
    fn plain_render_without_entities() {
        let t = AnnotatedTranscript::plain(toks("good morning"));
        assert_eq!(render_tagged(&t), "good morning");
    }

    #[test]
    fn parses_single_callsign() {
        let t = parse_tagged("<callsign> c s a one two three </callsign>").unwrap();
        assert_eq!(t.entities, vec![EntitySpan::new(EntityLabel::Callsign, 0, 6)]);
    }

    #[test]
    fn mismatched_tags_fail() {
        for bad in [
            "<command> cleared </callsign>",
            "<command> cleared",
            "cleared </command>",
            "<command> <value> x </value> </command>",
            "<runway> x </runway>",
            "<command> </command>",
            "a<b",
        ] {
            assert!(matches!(parse_tagged(bad), Err(TaggedError::MalformedTags(_))), "{bad}");
        }
    }

    #[test]
    fn invalid_annotations_are_rejected() {
        let overlapping = AnnotatedTranscript::new(
            toks("a b c"),
            vec![
                EntitySpan::new(EntityLabel::Callsign, 0, 2),
                EntitySpan::new(EntityLabel::Value, 1, 3),
            ],
            vec![],
        );
        assert!(overlapping.is_err());
        let gap = AnnotatedTranscript::new(
            toks("a b c"),
            vec![],
            vec![Turn::new(Role::Atco, 0, 1), Turn::new(Role::Pilot, 2, 3)],
        );
        assert!(gap.is_err());
        let upper = AnnotatedTranscript::new(toks("A"), vec![], vec![]);
        assert!(upper.is_err());
    }

    #[test]
    fn context_store_filters_by_window() {
        let csv = "callsign,valid_from,valid_to\n\
                   DLH77RM,2024-01-01T10:00:00Z,2024-01-01T10:10:00Z\n\
                   csa123,,\n\
                   BAW1,2024-01-01T11:00:00Z,2024-01-01T11:10:00Z\n";
        let store = ContextStore::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(store.entries.len(), 3);
        let at = "2024-01-01T10:05:00Z".parse().ok();
        assert_eq!(store.context_at(at).callsigns, vec!["DLH77RM", "CSA123"]);
        assert_eq!(store.context_at(None).callsigns.len(), 3);
        let again = ContextStore::from_csv(store.to_csv().as_bytes()).unwrap();
        assert_eq!(again, store);
    }
}
