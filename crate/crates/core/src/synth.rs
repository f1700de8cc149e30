//! Seeded synthetic ATC corpus: grammar-sampled transmissions with known
//! entities and roles, confusable recognition lattices, surveillance
//! context and multi-turn dialogues.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eld::{soft_counts, term_counts, train, LinearTextModel, ModelKind, SoftCountVector, TrainConfig};
use crate::lattice::{Arc, Lattice};
use crate::model::{
    parse_tagged, render_tagged, AnnotatedTranscript, AudioRef, ContextEntry, ContextStore, EntityLabel, EntitySpan,
    Role, SegmentRecord, TaggedError, Token, Turn,
};
use crate::textnorm::{expand_callsign, AirlineTable, VerbalizationKind, DIGIT_WORDS, ICAO_ALPHABET};

pub const AUDIO_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub utterances: usize,
    /// Share of transmissions in a language other than English.
    pub non_english_fraction: f64,
    /// Distinct callsigns the transmissions draw from.
    pub callsign_pool: usize,
    /// Probability that a lattice position carries confusable competitors.
    pub noise: f64,
    pub seed: u64,
    /// Attach synthesized inline audio to each record.
    pub audio: bool,
    /// Extra callsigns listed in each record's surveillance context.
    pub distractors: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            utterances: 200,
            non_english_fraction: 0.1,
            callsign_pool: 40,
            noise: 0.3,
            seed: 42,
            audio: false,
            distractors: 4,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.utterances == 0 {
            return bad("utterances must be positive".into());
        }
        if self.callsign_pool == 0 {
            return bad("callsign_pool must be positive".into());
        }
        for (name, v) in [("non_english_fraction", self.non_english_fraction), ("noise", self.noise)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let s: SynthSpec = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

/// Ground truth for one generated transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub id: String,
    /// Transcript with inline entity tags.
    pub tagged: String,
    pub role: Role,
    pub english: bool,
    /// ICAO code of the callsign spoken in the transmission.
    pub callsign: String,
}

impl Reference {
    /// Parsed transcript with a single turn spanning it.
    pub fn annotation(&self) -> Result<AnnotatedTranscript, TaggedError> {
        let mut t = parse_tagged(&self.tagged)?;
        if !t.tokens.is_empty() {
            t.turns = vec![Turn::new(self.role, 0, t.tokens.len())];
        }
        Ok(t)
    }
}

/// Multi-speaker exchange with reference turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub tagged: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn annotation(&self) -> Result<AnnotatedTranscript, TaggedError> {
        let mut t = parse_tagged(&self.tagged)?;
        t.turns = self.turns.clone();
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<SegmentRecord>,
    pub references: Vec<Reference>,
    pub dialogues: Vec<Dialogue>,
    pub context: ContextStore,
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const REFERENCES_FILE: &str = "references.jsonl";
pub const DIALOGUES_FILE: &str = "dialogues.jsonl";
pub const CONTEXT_FILE: &str = "context.csv";

impl SynthCorpus {
    /// Writes the four corpus files into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(RECORDS_FILE), jsonl(self.records.iter().map(SegmentRecord::to_json_line)))?;
        fs::write(dir.join(REFERENCES_FILE), jsonl(self.references.iter().map(to_line)))?;
        fs::write(dir.join(DIALOGUES_FILE), jsonl(self.dialogues.iter().map(to_line)))?;
        fs::write(dir.join(CONTEXT_FILE), self.context.to_csv())?;
        Ok(())
    }
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("corpus items serialize")
}

fn jsonl(lines: impl Iterator<Item = String>) -> String {
    lines.map(|l| l + "\n").collect()
}

/// Value phrase shapes paired with commands below.
#[derive(Clone, Copy)]
enum ValueKind {
    FlightLevel,
    Altitude,
    Heading,
    Runway,
    Frequency,
}

/// (imperative, read-back, value shapes)
const PHRASES: &[(&str, &str, &[ValueKind])] = &[
    ("descend", "descending", &[ValueKind::FlightLevel, ValueKind::Altitude]),
    ("climb", "climbing", &[ValueKind::FlightLevel, ValueKind::Altitude]),
    ("maintain", "maintaining", &[ValueKind::FlightLevel, ValueKind::Altitude]),
    ("turn left", "turning left", &[ValueKind::Heading]),
    ("turn right", "turning right", &[ValueKind::Heading]),
    ("contact", "contacting", &[ValueKind::Frequency]),
    ("hold short", "holding short", &[ValueKind::Runway]),
    ("line up and wait", "lining up and waiting", &[ValueKind::Runway]),
    ("vacate", "vacating", &[ValueKind::Runway]),
    ("expect", "expecting", &[ValueKind::Runway]),
];

const GREETINGS: &[&str] = &["good morning", "good afternoon", "good evening", "good day", "hello", "servus"];

/// Non-English words (German, Czech, French radiotelephony fragments).
const FOREIGN_WORDS: &[&str] = &[
    "guten", "tag", "sinken", "sie", "auf", "steigen", "rollen", "zur", "bahn", "bitte", "danke", "wiederhoren",
    "frequenz", "rechts", "links", "kurs", "halten", "vor", "freigegeben", "landung", "warten", "melden", "dobry",
    "den", "klesejte", "stoupejte", "drahu", "dekuji", "na", "shledanou", "vpravo", "vlevo", "bonjour", "descendez",
    "niveau", "montez", "piste", "merci", "revoir", "virez", "gauche", "droite", "cap", "maintenez", "autorise",
    "atterrir", "attendez", "alignez",
];

/// Common English words used as confusions outside entities.
const FILLER_WORDS: &[&str] = &["the", "to", "and", "level", "left", "right", "one", "on", "for", "and", "now"];

struct Utterance {
    transcript: AnnotatedTranscript,
    role: Role,
    english: bool,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn digits(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| DIGIT_WORDS[rng.gen_range(0..10)].to_string()).collect()
}

fn value_tokens(kind: ValueKind, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut v = Vec::new();
    match kind {
        ValueKind::FlightLevel => {
            v.extend(words("flight level"));
            v.push(DIGIT_WORDS[rng.gen_range(1..5)].to_string());
            v.extend(digits(rng, 1));
            v.push("zero".into());
        }
        ValueKind::Altitude => {
            v.push("altitude".into());
            v.push(DIGIT_WORDS[rng.gen_range(2..9)].to_string());
            v.extend(words("thousand feet"));
        }
        ValueKind::Heading => {
            v.push("heading".into());
            v.push(DIGIT_WORDS[rng.gen_range(0..4)].to_string());
            v.extend(digits(rng, 1));
            v.push(if rng.gen_bool(0.5) { "zero" } else { "five" }.into());
        }
        ValueKind::Runway => {
            v.push("runway".into());
            v.push(DIGIT_WORDS[rng.gen_range(0..4)].to_string());
            v.extend(digits(rng, 1));
            if rng.gen_bool(0.4) {
                v.push(["left", "right", "center"][rng.gen_range(0..3)].into());
            }
        }
        ValueKind::Frequency => {
            v.push("one".into());
            v.push(DIGIT_WORDS[rng.gen_range(1..4)].to_string());
            v.extend(digits(rng, 1));
            v.push("decimal".into());
            v.extend(digits(rng, 2));
        }
    }
    v
}

/// Builds tokens and spans from labelled pieces.
fn assemble(pieces: Vec<(Option<EntityLabel>, Vec<String>)>) -> AnnotatedTranscript {
    let mut tokens = Vec::new();
    let mut entities = Vec::new();
    for (label, toks) in pieces {
        if toks.is_empty() {
            continue;
        }
        if let Some(l) = label {
            entities.push(EntitySpan::new(l, tokens.len(), tokens.len() + toks.len()));
        }
        tokens.extend(toks);
    }
    AnnotatedTranscript {
        tokens,
        entities,
        turns: Vec::new(),
    }
}

/// One grammar-conformant English transmission. Controllers address the
/// aircraft first; pilots read back and end with the callsign.
fn english_utterance(role: Role, callsign: &[String], rng: &mut ChaCha8Rng) -> Utterance {
    let (imperative, readback, kinds) = PHRASES[rng.gen_range(0..PHRASES.len())];
    let value = value_tokens(kinds[rng.gen_range(0..kinds.len())], rng);
    let greeting = if rng.gen_bool(0.2) {
        words(GREETINGS[rng.gen_range(0..GREETINGS.len())])
    } else {
        Vec::new()
    };
    let pieces = match role {
        Role::Atco => vec![
            (None, greeting),
            (Some(EntityLabel::Callsign), callsign.to_vec()),
            (Some(EntityLabel::Command), words(imperative)),
            (Some(EntityLabel::Value), value),
        ],
        Role::Pilot => vec![
            (None, greeting),
            (Some(EntityLabel::Command), words(readback)),
            (Some(EntityLabel::Value), value),
            (Some(EntityLabel::Callsign), callsign.to_vec()),
        ],
    };
    Utterance {
        transcript: assemble(pieces),
        role,
        english: true,
    }
}

fn foreign_utterance(role: Role, callsign: &[String], rng: &mut ChaCha8Rng) -> Utterance {
    let n = rng.gen_range(4..=8);
    let tail: Vec<String> = (0..n)
        .map(|_| FOREIGN_WORDS[rng.gen_range(0..FOREIGN_WORDS.len())].to_string())
        .collect();
    Utterance {
        transcript: assemble(vec![(Some(EntityLabel::Callsign), callsign.to_vec()), (None, tail)]),
        role,
        english: false,
    }
}

/// Distinct callsign codes drawn from the airline table.
pub fn callsign_pool(n: usize, table: &AirlineTable, rng: &mut impl Rng) -> Vec<String> {
    let designators: Vec<&str> = table.iter().map(|(d, _)| d).collect();
    let mut out: Vec<String> = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 100 {
        attempts += 1;
        let mut code = designators[rng.gen_range(0..designators.len())].to_string();
        code.push(char::from(b'1' + rng.gen_range(0..9)));
        for _ in 0..rng.gen_range(0..3) {
            code.push(char::from(b'0' + rng.gen_range(0..10)));
        }
        for _ in 0..rng.gen_range(0..3) {
            code.push(char::from(b'A' + rng.gen_range(0..26)));
        }
        if !out.contains(&code) {
            out.push(code);
        }
    }
    out
}

fn full_form(code: &str, table: &AirlineTable) -> Vec<String> {
    expand_callsign(code, table)
        .ok()
        .and_then(|e| e.find(VerbalizationKind::Full).or(e.verbalizations.first()).map(|v| v.tokens.clone()))
        .unwrap_or_default()
}

/// A confusable alternative for `word`.
fn confusion(word: &str, airline_words: &[String], rng: &mut ChaCha8Rng) -> String {
    let pick = |pool: &[&str], rng: &mut ChaCha8Rng| loop {
        let w = pool[rng.gen_range(0..pool.len())];
        if w != word {
            break w.to_string();
        }
    };
    if DIGIT_WORDS.contains(&word) {
        pick(&DIGIT_WORDS, rng)
    } else if ICAO_ALPHABET.contains(&word) {
        pick(&ICAO_ALPHABET, rng)
    } else if airline_words.iter().any(|a| a == word) {
        let pool: Vec<&str> = airline_words.iter().map(String::as_str).collect();
        pick(&pool, rng)
    } else {
        pick(FILLER_WORDS, rng)
    }
}

/// Sausage lattice over `tokens`: the reference arc at every position plus,
/// with probability `noise`, one or two competitors whose cost is the
/// reference cost moved by up to 0.6 either way.
pub fn noisy_lattice(tokens: &[String], noise: f64, airline_words: &[String], rng: &mut ChaCha8Rng) -> Lattice {
    let mut arcs = Vec::new();
    for (i, w) in tokens.iter().enumerate() {
        let cost: f64 = rng.gen_range(0.2..1.0);
        arcs.push(Arc::new(i, i + 1, w.clone(), cost));
        if rng.gen_bool(noise) {
            let mut used = vec![w.clone()];
            for _ in 0..rng.gen_range(1..=2) {
                let alt = confusion(w, airline_words, rng);
                let c = (cost + rng.gen_range(-0.6..0.6)).max(0.0);
                if !used.contains(&alt) {
                    used.push(alt.clone());
                    arcs.push(Arc::new(i, i + 1, alt, c));
                }
            }
        }
    }
    Lattice::new(tokens.len() + 1, arcs, vec![(tokens.len(), 0.0)]).expect("sausage lattices are valid")
}

/// Push-to-talk style waveform: silence, a voiced burst, silence, with
/// background noise at roughly `snr_db` below the burst.
fn synth_audio(audio_len: f64, speech_len: f64, snr_db: f64, rng: &mut ChaCha8Rng) -> Vec<i16> {
    let rate = f64::from(AUDIO_SAMPLE_RATE);
    let n = (audio_len * rate) as usize;
    let lead = ((audio_len - speech_len) / 2.0 * rate) as usize;
    let speech = (speech_len * rate) as usize;
    let amp = 0.3;
    let noise_amp = amp / 10f64.powf(snr_db / 20.0) * 3f64.sqrt() / 2f64.sqrt();
    let f0 = rng.gen_range(110.0..220.0);
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let mut x = noise_amp * rng.gen_range(-1.0..1.0);
            if (lead..lead + speech).contains(&i) {
                x += amp * (2.0 * std::f64::consts::PI * f0 * t).sin();
            }
            (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
        })
        .collect()
}

fn start_time() -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp(1_767_225_600, 0).expect("valid timestamp")
}

/// Generates a corpus; identical specs give identical corpora.
pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let table = AirlineTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool = callsign_pool(spec.callsign_pool, &table, &mut rng);
    let airline_words: Vec<String> = table
        .iter()
        .flat_map(|(_, name)| name.iter().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut records = Vec::with_capacity(spec.utterances);
    let mut references = Vec::with_capacity(spec.utterances);
    let mut context = ContextStore::default();
    let t0 = start_time();
    for i in 0..spec.utterances {
        let id = format!("utt{i:05}");
        let code = pool[rng.gen_range(0..pool.len())].clone();
        let spoken = full_form(&code, &table);
        let role = if rng.gen_bool(0.5) { Role::Atco } else { Role::Pilot };
        let u = if rng.gen_bool(spec.non_english_fraction) {
            foreign_utterance(role, &spoken, &mut rng)
        } else {
            english_utterance(role, &spoken, &mut rng)
        };

        let at = t0 + Duration::seconds(120 * i as i64);
        let window = Duration::seconds(30);
        let mut listed = vec![code.clone()];
        let others: Vec<&String> = pool.iter().filter(|c| **c != code).collect();
        listed.extend(
            others
                .choose_multiple(&mut rng, spec.distractors.min(others.len()))
                .map(|c| (*c).clone()),
        );
        listed.shuffle(&mut rng);
        for c in listed {
            context.entries.push(ContextEntry {
                callsign: c,
                valid_from: Some(at - window),
                valid_to: Some(at + window),
            });
        }

        let words = u.transcript.tokens.len() as f64;
        let audio_len = (words * 0.35 + rng.gen_range(0.4..1.5)).min(30.0);
        let speech_len = words * 0.35;
        let snr = rng.gen_range(2.0..30.0);
        let mut r = SegmentRecord::new(&id, round3(audio_len), round3(speech_len));
        r.captured_at = Some(at);
        r.airport_icao = Some("LKPR".into());
        r.lattice = Some(noisy_lattice(&u.transcript.tokens, spec.noise, &airline_words, &mut rng));
        if spec.audio {
            r.audio = Some(AudioRef::Inline {
                sample_rate: AUDIO_SAMPLE_RATE,
                samples: synth_audio(audio_len, speech_len, snr, &mut rng),
            });
        } else {
            r.avg_snr = Some(round3(snr));
        }
        records.push(r);
        references.push(Reference {
            id,
            tagged: render_tagged(&u.transcript),
            role: u.role,
            english: u.english,
            callsign: code,
        });
    }

    let n_dialogues = (spec.utterances / 10).max(1);
    let dialogues = (0..n_dialogues)
        .map(|i| {
            let code = &pool[rng.gen_range(0..pool.len())];
            dialogue(format!("dlg{i:04}"), &full_form(code, &table), &mut rng)
        })
        .collect();
    Ok(SynthCorpus {
        records,
        references,
        dialogues,
        context,
    })
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Alternating controller/pilot exchange of two to four transmissions.
fn dialogue(id: String, callsign: &[String], rng: &mut ChaCha8Rng) -> Dialogue {
    let n = rng.gen_range(2..=4);
    let mut all = AnnotatedTranscript::default();
    for k in 0..n {
        let role = if k % 2 == 0 { Role::Atco } else { Role::Pilot };
        let u = english_utterance(role, callsign, rng);
        let off = all.tokens.len();
        all.entities.extend(
            u.transcript
                .entities
                .iter()
                .map(|e| EntitySpan::new(e.label, e.start + off, e.end + off)),
        );
        all.tokens.extend(u.transcript.tokens);
        all.turns.push(Turn::new(role, off, all.tokens.len()));
    }
    Dialogue {
        id,
        tagged: render_tagged(&all),
        turns: all.turns,
    }
}

/// Labelled soft-count vectors for language detection (1 = English).
pub fn bilingual_corpus(n: usize, seed: u64) -> Vec<(SoftCountVector, u8)> {
    let table = AirlineTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = callsign_pool(20, &table, &mut rng);
    (0..n)
        .map(|i| {
            let spoken = full_form(&pool[rng.gen_range(0..pool.len())], &table);
            let role = if rng.gen_bool(0.5) { Role::Atco } else { Role::Pilot };
            let english = i % 2 == 0;
            let u = if english {
                english_utterance(role, &spoken, &mut rng)
            } else {
                foreign_utterance(role, &spoken, &mut rng)
            };
            let tokens: Vec<Token> = u
                .transcript
                .tokens
                .iter()
                .map(|w| Token::new(w.clone(), rng.gen_range(0.6..=1.0)))
                .collect();
            let v = soft_counts(&tokens).expect("generated confidences are valid");
            (v, u8::from(english))
        })
        .collect()
}

/// Labelled term counts for role detection (1 = controller).
pub fn role_corpus(n: usize, seed: u64) -> Vec<(SoftCountVector, u8)> {
    let table = AirlineTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = callsign_pool(20, &table, &mut rng);
    (0..n)
        .map(|i| {
            let spoken = full_form(&pool[rng.gen_range(0..pool.len())], &table);
            let role = if i % 2 == 0 { Role::Atco } else { Role::Pilot };
            let u = english_utterance(role, &spoken, &mut rng);
            (term_counts(&u.transcript.tokens), u8::from(role == Role::Atco))
        })
        .collect()
}

/// Language model trained on the built-in bilingual corpus.
pub fn default_eld_model() -> LinearTextModel {
    static MODEL: OnceLock<LinearTextModel> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            train(ModelKind::Eld, &bilingual_corpus(400, 7), TrainConfig::default())
                .expect("built-in corpus has both classes")
        })
        .clone()
}

/// Role model trained on the built-in role corpus.
pub fn default_role_model() -> LinearTextModel {
    static MODEL: OnceLock<LinearTextModel> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            train(ModelKind::Role, &role_corpus(400, 7), TrainConfig::default())
                .expect("built-in corpus has both classes")
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::decode;
    use crate::metrics::wer;

    fn small(noise: f64) -> SynthSpec {
        SynthSpec {
            utterances: 30,
            noise,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_corpus(&small(0.3)).unwrap();
        let b = generate_corpus(&small(0.3)).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&SynthSpec { seed: 1, ..small(0.3) }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn zero_noise_lattices_are_the_reference() {
        let c = generate_corpus(&small(0.0)).unwrap();
        for (r, reference) in c.records.iter().zip(&c.references) {
            let lat = r.lattice.as_ref().unwrap();
            assert_eq!(lat.arcs().len(), lat.num_states() - 1);
            let best = decode(lat).unwrap();
            let truth = reference.annotation().unwrap().tokens;
            assert_eq!(wer(&truth, &best.best.tokens).1, 0.0);
        }
    }

    #[test]
    fn references_and_dialogues_are_valid() {
        let c = generate_corpus(&SynthSpec {
            non_english_fraction: 0.5,
            ..small(0.3)
        })
        .unwrap();
        assert!(c.references.iter().any(|r| !r.english));
        for r in &c.references {
            let a = r.annotation().unwrap();
            a.validate().unwrap();
            assert_eq!(a.spans(EntityLabel::Callsign).count(), 1);
        }
        for d in &c.dialogues {
            let a = d.annotation().unwrap();
            assert!(a.turns.len() >= 2);
            assert_eq!(a.turns.last().unwrap().end, a.tokens.len());
        }
        assert!(!c.context.context_at(c.records[0].captured_at).callsigns.is_empty());
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec { noise: 1.5, ..SynthSpec::default() }.validate().is_err());
        assert!(SynthSpec { utterances: 0, ..SynthSpec::default() }.validate().is_err());
        assert!(SynthSpec::from_json(r#"{"utterances": 5, "seed": 3}"#).is_ok());
        assert!(SynthSpec::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn audio_records_round_trip() {
        let c = generate_corpus(&SynthSpec {
            utterances: 2,
            audio: true,
            ..SynthSpec::default()
        })
        .unwrap();
        let line = c.records[0].to_json_line();
        let back = crate::model::parse_segment_record(&line).unwrap();
        assert_eq!(back, c.records[0]);
        assert!(matches!(back.audio, Some(AudioRef::Inline { .. })));
    }
}
