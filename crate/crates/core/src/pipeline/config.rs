//! Pipeline graph and per-job settings.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::model::ReasonCode;

/// Operation bound to a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    /// Validates the record and loads its audio.
    Preprocess,
    Vad {
        #[serde(default = "default_frame_ms")]
        frame_ms: u32,
        #[serde(default = "default_threshold_db")]
        threshold_db: f64,
    },
    Snr,
    /// Builds the biasing transducer from the surveillance context.
    ExpandContext,
    /// Biases the lattice (when a transducer exists) and takes the best path.
    Decode,
    /// Word posteriors on the decoded lattice.
    Confidence,
    /// Speaker count from text diarization of the transcript.
    Diarize,
    Eld,
    /// Entity tagging and callsign extraction.
    Entities,
    Quality,
    Condition { checks: Vec<Check> },
}

fn default_frame_ms() -> u32 {
    crate::signal::DEFAULT_FRAME_MS
}

fn default_threshold_db() -> f64 {
    crate::signal::DEFAULT_THRESHOLD_DB
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Preprocess => "preprocess",
            Op::Vad { .. } => "vad",
            Op::Snr => "snr",
            Op::ExpandContext => "expand_context",
            Op::Decode => "decode",
            Op::Confidence => "confidence",
            Op::Diarize => "diarize",
            Op::Eld => "eld",
            Op::Entities => "entities",
            Op::Quality => "quality",
            Op::Condition { .. } => "condition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

impl Cmp {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Cmp::Ge => value >= threshold,
            Cmp::Gt => value > threshold,
            Cmp::Le => value <= threshold,
            Cmp::Lt => value < threshold,
        }
    }
}

/// A literal number or the name of a [`JobSettings`] field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Setting(String),
}

/// Passes when `field cmp threshold`; otherwise the job fails with `reason`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub field: String,
    pub cmp: Cmp,
    pub threshold: Threshold,
    pub reason: ReasonCode,
}

/// Record fields a condition may test.
pub const CONDITION_FIELDS: [&str; 8] = [
    "audio_len",
    "speech_len",
    "avg_snr",
    "num_spk",
    "avg_word_conf",
    "wrd_cnt",
    "eld_score",
    "quality_score",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    #[serde(flatten)]
    pub op: Op,
}

impl Block {
    pub fn new(name: impl Into<String>, op: Op) -> Self {
        Block { name: name.into(), op }
    }
}

fn default_parallelism() -> usize {
    1
}

/// Block graph. The first block is the source; every other block must be
/// reachable from it. Without a `links` key the blocks form a chain in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawConfig")]
pub struct PipelineConfig {
    pub blocks: Vec<Block>,
    pub links: Vec<(String, String)>,
    pub parallelism: usize,
}

#[derive(Deserialize)]
struct RawConfig {
    blocks: Vec<Block>,
    links: Option<Vec<(String, String)>>,
    #[serde(default = "default_parallelism")]
    parallelism: usize,
}

impl From<RawConfig> for PipelineConfig {
    fn from(raw: RawConfig) -> Self {
        match raw.links {
            Some(links) => PipelineConfig {
                blocks: raw.blocks,
                links,
                parallelism: raw.parallelism,
            },
            None => PipelineConfig {
                parallelism: raw.parallelism,
                ..PipelineConfig::chain(raw.blocks)
            },
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.execution_order()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Linear chain of `blocks` in the given order.
    pub fn chain(blocks: Vec<Block>) -> Self {
        let links = blocks
            .windows(2)
            .map(|w| (w[0].name.clone(), w[1].name.clone()))
            .collect();
        PipelineConfig {
            blocks,
            links,
            parallelism: default_parallelism(),
        }
    }

    /// Validates the graph and returns block indices in execution order:
    /// topological, ties broken by declaration order.
    pub fn execution_order(&self) -> Result<Vec<usize>, PipelineError> {
        if self.blocks.is_empty() {
            return Err(PipelineError::Config("pipeline has no blocks".into()));
        }
        if self.parallelism == 0 {
            return Err(PipelineError::Config("parallelism must be at least 1".into()));
        }
        let mut index = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if index.insert(b.name.as_str(), i).is_some() {
                return Err(PipelineError::Config(format!("duplicate block {:?}", b.name)));
            }
            if let Op::Condition { checks } = &b.op {
                for c in checks {
                    if !CONDITION_FIELDS.contains(&c.field.as_str()) {
                        return Err(PipelineError::UnknownField(c.field.clone()));
                    }
                    if let Threshold::Setting(s) = &c.threshold {
                        if !JobSettings::THRESHOLDS.contains(&s.as_str()) {
                            return Err(PipelineError::UnknownField(s.clone()));
                        }
                    }
                }
            }
        }
        let n = self.blocks.len();
        let mut succ = vec![BTreeSet::new(); n];
        let mut indeg = vec![0usize; n];
        for (a, b) in &self.links {
            let ia = *index.get(a.as_str()).ok_or_else(|| PipelineError::UnknownBlock(a.clone()))?;
            let ib = *index.get(b.as_str()).ok_or_else(|| PipelineError::UnknownBlock(b.clone()))?;
            if succ[ia].insert(ib) {
                indeg[ib] += 1;
            }
        }

        let mut order = Vec::with_capacity(n);
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() < n {
            let cyclic = (0..n)
                .filter(|&i| indeg[i] > 0)
                .map(|i| self.blocks[i].name.clone())
                .collect();
            return Err(PipelineError::ConfigCycle(cyclic));
        }

        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &succ[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| !seen[i]) {
            return Err(PipelineError::Unreachable(self.blocks[i].name.clone()));
        }
        Ok(order)
    }
}

impl Default for PipelineConfig {
    /// Preprocess, VAD, SNR gate, length gate, biasing and decoding,
    /// confidences, diarization, language gate, entities, quality.
    fn default() -> Self {
        let check = |field: &str, cmp, setting: &str, reason| Check {
            field: field.into(),
            cmp,
            threshold: Threshold::Setting(setting.into()),
            reason,
        };
        PipelineConfig::chain(vec![
            Block::new("preprocess", Op::Preprocess),
            Block::new(
                "vad",
                Op::Vad {
                    frame_ms: default_frame_ms(),
                    threshold_db: default_threshold_db(),
                },
            ),
            Block::new("snr", Op::Snr),
            Block::new(
                "snr_gate",
                Op::Condition {
                    checks: vec![check("avg_snr", Cmp::Ge, "min_snr_db", ReasonCode::TooNoisy)],
                },
            ),
            Block::new(
                "length_gate",
                Op::Condition {
                    checks: vec![
                        check("audio_len", Cmp::Ge, "min_len_s", ReasonCode::TooShort),
                        check("audio_len", Cmp::Le, "max_len_s", ReasonCode::TooLong),
                    ],
                },
            ),
            Block::new("expand_context", Op::ExpandContext),
            Block::new("decode", Op::Decode),
            Block::new("confidence", Op::Confidence),
            Block::new("diarize", Op::Diarize),
            Block::new("eld", Op::Eld),
            Block::new(
                "eld_gate",
                Op::Condition {
                    checks: vec![check("eld_score", Cmp::Ge, "min_eld_score", ReasonCode::NonEnglish)],
                },
            ),
            Block::new("entities", Op::Entities),
            Block::new("quality", Op::Quality),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AudioFormat {
    #[default]
    Wav,
    Pcm16,
}

/// Per-job thresholds and input options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobSettings {
    pub audio_format: AudioFormat,
    pub min_len_s: f64,
    pub max_len_s: f64,
    pub min_snr_db: f64,
    pub min_eld_score: f64,
    pub asr_language: String,
}

impl Default for JobSettings {
    fn default() -> Self {
        JobSettings {
            audio_format: AudioFormat::Wav,
            min_len_s: 1.0,
            max_len_s: 60.0,
            min_snr_db: 5.0,
            min_eld_score: 0.5,
            asr_language: "en".into(),
        }
    }
}

impl JobSettings {
    /// Settings a condition threshold may name.
    pub const THRESHOLDS: [&'static str; 4] = ["min_len_s", "max_len_s", "min_snr_db", "min_eld_score"];

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let s: JobSettings = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.min_len_s < self.max_len_s) {
            return Err(PipelineError::Config(format!(
                "min_len_s {} must be below max_len_s {}",
                self.min_len_s, self.max_len_s
            )));
        }
        if !(0.0..=1.0).contains(&self.min_eld_score) {
            return Err(PipelineError::Config(format!(
                "min_eld_score {} outside [0, 1]",
                self.min_eld_score
            )));
        }
        if !self.min_snr_db.is_finite() {
            return Err(PipelineError::Config("min_snr_db must be finite".into()));
        }
        Ok(())
    }

    pub fn threshold(&self, name: &str) -> Option<f64> {
        match name {
            "min_len_s" => Some(self.min_len_s),
            "max_len_s" => Some(self.max_len_s),
            "min_snr_db" => Some(self.min_snr_db),
            "min_eld_score" => Some(self.min_eld_score),
            _ => None,
        }
    }
}
