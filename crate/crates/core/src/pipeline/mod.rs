//! Config-driven job runner: a block graph with gate conditions, progress
//! and terminal callbacks, per-stage timing, and the annotation lifecycle.

mod callback;
mod config;
mod lifecycle;
mod timing;

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

use crate::eld::{soft_counts, EldError, LinearTextModel};
use crate::lattice::{build_biasing_fst, compose_bias, BiasingFst, Lattice};
use crate::model::{
    render_tagged, AudioRef, ContextList, ContextStore, EntityLabel, ReasonCode, SegmentRecord, Status,
    Token,
};
use crate::quality::{quality_score, QualityError};
use crate::signal::{self, Audio, VadSegment};
use crate::textnorm::{callsign_code, expand_callsign, expansions_to_ngrams, NgramMode};
use crate::understand::{diarize_text, tag_entities, PhraseologyGrammar};

pub use callback::{
    deliver, open_sink, CallbackEvent, CallbackSink, EventKind, HttpSink, JsonlFileSink, MemorySink, NullSink,
    SinkError, DELIVERY_RETRIES,
};
pub use config::{
    AudioFormat, Block, Check, Cmp, JobSettings, Op, PipelineConfig, Threshold, CONDITION_FIELDS,
};
pub use lifecycle::{
    check_sequences, event_alphabet, lifecycle_step, AnnotationItem, InvariantViolation, ItemState,
    LifecycleConfig, LifecycleError, LifecycleEvent, LifecycleStore, ReplayEvent, SequenceCheck,
};
pub use timing::{timing_report, StageTiming};

/// Default per-token discount used when boosting context callsigns.
pub const DEFAULT_DISCOUNT: f64 = -0.5;
/// Sample rate assumed for headerless PCM input.
pub const PCM_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("condition references unknown field {0:?}")]
    UnknownField(String),
    #[error("link references unknown block {0:?}")]
    UnknownBlock(String),
    #[error("block graph has a cycle through {0:?}")]
    ConfigCycle(Vec<String>),
    #[error("block {0:?} is not reachable from the source block")]
    Unreachable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Models and tables shared read-only by every job.
#[derive(Debug, Clone)]
pub struct Resources {
    pub grammar: PhraseologyGrammar,
    pub eld_model: LinearTextModel,
    pub context: ContextStore,
    pub discount: f64,
    pub mode: NgramMode,
}

impl Resources {
    /// Built-in grammar, no context and a language model trained on the
    /// generated bilingual corpus.
    pub fn builtin() -> Self {
        Resources {
            grammar: PhraseologyGrammar::default(),
            eld_model: crate::synth::default_eld_model(),
            context: ContextStore::default(),
            discount: DEFAULT_DISCOUNT,
            mode: NgramMode::Ngram,
        }
    }
}

/// Final state of one job.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub record: SegmentRecord,
    pub timing: StageTiming,
    pub terminal: CallbackEvent,
}

impl JobOutcome {
    pub fn is_ok(&self) -> bool {
        self.terminal.kind == EventKind::Ok
    }
}

/// Working state confined to one job.
struct JobState {
    audio: Option<Audio>,
    segments: Option<Vec<VadSegment>>,
    context: ContextList,
    fst: Option<BiasingFst>,
    decoded_lattice: Option<Lattice>,
    decoded_arcs: Vec<usize>,
}

struct Failure {
    reason: ReasonCode,
    detail: String,
}

impl Failure {
    fn new(reason: ReasonCode, detail: impl Into<String>) -> Self {
        Failure {
            reason,
            detail: detail.into(),
        }
    }

    fn missing(field: &str) -> Self {
        Failure::new(ReasonCode::MissingField, format!("{field} is not set"))
    }
}

/// Runs one record through the block graph in execution order.
///
/// Configuration problems are returned before anything executes. Every
/// other failure ends the job with a terminal ERROR event; blocks after
/// the failing one neither run nor get timing entries.
pub fn run_job(
    record: SegmentRecord,
    cfg: &PipelineConfig,
    js: &JobSettings,
    resources: &Resources,
    sink: &dyn CallbackSink,
) -> Result<JobOutcome, PipelineError> {
    let order = cfg.execution_order()?;
    js.validate()?;
    Ok(execute(record, cfg, &order, js, resources, sink))
}

/// Runs every record with `cfg.parallelism` workers. Results keep the
/// input order.
pub fn run_batch(
    records: Vec<SegmentRecord>,
    cfg: &PipelineConfig,
    js: &JobSettings,
    resources: &Resources,
    sink: &dyn CallbackSink,
) -> Result<Vec<JobOutcome>, PipelineError> {
    let order = cfg.execution_order()?;
    js.validate()?;
    Ok(crate::par::map(&records, cfg.parallelism, |r| {
        execute(r.clone(), cfg, &order, js, resources, sink)
    }))
}

fn execute(
    mut record: SegmentRecord,
    cfg: &PipelineConfig,
    order: &[usize],
    js: &JobSettings,
    resources: &Resources,
    sink: &dyn CallbackSink,
) -> JobOutcome {
    record.status = Status::Processing;
    let job_id = record.id.clone();
    let mut timing = StageTiming::new(0.0);
    let mut state = JobState {
        audio: None,
        segments: None,
        context: resources.context.context_at(record.captured_at),
        fst: None,
        decoded_lattice: None,
        decoded_arcs: Vec::new(),
    };
    let mut last = String::new();
    for &i in order {
        let block = &cfg.blocks[i];
        let start = Instant::now();
        let result = run_block(&block.op, &mut record, &mut state, js, resources);
        timing.push(block.name.clone(), start.elapsed().as_secs_f64());
        last.clone_from(&block.name);
        if let Err(f) = result {
            log::info!("job {job_id} stopped at {}: {} ({})", block.name, f.reason, f.detail);
            record.status = Status::Rejected(f.reason);
            timing.audio_len = record.audio_len;
            let mut ev = CallbackEvent::new(&job_id, &block.name, EventKind::Error);
            ev.reason = Some(f.reason);
            ev.payload = Some(serde_json::json!({ "detail": f.detail }));
            deliver(sink, &ev);
            return JobOutcome {
                record,
                timing,
                terminal: ev,
            };
        }
        deliver(sink, &CallbackEvent::new(&job_id, &block.name, EventKind::Progress));
    }
    record.status = Status::Ok;
    timing.audio_len = record.audio_len;
    let mut ev = CallbackEvent::new(&job_id, &last, EventKind::Ok);
    ev.payload = Some(serde_json::json!({ "quality_score": record.quality_score }));
    deliver(sink, &ev);
    JobOutcome {
        record,
        timing,
        terminal: ev,
    }
}

fn run_block(
    op: &Op,
    record: &mut SegmentRecord,
    state: &mut JobState,
    js: &JobSettings,
    res: &Resources,
) -> Result<(), Failure> {
    match op {
        Op::Preprocess => preprocess(record, state, js),
        Op::Vad { frame_ms, threshold_db } => {
            if let Some(audio) = &state.audio {
                let segs = signal::vad(audio, *frame_ms, *threshold_db)
                    .map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?;
                record.speech_len = signal::speech_len(&segs).min(record.audio_len);
                state.segments = Some(segs);
            }
            Ok(())
        }
        Op::Snr => {
            match (&state.audio, &state.segments) {
                (Some(audio), Some(segs)) => {
                    let snr = signal::estimate_snr(audio, segs)
                        .map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?;
                    record.avg_snr = Some(snr);
                }
                _ if record.avg_snr.is_some() => {}
                _ => return Err(Failure::missing("avg_snr")),
            }
            Ok(())
        }
        Op::ExpandContext => {
            let mut verbalizations = Vec::new();
            for code in &state.context.callsigns {
                match expand_callsign(code, &res.grammar.airlines) {
                    Ok(e) => verbalizations.extend(e.verbalizations),
                    Err(e) => log::warn!("skipping context callsign {code}: {e}"),
                }
            }
            let sequences = expansions_to_ngrams(&verbalizations, res.mode);
            state.fst = if sequences.is_empty() {
                None
            } else {
                Some(
                    build_biasing_fst(&sequences, res.discount)
                        .map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?,
                )
            };
            Ok(())
        }
        Op::Decode => {
            let lattice = record
                .lattice
                .as_ref()
                .ok_or_else(|| Failure::new(ReasonCode::NoHypothesis, "record has no lattice"))?;
            let lattice = match &state.fst {
                Some(fst) => compose_bias(lattice, fst),
                None => lattice.clone(),
            };
            let best = lattice
                .best_path()
                .map_err(|e| Failure::new(ReasonCode::NoHypothesis, e.to_string()))?;
            record.transcript = Some(best.tokens.iter().map(|w| Token::new(w.clone(), 1.0)).collect());
            record.wrd_cnt = best.tokens.len() as u32;
            state.decoded_arcs = best.arcs;
            state.decoded_lattice = Some(lattice);
            Ok(())
        }
        Op::Confidence => {
            let lattice = state.decoded_lattice.as_ref().ok_or_else(|| Failure::missing("transcript"))?;
            let post = lattice
                .word_posteriors()
                .map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?;
            let tokens = record.transcript.as_mut().ok_or_else(|| Failure::missing("transcript"))?;
            for (t, &a) in tokens.iter_mut().zip(&state.decoded_arcs) {
                t.conf = post[a].clamp(0.0, 1.0);
            }
            record.avg_word_conf = (!tokens.is_empty())
                .then(|| tokens.iter().map(|t| t.conf).sum::<f64>() / tokens.len() as f64);
            Ok(())
        }
        Op::Diarize => {
            let words = transcript_words(record);
            let roles: BTreeSet<_> = diarize_text(&words, &res.grammar).into_iter().map(|t| t.role).collect();
            record.num_spk = Some((roles.len() as u32).max(1));
            Ok(())
        }
        Op::Eld => {
            let tokens = record.transcript.as_deref().ok_or_else(|| Failure::missing("transcript"))?;
            let v = soft_counts(tokens).map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?;
            let score = res.eld_model.score(&v).map_err(|e| match e {
                EldError::EmptyEvidence => Failure::new(ReasonCode::NoEvidence, e.to_string()),
                e => Failure::new(ReasonCode::StageFailed, e.to_string()),
            })?;
            record.eld_score = Some(score);
            Ok(())
        }
        Op::Entities => {
            let words = transcript_words(record);
            let tagged = tag_entities(&words, &res.grammar, Some(&state.context));
            record.callsign = tagged
                .spans(EntityLabel::Callsign)
                .find_map(|s| callsign_code(tagged.span_tokens(s), &res.grammar.airlines));
            record.tagged = Some(render_tagged(&tagged));
            Ok(())
        }
        Op::Quality => {
            let q = quality_score(record).map_err(|e| match e {
                QualityError::MissingField(_) => Failure::new(ReasonCode::MissingField, e.to_string()),
                e => Failure::new(ReasonCode::StageFailed, e.to_string()),
            })?;
            record.quality_score = Some(q.total);
            Ok(())
        }
        Op::Condition { checks } => {
            for c in checks {
                let value = field_value(record, &c.field).ok_or_else(|| Failure::missing(&c.field))?;
                let threshold = match &c.threshold {
                    Threshold::Value(v) => *v,
                    Threshold::Setting(s) => js.threshold(s).ok_or_else(|| Failure::missing(s))?,
                };
                if !c.cmp.holds(value, threshold) {
                    return Err(Failure::new(
                        c.reason,
                        format!("{} = {value} fails {:?} {threshold}", c.field, c.cmp),
                    ));
                }
            }
            Ok(())
        }
    }
}

fn preprocess(record: &mut SegmentRecord, state: &mut JobState, js: &JobSettings) -> Result<(), Failure> {
    let checked = record
        .clone()
        .normalized()
        .map_err(|e| Failure::new(ReasonCode::StageFailed, e.to_string()))?;
    *record = checked;
    let audio = match &record.audio {
        None => None,
        Some(AudioRef::Inline { sample_rate, samples }) => Some(Audio::from_i16(*sample_rate, samples)),
        Some(AudioRef::Path(p)) => Some(match js.audio_format {
            AudioFormat::Wav => Audio::read_wav(p).map_err(|e| Failure::new(ReasonCode::StageFailed, format!("{p}: {e}")))?,
            AudioFormat::Pcm16 => {
                let bytes = std::fs::read(p).map_err(|e| Failure::new(ReasonCode::StageFailed, format!("{p}: {e}")))?;
                let samples: Vec<i16> = bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
                Audio::from_i16(PCM_SAMPLE_RATE, &samples)
            }
        }),
    };
    if let Some(a) = &audio {
        if a.samples.is_empty() {
            return Err(Failure::new(ReasonCode::StageFailed, "audio contains no samples"));
        }
        record.audio_len = a.duration();
        record.speech_len = record.speech_len.min(record.audio_len);
    }
    state.audio = audio;
    Ok(())
}

fn transcript_words(record: &SegmentRecord) -> Vec<String> {
    record
        .transcript
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|t| t.word.clone())
        .collect()
}

fn field_value(r: &SegmentRecord, field: &str) -> Option<f64> {
    match field {
        "audio_len" => Some(r.audio_len),
        "speech_len" => Some(r.speech_len),
        "avg_snr" => r.avg_snr,
        "num_spk" => r.num_spk.map(f64::from),
        "avg_word_conf" => r.avg_word_conf,
        "wrd_cnt" => Some(f64::from(r.wrd_cnt)),
        "eld_score" => r.eld_score,
        "quality_score" => r.quality_score,
        _ => None,
    }
}
