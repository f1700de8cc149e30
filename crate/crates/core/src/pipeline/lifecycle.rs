//! Annotation queue lifecycle.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemState {
    QueuedUntouched,
    QueuedAnnotated,
    Annotated,
    Finished,
    Dropped,
    Deleted,
}

impl ItemState {
    pub const ALL: [ItemState; 6] = [
        ItemState::QueuedUntouched,
        ItemState::QueuedAnnotated,
        ItemState::Annotated,
        ItemState::Finished,
        ItemState::Dropped,
        ItemState::Deleted,
    ];

    pub fn is_queued(self) -> bool {
        matches!(self, ItemState::QueuedUntouched | ItemState::QueuedAnnotated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LifecycleEvent {
    Push { at: DateTime<Utc> },
    SaveAnnotation,
    RecheckOk,
    ThumbDown { at: DateTime<Utc> },
    MarkAnonymize { at: DateTime<Utc> },
    AgeTick { now: DateTime<Utc> },
    Export,
    Archive,
}

impl LifecycleEvent {
    pub fn name(&self) -> &'static str {
        match self {
            LifecycleEvent::Push { .. } => "push",
            LifecycleEvent::SaveAnnotation => "save_annotation",
            LifecycleEvent::RecheckOk => "recheck_ok",
            LifecycleEvent::ThumbDown { .. } => "thumb_down",
            LifecycleEvent::MarkAnonymize { .. } => "mark_anonymize",
            LifecycleEvent::AgeTick { .. } => "age_tick",
            LifecycleEvent::Export => "export",
            LifecycleEvent::Archive => "archive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifecycleConfig {
    /// Thumbs-down votes that drop an untouched recording.
    pub thumbs_down_limit: u32,
    /// Dropped recordings are deleted once older than this.
    pub delete_after_days: i64,
    /// Untouched recordings older than this are dropped.
    pub stale_after_days: i64,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        LifecycleConfig {
            thumbs_down_limit: 3,
            delete_after_days: 7,
            stale_after_days: 30,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LifecycleError {
    #[error("{event} is not allowed in state {state:?}")]
    IllegalTransition { state: ItemState, event: &'static str },
    #[error("recording {0:?} was never pushed")]
    UnknownItem(String),
    #[error("recording {0:?} is already queued")]
    AlreadyPushed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub recording: String,
    pub state: ItemState,
    pub thumbs_down: u32,
    pub anonymize: bool,
    pub queued_at: DateTime<Utc>,
    pub dropped_at: Option<DateTime<Utc>>,
}

impl AnnotationItem {
    /// A freshly pushed, untouched item.
    pub fn pushed(recording: impl Into<String>, at: DateTime<Utc>) -> Self {
        AnnotationItem {
            recording: recording.into(),
            state: ItemState::QueuedUntouched,
            thumbs_down: 0,
            anonymize: false,
            queued_at: at,
            dropped_at: None,
        }
    }

    fn drop_at(mut self, at: DateTime<Utc>) -> Self {
        self.state = ItemState::Dropped;
        self.dropped_at = Some(at);
        self
    }
}

/// Applies one event. Items come into existence through
/// [`AnnotationItem::pushed`], so `Push` on an existing item is illegal.
pub fn lifecycle_step(
    item: &AnnotationItem,
    event: &LifecycleEvent,
    cfg: &LifecycleConfig,
) -> Result<AnnotationItem, LifecycleError> {
    use ItemState::*;
    let illegal = || LifecycleError::IllegalTransition {
        state: item.state,
        event: event.name(),
    };
    let mut next = item.clone();
    match (item.state, event) {
        (_, LifecycleEvent::AgeTick { now }) => match item.state {
            Dropped if item.dropped_at.is_some_and(|d| *now - d > Duration::days(cfg.delete_after_days)) => {
                next.state = Deleted;
            }
            QueuedUntouched if *now - item.queued_at > Duration::days(cfg.stale_after_days) => {
                next = next.drop_at(*now);
            }
            _ => {}
        },
        (QueuedUntouched | QueuedAnnotated, LifecycleEvent::SaveAnnotation) => next.state = QueuedAnnotated,
        (QueuedAnnotated, LifecycleEvent::RecheckOk) => next.state = Annotated,
        (QueuedUntouched | QueuedAnnotated, LifecycleEvent::ThumbDown { at }) => {
            next.thumbs_down += 1;
            if item.state == QueuedUntouched && next.thumbs_down >= cfg.thumbs_down_limit {
                next = next.drop_at(*at);
            }
        }
        (QueuedUntouched | QueuedAnnotated, LifecycleEvent::MarkAnonymize { at }) => {
            next.anonymize = true;
            next = next.drop_at(*at);
        }
        (Annotated, LifecycleEvent::Export) => next.state = Finished,
        (Finished, LifecycleEvent::Archive) => next.state = Deleted,
        _ => return Err(illegal()),
    }
    Ok(next)
}

/// Items keyed by recording, driven by a stream of events.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LifecycleStore {
    pub config: LifecycleConfig,
    pub items: BTreeMap<String, AnnotationItem>,
}

/// One line of a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEvent {
    pub recording: String,
    #[serde(flatten)]
    pub event: LifecycleEvent,
}

impl LifecycleStore {
    pub fn new(config: LifecycleConfig) -> Self {
        LifecycleStore {
            config,
            items: BTreeMap::new(),
        }
    }

    pub fn apply(&mut self, recording: &str, event: &LifecycleEvent) -> Result<&AnnotationItem, LifecycleError> {
        if let LifecycleEvent::Push { at } = event {
            if self.items.contains_key(recording) {
                return Err(LifecycleError::AlreadyPushed(recording.to_string()));
            }
            let item = AnnotationItem::pushed(recording, *at);
            return Ok(self.items.entry(recording.to_string()).or_insert(item));
        }
        let item = self
            .items
            .get_mut(recording)
            .ok_or_else(|| LifecycleError::UnknownItem(recording.to_string()))?;
        *item = lifecycle_step(item, event, &self.config)?;
        Ok(item)
    }

    pub fn count(&self, state: ItemState) -> usize {
        self.items.values().filter(|i| i.state == state).count()
    }
}

/// Violation found while checking event sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    pub sequence: Vec<&'static str>,
    pub message: String,
}

/// Event alphabet used by [`check_sequences`]; time-carrying events use `at`.
pub fn event_alphabet(at: DateTime<Utc>) -> [LifecycleEvent; 7] {
    [
        LifecycleEvent::SaveAnnotation,
        LifecycleEvent::RecheckOk,
        LifecycleEvent::ThumbDown { at },
        LifecycleEvent::MarkAnonymize { at },
        LifecycleEvent::AgeTick { now: at },
        LifecycleEvent::Export,
        LifecycleEvent::Archive,
    ]
}

/// Summary of an exhaustive sequence check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceCheck {
    pub sequences: u64,
    pub violations: Vec<InvariantViolation>,
}

/// Walks every event sequence of length up to `max_len` from a freshly
/// pushed item, with the clock advancing `step_days` per event, and checks
/// the lifecycle invariants: deleted is absorbing, the thumbs-down counter
/// never decreases, and finished is entered only from annotated.
/// `first` restricts the first event to the given alphabet index.
pub fn check_sequences(cfg: &LifecycleConfig, max_len: usize, step_days: i64, first: Option<usize>) -> SequenceCheck {
    let start = DateTime::<Utc>::from_timestamp(1_700_000_000, 0).expect("valid timestamp");
    let item = AnnotationItem::pushed("rec", start);
    let mut out = SequenceCheck::default();
    let mut path = Vec::new();
    walk(cfg, &item, false, 0, max_len, step_days, start, first, &mut path, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    cfg: &LifecycleConfig,
    item: &AnnotationItem,
    seen_annotated: bool,
    depth: usize,
    max_len: usize,
    step_days: i64,
    start: DateTime<Utc>,
    first: Option<usize>,
    path: &mut Vec<&'static str>,
    out: &mut SequenceCheck,
) {
    out.sequences += 1;
    if depth == max_len {
        return;
    }
    let at = start + Duration::days(step_days * (depth as i64 + 1));
    for (k, event) in event_alphabet(at).iter().enumerate() {
        if depth == 0 && first.is_some_and(|f| f != k) {
            continue;
        }
        path.push(event.name());
        let mut fail = |message: String| {
            out.violations.push(InvariantViolation {
                sequence: path.clone(),
                message,
            })
        };
        match lifecycle_step(item, event, cfg) {
            Ok(next) => {
                if item.state == ItemState::Deleted && next.state != ItemState::Deleted {
                    fail(format!("left Deleted for {:?}", next.state));
                }
                if next.thumbs_down < item.thumbs_down {
                    fail("thumbs_down decreased".into());
                }
                if next.state == ItemState::Finished && item.state != ItemState::Finished && item.state != ItemState::Annotated {
                    fail(format!("entered Finished from {:?}", item.state));
                }
                if next.state == ItemState::Finished && !seen_annotated && item.state != ItemState::Annotated {
                    fail("reached Finished without Annotated".into());
                }
                let annotated = seen_annotated || next.state == ItemState::Annotated;
                walk(cfg, &next, annotated, depth + 1, max_len, step_days, start, first, path, out);
            }
            Err(LifecycleError::IllegalTransition { .. }) => out.sequences += 1,
            Err(e) => fail(format!("unexpected error {e}")),
        }
        path.pop();
    }
}
