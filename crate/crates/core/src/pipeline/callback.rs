//! Job progress and completion callbacks.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ReasonCode;

/// Delivery attempts after the first one fails.
pub const DELIVERY_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Progress,
    Ok,
    Error,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        self != EventKind::Progress
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallbackEvent {
    pub job_id: String,
    pub stage: String,
    pub kind: EventKind,
    pub reason: Option<ReasonCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
    pub ts: DateTime<Utc>,
}

impl CallbackEvent {
    pub fn new(job_id: &str, stage: &str, kind: EventKind) -> Self {
        CallbackEvent {
            job_id: job_id.to_string(),
            stage: stage.to_string(),
            kind,
            reason: None,
            payload: None,
            ts: Utc::now(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SinkError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("http delivery failed: {0}")]
    Http(String),
}

/// Destination for callback events. Implementations must serialize
/// concurrent emits themselves.
pub trait CallbackSink: Send + Sync {
    fn emit(&self, event: &CallbackEvent) -> Result<(), SinkError>;
}

/// Emits with retries; a sink that keeps failing is logged, never fatal.
pub fn deliver(sink: &dyn CallbackSink, event: &CallbackEvent) {
    for attempt in 0..=DELIVERY_RETRIES {
        match sink.emit(event) {
            Ok(()) => return,
            Err(e) if attempt == DELIVERY_RETRIES => {
                log::error!(
                    "dropping {:?} callback for job {} after {} attempts: {e}",
                    event.kind,
                    event.job_id,
                    attempt + 1
                );
            }
            Err(e) => log::warn!("callback delivery attempt {} failed: {e}", attempt + 1),
        }
    }
}

/// Appends one JSON object per line.
pub struct JsonlFileSink {
    file: Mutex<File>,
}

impl JsonlFileSink {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SinkError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlFileSink { file: Mutex::new(file) })
    }
}

impl CallbackSink for JsonlFileSink {
    fn emit(&self, event: &CallbackEvent) -> Result<(), SinkError> {
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}

/// POSTs each event as JSON to a fixed URL.
pub struct HttpSink {
    url: String,
    agent: ureq::Agent,
}

impl HttpSink {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(10)))
            .build()
            .into();
        HttpSink { url: url.into(), agent }
    }
}

impl CallbackSink for HttpSink {
    fn emit(&self, event: &CallbackEvent) -> Result<(), SinkError> {
        self.agent
            .post(&self.url)
            .send_json(event)
            .map(|_| ())
            .map_err(|e| SinkError::Http(e.to_string()))
    }
}

/// Collects events in memory.
#[derive(Default)]
pub struct MemorySink {
    events: Mutex<Vec<CallbackEvent>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<CallbackEvent> {
        self.events.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn for_job(&self, job_id: &str) -> Vec<CallbackEvent> {
        self.events().into_iter().filter(|e| e.job_id == job_id).collect()
    }
}

impl CallbackSink for MemorySink {
    fn emit(&self, event: &CallbackEvent) -> Result<(), SinkError> {
        self.events.lock().unwrap_or_else(|p| p.into_inner()).push(event.clone());
        Ok(())
    }
}

/// Discards every event.
pub struct NullSink;

impl CallbackSink for NullSink {
    fn emit(&self, _: &CallbackEvent) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Opens a sink from a spec: `http://` or `https://` URLs post, `-` or
/// `none` discards, anything else is a JSONL file path.
pub fn open_sink(spec: &str) -> Result<Box<dyn CallbackSink>, SinkError> {
    if spec.starts_with("http://") || spec.starts_with("https://") {
        Ok(Box::new(HttpSink::new(spec)))
    } else if spec == "-" || spec == "none" {
        Ok(Box::new(NullSink))
    } else {
        Ok(Box::new(JsonlFileSink::open(spec)?))
    }
}
