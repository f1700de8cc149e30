//! Per-stage runtime accounting.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    /// (stage, seconds) in execution order.
    pub stages: Vec<(String, f64)>,
    /// Seconds of audio processed.
    pub audio_len: f64,
}

impl StageTiming {
    pub fn new(audio_len: f64) -> Self {
        StageTiming {
            stages: Vec::new(),
            audio_len,
        }
    }

    pub fn push(&mut self, stage: impl Into<String>, seconds: f64) {
        self.stages.push((stage.into(), seconds));
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }

    pub fn percentages(&self) -> Vec<f64> {
        let total = self.total();
        self.stages.iter().map(|(_, s)| 100.0 * s / total).collect()
    }

    /// Processing time over audio duration; `None` without audio.
    pub fn rtf(&self) -> Option<f64> {
        (self.audio_len > 0.0).then(|| self.total() / self.audio_len)
    }

    pub fn contains(&self, stage: &str) -> bool {
        self.stages.iter().any(|(s, _)| s == stage)
    }

    /// Adds `other` stage-wise; stages missing here are appended.
    pub fn accumulate(&mut self, other: &StageTiming) {
        for (name, secs) in &other.stages {
            match self.stages.iter_mut().find(|(n, _)| n == name) {
                Some((_, s)) => *s += secs,
                None => self.stages.push((name.clone(), *secs)),
            }
        }
        self.audio_len += other.audio_len;
    }
}

/// Seconds and share per stage (two decimals), a total row and the
/// real-time factor.
pub fn timing_report(t: &StageTiming) -> String {
    let width = t.stages.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>10}  {:>7}", "stage", "seconds", "%");
    let total = t.total();
    for ((name, secs), pct) in t.stages.iter().zip(t.percentages()) {
        let _ = writeln!(out, "{name:<width$}  {secs:>10.3}  {pct:>7.2}");
    }
    let total_pct = if total > 0.0 { 100.0 } else { 0.0 };
    let _ = writeln!(out, "{:<width$}  {total:>10.3}  {total_pct:>7.2}", "total");
    match t.rtf() {
        Some(rtf) => {
            let _ = writeln!(out, "rtf {rtf:.3} ({total:.3} s / {:.3} s audio)", t.audio_len);
        }
        None => out.push_str("rtf n/a (no audio)\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stage_is_all_of_it() {
        let mut t = StageTiming::new(2.0);
        t.push("asr", 1.0);
        assert_eq!(t.percentages(), vec![100.0]);
        assert_eq!(t.rtf(), Some(0.5));
        let r = timing_report(&t);
        assert!(r.contains("100.00"));
        assert!(r.contains("rtf 0.500"));
    }

    #[test]
    fn accumulate_merges_by_name() {
        let mut a = StageTiming::new(1.0);
        a.push("vad", 1.0);
        let mut b = StageTiming::new(2.0);
        b.push("vad", 2.0);
        b.push("asr", 3.0);
        a.accumulate(&b);
        assert_eq!(a.stages, vec![("vad".into(), 3.0), ("asr".into(), 3.0)]);
        assert_eq!(a.audio_len, 3.0);
        assert_eq!(StageTiming::new(0.0).rtf(), None);
    }
}
