//! Recording quality score, ranking and annotation-batch selection.

use std::cmp::Ordering;
use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ReasonCode, SegmentRecord, Status, MAX_SNR_DB, MAX_SPEAKERS, MIN_SPEAKERS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QualityError {
    #[error("missing field(s): {}", .0.join(", "))]
    MissingField(Vec<&'static str>),
    #[error("audio_len must be positive")]
    ZeroAudioLen,
}

/// Raw inputs of the score. Values are clamped to their valid ranges
/// before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityInputs {
    pub avg_snr: f64,
    pub num_spk: u32,
    pub speech_len: f64,
    pub audio_len: f64,
    pub eld_score: f64,
    pub avg_word_conf: f64,
    pub wrd_cnt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QualityBreakdown {
    pub snr: f64,
    pub speakers: f64,
    pub speech_ratio: f64,
    pub eld: f64,
    pub confidence: f64,
    pub words: f64,
    pub total: f64,
}

impl QualityInputs {
    pub fn from_record(r: &SegmentRecord) -> Result<Self, QualityError> {
        let mut missing = Vec::new();
        if r.avg_snr.is_none() {
            missing.push("avg_snr");
        }
        if r.num_spk.is_none() {
            missing.push("num_spk");
        }
        if r.eld_score.is_none() {
            missing.push("eld_score");
        }
        if r.avg_word_conf.is_none() {
            missing.push("avg_word_conf");
        }
        if !missing.is_empty() {
            return Err(QualityError::MissingField(missing));
        }
        Ok(QualityInputs {
            avg_snr: r.avg_snr.unwrap_or_default(),
            num_spk: r.num_spk.unwrap_or_default(),
            speech_len: r.speech_len,
            audio_len: r.audio_len,
            eld_score: r.eld_score.unwrap_or_default(),
            avg_word_conf: r.avg_word_conf.unwrap_or_default(),
            wrd_cnt: r.wrd_cnt,
        })
    }

    pub fn score(&self) -> Result<QualityBreakdown, QualityError> {
        if !(self.audio_len > 0.0) {
            return Err(QualityError::ZeroAudioLen);
        }
        let ln_e = |x: f64| (x + E).ln();
        let snr = ln_e(self.avg_snr.clamp(0.0, MAX_SNR_DB));
        let speakers = ln_e(f64::from(self.num_spk.clamp(MIN_SPEAKERS, MAX_SPEAKERS)));
        let speech_ratio = ln_e((self.speech_len / self.audio_len).clamp(0.0, 1.0));
        let eld = 3.0 * self.eld_score.clamp(0.0, 1.0);
        let confidence = 3.0 * self.avg_word_conf.clamp(0.0, 1.0);
        let words = ln_e(f64::from(self.wrd_cnt));
        Ok(QualityBreakdown {
            snr,
            speakers,
            speech_ratio,
            eld,
            confidence,
            words,
            total: snr + speakers + speech_ratio + eld + confidence + words,
        })
    }
}

pub fn quality_score(r: &SegmentRecord) -> Result<QualityBreakdown, QualityError> {
    if !(r.audio_len > 0.0) {
        return Err(QualityError::ZeroAudioLen);
    }
    QualityInputs::from_record(r)?.score()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunnelStage {
    pub count: usize,
    pub hours: f64,
}

impl FunnelStage {
    fn add(&mut self, seconds: f64) {
        self.count += 1;
        self.hours += seconds / 3600.0;
    }
}

/// Yield at each stage: recorded (audio hours), then speech hours after
/// VAD and the length gate, the SNR gate, the language gate, and finally
/// the selected batch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunnelReport {
    pub recorded: FunnelStage,
    pub post_vad: FunnelStage,
    pub post_snr: FunnelStage,
    pub post_eld: FunnelStage,
    pub selected: FunnelStage,
    /// Records left out of ranking because they could not be scored.
    pub unscored: usize,
}

impl FunnelReport {
    pub fn stages(&self) -> [(&'static str, FunnelStage); 5] {
        [
            ("recorded", self.recorded),
            ("post-VAD", self.post_vad),
            ("post-SNR", self.post_snr),
            ("post-ELD", self.post_eld),
            ("selected", self.selected),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for FunnelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8} {:>10}", "stage", "count", "hours")?;
        for (name, s) in self.stages() {
            writeln!(f, "{:<10} {:>8} {:>10.3}", name, s.count, s.hours)?;
        }
        if self.unscored > 0 {
            writeln!(f, "({} record(s) could not be scored)", self.unscored)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecord {
    pub id: String,
    pub score: f64,
    pub speech_len: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Selection {
    /// Every scored record, best first.
    pub ranked: Vec<RankedRecord>,
    /// Number of leading entries of `ranked` that were selected.
    pub selected: usize,
    pub funnel: FunnelReport,
}

impl Selection {
    pub fn selected(&self) -> &[RankedRecord] {
        &self.ranked[..self.selected]
    }
}

fn rejected_for(r: &SegmentRecord, reasons: &[ReasonCode]) -> bool {
    matches!(r.status, Status::Rejected(code) if reasons.contains(&code))
}

/// Ranks records by score (stored `quality_score`, else computed) and
/// selects the longest best-first prefix whose speech fits in `top_hours`.
pub fn rank_and_select(records: &[SegmentRecord], top_hours: f64) -> Selection {
    let mut funnel = FunnelReport::default();
    let mut ranked = Vec::new();
    for r in records {
        funnel.recorded.add(r.audio_len);
        if r.speech_len <= 0.0 || rejected_for(r, &[ReasonCode::TooShort, ReasonCode::TooLong]) {
            continue;
        }
        funnel.post_vad.add(r.speech_len);
        if rejected_for(r, &[ReasonCode::TooNoisy]) {
            continue;
        }
        funnel.post_snr.add(r.speech_len);
        if rejected_for(r, &[ReasonCode::NonEnglish, ReasonCode::NoEvidence]) {
            continue;
        }
        funnel.post_eld.add(r.speech_len);
        if matches!(r.status, Status::Rejected(_)) {
            continue;
        }
        let score = match r.quality_score {
            Some(s) => s,
            None => match quality_score(r) {
                Ok(b) => b.total,
                Err(e) => {
                    log::debug!("record {}: {e}", r.id);
                    funnel.unscored += 1;
                    continue;
                }
            },
        };
        ranked.push(RankedRecord {
            id: r.id.clone(),
            score,
            speech_len: r.speech_len,
        });
    }
    ranked.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.id.cmp(&b.id),
        o => o,
    });

    let budget = top_hours.max(0.0) * 3600.0;
    let mut used = 0.0;
    let mut selected = 0;
    for r in &ranked {
        if used + r.speech_len > budget {
            break;
        }
        used += r.speech_len;
        selected += 1;
        funnel.selected.add(r.speech_len);
    }
    Selection {
        ranked,
        selected,
        funnel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(avg_snr: f64, num_spk: u32, ratio: f64, eld: f64, conf: f64, wrd_cnt: u32) -> QualityInputs {
        QualityInputs {
            avg_snr,
            num_spk,
            speech_len: ratio * 10.0,
            audio_len: 10.0,
            eld_score: eld,
            avg_word_conf: conf,
            wrd_cnt,
        }
    }

    fn record(id: &str, speech: f64, score: f64) -> SegmentRecord {
        let mut r = SegmentRecord::new(id, speech + 1.0, speech);
        r.quality_score = Some(score);
        r
    }

    #[test]
    fn floor_and_example_values() {
        let floor = inputs(0.0, 1, 0.0, 0.0, 0.0, 0).score().unwrap();
        assert!((floor.total - 4.3133).abs() < 1e-3, "{}", floor.total);
        assert!((floor.snr - 1.0).abs() < 1e-12);
        let b = inputs(20.0, 2, 0.5, 0.9, 0.8, 30).score().unwrap();
        assert!((b.total - 14.4313).abs() < 1e-3, "{}", b.total);
        let sum = b.snr + b.speakers + b.speech_ratio + b.eld + b.confidence + b.words;
        assert!((sum - b.total).abs() < 1e-9);
    }

    #[test]
    fn missing_fields_and_zero_length() {
        let mut r = SegmentRecord::new("a", 5.0, 4.0);
        r.avg_snr = Some(10.0);
        r.num_spk = Some(1);
        r.avg_word_conf = Some(0.9);
        assert_eq!(quality_score(&r).unwrap_err(), QualityError::MissingField(vec!["eld_score"]));
        r.eld_score = Some(0.9);
        assert!(quality_score(&r).is_ok());
        r.audio_len = 0.0;
        assert_eq!(quality_score(&r).unwrap_err(), QualityError::ZeroAudioLen);
    }

    #[test]
    fn clamps_out_of_range_inputs() {
        let hi = inputs(100.0, 50, 2.0, 1.0, 1.0, 10).score().unwrap();
        let cap = inputs(40.0, 10, 1.0, 1.0, 1.0, 10).score().unwrap();
        assert_eq!(hi, cap);
    }

    #[test]
    fn ranking_ties_and_budget() {
        let recs: Vec<_> = ["c", "a", "b"].iter().map(|id| record(id, 100.0, 5.0)).collect();
        let s = rank_and_select(&recs, 1.0);
        let ids: Vec<_> = s.selected().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(rank_and_select(&recs, 0.0).selected, 0);
        let s = rank_and_select(&recs, 250.0 / 3600.0);
        assert_eq!(s.selected, 2);
        assert_eq!(s.funnel.selected.count, 2);
    }

    #[test]
    fn selection_stops_at_first_overflow() {
        let recs = vec![record("a", 100.0, 9.0), record("b", 500.0, 8.0), record("c", 10.0, 7.0)];
        let s = rank_and_select(&recs, 200.0 / 3600.0);
        assert_eq!(s.selected, 1);
    }

    #[test]
    fn funnel_counts_rejections_by_stage() {
        let mut noisy = record("n", 5.0, 1.0);
        noisy.status = Status::Rejected(ReasonCode::TooNoisy);
        let mut foreign = record("f", 5.0, 1.0);
        foreign.status = Status::Rejected(ReasonCode::NonEnglish);
        let mut short = record("s", 0.5, 1.0);
        short.status = Status::Rejected(ReasonCode::TooShort);
        let ok = record("o", 5.0, 1.0);
        let s = rank_and_select(&[noisy, foreign, short, ok], 1.0);
        let counts: Vec<_> = s.funnel.stages().iter().map(|(_, st)| st.count).collect();
        assert_eq!(counts, [4, 3, 2, 1, 1]);
        let text = s.funnel.to_string();
        assert!(text.contains("post-SNR"));
        let back: FunnelReport = serde_json::from_str(&s.funnel.to_json()).unwrap();
        assert_eq!(back, s.funnel);
    }

    proptest! {
        #[test]
        fn score_is_strictly_monotone(
            snr in 0.0f64..39.0, spk in 1u32..10, ratio in 0.0f64..0.99,
            eld in 0.0f64..0.99, conf in 0.0f64..0.99, wc in 0u32..200,
            field in 0usize..6, bump in 0.001f64..1.0,
        ) {
            let base = inputs(snr, spk, ratio, eld, conf, wc);
            let mut up = base;
            match field {
                0 => up.avg_snr = (snr + bump).min(40.0),
                1 => up.num_spk += 1,
                2 => up.speech_len = ((ratio + bump).min(1.0)) * 10.0,
                3 => up.eld_score = (eld + bump).min(1.0),
                4 => up.avg_word_conf = (conf + bump).min(1.0),
                _ => up.wrd_cnt += 1,
            }
            prop_assert!(up.score().unwrap().total > base.score().unwrap().total);
        }

        #[test]
        fn selection_is_a_prefix(scores in prop::collection::vec((0.0f64..10.0, 1.0f64..100.0), 0..30), hours in 0.0f64..0.5) {
            let recs: Vec<_> = scores.iter().enumerate().map(|(i, (s, l))| record(&format!("r{i:02}"), *l, *s)).collect();
            let sel = rank_and_select(&recs, hours);
            prop_assert!(sel.ranked.windows(2).all(|w| w[0].score >= w[1].score));
            let used: f64 = sel.selected().iter().map(|r| r.speech_len).sum();
            prop_assert!(used <= hours * 3600.0 + 1e-9);
            if let Some(next) = sel.ranked.get(sel.selected) {
                prop_assert!(used + next.speech_len > hours * 3600.0);
            }
        }
    }
}
