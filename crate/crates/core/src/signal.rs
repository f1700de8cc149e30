//! Energy-based voice activity detection and SNR estimation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MAX_SNR_DB;

pub const DEFAULT_FRAME_MS: u32 = 20;
pub const DEFAULT_THRESHOLD_DB: f64 = 6.0;
/// Runs separated by less than this many seconds are merged.
pub const MERGE_GAP_S: f64 = 0.2;

const ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("frame length {0} ms is outside [10, 100]")]
    BadFrame(u32),
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("unsupported WAV format: {0}")]
    Format(String),
    #[error(transparent)]
    Wav(#[from] hound::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadSegment {
    pub start: f64,
    pub end: f64,
}

impl VadSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Mono PCM audio as floats in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl Audio {
    pub fn new(sample_rate: u32, samples: Vec<f32>) -> Self {
        Audio {
            sample_rate,
            samples,
        }
    }

    pub fn from_i16(sample_rate: u32, samples: &[i16]) -> Self {
        let samples = samples.iter().map(|&s| f32::from(s) / 32768.0).collect();
        Audio {
            sample_rate,
            samples,
        }
    }

    pub fn to_i16(&self) -> Vec<i16> {
        self.samples
            .iter()
            .map(|&s| (s.clamp(-1.0, 1.0) * 32767.0).round() as i16)
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate.max(1))
    }

    /// Reads a 16-bit PCM mono WAV file.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self, SignalError> {
        let reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            return Err(SignalError::Format(format!(
                "{} channel(s), {} bit {:?}; expected mono 16-bit PCM",
                spec.channels, spec.bits_per_sample, spec.sample_format
            )));
        }
        let samples: Vec<i16> = reader.into_samples::<i16>().collect::<Result<_, _>>()?;
        Ok(Audio::from_i16(spec.sample_rate, &samples))
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<(), SignalError> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec)?;
        for s in self.to_i16() {
            w.write_sample(s)?;
        }
        w.finalize()?;
        Ok(())
    }
}

/// Per-frame RMS level in dB.
pub fn frame_levels(samples: &[f32], frame_len: usize) -> Vec<f64> {
    samples
        .chunks(frame_len.max(1))
        .map(|f| {
            let ms = f.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / f.len() as f64;
            20.0 * (ms.sqrt() + ENERGY_FLOOR).log10()
        })
        .collect()
}

/// Speech segments: maximal runs of frames louder than the quietest frame
/// by more than `threshold_db`, with short gaps merged.
pub fn vad(audio: &Audio, frame_ms: u32, threshold_db: f64) -> Result<Vec<VadSegment>, SignalError> {
    if audio.samples.is_empty() {
        return Err(SignalError::EmptyAudio);
    }
    if !(10..=100).contains(&frame_ms) {
        return Err(SignalError::BadFrame(frame_ms));
    }
    if audio.sample_rate == 0 {
        return Err(SignalError::BadSampleRate);
    }
    let rate = f64::from(audio.sample_rate);
    let frame_len = ((rate * f64::from(frame_ms) / 1000.0).round() as usize).max(1);
    let levels = frame_levels(&audio.samples, frame_len);
    let floor = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let total = audio.duration();

    let mut segments: Vec<VadSegment> = Vec::new();
    let mut run_start = None;
    for (i, &level) in levels.iter().chain(std::iter::once(&f64::NEG_INFINITY)).enumerate() {
        let active = level - floor > threshold_db;
        match (active, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                let start = (s * frame_len) as f64 / rate;
                let end = ((i * frame_len) as f64 / rate).min(total);
                match segments.last_mut() {
                    Some(prev) if start - prev.end < MERGE_GAP_S => prev.end = end,
                    _ => segments.push(VadSegment { start, end }),
                }
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(segments)
}

pub fn speech_len(segments: &[VadSegment]) -> f64 {
    segments.iter().map(VadSegment::duration).sum()
}

/// SNR in dB from mean sample power inside versus outside `segments`,
/// clamped to [0, 40]. Returns 0 when either side has no samples.
pub fn estimate_snr(audio: &Audio, segments: &[VadSegment]) -> Result<f64, SignalError> {
    if audio.samples.is_empty() {
        return Err(SignalError::EmptyAudio);
    }
    let rate = f64::from(audio.sample_rate.max(1));
    let mut in_speech = vec![false; audio.samples.len()];
    for seg in segments {
        let a = ((seg.start * rate).round().max(0.0) as usize).min(in_speech.len());
        let b = ((seg.end * rate).round().max(0.0) as usize).min(in_speech.len());
        in_speech[a..b.max(a)].fill(true);
    }
    let (mut ps, mut ns, mut pn, mut nn) = (0.0, 0usize, 0.0, 0usize);
    for (&x, &s) in audio.samples.iter().zip(&in_speech) {
        let p = f64::from(x) * f64::from(x);
        if s {
            ps += p;
            ns += 1;
        } else {
            pn += p;
            nn += 1;
        }
    }
    if ns == 0 || nn == 0 {
        return Ok(0.0);
    }
    let (ps, pn) = (ps / ns as f64, pn / nn as f64);
    let snr = if pn <= 0.0 {
        if ps > 0.0 {
            MAX_SNR_DB
        } else {
            0.0
        }
    } else if ps <= 0.0 {
        0.0
    } else {
        10.0 * (ps / pn).log10()
    };
    Ok(snr.clamp(0.0, MAX_SNR_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RATE: u32 = 8000;

    fn tone(secs: f64, amp: f32) -> Vec<f32> {
        let n = (secs * f64::from(RATE)) as usize;
        (0..n)
            .map(|i| amp * (2.0 * std::f32::consts::PI * 440.0 * i as f32 / RATE as f32).sin())
            .collect()
    }

    fn silence(secs: f64) -> Vec<f32> {
        vec![0.0; (secs * f64::from(RATE)) as usize]
    }

    #[test]
    fn silence_has_no_speech() {
        let a = Audio::new(RATE, silence(2.0));
        let segs = vad(&a, 20, 6.0).unwrap();
        assert!(segs.is_empty());
        assert_eq!(speech_len(&segs), 0.0);
    }

    #[test]
    fn padded_tone_gives_one_segment() {
        let s = [silence(1.0), tone(1.0, 0.5), silence(1.0)].concat();
        let segs = vad(&Audio::new(RATE, s), 20, 6.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].start - 1.0).abs() <= 0.02);
        assert!((segs[0].end - 2.0).abs() <= 0.02);
    }

    #[test]
    fn short_gap_is_merged() {
        let s = [silence(0.5), tone(0.5, 0.5), silence(0.1), tone(0.5, 0.5), silence(0.5)].concat();
        let segs = vad(&Audio::new(RATE, s.clone()), 20, 6.0).unwrap();
        assert_eq!(segs.len(), 1);
        let long = [silence(0.5), tone(0.5, 0.5), silence(0.5), tone(0.5, 0.5), silence(0.5)].concat();
        assert_eq!(vad(&Audio::new(RATE, long), 20, 6.0).unwrap().len(), 2);
    }

    #[test]
    fn vad_errors() {
        assert!(matches!(vad(&Audio::new(RATE, vec![]), 20, 6.0), Err(SignalError::EmptyAudio)));
        assert!(matches!(vad(&Audio::new(RATE, vec![0.0; 10]), 5, 6.0), Err(SignalError::BadFrame(5))));
        assert!(matches!(estimate_snr(&Audio::new(RATE, vec![]), &[]), Err(SignalError::EmptyAudio)));
    }

    #[test]
    fn snr_of_two_level_signal() {
        // Constant-magnitude square waves: speech amplitude 10x noise, power 100x.
        let sq = |n: usize, amp: f32| (0..n).map(move |i| if i % 2 == 0 { amp } else { -amp });
        let s: Vec<f32> = sq(8000, 0.01).chain(sq(8000, 0.1)).chain(sq(8000, 0.01)).collect();
        let a = Audio::new(RATE, s);
        let segs = [VadSegment { start: 1.0, end: 2.0 }];
        assert!((estimate_snr(&a, &segs).unwrap() - 20.0).abs() < 0.1);
        let all = [VadSegment { start: 0.0, end: 3.0 }];
        assert_eq!(estimate_snr(&a, &all).unwrap(), 0.0);
        assert_eq!(estimate_snr(&a, &[]).unwrap(), 0.0);
        let flat = Audio::new(RATE, sq(16000, 0.1).collect());
        assert_eq!(estimate_snr(&flat, &[VadSegment { start: 0.0, end: 1.0 }]).unwrap(), 0.0);
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let a = Audio::new(RATE, tone(0.1, 0.5));
        a.write_wav(&path).unwrap();
        let b = Audio::read_wav(&path).unwrap();
        assert_eq!(b.sample_rate, RATE);
        assert_eq!(b.samples.len(), a.samples.len());
        assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| (x - y).abs() < 1e-3));
    }

    proptest! {
        #[test]
        fn snr_in_range_and_vad_gain_invariant(
            levels in prop::collection::vec(0.0f32..0.9, 4..20),
            gain in 0.1f32..1.0,
        ) {
            let s: Vec<f32> = levels
                .iter()
                .flat_map(|&l| (0..160).map(move |i| if i % 2 == 0 { l + 0.001 } else { -l - 0.001 }))
                .collect();
            let a = Audio::new(RATE, s.clone());
            let segs = vad(&a, 20, 6.0).unwrap();
            for w in segs.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for seg in &segs {
                prop_assert!(0.0 <= seg.start && seg.start < seg.end && seg.end <= a.duration() + 1e-9);
            }
            let snr = estimate_snr(&a, &segs).unwrap();
            prop_assert!((0.0..=MAX_SNR_DB).contains(&snr));
            let scaled = Audio::new(RATE, s.iter().map(|x| x * gain).collect());
            prop_assert_eq!(vad(&scaled, 20, 6.0).unwrap().len(), segs.len());
        }
    }
}
