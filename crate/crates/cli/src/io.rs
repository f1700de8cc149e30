//! File helpers and the exit-code classification of errors.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::Context;
use atc2_core::model::{parse_segment_record, SegmentRecord};
use serde::de::DeserializeOwned;

/// Input problems exit with 2, configuration problems with 3.
#[derive(Debug)]
pub enum Fail {
    Input(anyhow::Error),
    Config(anyhow::Error),
}

impl Fail {
    pub fn code(&self) -> u8 {
        match self {
            Fail::Input(_) => 2,
            Fail::Config(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Fail::Input(e) | Fail::Config(e) => e,
        }
    }
}

pub trait ResultExt<T> {
    fn input(self) -> Result<T, Fail>;
    fn config(self) -> Result<T, Fail>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn input(self) -> Result<T, Fail> {
        self.map_err(|e| Fail::Input(e.into()))
    }

    fn config(self) -> Result<T, Fail> {
        self.map_err(|e| Fail::Config(e.into()))
    }
}

/// Non-blank lines of a text file with their 1-based line numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>, Fail> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .input()?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display())).input()?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Fail> {
    lines(path)?
        .into_iter()
        .map(|(n, l)| {
            serde_json::from_str(&l)
                .with_context(|| format!("{}:{n}", path.display()))
                .input()
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<SegmentRecord>, Fail> {
    lines(path)?
        .into_iter()
        .map(|(n, l)| {
            parse_segment_record(&l)
                .with_context(|| format!("{}:{n}", path.display()))
                .input()
        })
        .collect()
}

pub fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), Fail> {
    let ctx = || format!("writing {}", path.display());
    let file = std::fs::File::create(path).with_context(ctx).input()?;
    let mut w = std::io::BufWriter::new(file);
    for l in lines {
        writeln!(w, "{l}").with_context(ctx).input()?;
    }
    w.flush().with_context(ctx).input()
}
