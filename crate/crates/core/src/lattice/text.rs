//! Plain-text lattice format.
//!
//! One arc per line as `src dst word cost`, final states as `state cost`
//! (or a bare `state` for cost 0). State 0 is the start state. Blank lines
//! separate lattices in a batch file; `#` starts a comment line.

use super::{Arc, Lattice, LatticeError};

pub fn parse_lattice(text: &str) -> Result<Lattice, LatticeError> {
    let mut all = parse_lattices(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(LatticeError::Empty),
        n => Err(LatticeError::Parse {
            line: 0,
            msg: format!("expected one lattice, found {n}"),
        }),
    }
}

pub fn parse_lattices(text: &str) -> Result<Vec<Lattice>, LatticeError> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !block.is_empty() {
                out.push(parse_block(&block)?);
                block.clear();
            }
        } else {
            block.push((i + 1, line));
        }
    }
    if !block.is_empty() {
        out.push(parse_block(&block)?);
    }
    Ok(out)
}

fn parse_block(lines: &[(usize, &str)]) -> Result<Lattice, LatticeError> {
    let mut arcs = Vec::new();
    let mut finals = Vec::new();
    let mut max_state = 0;
    for &(line, text) in lines {
        let err = |msg: String| LatticeError::Parse { line, msg };
        let fields: Vec<&str> = text.split_whitespace().collect();
        let state = |s: &str| s.parse::<usize>().map_err(|e| err(format!("state {s:?}: {e}")));
        let cost = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|c| c.is_finite())
                .ok_or_else(|| err(format!("cost {s:?} is not a finite decimal")))
        };
        match fields.as_slice() {
            [s] => {
                let s = state(s)?;
                max_state = max_state.max(s);
                finals.push((s, 0.0));
            }
            [s, c] => {
                let s = state(s)?;
                max_state = max_state.max(s);
                finals.push((s, cost(c)?));
            }
            [src, dst, word, c] => {
                let (src, dst) = (state(src)?, state(dst)?);
                max_state = max_state.max(src).max(dst);
                arcs.push(Arc::new(src, dst, *word, cost(c)?));
            }
            _ => return Err(err(format!("expected 1, 2 or 4 fields, got {}", fields.len()))),
        }
    }
    Lattice::new(max_state + 1, arcs, finals)
}

pub fn format_lattice(l: &Lattice) -> String {
    let mut out = String::new();
    for a in l.arcs() {
        out.push_str(&format!("{} {} {} {}\n", a.src, a.dst, a.word, a.cost));
    }
    for (s, c) in l.finals() {
        out.push_str(&format!("{s} {c}\n"));
    }
    out
}

pub fn format_lattices(ls: &[Lattice]) -> String {
    ls.iter().map(format_lattice).collect::<Vec<_>>().join("\n")
}
