//! Text snapshot format. Each record is a header line `d L N seed sweepIndex` followed by
//! N lines of d space-separated coordinates; records are separated by blank lines.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{Point, TorusBox, ORIGIN};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub side: f64,
    pub seed: u64,
    pub sweep: u64,
    pub points: Vec<Point>,
}

impl Snapshot {
    pub fn new(bx: &TorusBox, seed: u64, sweep: u64, points: Vec<Point>) -> Self {
        Self {
            dim: bx.dim(),
            side: bx.side(),
            seed,
            sweep,
            points,
        }
    }

    pub fn torus(&self) -> Result<TorusBox> {
        TorusBox::new(self.dim, self.side)
    }
}

pub fn write_snapshot<W: Write>(w: &mut W, snap: &Snapshot) -> std::io::Result<()> {
    writeln!(
        w,
        "{} {} {} {} {}",
        snap.dim,
        snap.side,
        snap.points.len(),
        snap.seed,
        snap.sweep
    )?;
    for p in &snap.points {
        let coords: Vec<String> = p[..snap.dim].iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", coords.join(" "))?;
    }
    Ok(())
}

pub fn write_snapshots<W: Write>(w: &mut W, snaps: &[Snapshot]) -> std::io::Result<()> {
    for (k, s) in snaps.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        write_snapshot(w, s)?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: bad or missing {what}")))
}

pub fn read_snapshots<R: BufRead>(r: R) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    let mut lines = r.lines().enumerate();
    loop {
        // skip blank separators
        let (no, header) = loop {
            match lines.next() {
                None => return Ok(out),
                Some((no, l)) => {
                    let l = l.map_err(|e| Error::Parse(e.to_string()))?;
                    if !l.trim().is_empty() {
                        break (no + 1, l);
                    }
                }
            }
        };
        let mut tok = header.split_whitespace();
        let dim: usize = parse(tok.next(), no, "d")?;
        let side: f64 = parse(tok.next(), no, "L")?;
        let n: usize = parse(tok.next(), no, "N")?;
        let seed: u64 = parse(tok.next(), no, "seed")?;
        let sweep: u64 = parse(tok.next(), no, "sweepIndex")?;
        if !(1..=3).contains(&dim) {
            return Err(Error::Parse(format!("line {no}: dimension {dim} not in 1..=3")));
        }
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (no, l) = lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of snapshot".into()))?;
            let l = l.map_err(|e| Error::Parse(e.to_string()))?;
            let mut p = ORIGIN;
            let mut tok = l.split_whitespace();
            for c in p.iter_mut().take(dim) {
                *c = parse(tok.next(), no + 1, "coordinate")?;
            }
            points.push(p);
        }
        out.push(Snapshot {
            dim,
            side,
            seed,
            sweep,
            points,
        });
    }
}
