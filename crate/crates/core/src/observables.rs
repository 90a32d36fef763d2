//! Observables sampled along trajectories, plus the JSON-lines series and text event-log
//! formats shared by the engines.

use std::io::Write;

use serde::Serialize;

use crate::functionals::{CylinderFunctional, TestField};
use crate::geometry::{Point, TorusBox};

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// N = |γ|
    Count,
    /// ⟨ψ, γ⟩
    Pairing(TestField),
    /// Number of unordered pairs at distance < radius.
    PairCount { radius: f64 },
    Functional(CylinderFunctional),
}

impl Observable {
    pub fn evaluate(&self, bx: &TorusBox, points: &[Point]) -> f64 {
        match self {
            Observable::Count => points.len() as f64,
            Observable::Pairing(f) => f.pairing(bx, points),
            Observable::PairCount { radius } => {
                let r2 = radius * radius;
                let mut n = 0usize;
                for i in 0..points.len() {
                    for j in (i + 1)..points.len() {
                        if bx.dist2(&points[i], &points[j]) < r2 {
                            n += 1;
                        }
                    }
                }
                n as f64
            }
            Observable::Functional(f) => f.evaluate(bx, points),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedObservable {
    pub name: String,
    pub observable: Observable,
}

impl NamedObservable {
    pub fn new(name: impl Into<String>, observable: Observable) -> Self {
        Self {
            name: name.into(),
            observable,
        }
    }
}

/// Values of each observable on a uniform time grid; `values[k][j]` is observable `k` at
/// `times[j]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(observables: &[NamedObservable]) -> Self {
        Self {
            names: observables.iter().map(|o| o.name.clone()).collect(),
            times: Vec::new(),
            values: vec![Vec::new(); observables.len()],
        }
    }

    pub fn record(&mut self, t: f64, bx: &TorusBox, points: &[Point], observables: &[NamedObservable]) {
        self.times.push(t);
        for (k, o) in observables.iter().enumerate() {
            self.values[k].push(o.observable.evaluate(bx, points));
        }
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k].as_slice())
    }

    pub fn first(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.first().copied())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.last().copied())
    }

    /// One `{"t":…,"name":…,"value":…}` object per line.
    pub fn write_json_lines<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            t: f64,
            name: &'a str,
            value: f64,
        }
        for (j, &t) in self.times.iter().enumerate() {
            for (k, name) in self.names.iter().enumerate() {
                let row = Row {
                    t,
                    name,
                    value: self.values[k][j],
                };
                serde_json::to_writer(&mut *w, &row)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Hop,
    Birth,
    Death,
    Null,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Hop => "hop",
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Null => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Particle index involved (hop source, dying particle); `None` for births and nulls.
    pub index: Option<usize>,
    /// Hop target or birth location.
    pub location: Option<Point>,
}

impl Event {
    /// `t kind xIndex yCoords…`, with `-` for absent fields.
    pub fn write_line<W: Write>(&self, w: &mut W, dim: usize) -> std::io::Result<()> {
        write!(w, "{} {}", self.time, self.kind.as_str())?;
        match self.index {
            Some(i) => write!(w, " {i}")?,
            None => write!(w, " -")?,
        }
        match self.location {
            Some(p) => {
                for c in &p[..dim] {
                    write!(w, " {c}")?;
                }
            }
            None => write!(w, " -")?,
        }
        writeln!(w)
    }
}
