//! Conservative hop dynamics: the exact continuous-time jump process with hop intensity
//! z·c̃(x,y,γ)dy, simulated by thinning, and a discrete-time Metropolized swap chain with
//! the same canonical invariant measure.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CellList, Configuration, Point, TorusBox};
use crate::observables::{Event, EventKind, NamedObservable, TimeSeries};
use crate::potentials::{attraction_bound, find_overlap, local_energy, relative_energy_skipping, total_energy, PairPotential};
use crate::rates::{Hop, HopKernel, RateSpec};
use crate::rng::SimRng;
use crate::sumtree::SumTree;

/// Events between full recomputations of all energies and majorants.
pub const FULL_REFRESH_INTERVAL: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EventCounters {
    pub proposed: u64,
    pub accepted: u64,
    pub null: u64,
}

impl EventCounters {
    pub fn null_fraction(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.null as f64 / self.proposed as f64
        }
    }
}

pub struct KawasakiEngine {
    spec: RateSpec,
    pot: PairPotential,
    bx: TorusBox,
    config: Configuration,
    cells: CellList,
    /// E(x, γ∖x) per particle.
    energies: Vec<f64>,
    /// λ̄(x) per particle.
    bounds: SumTree,
    attraction: f64,
    clock: f64,
    counters: EventCounters,
    since_refresh: u64,
    rng: SimRng,
    log: Option<Vec<Event>>,
}

impl KawasakiEngine {
    pub fn new(
        spec: RateSpec,
        pot: PairPotential,
        bx: TorusBox,
        points: Vec<Point>,
        rng: SimRng,
    ) -> Result<Self> {
        bx.require_reach(pot.range(), "potential range")?;
        bx.require_reach(spec.kernel.support(), "hop kernel support")?;
        let config = Configuration::from_points(&bx, points);
        if let Some((i, j)) = find_overlap(&pot, &bx, config.points()) {
            return Err(Error::HardCoreOverlap(i, j));
        }
        let cells = CellList::build(&bx, pot.range(), &config)?;
        let attraction = attraction_bound(&pot, bx.dim())?;
        let mut engine = Self {
            spec,
            pot,
            bx,
            config,
            cells,
            energies: Vec::new(),
            bounds: SumTree::new(),
            attraction,
            clock: 0.0,
            counters: EventCounters::default(),
            since_refresh: 0,
            rng,
            log: None,
        };
        engine.refresh();
        Ok(engine)
    }

    /// Records every subsequent event.
    pub fn enable_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn take_log(&mut self) -> Vec<Event> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn points(&self) -> &[Point] {
        self.config.points()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn counters(&self) -> EventCounters {
        self.counters
    }

    pub fn torus(&self) -> &TorusBox {
        &self.bx
    }

    /// Σ_x λ̄(x)
    pub fn total_bound(&self) -> f64 {
        self.bounds.total()
    }

    fn energy_of(&self, i: usize) -> f64 {
        local_energy(&self.pot, &self.config.points()[i], &self.config, &self.cells, Some(i))
            .expect("cell list tracks the configuration")
    }

    /// Recomputes every energy and majorant from scratch.
    pub fn refresh(&mut self) {
        self.energies = (0..self.config.len()).map(|i| self.energy_of(i)).collect();
        let bounds: Vec<f64> = self
            .energies
            .iter()
            .map(|&e| self.spec.hop_majorant(e, self.attraction))
            .collect();
        self.bounds.rebuild(&bounds);
        self.since_refresh = 0;
    }

    fn update_particle(&mut self, j: usize) {
        let e = self.energy_of(j);
        self.energies[j] = e;
        self.bounds.set(j, self.spec.hop_majorant(e, self.attraction));
    }

    /// Executes the event at the already-advanced clock: choose a particle ∝ λ̄, propose a
    /// target from the kernel and thin.
    fn fire(&mut self) -> Result<Event> {
        let total = self.bounds.total();
        let i = self.bounds.find(self.rng.random::<f64>() * total);
        let x = self.config.points()[i];
        let y = self.bx.translate(&x, &self.spec.kernel.sample_offset(&mut self.rng));
        let e_y = local_energy(&self.pot, &y, &self.config, &self.cells, Some(i))?;
        let hop = Hop {
            x,
            y,
            e_x: self.energies[i],
            e_y,
            kernel: self.spec.kernel.value(&self.bx.displacement(&x, &y)),
        };
        let p = self.spec.acceptance(&hop, self.bounds.get(i))?;
        self.counters.proposed += 1;
        let accepted = self.rng.random::<f64>() < p;
        let event = if accepted {
            debug_assert!(e_y.is_finite());
            self.counters.accepted += 1;
            self.cells.relocate(&mut self.config, i, y)?;
            self.energies[i] = e_y;
            self.bounds.set(i, self.spec.hop_majorant(e_y, self.attraction));
            let mut touched = Vec::new();
            let r = self.pot.range();
            for c in [x, y] {
                self.cells.for_each_within(&c, r, &self.config, |j, _| {
                    if j != i {
                        touched.push(j)
                    }
                })?;
            }
            touched.sort_unstable();
            touched.dedup();
            for j in touched {
                self.update_particle(j);
            }
            Event {
                time: self.clock,
                kind: EventKind::Hop,
                index: Some(i),
                location: Some(y),
            }
        } else {
            self.counters.null += 1;
            Event {
                time: self.clock,
                kind: EventKind::Null,
                index: Some(i),
                location: Some(y),
            }
        };
        self.since_refresh += 1;
        if self.since_refresh >= FULL_REFRESH_INTERVAL {
            self.refresh();
        }
        if let Some(log) = self.log.as_mut() {
            log.push(event);
        }
        Ok(event)
    }

    /// One SSA event (hop or null). Errors with `VacuumState` when no particle can move.
    pub fn step(&mut self) -> Result<Event> {
        let total = self.bounds.total();
        if total <= 0.0 {
            return Err(Error::VacuumState);
        }
        self.clock += exp_sample(&mut self.rng) / total;
        self.fire()
    }

    /// Next event if it occurs before `limit`; otherwise moves the clock to `limit` and
    /// returns `None`. Discarding the overshooting waiting time is exact by memorylessness.
    pub fn advance(&mut self, limit: f64) -> Result<Option<Event>> {
        let total = self.bounds.total();
        if total <= 0.0 {
            self.clock = self.clock.max(limit);
            return Ok(None);
        }
        let tau = exp_sample(&mut self.rng) / total;
        if self.clock + tau > limit {
            self.clock = limit;
            return Ok(None);
        }
        self.clock += tau;
        self.fire().map(Some)
    }

    /// Observables on the grid 0, dt, 2dt, … up to `horizon`.
    pub fn run(&mut self, horizon: f64, dt: f64, observables: &[NamedObservable]) -> Result<TimeSeries> {
        let n0 = self.config.len();
        let grid = time_grid(self.clock, horizon, dt);
        let mut series = TimeSeries::new(observables);
        for t in grid {
            while self.advance(t)?.is_some() {}
            assert_eq!(self.config.len(), n0, "hop dynamics must conserve particle number");
            series.record(t, &self.bx, self.config.points(), observables);
        }
        Ok(series)
    }
}

/// Standard exponential variate.
pub fn exp_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 − U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

/// start, start+dt, … , start+horizon (inclusive when it lands on the grid).
pub fn time_grid(start: f64, horizon: f64, dt: f64) -> Vec<f64> {
    if horizon <= 0.0 || dt <= 0.0 {
        return vec![start];
    }
    let n = (horizon / dt + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| start + k as f64 * dt).collect();
    if (n as f64) * dt < horizon - 1e-9 * dt {
        g.push(start + horizon);
    }
    g
}

/// One Metropolized swap: uniform particle, kernel proposal, acceptance min(1, e^{−ΔE}).
/// Returns whether the move was accepted.
pub fn metropolis_swap_step<R: Rng + ?Sized>(
    config: &mut Configuration,
    cells: &mut CellList,
    kernel: &HopKernel,
    pot: &PairPotential,
    bx: &TorusBox,
    rng: &mut R,
) -> Result<bool> {
    let n = config.len();
    if n == 0 {
        return Ok(false);
    }
    let i = rng.random_range(0..n);
    let x = config.points()[i];
    let y = bx.translate(&x, &kernel.sample_offset(rng));
    let after = local_energy(pot, &y, config, cells, Some(i))?;
    if after == f64::INFINITY {
        return Ok(false);
    }
    let before = local_energy(pot, &x, config, cells, Some(i))?;
    let a = (before - after).exp().min(1.0);
    if rng.random::<f64>() < a {
        cells.relocate(config, i, y)?;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// (π(γ)P(γ→γ'), π(γ')P(γ'→γ)) for the swap chain moving particle `i` to `y`, with the
/// canonical density e^{−U}.
pub fn swap_flux(
    kernel: &HopKernel,
    pot: &PairPotential,
    bx: &TorusBox,
    points: &[Point],
    i: usize,
    y: Point,
) -> (f64, f64) {
    let n = points.len() as f64;
    let mut after = points.to_vec();
    after[i] = y;
    let q = kernel.value(&bx.displacement(&points[i], &y)) / kernel.l1_norm();
    let e_old = relative_energy_skipping(pot, bx, &points[i], points, Some(i));
    let e_new = relative_energy_skipping(pot, bx, &y, points, Some(i));
    let acc = |d: f64| if d == f64::INFINITY { 0.0 } else { (-d).exp().min(1.0) };
    let fwd = (-total_energy(pot, bx, points)).exp() * q / n * acc(e_new - e_old);
    let back = (-total_energy(pot, bx, &after)).exp() * q / n * acc(e_old - e_new);
    (fwd, back)
}
