//! Spatial birth-and-death dynamics with death rates d(x,γ) = α·e^{sE(x,γ∖x)} and birth
//! intensity z·α·e^{(s−1)E(x,γ)}dx. Deaths are sampled exactly; births by thinning a
//! uniform proposal.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{CellList, Configuration, Point, TorusBox};
use crate::kawasaki::{exp_sample, time_grid, EventCounters, FULL_REFRESH_INTERVAL};
use crate::observables::{Event, EventKind, NamedObservable, TimeSeries};
use crate::potentials::{attraction_bound, find_overlap, local_energy, PairPotential};
use crate::rates::GlauberSpec;
use crate::rng::SimRng;
use crate::sumtree::SumTree;

pub struct GlauberEngine {
    spec: GlauberSpec,
    pot: PairPotential,
    bx: TorusBox,
    config: Configuration,
    cells: CellList,
    deaths: SumTree,
    birth_bound: f64,
    attraction: f64,
    clock: f64,
    counters: EventCounters,
    since_refresh: u64,
    rng: SimRng,
    log: Option<Vec<Event>>,
}

impl GlauberEngine {
    pub fn new(
        spec: GlauberSpec,
        pot: PairPotential,
        bx: TorusBox,
        points: Vec<Point>,
        rng: SimRng,
    ) -> Result<Self> {
        bx.require_reach(pot.range(), "potential range")?;
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
            deaths: SumTree::new(),
            birth_bound: spec.birth_majorant(bx.volume(), attraction),
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

    /// Exact total death rate.
    pub fn total_death_rate(&self) -> f64 {
        self.deaths.total()
    }

    pub fn death_rates(&self) -> &[f64] {
        self.deaths.weights()
    }

    fn energy(&self, x: &Point, skip: Option<usize>) -> f64 {
        local_energy(&self.pot, x, &self.config, &self.cells, skip)
            .expect("cell list tracks the configuration")
    }

    pub fn refresh(&mut self) {
        let rates: Vec<f64> = (0..self.config.len())
            .map(|i| self.spec.death_rate(self.energy(&self.config.points()[i], Some(i))))
            .collect();
        self.deaths.rebuild(&rates);
        self.since_refresh = 0;
    }

    fn refresh_around(&mut self, c: &Point) -> Result<()> {
        let mut touched = Vec::new();
        self.cells
            .for_each_within(c, self.pot.range(), &self.config, |j, _| touched.push(j))?;
        for j in touched {
            let e = self.energy(&self.config.points()[j], Some(j));
            self.deaths.set(j, self.spec.death_rate(e));
        }
        Ok(())
    }

    fn fire(&mut self) -> Result<Event> {
        let n0 = self.config.len();
        let death_total = self.deaths.total();
        let u = self.rng.random::<f64>() * (death_total + self.birth_bound);
        self.counters.proposed += 1;
        let event = if u < death_total {
            let i = self.deaths.find(u);
            let x = self.cells.remove(&mut self.config, i)?;
            self.deaths.swap_remove(i);
            self.refresh_around(&x)?;
            self.counters.accepted += 1;
            Event {
                time: self.clock,
                kind: EventKind::Death,
                index: Some(i),
                location: Some(x),
            }
        } else {
            let x = self.bx.uniform_point(&mut self.rng);
            let e = self.energy(&x, None);
            let p = self
                .spec
                .birth_acceptance(e, self.bx.volume(), self.attraction)?;
            if self.rng.random::<f64>() < p {
                let i = self.cells.insert(&mut self.config, x)?;
                self.deaths.push(0.0);
                self.deaths.set(i, self.spec.death_rate(e));
                self.refresh_around(&x)?;
                self.counters.accepted += 1;
                Event {
                    time: self.clock,
                    kind: EventKind::Birth,
                    index: None,
                    location: Some(x),
                }
            } else {
                self.counters.null += 1;
                Event {
                    time: self.clock,
                    kind: EventKind::Null,
                    index: None,
                    location: Some(x),
                }
            }
        };
        let n1 = self.config.len();
        match event.kind {
            EventKind::Birth => assert_eq!(n1, n0 + 1),
            EventKind::Death => assert_eq!(n1 + 1, n0),
            _ => assert_eq!(n1, n0),
        }
        self.since_refresh += 1;
        if self.since_refresh >= FULL_REFRESH_INTERVAL {
            self.refresh();
        }
        if let Some(log) = self.log.as_mut() {
            log.push(event);
        }
        Ok(event)
    }

    pub fn step(&mut self) -> Result<Event> {
        let total = self.deaths.total() + self.birth_bound;
        if total <= 0.0 {
            return Err(Error::VacuumState);
        }
        self.clock += exp_sample(&mut self.rng) / total;
        self.fire()
    }

    pub fn advance(&mut self, limit: f64) -> Result<Option<Event>> {
        let total = self.deaths.total() + self.birth_bound;
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

    pub fn run(&mut self, horizon: f64, dt: f64, observables: &[NamedObservable]) -> Result<TimeSeries> {
        let mut series = TimeSeries::new(observables);
        for t in time_grid(self.clock, horizon, dt) {
            while self.advance(t)?.is_some() {}
            series.record(t, &self.bx, self.config.points(), observables);
        }
        Ok(series)
    }
}
