//! Equilibrium invariance: start independent replicas from Gibbs samples, run a dynamics for
//! a fixed horizon and compare observable means at t = 0 and t = T by the paired
//! per-replica difference.

use rayon::prelude::*;

use super::VerificationReport;
use crate::diffusion::{DiffusionEngine, DiffusionParams};
use crate::error::{Error, Result};
use crate::geometry::{Point, TorusBox};
use crate::glauber::GlauberEngine;
use crate::kawasaki::KawasakiEngine;
use crate::observables::{NamedObservable, Observable, TimeSeries};
use crate::potentials::PairPotential;
use crate::rates::{GlauberSpec, RateSpec};
use crate::rng::stream;
use crate::stats::EstimateWithError;

#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    Kawasaki(RateSpec),
    Glauber(GlauberSpec),
    Diffusion(DiffusionParams),
}

impl Dynamics {
    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::Kawasaki(_) => "kawasaki",
            Dynamics::Glauber(_) => "glauber",
            Dynamics::Diffusion(_) => "diffusion",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvarianceSetup {
    pub dynamics: Dynamics,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub horizon: f64,
    /// Recording times per trajectory, used for the conservation checks.
    pub samples_per_run: usize,
    pub observables: Vec<NamedObservable>,
    pub seed: u64,
    pub sigmas: f64,
}

#[derive(Debug, Clone)]
pub struct InvarianceOutcome {
    /// One report per observable.
    pub reports: Vec<VerificationReport>,
    /// Whether the particle count stayed constant along every trajectory.
    pub count_conserved: bool,
    /// Fraction of trajectories whose particle count varied.
    pub count_varied_fraction: f64,
    /// Mean accepted events per particle (Kawasaki hops, Glauber births and deaths).
    pub events_per_particle: f64,
}

struct Run {
    series: TimeSeries,
    counts: Vec<f64>,
    accepted: u64,
    n0: usize,
}

fn with_count(observables: &[NamedObservable]) -> Vec<NamedObservable> {
    let mut obs = observables.to_vec();
    obs.push(NamedObservable::new("__count", Observable::Count));
    obs
}

fn run_one(setup: &InvarianceSetup, start: &[Point], replica: u64, dt_scale: f64) -> Result<Run> {
    let obs = with_count(&setup.observables);
    let rng = stream(setup.seed, replica);
    let sample_dt = setup.horizon / setup.samples_per_run.max(1) as f64;
    let (series, accepted) = match &setup.dynamics {
        Dynamics::Kawasaki(spec) => {
            let mut e = KawasakiEngine::new(*spec, setup.pot, setup.bx, start.to_vec(), rng)?;
            let s = e.run(setup.horizon, sample_dt, &obs)?;
            (s, e.counters().accepted)
        }
        Dynamics::Glauber(spec) => {
            let mut e = GlauberEngine::new(*spec, setup.pot, setup.bx, start.to_vec(), rng)?;
            let s = e.run(setup.horizon, sample_dt, &obs)?;
            (s, e.counters().accepted)
        }
        Dynamics::Diffusion(params) => {
            let mut p = params.clone();
            p.dt *= dt_scale;
            let mut e = DiffusionEngine::new(p, start.to_vec(), rng)?;
            let s = e.run(setup.horizon, sample_dt, &obs)?;
            (s, e.steps())
        }
    };
    let counts = series.series("__count").unwrap_or_default().to_vec();
    Ok(Run {
        series,
        counts,
        accepted,
        n0: start.len(),
    })
}

fn run_all(setup: &InvarianceSetup, starts: &[Vec<Point>], dt_scale: f64) -> Result<Vec<Run>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(r, s)| run_one(setup, s, r as u64, dt_scale))
        .collect()
}

/// Per-observable mean of value(T) − value(0) across replicas.
fn paired(runs: &[Run], name: &str) -> Result<EstimateWithError> {
    let diffs: Vec<f64> = runs
        .iter()
        .map(|r| r.series.last(name).unwrap_or(f64::NAN) - r.series.first(name).unwrap_or(f64::NAN))
        .collect();
    EstimateWithError::iid(&diffs)
}

/// Replica r runs on stream r of the seed. For diffusion, each threshold is widened by
/// 2|Δ(dt) − Δ(dt/2)|, the first-order estimate of the time-step bias.
pub fn invariance_test(setup: &InvarianceSetup, starts: &[Vec<Point>]) -> Result<InvarianceOutcome> {
    const MIN_REPLICAS: usize = 10;
    if starts.len() < MIN_REPLICAS {
        return Err(Error::InsufficientSamples {
            have: starts.len(),
            need: MIN_REPLICAS,
        });
    }
    let clock = std::time::Instant::now();
    let runs = run_all(setup, starts, 1.0)?;
    let halved = match setup.dynamics {
        Dynamics::Diffusion(_) => Some(run_all(setup, starts, 0.5)?),
        _ => None,
    };

    let count_conserved = runs.iter().all(|r| r.counts.iter().all(|&c| c == r.n0 as f64));
    let varied = runs
        .iter()
        .filter(|r| r.counts.iter().any(|&c| c != r.counts[0]))
        .count();
    let particles: usize = runs.iter().map(|r| r.n0).sum();
    let events: u64 = runs.iter().map(|r| r.accepted).sum();
    let elapsed = clock.elapsed();

    let reports = setup
        .observables
        .iter()
        .map(|o| {
            let est = paired(&runs, &o.name)?;
            let bias = match &halved {
                Some(h) => 2.0 * (est.mean - paired(h, &o.name)?.mean).abs(),
                None => 0.0,
            };
            let first: Vec<f64> = runs.iter().filter_map(|r| r.series.first(&o.name)).collect();
            Ok(VerificationReport::new(
                format!("invariance/{}/{}", setup.dynamics.name(), o.name),
                est.mean.abs(),
                setup.sigmas * est.stderr + bias,
                est.stderr,
                runs.len(),
                setup.seed,
            )
            .with_detail("mean_t0", first.iter().sum::<f64>() / first.len().max(1) as f64)
            .with_detail("mean_difference", est.mean)
            .with_detail("dt_bias_bound", bias)
            .with_detail("horizon", setup.horizon)
            .with_runtime(elapsed))
        })
        .collect::<Result<_>>()?;
    Ok(InvarianceOutcome {
        reports,
        count_conserved,
        count_varied_fraction: varied as f64 / runs.len() as f64,
        events_per_particle: if particles == 0 {
            0.0
        } else {
            events as f64 / particles as f64
        },
    })
}
