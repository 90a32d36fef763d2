//! Euler–Maruyama integration of the interacting diffusion with generator
//! c·Σ_x M(x)(Δ_x − k⟨∇E(x,γ∖x), ∇_x⟩), where the mobility M and drift factor k depend on s
//! through a [`MobilityConvention`]. At s = ½ both conventions give the gradient dynamics
//! dx = −c∇Φ dt + √(2c) dW.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, TorusBox, ORIGIN};
use crate::kawasaki::time_grid;
use crate::observables::{NamedObservable, TimeSeries};
use crate::potentials::{relative_energy_skipping, PairPotential};
use crate::rng::SimRng;

/// How s enters the mobility and drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MobilityConvention {
    /// M = e^{(1−2s)E}, k = 2s.
    #[default]
    Standard,
    /// M = e^{(2s−1)E}, k = 2(1−s); the small-jump limit of hops with rate c_s.
    Mirrored,
}

impl MobilityConvention {
    /// (mobility exponent, drift factor) so that M = e^{exponent·E}.
    pub fn coefficients(&self, s: f64) -> (f64, f64) {
        match self {
            MobilityConvention::Standard => (1.0 - 2.0 * s, 2.0 * s),
            MobilityConvention::Mirrored => (2.0 * s - 1.0, 2.0 * (1.0 - s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionParams {
    pub s: f64,
    /// c
    pub mobility: f64,
    pub dt: f64,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub seed: u64,
    /// Largest tolerated |E(x)| change of any particle in one step.
    pub energy_guard: f64,
    pub convention: MobilityConvention,
}

impl DiffusionParams {
    pub fn new(s: f64, mobility: f64, dt: f64, pot: PairPotential, bx: TorusBox) -> Self {
        Self {
            s,
            mobility,
            dt,
            pot,
            bx,
            seed: 0,
            energy_guard: 5.0,
            convention: MobilityConvention::Standard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.s) {
            return Err(invalid("s", format!("must lie in [0, 1], got {}", self.s)));
        }
        if !(self.mobility.is_finite() && self.mobility > 0.0) {
            return Err(invalid("mobility", "must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.energy_guard > 0.0) {
            return Err(invalid("energy_guard", "must be positive"));
        }
        self.pot.require_smooth()?;
        self.bx.require_reach(self.pot.range(), "potential range")
    }

    /// (M(x), drift factor k) for a particle with E(x, γ∖x) = `e`.
    pub fn coefficients(&self, e: f64) -> (f64, f64) {
        let (a, k) = self.convention.coefficients(self.s);
        let m = if a == 0.0 { 1.0 } else { (a * e).exp() };
        (m, k)
    }
}

/// E(x_i, γ∖x_i) for every particle.
pub fn energies(pot: &PairPotential, bx: &TorusBox, points: &[Point]) -> Vec<f64> {
    (0..points.len())
        .map(|i| relative_energy_skipping(pot, bx, &points[i], points, Some(i)))
        .collect()
}

/// ∇_x E(x_i, γ∖x_i) = Σ_u ∇φ(x_i − u).
pub fn force_gradient(pot: &PairPotential, bx: &TorusBox, points: &[Point], i: usize) -> Point {
    let mut g = ORIGIN;
    if pot.is_free() {
        return g;
    }
    for (j, u) in points.iter().enumerate() {
        if j == i {
            continue;
        }
        let gj = pot.gradient(&bx.displacement(u, &points[i]));
        for k in 0..3 {
            g[k] += gj[k];
        }
    }
    g
}

/// Deterministic EM update with standard normal increments `noise[i]`:
/// x_i ← x_i − k·c·M_i·∇E_i·dt + √(2cM_i·dt)·ξ_i, mobility frozen at the step start.
pub fn em_step_with_noise(params: &DiffusionParams, points: &[Point], noise: &[Point]) -> Vec<Point> {
    let bx = &params.bx;
    let es = energies(&params.pot, bx, points);
    let c = params.mobility;
    let dt = params.dt;
    (0..points.len())
        .map(|i| {
            let (m, k) = params.coefficients(es[i]);
            let g = force_gradient(&params.pot, bx, points, i);
            let sigma = (2.0 * c * m * dt).sqrt();
            let mut v = ORIGIN;
            for a in 0..bx.dim() {
                v[a] = -k * c * m * g[a] * dt + sigma * noise[i][a];
            }
            bx.translate(&points[i], &v)
        })
        .collect()
}

/// E[f(γ_dt)] after one EM step from `points`, by tensor Gauss–Hermite quadrature with
/// `order` nodes per noise coordinate. Cost is order^(N·d).
pub fn step_expectation<F: Fn(&[Point]) -> f64>(
    params: &DiffusionParams,
    points: &[Point],
    order: usize,
    f: F,
) -> Result<f64> {
    let dims = points.len() * params.bx.dim();
    let order = NonZeroUsize::new(order).ok_or_else(|| invalid("order", "must be positive"))?;
    let rule = GaussHermite::new(order);
    // nodes for the standard normal: ξ = √2·x, weight w/√π
    let nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (std::f64::consts::SQRT_2 * x, w / std::f64::consts::PI.sqrt()))
        .collect();
    let total = nodes.len().checked_pow(dims as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| {
        invalid("order", "tensor grid too large for this configuration")
    })?;
    let d = params.bx.dim();
    let mut noise = vec![ORIGIN; points.len()];
    let mut acc = 0.0;
    for idx in 0..total {
        let mut rest = idx;
        let mut w = 1.0;
        for slot in 0..dims {
            let (x, wi) = nodes[rest % nodes.len()];
            rest /= nodes.len();
            noise[slot / d][slot % d] = x;
            w *= wi;
        }
        acc += w * f(&em_step_with_noise(params, points, &noise));
    }
    Ok(acc)
}

pub struct DiffusionEngine {
    params: DiffusionParams,
    points: Vec<Point>,
    /// Unwrapped displacement of each particle since the start.
    travelled: Vec<Point>,
    energies: Vec<f64>,
    clock: f64,
    steps: u64,
    rng: SimRng,
}

impl DiffusionEngine {
    pub fn new(params: DiffusionParams, points: Vec<Point>, rng: SimRng) -> Result<Self> {
        params.validate()?;
        let points: Vec<Point> = points.into_iter().map(|p| params.bx.wrap(p)).collect();
        let energies = energies(&params.pot, &params.bx, &points);
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::BlowUp {
                change: f64::INFINITY,
                guard: params.energy_guard,
            });
        }
        Ok(Self {
            travelled: vec![ORIGIN; points.len()],
            params,
            points,
            energies,
            clock: 0.0,
            steps: 0,
            rng,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn travelled(&self) -> &[Point] {
        &self.travelled
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self) -> Result<()> {
        let d = self.params.bx.dim();
        let noise: Vec<Point> = (0..self.points.len())
            .map(|_| {
                let mut v = ORIGIN;
                for c in v.iter_mut().take(d) {
                    *c = self.rng.sample(StandardNormal);
                }
                v
            })
            .collect();
        let next = em_step_with_noise(&self.params, &self.points, &noise);
        let new_energies = energies(&self.params.pot, &self.params.bx, &next);
        for (a, b) in self.energies.iter().zip(&new_energies) {
            let change = (b - a).abs();
            if !(change <= self.params.energy_guard) {
                return Err(Error::BlowUp {
                    change,
                    guard: self.params.energy_guard,
                });
            }
        }
        for (i, p) in next.iter().enumerate() {
            let v = self.params.bx.displacement(&self.points[i], p);
            for (t, dv) in self.travelled[i].iter_mut().zip(v) {
                *t += dv;
            }
        }
        self.points = next;
        self.energies = new_energies;
        self.clock += self.params.dt;
        self.steps += 1;
        Ok(())
    }

    /// Observables every `sample_dt` (rounded to whole steps) up to `horizon`.
    pub fn run(&mut self, horizon: f64, sample_dt: f64, observables: &[NamedObservable]) -> Result<TimeSeries> {
        let n0 = self.points.len();
        let start_steps = self.steps;
        let mut series = TimeSeries::new(observables);
        for t in time_grid(0.0, horizon, sample_dt) {
            let target = start_steps + (t / self.params.dt).round() as u64;
            while self.steps < target {
                self.step()?;
            }
            assert_eq!(self.points.len(), n0);
            series.record(self.clock, &self.params.bx, &self.points, observables);
        }
        Ok(series)
    }
}
