//! Generator-level scaling limits, measured as squared L²(μ) distances over Gibbs snapshots.
//!
//! Glauber direction: as δ → 0 the s = 0 Kawasaki operator with kernel ã_δ approaches the
//! Glauber operator with α = 2k⁽¹⁾‖ã‖₁, tested on F = e^{⟨ψ,·⟩}.
//! Diffusion direction: as δ → ∞, δ²H_δ approaches the diffusion operator with
//! c = z∫ã(x)(x¹)²dx.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::VerificationReport;
use crate::diffusion::{DiffusionParams, MobilityConvention};
use crate::error::{Error, Result};
use crate::functionals::{CylinderFunctional, TestField};
use crate::generators::{apply_diffusion, apply_glauber, apply_kawasaki, require_kernel_fits, QuadratureGrid};
use crate::geometry::{Point, TorusBox};
use crate::potentials::PairPotential;
use crate::rates::{GlauberSpec, HopKernel, RateSpec};
use crate::stats::EstimateWithError;

pub const CSV_HEADER: &str = "delta,l2err,stderr,nSnapshots,quadResolution";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub delta: f64,
    pub l2err: f64,
    pub stderr: f64,
    pub n_snapshots: usize,
    pub quad_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCurve {
    pub rows: Vec<LimitRow>,
    pub report: VerificationReport,
}

pub fn write_limit_csv<W: Write>(w: &mut W, rows: &[LimitRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.delta, r.l2err, r.stderr, r.n_snapshots, r.quad_resolution)?;
    }
    Ok(())
}

/// (nonincreasing up to one combined s.e. per step, last/first ratio).
pub fn curve_passes(rows: &[LimitRow]) -> (bool, f64) {
    let monotone = rows.windows(2).all(|w| {
        let slack = (w[0].stderr * w[0].stderr + w[1].stderr * w[1].stderr).sqrt();
        w[1].l2err <= w[0].l2err + slack
    });
    let ratio = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if a.l2err > 0.0 => b.l2err / a.l2err,
        (Some(_), Some(b)) if b.l2err == 0.0 => 0.0,
        _ => f64::INFINITY,
    };
    (monotone, ratio)
}

fn finish(name: &str, rows: Vec<LimitRow>, seed: u64, started: std::time::Instant) -> LimitCurve {
    let (monotone, ratio) = curve_passes(&rows);
    let n = rows.first().map_or(0, |r| r.n_snapshots);
    let mut report = VerificationReport::new(name, ratio, 0.25, rows.last().map_or(0.0, |r| r.stderr), n, seed)
        .require(monotone, "nonincreasing")
        .with_runtime(started.elapsed());
    if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
        report = report.with_detail("first_l2err", a.l2err).with_detail("last_l2err", b.l2err);
    }
    LimitCurve { rows, report }
}

fn squared_errors<F>(snapshots: &[Vec<Point>], f: F) -> Result<(EstimateWithError, usize)>
where
    F: Fn(usize, &[Point]) -> Result<(f64, usize)> + Sync,
{
    let vals: Vec<(f64, usize)> = snapshots
        .par_iter()
        .enumerate()
        .map(|(i, p)| f(i, p))
        .collect::<Result<_>>()?;
    let sq: Vec<f64> = vals.iter().map(|v| v.0 * v.0).collect();
    let res = vals.iter().map(|v| v.1).max().unwrap_or(0);
    Ok((EstimateWithError::from_samples(&sq)?, res))
}

#[derive(Debug, Clone)]
pub struct GlauberLimitSetup {
    /// Descending.
    pub deltas: Vec<f64>,
    pub base_kernel: HopKernel,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub activity: f64,
    pub psi: TestField,
    pub grid: QuadratureGrid,
    pub seed: u64,
}

/// Empirical first correlation N/V averaged over snapshots.
fn density(snapshots: &[Vec<Point>], bx: &TorusBox) -> f64 {
    let n: usize = snapshots.iter().map(Vec::len).sum();
    n as f64 / (snapshots.len() as f64 * bx.volume())
}

fn check_snapshots(snapshots: &[Vec<Point>]) -> Result<()> {
    const MIN: usize = 40;
    if snapshots.len() < MIN {
        return Err(Error::InsufficientSamples {
            have: snapshots.len(),
            need: MIN,
        });
    }
    Ok(())
}

pub fn glauber_limit_experiment(setup: &GlauberLimitSetup, snapshots: &[Vec<Point>]) -> Result<LimitCurve> {
    check_snapshots(snapshots)?;
    let started = std::time::Instant::now();
    let bx = &setup.bx;
    for &d in &setup.deltas {
        require_kernel_fits(&setup.base_kernel.with_delta(d)?, bx)?;
    }
    let f = CylinderFunctional::exponential(setup.psi.clone());
    let alpha = 2.0 * density(snapshots, bx) * setup.base_kernel.l1_norm();
    let glauber = GlauberSpec::new(0.0, setup.activity, alpha)?;
    let limit: Vec<f64> = snapshots
        .par_iter()
        .map(|p| apply_glauber(&f, p, &glauber, &setup.pot, bx, &setup.grid).map(|e| e.value))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &delta in &setup.deltas {
        let spec = RateSpec::kawasaki_s(0.0, setup.base_kernel.with_delta(delta)?, setup.activity)?;
        let (est, res) = squared_errors(snapshots, |i, p| {
            let k = apply_kawasaki(&f, p, &spec, &setup.pot, bx, &setup.grid)?;
            Ok((k.value - limit[i], k.resolution))
        })?;
        rows.push(LimitRow {
            delta,
            l2err: est.mean,
            stderr: est.stderr,
            n_snapshots: snapshots.len(),
            quad_resolution: res,
        });
    }
    let mut curve = finish("limit/glauber", rows, setup.seed, started);
    curve.report = curve.report.with_detail("alpha", alpha);
    Ok(curve)
}

#[derive(Debug, Clone)]
pub struct DiffusionLimitSetup {
    /// Ascending.
    pub deltas: Vec<f64>,
    pub s: f64,
    pub base_kernel: HopKernel,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub activity: f64,
    pub functional: CylinderFunctional,
    pub grid: QuadratureGrid,
    pub convention: MobilityConvention,
    pub seed: u64,
}

pub fn diffusion_limit_experiment(setup: &DiffusionLimitSetup, snapshots: &[Vec<Point>]) -> Result<LimitCurve> {
    check_snapshots(snapshots)?;
    setup.pot.require_smooth()?;
    let started = std::time::Instant::now();
    let bx = &setup.bx;
    for &d in &setup.deltas {
        require_kernel_fits(&setup.base_kernel.with_delta(d)?, bx)?;
    }
    let c = setup.activity * setup.base_kernel.base_second_moment();
    let mut params = DiffusionParams::new(setup.s, c, 1.0, setup.pot, *bx);
    params.convention = setup.convention;
    let f = &setup.functional;
    let mut rows = Vec::new();
    for &delta in &setup.deltas {
        let spec = RateSpec::kawasaki_s(setup.s, setup.base_kernel.with_delta(delta)?, setup.activity)?;
        let (est, res) = squared_errors(snapshots, |_, p| {
            let k = apply_kawasaki(f, p, &spec, &setup.pot, bx, &setup.grid)?;
            let limit = apply_diffusion(f, p, &params)?;
            Ok((delta * delta * k.value - limit, k.resolution))
        })?;
        rows.push(LimitRow {
            delta,
            l2err: est.mean,
            stderr: est.stderr,
            n_snapshots: snapshots.len(),
            quad_resolution: res,
        });
    }
    let name = format!("limit/diffusion/s={}", setup.s);
    let mut curve = finish(&name, rows, setup.seed, started);
    curve.report = curve.report.with_detail("mobility", c);
    Ok(curve)
}
