//! ∫μ(dγ)Σ_{x∈γ}F(x,γ) = ∫μ(dγ)∫z e^{−E(x,γ)}F(x,γ∪x)dx, checked per snapshot on the
//! difference of both sides with batch-means error bars.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{invalid, Error, Result};
use crate::functionals::TestField;
use crate::geometry::{Point, TorusBox};
use crate::gibbs::MIN_SNAPSHOTS;
use crate::potentials::{relative_energy, PairPotential};
use crate::rng::stream;
use crate::stats::EstimateWithError;

/// Bounded outer profile h of the test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GnzProfile {
    One,
    Tanh,
    /// e^{−t}; bounded for nonnegative ψ.
    NegExp,
}

impl GnzProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GnzProfile::One => 1.0,
            GnzProfile::Tanh => t.tanh(),
            GnzProfile::NegExp => (-t).exp(),
        }
    }
}

/// F(x, γ) = g(x)·h(⟨ψ, γ⟩).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnzTestFunction {
    pub name: String,
    pub g: TestField,
    pub psi: TestField,
    pub h: GnzProfile,
}

impl GnzTestFunction {
    pub fn new(name: impl Into<String>, g: TestField, psi: TestField, h: GnzProfile) -> Self {
        Self {
            name: name.into(),
            g,
            psi,
            h,
        }
    }

    /// Per-snapshot LHS − RHS with `insertions` uniform points. The RHS of an insertion x is
    /// z·V·e^{−E(x,γ)}·g(x)·h(⟨ψ,γ⟩ + ψ(x)).
    fn difference(&self, bx: &TorusBox, pot: &PairPotential, z: f64, points: &[Point], insertions: &[Point]) -> f64 {
        let t = self.psi.pairing(bx, points);
        let ht = self.h.eval(t);
        let lhs: f64 = points.iter().map(|x| self.g.value(bx, x) * ht).sum();
        let weight = z * bx.volume() / insertions.len() as f64;
        let rhs: f64 = insertions
            .iter()
            .map(|x| {
                let g = self.g.value(bx, x);
                if g == 0.0 {
                    return 0.0;
                }
                let e = relative_energy(pot, bx, x, points);
                if e == f64::INFINITY {
                    return 0.0;
                }
                weight * (-e).exp() * g * self.h.eval(t + self.psi.value(bx, x))
            })
            .sum();
        lhs - rhs
    }
}

/// One report per test function: pass iff |mean(LHS − RHS)| ≤ `sigmas`·s.e. Insertion points
/// of snapshot k come from stream k of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn gnz_test(
    snapshots: &[Vec<Point>],
    z: f64,
    pot: &PairPotential,
    bx: &TorusBox,
    family: &[GnzTestFunction],
    mc_points: usize,
    seed: u64,
    sigmas: f64,
) -> Result<Vec<VerificationReport>> {
    if snapshots.len() < MIN_SNAPSHOTS {
        return Err(Error::InsufficientSamples {
            have: snapshots.len(),
            need: MIN_SNAPSHOTS,
        });
    }
    if mc_points == 0 {
        return Err(invalid("mc_points", "must be positive"));
    }
    let start = std::time::Instant::now();
    let rows: Vec<Vec<f64>> = snapshots
        .par_iter()
        .enumerate()
        .map(|(k, pts)| {
            let mut rng = stream(seed, k as u64);
            let ins: Vec<Point> = (0..mc_points).map(|_| bx.uniform_point(&mut rng)).collect();
            family.iter().map(|f| f.difference(bx, pot, z, pts, &ins)).collect()
        })
        .collect();
    let elapsed = start.elapsed();
    family
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let diffs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let est = EstimateWithError::from_samples(&diffs)?;
            Ok(VerificationReport::new(
                format!("gnz/{}", f.name),
                est.mean.abs(),
                sigmas * est.stderr,
                est.stderr,
                snapshots.len(),
                seed,
            )
            .with_detail("mean_difference", est.mean)
            .with_detail("activity", z)
            .with_detail("mc_points", mc_points as f64)
            .with_detail("ess", est.ess)
            .with_runtime(elapsed))
        })
        .collect()
}
