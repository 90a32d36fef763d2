//! Exact algebraic residuals of the rate families, evaluated by brute-force energy sums on
//! random configurations:
//! (i) c̃_s = c_s, and symmetrizing twice changes nothing;
//! (ii) c̃(x,y,γ)e^{−E(x,γ∖x)} = c̃(y,x,γ∖x∪y)e^{−E(y,γ∖x)} for c_{u,v}, with the reverse hop
//!      rebuilt from the moved configuration;
//! (iii) b_s(x,γ) = e^{−E(x,γ)}d_s(x,γ∪x).

use rand::Rng;

use super::VerificationReport;
use crate::error::Result;
use crate::geometry::{Point, TorusBox};
use crate::potentials::{random_admissible, relative_energy, relative_energy_skipping, PairPotential};
use crate::rates::{symmetrize, GlauberSpec, Hop, HopKernel, RateSpec, RateVariant};
use crate::rng::stream;

pub const BALANCE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSuite {
    pub s_values: Vec<f64>,
    pub uv_pairs: Vec<(f64, f64)>,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub kernel: HopKernel,
    pub cases: usize,
    pub max_particles: usize,
    pub seed: u64,
}

/// |a − b| relative to max(1, |a|, |b|); equal values (including both zero) give 0.
fn residual(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// A random hop target inside the kernel support of `x`.
fn target<R: Rng + ?Sized>(rng: &mut R, bx: &TorusBox, kernel: &HopKernel, x: &Point) -> Point {
    let v = crate::gibbs::uniform_in_ball(rng, bx.dim(), kernel.support());
    bx.translate(x, &v)
}

pub fn detailed_balance_suite(suite: &BalanceSuite) -> Result<VerificationReport> {
    let start = std::time::Instant::now();
    let bx = &suite.bx;
    let pot = &suite.pot;
    let mut rng = stream(suite.seed, 0);
    let mut max_sym: f64 = 0.0;
    let mut max_db: f64 = 0.0;
    let mut max_glauber: f64 = 0.0;
    let mut blocked = 0usize;
    let s_specs: Vec<RateSpec> = suite
        .s_values
        .iter()
        .map(|&s| RateSpec::kawasaki_s(s, suite.kernel, 1.0))
        .collect::<Result<_>>()?;
    let uv_specs: Vec<RateSpec> = suite
        .uv_pairs
        .iter()
        .map(|&(u, v)| RateSpec::new(RateVariant::KawasakiUv { u, v }, suite.kernel, 1.0))
        .collect::<Result<_>>()?;
    let glauber: Vec<GlauberSpec> = suite
        .s_values
        .iter()
        .map(|&s| GlauberSpec::new(s, 1.0, 1.0))
        .collect::<Result<_>>()?;

    for _ in 0..suite.cases {
        let n = rng.random_range(1..=suite.max_particles.max(1));
        let points = random_admissible(&mut rng, bx, pot, n);
        let i = rng.random_range(0..points.len());
        let y = target(&mut rng, bx, &suite.kernel, &points[i]);
        let hop = Hop::from_points(pot, bx, &suite.kernel, &points, i, y);
        if hop.blocked() {
            blocked += 1;
        }
        // γ∖x∪y with y at index i
        let mut moved = points.clone();
        moved[i] = y;
        let back = Hop::from_points(pot, bx, &suite.kernel, &moved, i, points[i]);

        for spec in &s_specs {
            let c = spec.raw(&hop);
            let sym = spec.symmetrized(&hop);
            let generic = symmetrize(&spec.variant, &hop);
            max_sym = max_sym.max(residual(sym, if hop.blocked() { 0.0 } else { c }));
            max_sym = max_sym.max(residual(generic, sym));
        }
        for spec in s_specs.iter().chain(&uv_specs) {
            let fwd = spec.symmetrized(&hop) * (-hop.e_x).exp();
            let rev = spec.symmetrized(&back) * (-back.e_x).exp();
            max_db = max_db.max(residual(fwd, rev));
            // c̃̃ = c̃
            let twice = symmetrize(&|h: &Hop| spec.symmetrized(h), &hop);
            max_db = max_db.max(residual(twice, spec.symmetrized(&hop)));
        }
        // birth at a fresh uniform location
        let x = bx.uniform_point(&mut rng);
        let e = relative_energy(pot, bx, &x, &points);
        let mut with_x = points.clone();
        with_x.push(x);
        let e_in = relative_energy_skipping(pot, bx, &x, &with_x, Some(with_x.len() - 1));
        for g in &glauber {
            let b = g.birth_rate(e);
            let d = if e_in == f64::INFINITY { 0.0 } else { (-e_in).exp() * g.death_rate(e_in) };
            max_glauber = max_glauber.max(residual(b, d));
        }
    }
    let stat = max_sym.max(max_db).max(max_glauber);
    Ok(VerificationReport::new("detailed-balance", stat, BALANCE_THRESHOLD, 0.0, suite.cases, suite.seed)
        .with_detail("symmetrization_residual", max_sym)
        .with_detail("balance_residual", max_db)
        .with_detail("glauber_residual", max_glauber)
        .with_detail("blocked_cases", blocked as f64)
        .with_runtime(start.elapsed()))
}
