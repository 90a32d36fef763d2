//! Pointwise action of the Kawasaki, Glauber and limiting diffusion operators on cylinder
//! functionals. Each operator H is the nonnegative one, so −H is the Markov generator.
//!
//! Spatial integrals use tensor midpoint rules on boxes around the integrand's support. The
//! reported error compares the resolution n actually used with n/2 and n/4.

use serde::{Deserialize, Serialize};

use crate::diffusion::{force_gradient, DiffusionParams};
use crate::error::{invalid, Error, Result};
use crate::functionals::CylinderFunctional;
use crate::geometry::{Point, TorusBox, ORIGIN};
use crate::potentials::{relative_energy_skipping, PairPotential};
use crate::rates::{GlauberSpec, Hop, HopKernel, HopRate, RateSpec};
use crate::stats::EstimateWithError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureGrid {
    /// Minimum midpoints per axis of every integration box.
    pub points_per_axis: usize,
    /// Optional cap on the midpoint spacing; wide boxes get more points.
    #[serde(default)]
    pub max_spacing: Option<f64>,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            points_per_axis: 64,
            max_spacing: None,
        }
    }
}

impl QuadratureGrid {
    pub fn new(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            max_spacing: None,
        }
    }

    pub fn with_max_spacing(mut self, h: f64) -> Self {
        self.max_spacing = Some(h);
        self
    }

    /// Same grid at twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            points_per_axis: 2 * self.points_per_axis,
            max_spacing: self.max_spacing.map(|h| h / 2.0),
        }
    }

    /// Midpoints per axis for a box of side `width`; always even and at least 2.
    pub fn resolution(&self, width: f64) -> usize {
        let mut n = self.points_per_axis.max(2);
        if let Some(h) = self.max_spacing {
            n = n.max((width / h).ceil() as usize);
        }
        n + n % 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorEvaluation {
    pub value: f64,
    /// Two-level refinement estimate summed over integration boxes.
    pub error: f64,
    /// Largest per-axis resolution used.
    pub resolution: usize,
    pub particles: usize,
}

impl GeneratorEvaluation {
    fn exact(value: f64, particles: usize) -> Self {
        Self {
            value,
            error: 0.0,
            resolution: 0,
            particles,
        }
    }
}

/// ∫ over the cube `lo + [0, width]^d` of `f` by the midpoint rule with `n` points per axis,
/// and the error estimate |Q(n) − Q(n/2)| + |Q(n/2) − Q(n/4)|. `f` receives the offset from
/// `lo`.
fn midpoint_pair<F: FnMut(&Point) -> Result<f64>>(
    dim: usize,
    width: f64,
    n: usize,
    mut f: F,
) -> Result<(f64, f64)> {
    let mut rule = |m: usize| -> Result<f64> {
        let h = width / m as f64;
        let total = m.pow(dim as u32);
        let mut acc = 0.0;
        let mut v = ORIGIN;
        for idx in 0..total {
            let mut rest = idx;
            for c in v.iter_mut().take(dim) {
                *c = (rest % m) as f64 * h + 0.5 * h;
                rest /= m;
            }
            acc += f(&v)?;
        }
        Ok(acc * h.powi(dim as i32))
    };
    let fine = rule(n)?;
    let mid = rule(n / 2)?;
    let mut err = (fine - mid).abs();
    if n >= 8 {
        err += (mid - rule(n / 4)?).abs();
    }
    Ok((fine, err))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure(format!("{what} integrand is {v}")))
    }
}

/// Whether D⁻⁺_{xy}F can be nonzero for some y within `reach` of `x`.
fn hop_can_change(f: &CylinderFunctional, bx: &TorusBox, x: &Point, reach: f64) -> bool {
    f.touches(bx, x)
        || f.fields().iter().any(|field| {
            field
                .bumps
                .iter()
                .any(|b| bx.dist(x, &b.center) < reach + b.radius)
        })
}

/// (HF)(γ) = −2z Σ_x ∫ c(x,y,γ)(D⁻⁺_{xy}F)(γ) dy for an arbitrary hop rate `rate`, which must
/// include the kernel factor ã_δ(x − y) carried by [`Hop::kernel`].
#[allow(clippy::too_many_arguments)]
pub fn apply_hop_operator<R: HopRate + ?Sized>(
    f: &CylinderFunctional,
    points: &[Point],
    rate: &R,
    kernel: &HopKernel,
    activity: f64,
    pot: &PairPotential,
    bx: &TorusBox,
    grid: &QuadratureGrid,
) -> Result<GeneratorEvaluation> {
    if f.fields().is_empty() {
        return Ok(GeneratorEvaluation::exact(0.0, points.len()));
    }
    let reach = kernel.support();
    bx.require_reach(reach, "hop kernel support")?;
    let dim = bx.dim();
    let t = f.sums(bx, points);
    let f0 = f.outer_value(&t);
    let width = 2.0 * reach;
    let n = grid.resolution(width);
    let mut value = 0.0;
    let mut error = 0.0;
    for (i, x) in points.iter().enumerate() {
        if !hop_can_change(f, bx, x, reach) {
            continue;
        }
        // particles that can interact with x or any target y
        let near: Vec<Point> = points
            .iter()
            .enumerate()
            .filter(|&(j, u)| j != i && bx.dist(x, u) < reach + pot.range())
            .map(|(_, u)| *u)
            .collect();
        let e_x = relative_energy_skipping(pot, bx, x, &near, None);
        let (q, err) = midpoint_pair(dim, width, n, |v| {
            let mut off = ORIGIN;
            for c in 0..dim {
                off[c] = v[c] - reach;
            }
            let k = kernel.value(&off);
            if k == 0.0 {
                return Ok(0.0);
            }
            let y = bx.translate(x, &off);
            let hop = Hop {
                x: *x,
                y,
                e_x,
                e_y: relative_energy_skipping(pot, bx, &y, &near, None),
                kernel: k,
            };
            let c = rate.rate(&hop);
            if c == 0.0 {
                return Ok(0.0);
            }
            finite(c * f.d_minus_plus_at(bx, &t, f0, x, &y), "hop")
        })?;
        value += q;
        error += err;
    }
    let scale = -2.0 * activity;
    Ok(GeneratorEvaluation {
        value: scale * value,
        error: scale.abs() * error,
        resolution: n,
        particles: points.len(),
    })
}

/// Kawasaki operator with the symmetrized rate c̃ of `spec`.
pub fn apply_kawasaki(
    f: &CylinderFunctional,
    points: &[Point],
    spec: &RateSpec,
    pot: &PairPotential,
    bx: &TorusBox,
    grid: &QuadratureGrid,
) -> Result<GeneratorEvaluation> {
    let rate = |h: &Hop| spec.symmetrized(h);
    apply_hop_operator(f, points, &rate, &spec.kernel, spec.activity, pot, bx, grid)
}

/// (H_G F)(γ) = −∫ z b(x,γ)(D⁺_xF)(γ) dx − Σ_x d(x,γ)(D⁻_xF)(γ).
///
/// D⁺_xF vanishes off the field supports, so the birth integral runs over the bounding cubes
/// of the bumps, each point weighted by 1/(number of cubes containing it).
pub fn apply_glauber(
    f: &CylinderFunctional,
    points: &[Point],
    spec: &GlauberSpec,
    pot: &PairPotential,
    bx: &TorusBox,
    grid: &QuadratureGrid,
) -> Result<GeneratorEvaluation> {
    if f.fields().is_empty() {
        return Ok(GeneratorEvaluation::exact(0.0, points.len()));
    }
    let dim = bx.dim();
    let t = f.sums(bx, points);
    let f0 = f.outer_value(&t);

    let mut death = 0.0;
    for (i, x) in points.iter().enumerate() {
        if !f.touches(bx, x) {
            continue;
        }
        let e = relative_energy_skipping(pot, bx, x, points, Some(i));
        death += finite(spec.death_rate(e) * f.d_minus_at(bx, &t, f0, x), "death")?;
    }

    let cubes: Vec<(Point, f64)> = f
        .fields()
        .iter()
        .flat_map(|field| field.bumps.iter().map(|b| (b.center, b.radius)))
        .collect();
    let in_cube = |y: &Point, (c, r): &(Point, f64)| {
        let d = bx.displacement(c, y);
        d.iter().take(dim).all(|a| a.abs() < *r)
    };
    let mut birth = 0.0;
    let mut error = 0.0;
    let mut resolution = 0;
    for (center, radius) in &cubes {
        let width = 2.0 * radius;
        let n = grid.resolution(width);
        resolution = resolution.max(n);
        let (q, err) = midpoint_pair(dim, width, n, |v| {
            let mut off = ORIGIN;
            for c in 0..dim {
                off[c] = v[c] - radius;
            }
            let y = bx.translate(center, &off);
            let dp = f.d_plus_at(bx, &t, f0, &y);
            if dp == 0.0 {
                return Ok(0.0);
            }
            let b = spec.birth_rate(relative_energy_skipping(pot, bx, &y, points, None));
            if b == 0.0 {
                return Ok(0.0);
            }
            let count = if cubes.len() == 1 {
                1
            } else {
                cubes.iter().filter(|cube| in_cube(&y, cube)).count().max(1)
            };
            finite(b * dp / count as f64, "birth")
        })?;
        birth += q;
        error += err;
    }
    let z = spec.activity;
    Ok(GeneratorEvaluation {
        value: -z * birth - death,
        error: z * error,
        resolution,
        particles: points.len(),
    })
}

/// (H̃F)(γ) = c Σ_x M(x)(−Δ_xF + k⟨∇_xF, ∇_xE(x,γ∖x)⟩), exact.
pub fn apply_diffusion(
    f: &CylinderFunctional,
    points: &[Point],
    params: &DiffusionParams,
) -> Result<f64> {
    params.pot.require_smooth()?;
    if f.fields().is_empty() {
        return Ok(0.0);
    }
    let bx = &params.bx;
    let t = f.sums(bx, points);
    let mut acc = 0.0;
    for (i, x) in points.iter().enumerate() {
        if !f.touches(bx, x) {
            continue;
        }
        let e = relative_energy_skipping(&params.pot, bx, x, points, Some(i));
        let (m, k) = params.coefficients(e);
        let lap = f.point_laplacian_at(bx, &t, x);
        let drift = if k == 0.0 {
            0.0
        } else {
            let gf = f.point_gradient_at(bx, &t, x);
            let ge = force_gradient(&params.pot, bx, points, i);
            k * (gf[0] * ge[0] + gf[1] * ge[1] + gf[2] * ge[2])
        };
        acc += m * (drift - lap);
    }
    Ok(params.mobility * acc)
}

/// Monte Carlo estimates of ⟨HF, G⟩_μ, ⟨F, HG⟩_μ and of their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfAdjointness {
    pub hf_g: EstimateWithError,
    pub f_hg: EstimateWithError,
    /// Batch-means estimate of the per-snapshot difference HF·G − F·HG.
    pub residual: EstimateWithError,
}

impl SelfAdjointness {
    /// |residual| ≤ k·s.e.
    pub fn symmetric_within(&self, k: f64) -> bool {
        self.residual.within(0.0, k)
    }
}

/// `apply` maps (F, γ) to (HF)(γ). The residual is paired per snapshot, so identical F and G
/// give exactly zero.
pub fn self_adjointness_residual<A>(
    apply: A,
    f: &CylinderFunctional,
    g: &CylinderFunctional,
    bx: &TorusBox,
    snapshots: &[Vec<Point>],
) -> Result<SelfAdjointness>
where
    A: Fn(&CylinderFunctional, &[Point]) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    const MIN: usize = 40;
    if snapshots.len() < MIN {
        return Err(Error::InsufficientSamples {
            have: snapshots.len(),
            need: MIN,
        });
    }
    let rows: Vec<(f64, f64)> = snapshots
        .par_iter()
        .map(|pts| -> Result<(f64, f64)> {
            let hf = apply(f, pts)?;
            let hg = apply(g, pts)?;
            Ok((hf * g.evaluate(bx, pts), f.evaluate(bx, pts) * hg))
        })
        .collect::<Result<_>>()?;
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diff: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    Ok(SelfAdjointness {
        hf_g: EstimateWithError::from_samples(&a)?,
        f_hg: EstimateWithError::from_samples(&b)?,
        residual: EstimateWithError::from_samples(&diff)?,
    })
}

/// Closed form of the Kawasaki operator on F = e^{⟨ψ,γ⟩} for φ ≡ 0 and rate c_s:
/// −2zF(γ)Σ_x ∫ã_δ(x − y)(e^{ψ(y)−ψ(x)} − 1) dy, with the y-integral by midpoint rule.
pub fn free_kawasaki_exponential(
    psi: &crate::functionals::TestField,
    points: &[Point],
    kernel: &HopKernel,
    activity: f64,
    bx: &TorusBox,
    points_per_axis: usize,
) -> Result<f64> {
    let dim = bx.dim();
    let reach = kernel.support();
    let width = 2.0 * reach;
    let fval = psi.pairing(bx, points).exp();
    let mut acc = 0.0;
    for x in points {
        let px = psi.value(bx, x);
        let (q, _) = midpoint_pair(dim, width, points_per_axis + points_per_axis % 2, |v| {
            let mut off = ORIGIN;
            for c in 0..dim {
                off[c] = v[c] - reach;
            }
            let y = bx.translate(x, &off);
            Ok(kernel.value(&off) * ((psi.value(bx, &y) - px).exp() - 1.0))
        })?;
        acc += q;
    }
    Ok(-2.0 * activity * fval * acc)
}

/// Validates that the kernel at scale δ fits the box.
pub fn require_kernel_fits(kernel: &HopKernel, bx: &TorusBox) -> Result<()> {
    if kernel.dim() != bx.dim() {
        return Err(invalid("kernel", "dimension differs from the box"));
    }
    bx.require_reach(kernel.support(), "hop kernel support")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::MobilityConvention;
    use crate::functionals::{Outer, TestField};
    use crate::potentials::random_admissible;
    use crate::rates::{KernelShape, RateVariant};
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn field1(c: f64, r: f64, a: f64) -> TestField {
        TestField::bump([c, 0.0, 0.0], r, a).unwrap()
    }

    fn sw() -> PairPotential {
        PairPotential::square_well(0.3, 0.5, 1.0).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let bx = TorusBox::new(2, 6.0).unwrap();
        let mut rng = stream(60, 0);
        let pts = random_admissible(&mut rng, &bx, &sw(), 15);
        let f = CylinderFunctional::constant(3.0);
        let kernel = HopKernel::new(KernelShape::Ball, 1.0, 1.0, 2).unwrap();
        let spec = RateSpec::kawasaki_s(0.3, kernel, 0.5).unwrap();
        let grid = QuadratureGrid::new(8);
        assert_eq!(apply_kawasaki(&f, &pts, &spec, &sw(), &bx, &grid).unwrap().value, 0.0);
        let g = GlauberSpec::new(0.3, 0.5, 1.0).unwrap();
        assert_eq!(apply_glauber(&f, &pts, &g, &sw(), &bx, &grid).unwrap().value, 0.0);
        let soft = PairPotential::soft_repulsive(1.0, 1.0).unwrap();
        let dp = DiffusionParams::new(0.2, 1.0, 0.01, soft, bx);
        assert_eq!(apply_diffusion(&f, &pts, &dp).unwrap(), 0.0);
    }

    #[test]
    fn free_kawasaki_matches_closed_form() {
        let bx = TorusBox::new(1, 20.0).unwrap();
        let psi = TestField::sum(vec![
            field1(5.0, 1.5, 0.7).bumps[0],
            field1(6.0, 1.0, -0.4).bumps[0],
        ])
        .unwrap();
        let f = CylinderFunctional::exponential(psi.clone());
        let pts = vec![[4.2, 0.0, 0.0], [5.5, 0.0, 0.0], [12.0, 0.0, 0.0]];
        for shape in [KernelShape::Ball, KernelShape::Triangle] {
            let kernel = HopKernel::new(shape, 2.0, 0.8, 1).unwrap();
            let spec = RateSpec::kawasaki_s(0.4, kernel, 0.6).unwrap();
            let got = apply_kawasaki(&f, &pts, &spec, &PairPotential::free(), &bx, &QuadratureGrid::new(256))
                .unwrap();
            let oracle = free_kawasaki_exponential(&psi, &pts, &kernel, 0.6, &bx, 4096).unwrap();
            assert!((got.value - oracle).abs() < 1e-4 * oracle.abs().max(1.0), "{got:?} vs {oracle}");
            assert!(got.error < 1e-3 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn distant_single_particle_gives_zero() {
        let bx = TorusBox::new(2, 12.0).unwrap();
        let f = CylinderFunctional::exponential(TestField::bump([2.0, 2.0, 0.0], 1.0, 1.0).unwrap());
        let kernel = HopKernel::new(KernelShape::Ball, 1.0, 1.0, 2).unwrap();
        let spec = RateSpec::kawasaki_s(0.5, kernel, 1.0).unwrap();
        let got = apply_kawasaki(&f, &[[8.0, 8.0, 0.0]], &spec, &sw(), &bx, &QuadratureGrid::default()).unwrap();
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn free_glauber_matches_closed_form() {
        let bx = TorusBox::new(1, 20.0).unwrap();
        let psi = field1(5.0, 1.5, 0.7);
        let f = CylinderFunctional::exponential(psi.clone());
        let pts = vec![[4.2, 0.0, 0.0], [5.5, 0.0, 0.0], [12.0, 0.0, 0.0]];
        let z = 0.8;
        let spec = GlauberSpec::new(0.5, z, 1.0).unwrap();
        let got = apply_glauber(&f, &pts, &spec, &PairPotential::free(), &bx, &QuadratureGrid::new(512)).unwrap();
        let fv = f.evaluate(&bx, &pts);
        let birth = crate::potentials::simpson(|x| (psi.value(&bx, &[x, 0.0, 0.0])).exp_m1(), 3.5, 6.5, 2000).unwrap();
        let death: f64 = pts.iter().map(|x| (-psi.value(&bx, x)).exp_m1()).sum();
        let oracle = -z * birth * fv - fv * death;
        assert!((got.value - oracle).abs() < 1e-5, "{got:?} vs {oracle}");
        // empty configuration: only births
        let empty = apply_glauber(&f, &[], &spec, &PairPotential::free(), &bx, &QuadratureGrid::new(512)).unwrap();
        assert!((empty.value + z * birth).abs() < 1e-5);
    }

    #[test]
    fn overlapping_bumps_are_not_double_counted() {
        let bx = TorusBox::new(1, 20.0).unwrap();
        let psi = TestField::sum(vec![field1(5.0, 1.0, 0.5).bumps[0], field1(5.5, 1.0, 0.5).bumps[0]]).unwrap();
        let f = CylinderFunctional::exponential(psi.clone());
        let spec = GlauberSpec::new(0.0, 1.0, 1.0).unwrap();
        let got = apply_glauber(&f, &[], &spec, &PairPotential::free(), &bx, &QuadratureGrid::new(2048)).unwrap();
        let birth = crate::potentials::simpson(|x| (psi.value(&bx, &[x, 0.0, 0.0])).exp_m1(), 3.0, 7.5, 4000).unwrap();
        assert!((got.value + birth).abs() < 1e-3, "{} vs {}", got.value, -birth);
    }

    #[test]
    fn diffusion_single_particle_chain_rule() {
        let bx = TorusBox::new(2, 8.0).unwrap();
        let psi = TestField::bump([3.0, 3.0, 0.0], 1.5, 0.8).unwrap();
        let f = CylinderFunctional::new(
            vec![psi.clone()],
            Outer::Tanh {
                weights: vec![1.3],
                offset: 0.2,
            },
        )
        .unwrap();
        let x = [3.4, 2.7, 0.0];
        let pot = PairPotential::soft_repulsive(2.0, 1.0).unwrap();
        let dp = DiffusionParams::new(0.0, 0.7, 0.01, pot, bx);
        let got = apply_diffusion(&f, &[x], &dp).unwrap();
        // g(t) = tanh(1.3 t + 0.2)
        let t = psi.value(&bx, &x);
        let th = (1.3 * t + 0.2).tanh();
        let g1 = 1.3 * (1.0 - th * th);
        let g2 = 1.3 * 1.3 * (-2.0 * th * (1.0 - th * th));
        let gr = psi.gradient(&bx, &x);
        let oracle = -0.7 * (g1 * psi.laplacian(&bx, &x) + g2 * (gr[0] * gr[0] + gr[1] * gr[1]));
        assert!((got - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn diffusion_one_half_free_is_laplacian_sum() {
        let bx = TorusBox::new(2, 8.0).unwrap();
        let f = CylinderFunctional::exponential(TestField::bump([3.0, 3.0, 0.0], 1.5, 0.8).unwrap());
        let pts = vec![[3.4, 2.7, 0.0], [2.5, 3.5, 0.0], [6.0, 6.0, 0.0]];
        let dp = DiffusionParams::new(0.5, 1.1, 0.01, PairPotential::free(), bx);
        let got = apply_diffusion(&f, &pts, &dp).unwrap();
        let lap: f64 = (0..3).map(|i| f.point_laplacian(&bx, &pts, i)).sum();
        assert!((got + 1.1 * lap).abs() < 1e-12);
    }

    /// For small hops, −δ²H_δF tends to the mirrored-convention diffusion operator.
    #[test]
    fn narrow_kernel_limit_has_mirrored_coefficients() {
        let bx = TorusBox::new(1, 10.0).unwrap();
        let pot = PairPotential::soft_repulsive(1.5, 1.0).unwrap();
        let f = CylinderFunctional::exponential(field1(3.0, 1.5, 0.8));
        let pts = vec![[3.2, 0.0, 0.0], [3.8, 0.0, 0.0], [2.4, 0.0, 0.0]];
        let base = HopKernel::new(KernelShape::Ball, 1.0, 1.0, 1).unwrap();
        let z = 0.5;
        let s = 0.0;
        let c = z * base.base_second_moment();
        let delta = 64.0;
        let spec = RateSpec::kawasaki_s(s, base.with_delta(delta).unwrap(), z).unwrap();
        let hop = apply_kawasaki(&f, &pts, &spec, &pot, &bx, &QuadratureGrid::new(256)).unwrap().value * delta * delta;
        let mut dp = DiffusionParams::new(s, c, 0.01, pot, bx);
        dp.convention = MobilityConvention::Mirrored;
        let mirrored = apply_diffusion(&f, &pts, &dp).unwrap();
        dp.convention = MobilityConvention::Standard;
        let standard = apply_diffusion(&f, &pts, &dp).unwrap();
        assert!((hop - mirrored).abs() < 0.02 * mirrored.abs(), "{hop} vs {mirrored}");
        assert!((hop - standard).abs() > 0.1 * standard.abs(), "{hop} vs {standard}");
    }

    #[test]
    fn identical_functionals_have_zero_residual() {
        let bx = TorusBox::new(1, 10.0).unwrap();
        let f = CylinderFunctional::exponential(field1(3.0, 1.0, 0.5));
        let mut rng = stream(61, 0);
        let snaps: Vec<Vec<Point>> = (0..50)
            .map(|_| (0..5).map(|_| bx.uniform_point(&mut rng)).collect())
            .collect();
        let g = GlauberSpec::new(0.0, 0.5, 1.0).unwrap();
        let apply = |f: &CylinderFunctional, p: &[Point]| {
            apply_glauber(f, p, &g, &PairPotential::free(), &bx, &QuadratureGrid::new(16)).map(|e| e.value)
        };
        let r = self_adjointness_residual(apply, &f, &f, &bx, &snaps).unwrap();
        assert_eq!(r.residual.mean, 0.0);
        assert!(matches!(
            self_adjointness_residual(apply, &f, &f, &bx, &snaps[..10]),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn refinement_stays_within_error_estimate() {
        let bx = TorusBox::new(2, 6.0).unwrap();
        let pot = PairPotential::soft_repulsive(1.0, 1.0).unwrap();
        let kernel = HopKernel::new(KernelShape::Triangle, 1.0, 1.0, 2).unwrap();
        let mut rng = stream(62, 0);
        for case in 0..50 {
            let s = rng.random::<f64>();
            let spec = RateSpec::kawasaki_s(s, kernel, 0.7).unwrap();
            let pts: Vec<Point> = (0..6).map(|_| bx.uniform_point(&mut rng)).collect();
            let c = bx.uniform_point(&mut rng);
            let f = CylinderFunctional::exponential(TestField::bump(c, 1.5, 0.6).unwrap());
            let grid = QuadratureGrid::new(32);
            let a = apply_kawasaki(&f, &pts, &spec, &pot, &bx, &grid).unwrap();
            let b = apply_kawasaki(&f, &pts, &spec, &pot, &bx, &grid.refined()).unwrap();
            assert!((a.value - b.value).abs() <= a.error + 1e-14, "case {case}: {a:?} {b:?}");
            let gs = GlauberSpec::new(s, 0.7, 1.0).unwrap();
            let a = apply_glauber(&f, &pts, &gs, &pot, &bx, &grid).unwrap();
            let b = apply_glauber(&f, &pts, &gs, &pot, &bx, &grid.refined()).unwrap();
            assert!((a.value - b.value).abs() <= a.error + 1e-14, "case {case}: {a:?} {b:?}");
        }
    }

    #[test]
    fn asymmetric_rate_differs_from_symmetrized() {
        let bx = TorusBox::new(2, 6.0).unwrap();
        let kernel = HopKernel::new(KernelShape::Ball, 1.0, 1.0, 2).unwrap();
        let spec = RateSpec::new(RateVariant::KawasakiUv { u: 0.0, v: 1.0 }, kernel, 1.0).unwrap();
        let pts = vec![[2.0, 2.0, 0.0], [2.7, 2.0, 0.0]];
        let f = CylinderFunctional::exponential(TestField::bump([2.0, 2.0, 0.0], 1.0, 1.0).unwrap());
        let grid = QuadratureGrid::new(16);
        let sym = apply_kawasaki(&f, &pts, &spec, &sw(), &bx, &grid).unwrap().value;
        let raw = |h: &Hop| spec.raw(h);
        let asym = apply_hop_operator(&f, &pts, &raw, &kernel, 1.0, &sw(), &bx, &grid).unwrap().value;
        assert!((sym - asym).abs() > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn operators_are_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..1000) {
            let bx = TorusBox::new(1, 10.0).unwrap();
            let mut rng = stream(seed, 7);
            let pts = random_admissible(&mut rng, &bx, &sw(), 6);
            let p1 = field1(3.0, 1.2, 1.0);
            let p2 = field1(6.0, 0.8, 1.0);
            let combo = CylinderFunctional::new(
                vec![p1.clone(), p2.clone()],
                Outer::Polynomial { weights: vec![a, b], coefficients: vec![0.0, 1.0] },
            ).unwrap();
            let f1 = CylinderFunctional::linear(p1);
            let f2 = CylinderFunctional::linear(p2);
            let kernel = HopKernel::new(KernelShape::Triangle, 1.0, 1.0, 1).unwrap();
            let spec = RateSpec::kawasaki_s(0.3, kernel, 0.5).unwrap();
            let grid = QuadratureGrid::new(32);
            let k = |f: &CylinderFunctional| apply_kawasaki(f, &pts, &spec, &sw(), &bx, &grid).unwrap().value;
            prop_assert!((k(&combo) - a * k(&f1) - b * k(&f2)).abs() < 1e-10);
            let gs = GlauberSpec::new(0.3, 0.5, 1.0).unwrap();
            let g = |f: &CylinderFunctional| apply_glauber(f, &pts, &gs, &sw(), &bx, &grid).unwrap().value;
            prop_assert!((g(&combo) - a * g(&f1) - b * g(&f2)).abs() < 1e-10);
        }
    }
}
