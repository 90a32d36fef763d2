//! Finite-range pair potentials, relative energies and the stability/integrability
//! constants that govern the low-activity regime.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{ball_volume, unit_sphere_area, CellList, Configuration, Point, TorusBox, ORIGIN};

/// Radial profile of a pair interaction. Inverse temperature is absorbed into the
/// amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    /// φ ≡ 0 (ideal gas).
    Free,
    /// Hard core below `hard_core`, constant `-depth` up to the range.
    SquareWell { depth: f64 },
    /// Attractive C² well `-amplitude (1 - r²/R²)³`.
    SmoothBump { amplitude: f64 },
    /// Repulsive C² bump `amplitude (1 - r²/R²)³`.
    SoftRepulsive { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPotential {
    hard_core: f64,
    range: f64,
    shape: Shape,
    neighbor_cap: Option<usize>,
}

impl PairPotential {
    pub fn new(shape: Shape, hard_core: f64, range: f64) -> Result<Self> {
        if !(range.is_finite() && range > 0.0) {
            return Err(invalid("range", format!("must be positive, got {range}")));
        }
        if !(hard_core.is_finite() && hard_core >= 0.0 && hard_core < range) {
            return Err(invalid(
                "hard_core",
                format!("must lie in [0, range), got {hard_core}"),
            ));
        }
        match shape {
            Shape::Free => {}
            Shape::SquareWell { depth } => {
                if !(depth.is_finite() && depth >= 0.0) {
                    return Err(invalid("depth", format!("must be nonnegative, got {depth}")));
                }
                if hard_core <= 0.0 {
                    return Err(invalid("hard_core", "square well requires a positive hard core"));
                }
            }
            Shape::SmoothBump { amplitude } | Shape::SoftRepulsive { amplitude } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(invalid(
                        "amplitude",
                        format!("must be nonnegative, got {amplitude}"),
                    ));
                }
            }
        }
        Ok(Self {
            hard_core,
            range,
            shape,
            neighbor_cap: None,
        })
    }

    pub fn free() -> Self {
        Self {
            hard_core: 0.0,
            range: 1.0,
            shape: Shape::Free,
            neighbor_cap: None,
        }
    }

    pub fn square_well(depth: f64, hard_core: f64, range: f64) -> Result<Self> {
        Self::new(Shape::SquareWell { depth }, hard_core, range)
    }

    pub fn soft_repulsive(amplitude: f64, range: f64) -> Result<Self> {
        Self::new(Shape::SoftRepulsive { amplitude }, 0.0, range)
    }

    pub fn smooth_bump(amplitude: f64, hard_core: f64, range: f64) -> Result<Self> {
        Self::new(Shape::SmoothBump { amplitude }, hard_core, range)
    }

    /// Caps the number of particles assumed to fit within range of any point. Used by
    /// thinning majorants when the hard core does not provide a packing bound.
    pub fn with_neighbor_cap(mut self, cap: usize) -> Self {
        self.neighbor_cap = Some(cap);
        self
    }

    pub fn hard_core(&self) -> f64 {
        self.hard_core
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_free(&self) -> bool {
        matches!(self.shape, Shape::Free)
    }

    /// inf over r ≥ r_hc of φ(r); always ≤ 0.
    pub fn phi_min(&self) -> f64 {
        match self.shape {
            Shape::Free | Shape::SoftRepulsive { .. } => 0.0,
            Shape::SquareWell { depth } => -depth,
            Shape::SmoothBump { amplitude } => {
                let u = self.hard_core * self.hard_core / (self.range * self.range);
                -amplitude * (1.0 - u).powi(3)
            }
        }
    }

    /// C² shapes without a hard core; required by the diffusion machinery.
    pub fn is_smooth(&self) -> bool {
        match self.shape {
            Shape::Free => true,
            Shape::SquareWell { .. } => false,
            Shape::SmoothBump { .. } | Shape::SoftRepulsive { .. } => self.hard_core == 0.0,
        }
    }

    pub fn require_smooth(&self) -> Result<()> {
        if self.is_smooth() {
            Ok(())
        } else {
            Err(Error::NotSmooth(format!(
                "{:?} with hard core {} has no gradient",
                self.shape, self.hard_core
            )))
        }
    }

    fn bump_sign(&self) -> f64 {
        match self.shape {
            Shape::SmoothBump { amplitude } => -amplitude,
            Shape::SoftRepulsive { amplitude } => amplitude,
            _ => 0.0,
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        if r < self.hard_core {
            return f64::INFINITY;
        }
        if r >= self.range {
            return 0.0;
        }
        match self.shape {
            Shape::Free => 0.0,
            Shape::SquareWell { depth } => -depth,
            Shape::SmoothBump { .. } | Shape::SoftRepulsive { .. } => {
                let u = 1.0 - r * r / (self.range * self.range);
                self.bump_sign() * u * u * u
            }
        }
    }

    /// φ'(r) for smooth shapes.
    pub fn phi_prime(&self, r: f64) -> f64 {
        if r >= self.range || !self.is_smooth() {
            return 0.0;
        }
        let r2 = self.range * self.range;
        let u = 1.0 - r * r / r2;
        self.bump_sign() * (-6.0 * r / r2) * u * u
    }

    /// φ''(r) for smooth shapes.
    pub fn phi_second(&self, r: f64) -> f64 {
        if r >= self.range || !self.is_smooth() {
            return 0.0;
        }
        let r2 = self.range * self.range;
        let u = 1.0 - r * r / r2;
        self.bump_sign() * (-6.0 / r2 * u * u + 24.0 * r * r / (r2 * r2) * u)
    }

    /// ∇_x φ(|x - u|) given the displacement `v = x - u`.
    pub fn gradient(&self, v: &Point) -> Point {
        let mut g = ORIGIN;
        let r2: f64 = v.iter().map(|c| c * c).sum();
        let range2 = self.range * self.range;
        if r2 >= range2 || !self.is_smooth() {
            return g;
        }
        let u = 1.0 - r2 / range2;
        let f = self.bump_sign() * (-6.0 / range2) * u * u;
        for k in 0..3 {
            g[k] = f * v[k];
        }
        g
    }
}

/// E(x, γ) over all points of `points` at a location distinct from `x`.
pub fn relative_energy(pot: &PairPotential, bx: &TorusBox, x: &Point, points: &[Point]) -> f64 {
    relative_energy_skipping(pot, bx, x, points, None)
}

/// E(x, γ ∖ γ[skip]).
pub fn relative_energy_skipping(
    pot: &PairPotential,
    bx: &TorusBox,
    x: &Point,
    points: &[Point],
    skip: Option<usize>,
) -> f64 {
    if pot.is_free() {
        return 0.0;
    }
    let range2 = pot.range * pot.range;
    let mut e = 0.0;
    for (j, p) in points.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let d2 = bx.dist2(x, p);
        if d2 == 0.0 || d2 >= range2 {
            continue;
        }
        let v = pot.phi(d2.sqrt());
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        e += v;
    }
    e
}

/// Same as [`relative_energy_skipping`] but restricted to cell-list neighbors.
pub fn local_energy(
    pot: &PairPotential,
    x: &Point,
    config: &Configuration,
    cells: &CellList,
    skip: Option<usize>,
) -> Result<f64> {
    if pot.is_free() {
        return Ok(0.0);
    }
    let mut e = 0.0;
    let mut blocked = false;
    cells.for_each_within(x, pot.range, config, |j, d| {
        if Some(j) == skip || d == 0.0 || blocked {
            return;
        }
        let v = pot.phi(d);
        if v == f64::INFINITY {
            blocked = true;
        } else {
            e += v;
        }
    })?;
    Ok(if blocked { f64::INFINITY } else { e })
}

/// Σ_{pairs} φ — the periodic configuration energy U(γ).
pub fn total_energy(pot: &PairPotential, bx: &TorusBox, points: &[Point]) -> f64 {
    if pot.is_free() {
        return 0.0;
    }
    let mut u = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let v = pot.phi(bx.dist(&points[i], &points[j]));
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            u += v;
        }
    }
    u
}

/// First pair of particles violating the hard core, if any.
pub fn find_overlap(pot: &PairPotential, bx: &TorusBox, points: &[Point]) -> Option<(usize, usize)> {
    if pot.hard_core == 0.0 {
        return None;
    }
    let hc2 = pot.hard_core * pot.hard_core;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if bx.dist2(&points[i], &points[j]) < hc2 {
                return Some((i, j));
            }
        }
    }
    None
}

/// E(y, γ∖x) − E(x, γ∖x) for moving particle `i` of `points` to `y`.
pub fn energy_delta_swap(pot: &PairPotential, bx: &TorusBox, points: &[Point], i: usize, y: &Point) -> f64 {
    let after = relative_energy_skipping(pot, bx, y, points, Some(i));
    if after == f64::INFINITY {
        return f64::INFINITY;
    }
    after - relative_energy_skipping(pot, bx, &points[i], points, Some(i))
}

/// Random sequential adsorption of up to `n` points respecting the hard core.
pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, bx: &TorusBox, pot: &PairPotential, n: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    let hc2 = pot.hard_core * pot.hard_core;
    let mut attempts = 0;
    while pts.len() < n && attempts < 1000 * n.max(1) {
        attempts += 1;
        let p = bx.uniform_point(rng);
        if pts.iter().all(|q| bx.dist2(&p, q) >= hc2) {
            pts.push(p);
        }
    }
    pts
}

/// Maximal number of points, pairwise at least the hard core apart, that fit within
/// range of a location: `(1 + 2R/r_hc)^d`.
pub fn packing_bound(pot: &PairPotential, dim: usize) -> Option<usize> {
    if pot.hard_core > 0.0 {
        Some((1.0 + 2.0 * pot.range / pot.hard_core).powi(dim as i32).floor() as usize)
    } else {
        None
    }
}

/// Upper bound on −E(x, γ) over hard-core-admissible γ: |φ_min| · n_cap.
pub fn attraction_bound(pot: &PairPotential, dim: usize) -> Result<f64> {
    let depth = -pot.phi_min();
    if depth == 0.0 {
        return Ok(0.0);
    }
    let cap = pot.neighbor_cap.or_else(|| packing_bound(pot, dim)).ok_or_else(|| {
        Error::MissingMajorant(
            "attractive potential without hard core needs an explicit neighbor cap".into(),
        )
    })?;
    Ok(depth * cap as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialConstants {
    /// Stability constant.
    pub b: f64,
    /// Integrability constant ∫|e^{−φ} − 1|.
    pub c: f64,
    /// (1/2e)(e^{2B} C)^{-1}
    pub z_threshold_1: f64,
    /// (1/e)(e^{2B} C)^{-1}
    pub z_threshold_2: f64,
}

impl PotentialConstants {
    pub fn from_bc(b: f64, c: f64) -> Self {
        let base = 1.0 / ((2.0 * b).exp() * c);
        Self {
            b,
            c,
            z_threshold_1: base / (2.0 * std::f64::consts::E),
            z_threshold_2: base / std::f64::consts::E,
        }
    }
}

/// Stability and integrability constants in dimension `dim`. `resolution` is the number
/// of Simpson panels for the radial integral of smooth shapes.
pub fn compute_constants(pot: &PairPotential, dim: usize, resolution: usize) -> Result<PotentialConstants> {
    let core = ball_volume(dim, pot.hard_core);
    let c = match pot.shape {
        Shape::Free => 0.0,
        Shape::SquareWell { depth } => {
            core + (ball_volume(dim, pot.range) - core) * (depth.exp() - 1.0).abs()
        }
        Shape::SmoothBump { .. } | Shape::SoftRepulsive { .. } => {
            let area = unit_sphere_area(dim);
            let integrand = |r: f64| (-pot.phi(r)).exp_m1().abs() * area * r.powi(dim as i32 - 1);
            core + simpson(integrand, pot.hard_core, pot.range, resolution.max(2))?
        }
    };
    let depth = -pot.phi_min();
    let b = if depth == 0.0 {
        0.0
    } else {
        let n_max = packing_bound(pot, dim).ok_or_else(|| {
            Error::Unstable("attractive potential without hard core admits no stability bound".into())
        })?;
        0.5 * depth * n_max as f64
    };
    Ok(PotentialConstants::from_bc(b, c))
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> Result<f64> {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = a + i as f64 * h;
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::QuadratureFailure(format!("integrand is {v} at r = {x}")));
        }
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * v;
    }
    Ok(acc * h / 3.0)
}

/// Proposition-style L² side condition ∫|exp[(2s−1)φ] − 1| < ∞ for s > 1/2. Returns the
/// integral (∞ when the hard core makes it diverge).
pub fn l2_side_condition(pot: &PairPotential, dim: usize, s: f64, resolution: usize) -> f64 {
    let k = 2.0 * s - 1.0;
    if k <= 0.0 || pot.is_free() {
        return 0.0;
    }
    if pot.hard_core > 0.0 {
        return f64::INFINITY;
    }
    let area = unit_sphere_area(dim);
    simpson(
        |r| (k * pot.phi(r)).exp_m1().abs() * area * r.powi(dim as i32 - 1),
        0.0,
        pot.range,
        resolution.max(2),
    )
    .unwrap_or(f64::INFINITY)
}
