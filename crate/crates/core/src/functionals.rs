//! Cylinder functionals F(γ) = g(⟨ψ₁,γ⟩, …, ⟨ψ_N,γ⟩) built from periodic C² bumps and a
//! small symbolic family of outer functions, with exact difference operators and
//! analytic point derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Point, TorusBox, ORIGIN};

/// `amplitude · (1 − |x − center|²/radius²)³` inside the radius, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

/// A finite sum of bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub bumps: Vec<Bump>,
}

impl TestField {
    pub fn bump(center: Point, radius: f64, amplitude: f64) -> Result<Self> {
        Self::sum(vec![Bump {
            center,
            radius,
            amplitude,
        }])
    }

    pub fn sum(bumps: Vec<Bump>) -> Result<Self> {
        for b in &bumps {
            if !(b.radius.is_finite() && b.radius > 0.0) {
                return Err(invalid("radius", format!("must be positive, got {}", b.radius)));
            }
            if !b.amplitude.is_finite() {
                return Err(invalid("amplitude", "must be finite"));
            }
        }
        Ok(Self { bumps })
    }

    /// The zero field.
    pub fn zero() -> Self {
        Self { bumps: Vec::new() }
    }

    pub fn max_radius(&self) -> f64 {
        self.bumps.iter().map(|b| b.radius).fold(0.0, f64::max)
    }

    pub fn value(&self, bx: &TorusBox, x: &Point) -> f64 {
        let mut v = 0.0;
        for b in &self.bumps {
            let u = bx.dist2(&b.center, x) / (b.radius * b.radius);
            if u < 1.0 {
                let w = 1.0 - u;
                v += b.amplitude * w * w * w;
            }
        }
        v
    }

    pub fn gradient(&self, bx: &TorusBox, x: &Point) -> Point {
        let mut g = ORIGIN;
        for b in &self.bumps {
            let d = bx.displacement(&b.center, x);
            let r2 = b.radius * b.radius;
            let u = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / r2;
            if u < 1.0 {
                // f(u) = (1-u)³, ∇ = A f'(u) · 2d/ρ²
                let f1 = -3.0 * (1.0 - u) * (1.0 - u);
                let k = b.amplitude * f1 * 2.0 / r2;
                for c in 0..3 {
                    g[c] += k * d[c];
                }
            }
        }
        g
    }

    pub fn laplacian(&self, bx: &TorusBox, x: &Point) -> f64 {
        let dim = bx.dim() as f64;
        let mut l = 0.0;
        for b in &self.bumps {
            let d2 = bx.dist2(&b.center, x);
            let r2 = b.radius * b.radius;
            let u = d2 / r2;
            if u < 1.0 {
                let f1 = -3.0 * (1.0 - u) * (1.0 - u);
                let f2 = 6.0 * (1.0 - u);
                l += b.amplitude * (f2 * 4.0 * d2 / (r2 * r2) + f1 * 2.0 * dim / r2);
            }
        }
        l
    }

    /// ⟨ψ, γ⟩
    pub fn pairing(&self, bx: &TorusBox, points: &[Point]) -> f64 {
        points.iter().map(|p| self.value(bx, p)).sum()
    }

    /// Whether `x` lies in the closed support of some bump.
    pub fn supports(&self, bx: &TorusBox, x: &Point) -> bool {
        self.bumps
            .iter()
            .any(|b| bx.dist2(&b.center, x) < b.radius * b.radius)
    }
}

/// Outer functions of a linear form ℓ = w·t (+ offset for tanh).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outer", rename_all = "kebab-case")]
pub enum Outer {
    /// exp(w·t)
    Exponential { weights: Vec<f64> },
    /// Σ_k coefficients[k] (w·t)^k, degree ≤ 4.
    Polynomial {
        weights: Vec<f64>,
        coefficients: Vec<f64>,
    },
    /// tanh(w·t + offset)
    Tanh { weights: Vec<f64>, offset: f64 },
}

impl Outer {
    fn weights(&self) -> &[f64] {
        match self {
            Outer::Exponential { weights }
            | Outer::Polynomial { weights, .. }
            | Outer::Tanh { weights, .. } => weights,
        }
    }

    fn linear(&self, t: &[f64]) -> f64 {
        let l: f64 = self.weights().iter().zip(t).map(|(w, v)| w * v).sum();
        match self {
            Outer::Tanh { offset, .. } => l + offset,
            _ => l,
        }
    }

    /// (h, h', h'') at ℓ where g(t) = h(ℓ(t)).
    fn profile(&self, l: f64) -> (f64, f64, f64) {
        match self {
            Outer::Exponential { .. } => {
                let e = l.exp();
                (e, e, e)
            }
            Outer::Polynomial { coefficients, .. } => {
                let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
                for (k, &a) in coefficients.iter().enumerate().rev() {
                    let kf = k as f64;
                    h = h * l + a;
                    if k >= 1 {
                        h1 = h1 * l + kf * a;
                    }
                    if k >= 2 {
                        h2 = h2 * l + kf * (kf - 1.0) * a;
                    }
                }
                (h, h1, h2)
            }
            Outer::Tanh { .. } => {
                let th = l.tanh();
                let sech2 = 1.0 - th * th;
                (th, sech2, -2.0 * th * sech2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunctional {
    fields: Vec<TestField>,
    outer: Outer,
}

impl CylinderFunctional {
    pub fn new(fields: Vec<TestField>, outer: Outer) -> Result<Self> {
        if fields.len() != outer.weights().len() {
            return Err(invalid(
                "weights",
                format!("{} weights for {} fields", outer.weights().len(), fields.len()),
            ));
        }
        if let Outer::Polynomial { coefficients, .. } = &outer {
            if coefficients.is_empty() || coefficients.len() > 5 {
                return Err(invalid("coefficients", "polynomial degree must be in 0..=4"));
            }
        }
        Ok(Self { fields, outer })
    }

    /// exp⟨ψ, γ⟩
    pub fn exponential(field: TestField) -> Self {
        Self {
            fields: vec![field],
            outer: Outer::Exponential { weights: vec![1.0] },
        }
    }

    /// ⟨ψ, γ⟩
    pub fn linear(field: TestField) -> Self {
        Self {
            fields: vec![field],
            outer: Outer::Polynomial {
                weights: vec![1.0],
                coefficients: vec![0.0, 1.0],
            },
        }
    }

    /// The constant functional `value`.
    pub fn constant(value: f64) -> Self {
        Self {
            fields: Vec::new(),
            outer: Outer::Polynomial {
                weights: Vec::new(),
                coefficients: vec![value],
            },
        }
    }

    pub fn fields(&self) -> &[TestField] {
        &self.fields
    }

    pub fn outer(&self) -> &Outer {
        &self.outer
    }

    /// Largest bump radius; the minimum-image constraint needs L ≥ 2·reach.
    pub fn reach(&self) -> f64 {
        self.fields.iter().map(TestField::max_radius).fold(0.0, f64::max)
    }

    pub fn validate(&self, bx: &TorusBox) -> Result<()> {
        bx.require_reach(self.reach(), "test-field radius")
    }

    /// (ψ_i(x))_i
    pub fn field_values(&self, bx: &TorusBox, x: &Point) -> Vec<f64> {
        self.fields.iter().map(|f| f.value(bx, x)).collect()
    }

    /// (⟨ψ_i, γ⟩)_i
    pub fn sums(&self, bx: &TorusBox, points: &[Point]) -> Vec<f64> {
        self.fields.iter().map(|f| f.pairing(bx, points)).collect()
    }

    pub fn outer_value(&self, t: &[f64]) -> f64 {
        self.outer.profile(self.outer.linear(t)).0
    }

    pub fn evaluate(&self, bx: &TorusBox, points: &[Point]) -> f64 {
        self.outer_value(&self.sums(bx, points))
    }

    /// Whether `x` is in the support of any field.
    pub fn touches(&self, bx: &TorusBox, x: &Point) -> bool {
        self.fields.iter().any(|f| f.supports(bx, x))
    }

    /// g at the shifted sums t + Σ sign·ψ(p).
    fn shifted(&self, bx: &TorusBox, t: &[f64], add: Option<&Point>, sub: Option<&Point>) -> f64 {
        let mut l = self.outer.linear(t);
        for (w, f) in self.outer.weights().iter().zip(&self.fields) {
            if let Some(y) = add {
                l += w * f.value(bx, y);
            }
            if let Some(x) = sub {
                l -= w * f.value(bx, x);
            }
        }
        self.outer.profile(l).0
    }

    /// F(γ∖x) − F(γ) from precomputed sums `t` and value `f0 = g(t)`.
    pub fn d_minus_at(&self, bx: &TorusBox, t: &[f64], f0: f64, x: &Point) -> f64 {
        self.shifted(bx, t, None, Some(x)) - f0
    }

    /// F(γ∪y) − F(γ) from precomputed sums.
    pub fn d_plus_at(&self, bx: &TorusBox, t: &[f64], f0: f64, y: &Point) -> f64 {
        self.shifted(bx, t, Some(y), None) - f0
    }

    /// F(γ∖x∪y) − F(γ) from precomputed sums.
    pub fn d_minus_plus_at(&self, bx: &TorusBox, t: &[f64], f0: f64, x: &Point, y: &Point) -> f64 {
        if x == y {
            return 0.0;
        }
        self.shifted(bx, t, Some(y), Some(x)) - f0
    }

    /// (D⁻_x F)(γ) for the particle `i` of `points`.
    pub fn d_minus(&self, bx: &TorusBox, points: &[Point], i: usize) -> f64 {
        let t = self.sums(bx, points);
        self.d_minus_at(bx, &t, self.outer_value(&t), &points[i])
    }

    /// (D⁺_y F)(γ).
    pub fn d_plus(&self, bx: &TorusBox, points: &[Point], y: &Point) -> f64 {
        let t = self.sums(bx, points);
        self.d_plus_at(bx, &t, self.outer_value(&t), y)
    }

    /// (D⁻⁺_{xy} F)(γ) with x the particle `i`.
    pub fn d_minus_plus(&self, bx: &TorusBox, points: &[Point], i: usize, y: &Point) -> f64 {
        let t = self.sums(bx, points);
        self.d_minus_plus_at(bx, &t, self.outer_value(&t), &points[i], y)
    }

    /// ∇_x F(γ) from precomputed sums.
    pub fn point_gradient_at(&self, bx: &TorusBox, t: &[f64], x: &Point) -> Point {
        let (_, h1, _) = self.outer.profile(self.outer.linear(t));
        let mut g = ORIGIN;
        for (w, f) in self.outer.weights().iter().zip(&self.fields) {
            let gf = f.gradient(bx, x);
            for c in 0..3 {
                g[c] += h1 * w * gf[c];
            }
        }
        g
    }

    /// Δ_x F(γ) from precomputed sums.
    pub fn point_laplacian_at(&self, bx: &TorusBox, t: &[f64], x: &Point) -> f64 {
        let (_, h1, h2) = self.outer.profile(self.outer.linear(t));
        let mut lap = 0.0;
        // Σ_ij w_i w_j ⟨∇ψ_i, ∇ψ_j⟩ = |Σ_i w_i ∇ψ_i|²
        let mut wg = ORIGIN;
        for (w, f) in self.outer.weights().iter().zip(&self.fields) {
            lap += h1 * w * f.laplacian(bx, x);
            let gf = f.gradient(bx, x);
            for c in 0..3 {
                wg[c] += w * gf[c];
            }
        }
        lap + h2 * (wg[0] * wg[0] + wg[1] * wg[1] + wg[2] * wg[2])
    }

    pub fn point_gradient(&self, bx: &TorusBox, points: &[Point], i: usize) -> Point {
        self.point_gradient_at(bx, &self.sums(bx, points), &points[i])
    }

    pub fn point_laplacian(&self, bx: &TorusBox, points: &[Point], i: usize) -> f64 {
        self.point_laplacian_at(bx, &self.sums(bx, points), &points[i])
    }
}
