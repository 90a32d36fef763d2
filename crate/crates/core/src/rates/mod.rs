//! Jump-rate families: Kawasaki hop rates c_s and c_{u,v}, their symmetrization, Glauber
//! birth and death coefficients, and the thinning majorants used by the exact engines.
//!
//! Energies entering a hop x → y are E(x, γ∖x) and E(y, γ∖x). Both rate families read the
//! target energy with x removed; c_{u,u} is then exactly c_u.

mod kernel;

pub use kernel::{HopKernel, KernelShape};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, TorusBox};
use crate::potentials::{attraction_bound, relative_energy_skipping, PairPotential};

/// Tolerance on thinning acceptance probabilities above 1.
pub const ACCEPTANCE_SLACK: f64 = 1e-12;

/// A single proposed hop of the particle at `x` to `y` together with the energies the
/// rates depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub x: Point,
    pub y: Point,
    /// E(x, γ∖x)
    pub e_x: f64,
    /// E(y, γ∖x)
    pub e_y: f64,
    /// ã_δ(x − y)
    pub kernel: f64,
}

impl Hop {
    /// Energies by direct summation over `points`, with particle `i` hopping to `y`.
    pub fn from_points(
        pot: &PairPotential,
        bx: &TorusBox,
        kernel: &HopKernel,
        points: &[Point],
        i: usize,
        y: Point,
    ) -> Self {
        let x = points[i];
        Self {
            x,
            y,
            e_x: relative_energy_skipping(pot, bx, &x, points, Some(i)),
            e_y: relative_energy_skipping(pot, bx, &y, points, Some(i)),
            kernel: kernel.value(&bx.displacement(&x, &y)),
        }
    }

    /// The hop y → x out of γ∖x∪y. Requires a symmetric kernel.
    pub fn reversed(&self) -> Self {
        Self {
            x: self.y,
            y: self.x,
            e_x: self.e_y,
            e_y: self.e_x,
            kernel: self.kernel,
        }
    }

    /// Either endpoint overlaps a hard core; all rates vanish.
    pub fn blocked(&self) -> bool {
        self.e_x == f64::INFINITY || self.e_y == f64::INFINITY
    }

    /// exp[−E(y,γ) + E(x,γ∖x∪y)]; the φ(x,y) terms of both energies cancel.
    pub fn balance_factor(&self) -> f64 {
        (self.e_x - self.e_y).exp()
    }
}

/// A hop rate c(x, y, γ) (without the activity factor).
pub trait HopRate {
    fn rate(&self, hop: &Hop) -> f64;
}

impl<F: Fn(&Hop) -> f64> HopRate for F {
    fn rate(&self, hop: &Hop) -> f64 {
        self(hop)
    }
}

/// c̃(x,y,γ) = ½(c(x,y,γ) + c(y,x,γ∖x∪y)·exp[−E(y,γ) + E(x,γ∖x∪y)]).
pub fn symmetrize<R: HopRate + ?Sized>(rate: &R, hop: &Hop) -> f64 {
    if hop.blocked() || hop.kernel == 0.0 {
        return 0.0;
    }
    0.5 * (rate.rate(hop) + rate.rate(&hop.reversed()) * hop.balance_factor())
}

/// The symmetrization of a rate, itself a rate.
#[derive(Debug, Clone, Copy)]
pub struct Symmetrized<R>(pub R);

impl<R: HopRate> HopRate for Symmetrized<R> {
    fn rate(&self, hop: &Hop) -> f64 {
        symmetrize(&self.0, hop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RateVariant {
    /// c_s = a·exp[sE(x,γ∖x) − (1−s)E(y,γ∖x)]
    KawasakiS { s: f64 },
    /// c_{u,v} = a·exp[uE(x,γ∖x) − (1−v)E(y,γ∖x)]
    KawasakiUv { u: f64, v: f64 },
}

impl RateVariant {
    fn validate(&self) -> Result<()> {
        let check = |name: &'static str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in [0, 1], got {x}")))
            }
        };
        match *self {
            RateVariant::KawasakiS { s } => check("s", s),
            RateVariant::KawasakiUv { u, v } => check("u", u).and(check("v", v)),
        }
    }

    /// (u, v) exponents; c_s is c_{s,s}.
    fn exponents(&self) -> (f64, f64) {
        match *self {
            RateVariant::KawasakiS { s } => (s, s),
            RateVariant::KawasakiUv { u, v } => (u, v),
        }
    }
}

fn kappa(u: f64, v: f64, e_x: f64, e_y: f64) -> f64 {
    // zero coefficients drop their term, so a finite exponent never meets 0·∞
    let mut arg = 0.0;
    if u != 0.0 {
        arg += u * e_x;
    }
    if v != 1.0 {
        arg -= (1.0 - v) * e_y;
    }
    arg.exp()
}

impl HopRate for RateVariant {
    fn rate(&self, hop: &Hop) -> f64 {
        if hop.blocked() || hop.kernel == 0.0 {
            return 0.0;
        }
        let (u, v) = self.exponents();
        hop.kernel * kappa(u, v, hop.e_x, hop.e_y)
    }
}

/// Kawasaki rate family with its hop kernel and activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    pub variant: RateVariant,
    pub kernel: HopKernel,
    pub activity: f64,
}

impl RateSpec {
    pub fn new(variant: RateVariant, kernel: HopKernel, activity: f64) -> Result<Self> {
        variant.validate()?;
        if !(activity.is_finite() && activity > 0.0) {
            return Err(invalid("activity", format!("must be positive, got {activity}")));
        }
        Ok(Self {
            variant,
            kernel,
            activity,
        })
    }

    pub fn kawasaki_s(s: f64, kernel: HopKernel, activity: f64) -> Result<Self> {
        Self::new(RateVariant::KawasakiS { s }, kernel, activity)
    }

    pub fn with_kernel(mut self, kernel: HopKernel) -> Self {
        self.kernel = kernel;
        self
    }

    /// The unsymmetrized rate c(x, y, γ).
    pub fn raw(&self, hop: &Hop) -> f64 {
        self.variant.rate(hop)
    }

    /// c̃(x, y, γ) in closed form:
    /// ½a(exp[uE(x,γ∖x) − (1−v)E(y,γ∖x)] + exp[vE(x,γ∖x) − (1−u)E(y,γ∖x)]).
    pub fn symmetrized(&self, hop: &Hop) -> f64 {
        if hop.blocked() || hop.kernel == 0.0 {
            return 0.0;
        }
        match self.variant {
            RateVariant::KawasakiS { s } => hop.kernel * kappa(s, s, hop.e_x, hop.e_y),
            RateVariant::KawasakiUv { u, v } => {
                0.5 * hop.kernel
                    * (kappa(u, v, hop.e_x, hop.e_y) + kappa(v, u, hop.e_x, hop.e_y))
            }
        }
    }

    /// sup over E(y,γ∖x) ≥ −`attraction` of c̃ / ã_δ for a particle with E(x,γ∖x) = `e_x`.
    pub fn envelope(&self, e_x: f64, attraction: f64) -> f64 {
        let (u, v) = self.variant.exponents();
        let one = |u: f64, v: f64| kappa(u, v, e_x, -attraction);
        if u == v {
            one(u, v)
        } else {
            0.5 * (one(u, v) + one(v, u))
        }
    }

    /// λ̄(x) = z‖ã_δ‖₁ · envelope.
    pub fn hop_majorant(&self, e_x: f64, attraction: f64) -> f64 {
        if e_x == f64::INFINITY {
            return 0.0;
        }
        self.activity * self.kernel.l1_norm() * self.envelope(e_x, attraction)
    }

    /// Thinning acceptance for a hop proposed from ã_δ/‖ã_δ‖₁ under the bound `lambda_bar`.
    pub fn acceptance(&self, hop: &Hop, lambda_bar: f64) -> Result<f64> {
        if hop.kernel == 0.0 || lambda_bar == 0.0 {
            return Ok(0.0);
        }
        let proposal = lambda_bar * hop.kernel / self.kernel.l1_norm();
        check_acceptance(self.activity * self.symmetrized(hop) / proposal, "hop thinning")
    }
}

/// Errors when `p` exceeds 1 beyond rounding.
pub fn check_acceptance(p: f64, context: &'static str) -> Result<f64> {
    if p > 1.0 + ACCEPTANCE_SLACK || p.is_nan() {
        return Err(Error::MajorantViolation {
            acceptance: p,
            context,
        });
    }
    Ok(p.min(1.0))
}

/// The hop majorant λ̄ of particle `i` by direct summation.
pub fn hop_majorant(
    spec: &RateSpec,
    pot: &PairPotential,
    bx: &TorusBox,
    points: &[Point],
    i: usize,
) -> Result<f64> {
    let p = attraction_bound(pot, bx.dim())?;
    let e_x = relative_energy_skipping(pot, bx, &points[i], points, Some(i));
    Ok(spec.hop_majorant(e_x, p))
}

/// Glauber coefficients d_s = α·exp[sE(x,γ∖x)] and b_s = α·exp[(s−1)E(x,γ)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlauberSpec {
    pub s: f64,
    pub activity: f64,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

impl GlauberSpec {
    pub fn new(s: f64, activity: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid("s", format!("must lie in [0, 1], got {s}")));
        }
        if !(activity.is_finite() && activity > 0.0) {
            return Err(invalid("activity", format!("must be positive, got {activity}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
        }
        Ok(Self { s, activity, alpha })
    }

    /// d(x, γ) given E(x, γ∖x).
    pub fn death_rate(&self, e_x: f64) -> f64 {
        if self.s == 0.0 {
            return self.alpha;
        }
        self.alpha * (self.s * e_x).exp()
    }

    /// b(x, γ) given E(x, γ); zero inside a hard core.
    pub fn birth_rate(&self, e: f64) -> f64 {
        if e == f64::INFINITY {
            return 0.0;
        }
        if self.s == 1.0 {
            return self.alpha;
        }
        self.alpha * ((self.s - 1.0) * e).exp()
    }

    /// Bound z·α·V·e^{(1−s)P} on the total birth intensity.
    pub fn birth_majorant(&self, volume: f64, attraction: f64) -> f64 {
        self.activity * self.alpha * volume * ((1.0 - self.s) * attraction).exp()
    }

    /// Thinning acceptance for a uniformly proposed birth with E(x, γ) = `e`.
    pub fn birth_acceptance(&self, e: f64, volume: f64, attraction: f64) -> Result<f64> {
        let bound = self.birth_majorant(volume, attraction);
        if bound == 0.0 {
            return Ok(0.0);
        }
        check_acceptance(
            self.activity * self.birth_rate(e) * volume / bound,
            "birth thinning",
        )
    }
}

/// Per-particle death rates and the birth majorant of a configuration, by direct summation.
pub fn glauber_rates(
    spec: &GlauberSpec,
    pot: &PairPotential,
    bx: &TorusBox,
    points: &[Point],
) -> Result<(Vec<f64>, f64)> {
    let p = attraction_bound(pot, bx.dim())?;
    let deaths = (0..points.len())
        .map(|i| spec.death_rate(relative_energy_skipping(pot, bx, &points[i], points, Some(i))))
        .collect();
    Ok((deaths, spec.birth_majorant(bx.volume(), p)))
}
