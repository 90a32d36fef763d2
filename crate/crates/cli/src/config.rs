//! Experiment configuration: a TOML file deserialized into plain descriptor structs with
//! defaults filled in, then validated as a whole so that every violation is reported with
//! its field path.

use std::fmt;
use std::path::Path;

use kawlab::diffusion::{DiffusionParams, MobilityConvention};
use kawlab::functionals::{Bump, CylinderFunctional, Outer, TestField};
use kawlab::generators::QuadratureGrid;
use kawlab::gibbs::{GibbsParams, MoveMix};
use kawlab::rates::{GlauberSpec, HopKernel, KernelShape, RateSpec, RateVariant};
use kawlab::verify::GnzProfile;
use kawlab::{PairPotential, Shape, TorusBox};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Schema(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxConfig {
    pub dim: usize,
    pub side: f64,
}

impl Default for BoxConfig {
    fn default() -> Self {
        Self { dim: 2, side: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeName {
    Free,
    SquareWell,
    SmoothBump,
    SoftRepulsive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub shape: ShapeName,
    /// Well depth or bump amplitude.
    pub strength: f64,
    pub hard_core: f64,
    pub range: f64,
    /// Neighbor cap for shapes without a hard core; 0 means none.
    pub neighbor_cap: usize,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            shape: ShapeName::SquareWell,
            strength: 0.3,
            hard_core: 0.5,
            range: 1.0,
            neighbor_cap: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub shape: KernelShape,
    pub radius: f64,
    pub amplitude: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            shape: KernelShape::Ball,
            radius: 1.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KawasakiConfig {
    pub s: f64,
    /// Optional (u, v) pair; replaces `s` when present.
    pub uv: Option<[f64; 2]>,
}

impl Default for KawasakiConfig {
    fn default() -> Self {
        Self { s: 0.5, uv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlauberConfig {
    pub s: f64,
    pub alpha: f64,
}

impl Default for GlauberConfig {
    fn default() -> Self {
        Self { s: 0.5, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionConfig {
    pub s: f64,
    pub mobility: f64,
    pub dt: f64,
    pub energy_guard: f64,
    pub convention: MobilityConvention,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            mobility: 0.5,
            dt: 1e-3,
            energy_guard: 5.0,
            convention: MobilityConvention::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// 0 selects max(10, ⌈zV⌉).
    pub steps_per_sweep: usize,
    /// 0 selects the potential range.
    pub displacement_radius: f64,
    pub mix: [f64; 3],
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            burn_in: 100,
            thinning: 1,
            steps_per_sweep: 0,
            displacement_radius: 0.0,
            mix: [0.25, 0.25, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: f64,
    pub sample_dt: f64,
    /// Write the per-event log alongside the series.
    pub event_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            sample_dt: 1.0,
            event_log: false,
        }
    }
}

/// One bump of a test field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterName {
    Exponential,
    Linear,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub outer: OuterName,
    pub bumps: Vec<BumpConfig>,
    /// Offset of the tanh profile.
    #[serde(default)]
    pub offset: f64,
}

impl FunctionalConfig {
    fn centered(outer: OuterName, side: f64, radius: f64, amplitude: f64, dim: usize) -> Self {
        Self {
            outer,
            bumps: vec![BumpConfig {
                center: vec![0.5 * side; dim],
                radius,
                amplitude,
            }],
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnzConfig {
    pub mc_points: usize,
    pub sigmas: f64,
    pub profiles: Vec<GnzProfile>,
    pub g: Option<Vec<BumpConfig>>,
    pub psi: Option<Vec<BumpConfig>>,
}

impl Default for GnzConfig {
    fn default() -> Self {
        Self {
            mc_points: 64,
            sigmas: 3.0,
            profiles: vec![GnzProfile::One, GnzProfile::Tanh, GnzProfile::NegExp],
            g: None,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceConfig {
    pub cases: usize,
    pub max_particles: usize,
    pub s_values: Vec<f64>,
    pub uv_pairs: Vec<[f64; 2]>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            cases: 1000,
            max_particles: 20,
            s_values: vec![0.0, 0.3, 0.5, 1.0],
            uv_pairs: vec![[0.0, 1.0], [0.2, 0.7]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsName {
    Kawasaki,
    Glauber,
    Diffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceConfig {
    pub dynamics: DynamicsName,
    pub replicas: usize,
    pub horizon: f64,
    pub samples_per_run: usize,
    pub sigmas: f64,
    /// Radius of the in-range pair count; 0 selects the potential range.
    pub pair_radius: f64,
    pub psi: Option<Vec<BumpConfig>>,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        Self {
            dynamics: DynamicsName::Kawasaki,
            replicas: 50,
            horizon: 10.0,
            samples_per_run: 10,
            sigmas: 3.0,
            pair_radius: 0.0,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitConfig {
    pub deltas: Vec<f64>,
    pub points_per_axis: usize,
    pub max_spacing: Option<f64>,
    /// Glauber direction: ψ of F = e^{⟨ψ,·⟩}. Diffusion direction: the functional.
    pub functional: Option<FunctionalConfig>,
}

impl Default for LimitConfig {
    /// An empty δ grid stands for the direction's default grid.
    fn default() -> Self {
        Self {
            deltas: Vec::new(),
            points_per_axis: 64,
            max_spacing: None,
            functional: None,
        }
    }
}

impl LimitConfig {
    fn with_deltas(deltas: Vec<f64>) -> Self {
        Self {
            deltas,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "kawlab-out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub activity: f64,
    #[serde(rename = "box")]
    pub torus: BoxConfig,
    pub potential: PotentialConfig,
    pub kernel: KernelConfig,
    pub kawasaki: KawasakiConfig,
    pub glauber: GlauberConfig,
    pub diffusion: DiffusionConfig,
    pub sampler: SamplerConfig,
    pub run: RunConfig,
    pub gnz: GnzConfig,
    pub balance: BalanceConfig,
    pub invariance: InvarianceConfig,
    pub limit_glauber: LimitConfig,
    pub limit_diffusion: LimitConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            activity: 0.5,
            torus: BoxConfig::default(),
            potential: PotentialConfig::default(),
            kernel: KernelConfig::default(),
            kawasaki: KawasakiConfig::default(),
            glauber: GlauberConfig::default(),
            diffusion: DiffusionConfig::default(),
            sampler: SamplerConfig::default(),
            run: RunConfig::default(),
            gnz: GnzConfig::default(),
            balance: BalanceConfig::default(),
            invariance: InvarianceConfig::default(),
            limit_glauber: LimitConfig::with_deltas(vec![4.0, 2.0, 1.0, 0.5, 0.25]),
            limit_diffusion: LimitConfig::with_deltas(vec![1.0, 2.0, 4.0, 8.0]),
            output: OutputConfig::default(),
        }
    }
}

/// Which sections a subcommand reads; only those are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Needs {
    pub run: bool,
    pub gnz: bool,
    pub balance: bool,
    pub kernel: bool,
    pub kawasaki: bool,
    pub glauber: bool,
    pub diffusion: bool,
    pub invariance: bool,
    pub limit_glauber: bool,
    pub limit_diffusion: bool,
}

/// Collects violations instead of stopping at the first.
#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, path: &str, x: f64) -> bool {
        let ok = x.is_finite() && x > 0.0;
        if !ok {
            self.fail(path, format!("must be positive, got {x}"));
        }
        ok
    }

    fn unit(&mut self, path: &str, x: f64) -> bool {
        let ok = (0.0..=1.0).contains(&x);
        if !ok {
            self.fail(path, format!("must lie in [0, 1], got {x}"));
        }
        ok
    }

    fn count(&mut self, path: &str, n: usize) {
        if n == 0 {
            self.fail(path, "must be at least 1");
        }
    }

    fn take<T>(&mut self, path: &str, r: kawlab::Result<T>) -> Option<T> {
        r.map_err(|e| self.fail(path, e.to_string())).ok()
    }

    fn reach(&mut self, path: &str, bx: Option<&TorusBox>, reach: f64, what: &'static str) {
        if let Some(bx) = bx {
            if let Err(e) = bx.require_reach(reach, what) {
                self.fail(path, format!("{e} (the box side must be at least twice every interaction reach)"));
            }
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let defaults = Self::default();
        if cfg.limit_glauber.deltas.is_empty() {
            cfg.limit_glauber.deltas = defaults.limit_glauber.deltas;
        }
        if cfg.limit_diffusion.deltas.is_empty() {
            cfg.limit_diffusion.deltas = defaults.limit_diffusion.deltas;
        }
        Ok(cfg)
    }

    /// Canonical TOML of the effective configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self, needs: Needs) -> Result<(), ConfigError> {
        let mut c = Checker::default();
        let _ = self.build(&mut c, needs);
        if c.violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Schema(c.violations))
        }
    }

    /// Builds the core objects, recording every violation on the way.
    fn build(&self, c: &mut Checker, needs: Needs) -> Option<Built> {
        c.positive("activity", self.activity);
        let dim = self.torus.dim;
        if !(1..=3).contains(&dim) {
            c.fail("box.dim", format!("must be 1, 2 or 3, got {dim}"));
        }
        let bx = if (1..=3).contains(&dim) && c.positive("box.side", self.torus.side) {
            c.take("box", TorusBox::new(dim, self.torus.side))
        } else {
            None
        };
        let pot = self.potential(c);
        if let Some(p) = &pot {
            c.reach("box.side", bx.as_ref(), p.range(), "potential range");
        }
        self.sampler_checks(c);

        let kernel = if needs.kernel {
            let k = self.kernel(c);
            if let Some(k) = &k {
                c.reach("box.side", bx.as_ref(), k.support(), "hop kernel support");
            }
            k
        } else {
            None
        };
        if needs.run {
            c.positive("run.horizon", self.run.horizon);
            c.positive("run.sample_dt", self.run.sample_dt);
        }
        if needs.gnz {
            c.count("gnz.mc_points", self.gnz.mc_points);
            c.positive("gnz.sigmas", self.gnz.sigmas);
            if self.gnz.profiles.is_empty() {
                c.fail("gnz.profiles", "needs at least one profile");
            }
            for (name, bumps) in [("gnz.g", &self.gnz.g), ("gnz.psi", &self.gnz.psi)] {
                if let Some(b) = bumps {
                    self.field(c, name, b);
                }
            }
        }
        if needs.balance {
            c.count("balance.cases", self.balance.cases);
            c.count("balance.max_particles", self.balance.max_particles);
            for (i, &s) in self.balance.s_values.iter().enumerate() {
                c.unit(&format!("balance.s_values[{i}]"), s);
            }
            for (i, uv) in self.balance.uv_pairs.iter().enumerate() {
                c.unit(&format!("balance.uv_pairs[{i}][0]"), uv[0]);
                c.unit(&format!("balance.uv_pairs[{i}][1]"), uv[1]);
            }
        }
        if needs.kawasaki {
            match self.kawasaki.uv {
                Some([u, v]) => {
                    c.unit("kawasaki.uv[0]", u);
                    c.unit("kawasaki.uv[1]", v);
                }
                None => {
                    c.unit("kawasaki.s", self.kawasaki.s);
                }
            }
        }
        if needs.glauber {
            c.unit("glauber.s", self.glauber.s);
            if !(self.glauber.alpha.is_finite() && self.glauber.alpha >= 0.0) {
                c.fail("glauber.alpha", format!("must be nonnegative, got {}", self.glauber.alpha));
            }
        }
        if needs.diffusion {
            let d = &self.diffusion;
            c.unit("diffusion.s", d.s);
            c.positive("diffusion.mobility", d.mobility);
            c.positive("diffusion.dt", d.dt);
            c.positive("diffusion.energy_guard", d.energy_guard);
            if let Some(p) = &pot {
                if !p.is_smooth() {
                    c.fail("potential.shape", "diffusion needs a smooth potential (free, smooth-bump or soft-repulsive without hard core)");
                }
            }
        }
        if needs.invariance {
            let inv = &self.invariance;
            if inv.replicas < 10 {
                c.fail("invariance.replicas", format!("must be at least 10, got {}", inv.replicas));
            }
            c.positive("invariance.horizon", inv.horizon);
            c.count("invariance.samples_per_run", inv.samples_per_run);
            c.positive("invariance.sigmas", inv.sigmas);
            if inv.pair_radius < 0.0 {
                c.fail("invariance.pair_radius", "must be nonnegative");
            }
            if let Some(b) = &inv.psi {
                self.field(c, "invariance.psi", b);
            }
        }
        for (on, name, limit, descending) in [
            (needs.limit_glauber, "limit_glauber", &self.limit_glauber, true),
            (needs.limit_diffusion, "limit_diffusion", &self.limit_diffusion, false),
        ] {
            if !on {
                continue;
            }
            if limit.deltas.len() < 2 {
                c.fail(format!("{name}.deltas"), "needs at least two values");
            }
            for (i, &d) in limit.deltas.iter().enumerate() {
                c.positive(&format!("{name}.deltas[{i}]"), d);
            }
            let ordered = limit.deltas.windows(2).all(|w| if descending { w[0] > w[1] } else { w[0] < w[1] });
            if !ordered {
                let order = if descending { "descending" } else { "ascending" };
                c.fail(format!("{name}.deltas"), format!("must be strictly {order}"));
            }
            c.count(&format!("{name}.points_per_axis"), limit.points_per_axis);
            if let Some(h) = limit.max_spacing {
                c.positive(&format!("{name}.max_spacing"), h);
            }
            if let (Some(k), Some(bx)) = (&kernel, &bx) {
                let widest = limit.deltas.iter().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
                if widest.is_finite() {
                    if let Ok(kd) = k.with_delta(widest) {
                        if let Err(e) = bx.require_reach(kd.support(), "hop kernel support at the smallest delta") {
                            c.fail("box.side", format!("{e} (the box side must be at least twice every interaction reach)"));
                        }
                    }
                }
            }
            if let Some(f) = &limit.functional {
                self.functional(c, &format!("{name}.functional"), f);
            }
        }
        if needs.limit_diffusion {
            if let Some(p) = &pot {
                if !p.is_smooth() {
                    c.fail("potential.shape", "the diffusion limit needs a smooth potential");
                }
            }
        }
        Some(Built {
            bx: bx?,
            pot: pot?,
            kernel,
        })
    }

    fn potential(&self, c: &mut Checker) -> Option<PairPotential> {
        let p = &self.potential;
        let shape = match p.shape {
            ShapeName::Free => Shape::Free,
            ShapeName::SquareWell => Shape::SquareWell { depth: p.strength },
            ShapeName::SmoothBump => Shape::SmoothBump { amplitude: p.strength },
            ShapeName::SoftRepulsive => Shape::SoftRepulsive { amplitude: p.strength },
        };
        let pot = c.take("potential", PairPotential::new(shape, p.hard_core, p.range))?;
        Some(if p.neighbor_cap > 0 {
            pot.with_neighbor_cap(p.neighbor_cap)
        } else {
            pot
        })
    }

    fn kernel(&self, c: &mut Checker) -> Option<HopKernel> {
        let k = &self.kernel;
        c.take("kernel", HopKernel::new(k.shape, k.radius, k.amplitude, self.torus.dim))
    }

    fn sampler_checks(&self, c: &mut Checker) {
        let s = &self.sampler;
        c.count("sampler.sweeps", s.sweeps);
        c.count("sampler.thinning", s.thinning);
        if s.displacement_radius < 0.0 {
            c.fail("sampler.displacement_radius", "must be nonnegative");
        }
        let [b, d, m] = s.mix;
        if b <= 0.0 || d <= 0.0 || m < 0.0 || ((b + d + m) - 1.0).abs() > 1e-12 {
            c.fail("sampler.mix", "birth, death and displacement probabilities must be positive, positive, nonnegative and sum to 1");
        }
    }

    fn field(&self, c: &mut Checker, path: &str, bumps: &[BumpConfig]) -> Option<TestField> {
        if bumps.is_empty() {
            c.fail(path, "needs at least one bump");
            return None;
        }
        let mut out = Vec::new();
        let mut ok = true;
        for (i, b) in bumps.iter().enumerate() {
            let at = format!("{path}[{i}]");
            if b.center.len() != self.torus.dim {
                c.fail(format!("{at}.center"), format!("needs {} coordinates", self.torus.dim));
                ok = false;
                continue;
            }
            ok &= c.positive(&format!("{at}.radius"), b.radius);
            if 2.0 * b.radius > self.torus.side {
                c.fail(format!("{at}.radius"), "bump diameter exceeds the box side");
                ok = false;
            }
            let mut center = [0.0; 3];
            center[..b.center.len()].copy_from_slice(&b.center);
            out.push(Bump {
                center,
                radius: b.radius,
                amplitude: b.amplitude,
            });
        }
        if !ok {
            return None;
        }
        c.take(path, TestField::sum(out))
    }

    fn functional(&self, c: &mut Checker, path: &str, f: &FunctionalConfig) -> Option<CylinderFunctional> {
        let field = self.field(c, &format!("{path}.bumps"), &f.bumps)?;
        Some(match f.outer {
            OuterName::Exponential => CylinderFunctional::exponential(field),
            OuterName::Linear => CylinderFunctional::linear(field),
            OuterName::Tanh => c.take(
                path,
                CylinderFunctional::new(
                    vec![field],
                    Outer::Tanh {
                        weights: vec![1.0],
                        offset: f.offset,
                    },
                ),
            )?,
        })
    }

    /// Validated core objects; call after [`ExperimentConfig::validate`] succeeded.
    pub fn resolve(&self, needs: Needs) -> Result<Resolved, ConfigError> {
        let mut c = Checker::default();
        let built = self.build(&mut c, needs);
        match built {
            Some(b) if c.violations.is_empty() => Ok(Resolved { cfg: self.clone(), b }),
            _ => Err(ConfigError::Schema(c.violations)),
        }
    }
}

struct Built {
    bx: TorusBox,
    pot: PairPotential,
    kernel: Option<HopKernel>,
}

/// A validated configuration with its core objects constructed.
pub struct Resolved {
    pub cfg: ExperimentConfig,
    b: Built,
}

impl Resolved {
    pub fn bx(&self) -> TorusBox {
        self.b.bx
    }

    pub fn pot(&self) -> PairPotential {
        self.b.pot
    }

    pub fn kernel(&self) -> HopKernel {
        self.b.kernel.expect("kernel section requested")
    }

    pub fn gibbs(&self) -> GibbsParams {
        let s = &self.cfg.sampler;
        let mut p = GibbsParams::new(self.cfg.activity, self.pot(), self.bx());
        p.sweeps = s.sweeps;
        p.burn_in = s.burn_in;
        p.thinning = s.thinning;
        p.seed = self.cfg.seed;
        if s.steps_per_sweep > 0 {
            p.steps_per_sweep = s.steps_per_sweep;
        }
        if s.displacement_radius > 0.0 {
            p.displacement_radius = s.displacement_radius;
        }
        p.mix = MoveMix {
            birth: s.mix[0],
            death: s.mix[1],
            displacement: s.mix[2],
        };
        p
    }

    pub fn rate_spec(&self) -> RateSpec {
        let variant = match self.cfg.kawasaki.uv {
            Some([u, v]) => RateVariant::KawasakiUv { u, v },
            None => RateVariant::KawasakiS { s: self.cfg.kawasaki.s },
        };
        RateSpec::new(variant, self.kernel(), self.cfg.activity).expect("validated")
    }

    pub fn glauber_spec(&self) -> GlauberSpec {
        GlauberSpec::new(self.cfg.glauber.s, self.cfg.activity, self.cfg.glauber.alpha).expect("validated")
    }

    pub fn diffusion(&self) -> DiffusionParams {
        let d = &self.cfg.diffusion;
        let mut p = DiffusionParams::new(d.s, d.mobility, d.dt, self.pot(), self.bx());
        p.seed = self.cfg.seed;
        p.energy_guard = d.energy_guard;
        p.convention = d.convention;
        p
    }

    /// A configured bump list, or a single centered bump.
    pub fn field_or(&self, bumps: Option<&Vec<BumpConfig>>, radius: f64, amplitude: f64) -> TestField {
        match bumps {
            Some(b) => self.cfg.field(&mut Checker::default(), "", b).expect("validated"),
            None => {
                let mut center = [0.0; 3];
                for c in center.iter_mut().take(self.cfg.torus.dim) {
                    *c = 0.5 * self.cfg.torus.side;
                }
                let r = radius.min(0.45 * self.cfg.torus.side);
                TestField::bump(center, r, amplitude).expect("positive radius")
            }
        }
    }

    pub fn functional_or(&self, f: Option<&FunctionalConfig>, outer: OuterName, radius: f64, amplitude: f64) -> CylinderFunctional {
        let side = self.cfg.torus.side;
        let fallback = FunctionalConfig::centered(outer, side, radius.min(0.45 * side), amplitude, self.cfg.torus.dim);
        self.cfg
            .functional(&mut Checker::default(), "", f.unwrap_or(&fallback))
            .expect("validated")
    }

    pub fn grid(&self, limit: &LimitConfig) -> QuadratureGrid {
        let g = QuadratureGrid::new(limit.points_per_axis);
        match limit.max_spacing {
            Some(h) => g.with_max_spacing(h),
            None => g,
        }
    }
}
