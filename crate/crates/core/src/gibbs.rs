//! Grand-canonical Metropolis–Hastings sampler for the finite-volume Gibbs measure with
//! density z^N e^{−U(γ)}, and estimators of the first two correlation functions.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{ball_volume, random_direction, CellList, Configuration, Point, TorusBox, ORIGIN};
use crate::io::Snapshot;
use crate::potentials::{find_overlap, local_energy, relative_energy, relative_energy_skipping, total_energy, PairPotential};
use crate::rng::{stream, SimRng};
use crate::stats::{EstimateWithError, DEFAULT_BATCHES};

/// Proposal probabilities of the three move types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoveMix {
    pub birth: f64,
    pub death: f64,
    pub displacement: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        Self {
            birth: 0.25,
            death: 0.25,
            displacement: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsParams {
    pub activity: f64,
    pub pot: PairPotential,
    pub bx: TorusBox,
    pub mix: MoveMix,
    /// Radius of the uniform ball for displacement proposals.
    pub displacement_radius: f64,
    pub steps_per_sweep: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    /// Sweeps between recorded snapshots.
    pub thinning: usize,
    pub seed: u64,
}

impl GibbsParams {
    /// Defaults: mix (¼, ¼, ½), displacement radius R, max(10, ⌈zV⌉) steps per sweep.
    pub fn new(activity: f64, pot: PairPotential, bx: TorusBox) -> Self {
        Self {
            activity,
            pot,
            bx,
            mix: MoveMix::default(),
            displacement_radius: pot.range().min(0.49 * bx.side()),
            steps_per_sweep: ((activity * bx.volume()).ceil() as usize).max(10),
            sweeps: 1000,
            burn_in: 100,
            thinning: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.activity.is_finite() && self.activity > 0.0) {
            return Err(invalid("activity", format!("must be positive, got {}", self.activity)));
        }
        let m = self.mix;
        if m.birth < 0.0 || m.death < 0.0 || m.displacement < 0.0 {
            return Err(invalid("mix", "probabilities must be nonnegative"));
        }
        if (m.birth + m.death + m.displacement - 1.0).abs() > 1e-12 {
            return Err(invalid("mix", "probabilities must sum to 1"));
        }
        if m.birth == 0.0 || m.death == 0.0 {
            return Err(invalid("mix", "birth and death probabilities must be positive"));
        }
        if !(self.displacement_radius > 0.0) {
            return Err(invalid("displacement_radius", "must be positive"));
        }
        if self.steps_per_sweep == 0 || self.thinning == 0 {
            return Err(invalid("thinning", "steps per sweep and thinning must be positive"));
        }
        self.bx.require_reach(self.pot.range(), "potential range")?;
        self.bx
            .require_reach(self.displacement_radius, "displacement radius")
    }

    fn cutoff(&self) -> f64 {
        self.pot.range()
    }
}

/// Birth acceptance min(1, (p_d/p_b)·zV·e^{−E(x,γ)}/(N+1)).
pub fn birth_acceptance(params: &GibbsParams, n: usize, e: f64) -> f64 {
    if e == f64::INFINITY {
        return 0.0;
    }
    let ratio = params.mix.death / params.mix.birth * params.activity * params.bx.volume() * (-e).exp()
        / (n + 1) as f64;
    ratio.min(1.0)
}

/// Death acceptance min(1, (p_b/p_d)·N·e^{E(x,γ∖x)}/(zV)).
pub fn death_acceptance(params: &GibbsParams, n: usize, e: f64) -> f64 {
    let ratio = params.mix.birth / params.mix.death * n as f64 * e.exp()
        / (params.activity * params.bx.volume());
    ratio.min(1.0)
}

/// Displacement acceptance min(1, e^{−ΔE}).
pub fn displacement_acceptance(delta_e: f64) -> f64 {
    if delta_e == f64::INFINITY {
        0.0
    } else {
        (-delta_e).exp().min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Birth,
    Death,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MoveCounters {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

pub struct GibbsSampler {
    params: GibbsParams,
    config: Configuration,
    cells: CellList,
    rng: SimRng,
    counters: MoveCounters,
}

impl GibbsSampler {
    pub fn new(params: GibbsParams, rng: SimRng) -> Result<Self> {
        Self::from_points(params, Vec::new(), rng)
    }

    pub fn from_points(params: GibbsParams, points: Vec<Point>, rng: SimRng) -> Result<Self> {
        params.validate()?;
        let config = Configuration::from_points(&params.bx, points);
        if let Some((i, j)) = find_overlap(&params.pot, &params.bx, config.points()) {
            return Err(Error::HardCoreOverlap(i, j));
        }
        let cells = CellList::build(&params.bx, params.cutoff(), &config)?;
        Ok(Self {
            params,
            config,
            cells,
            rng,
            counters: MoveCounters::default(),
        })
    }

    pub fn points(&self) -> &[Point] {
        self.config.points()
    }

    pub fn counters(&self) -> MoveCounters {
        self.counters
    }

    fn energy(&self, x: &Point, skip: Option<usize>) -> f64 {
        local_energy(&self.params.pot, x, &self.config, &self.cells, skip)
            .expect("cell list tracks the configuration")
    }

    /// One Metropolis–Hastings update; returns the move type and whether it was accepted.
    pub fn step(&mut self) -> (MoveKind, bool) {
        let p = &self.params;
        let u: f64 = self.rng.random();
        let n = self.config.len();
        let kind = if u < p.mix.birth {
            MoveKind::Birth
        } else if u < p.mix.birth + p.mix.death {
            MoveKind::Death
        } else {
            MoveKind::Displacement
        };
        let slot = kind as usize;
        self.counters.proposed[slot] += 1;
        let accepted = match kind {
            MoveKind::Birth => {
                let x = p.bx.uniform_point(&mut self.rng);
                let a = birth_acceptance(p, n, self.energy(&x, None));
                let ok = self.rng.random::<f64>() < a;
                if ok {
                    self.cells.insert(&mut self.config, x).expect("fresh cell list");
                }
                ok
            }
            MoveKind::Death => {
                if n == 0 {
                    false
                } else {
                    let i = self.rng.random_range(0..n);
                    let x = self.config.points()[i];
                    let a = death_acceptance(p, n, self.energy(&x, Some(i)));
                    let ok = self.rng.random::<f64>() < a;
                    if ok {
                        self.cells.remove(&mut self.config, i).expect("fresh cell list");
                    }
                    ok
                }
            }
            MoveKind::Displacement => {
                if n == 0 {
                    false
                } else {
                    let i = self.rng.random_range(0..n);
                    let x = self.config.points()[i];
                    let v = uniform_in_ball(&mut self.rng, p.bx.dim(), p.displacement_radius);
                    let y = p.bx.translate(&x, &v);
                    let after = self.energy(&y, Some(i));
                    let a = if after == f64::INFINITY {
                        0.0
                    } else {
                        displacement_acceptance(after - self.energy(&x, Some(i)))
                    };
                    let ok = self.rng.random::<f64>() < a;
                    if ok {
                        self.cells.relocate(&mut self.config, i, y).expect("fresh cell list");
                    }
                    ok
                }
            }
        };
        if accepted {
            self.counters.accepted[slot] += 1;
        }
        (kind, accepted)
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.params.steps_per_sweep {
            self.step();
        }
    }
}

/// Uniform point of the ball of radius `r` around the origin.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, r: f64) -> Point {
    let rad = r * rng.random::<f64>().powf(1.0 / dim as f64);
    let u = random_direction(rng, dim);
    let mut v = ORIGIN;
    for k in 0..dim {
        v[k] = rad * u[k];
    }
    v
}

/// Burn-in, then one snapshot every `thinning` sweeps for `sweeps` sweeps, from the
/// empty configuration on stream `replica` of the seed.
pub fn sample_chain(params: &GibbsParams, replica: u64) -> Result<Vec<Snapshot>> {
    let mut s = GibbsSampler::new(params.clone(), stream(params.seed, replica))?;
    for _ in 0..params.burn_in {
        s.sweep();
    }
    let mut out = Vec::with_capacity(params.sweeps / params.thinning);
    for k in 1..=params.sweeps {
        s.sweep();
        if k % params.thinning == 0 {
            out.push(Snapshot::new(&params.bx, params.seed, k as u64, s.points().to_vec()));
        }
    }
    Ok(out)
}

pub fn sample_equilibrium(params: &GibbsParams) -> Result<Vec<Snapshot>> {
    sample_chain(params, 0)
}

/// Independent chains on streams 0..chains, run in parallel; output order is by chain.
pub fn sample_replicas(params: &GibbsParams, chains: usize) -> Result<Vec<Vec<Snapshot>>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|r| sample_chain(params, r))
        .collect()
}

/// The last snapshot of each of `chains` independent chains: i.i.d. equilibrium starts.
pub fn independent_starts(params: &GibbsParams, chains: usize) -> Result<Vec<Snapshot>> {
    let mut p = params.clone();
    p.thinning = p.sweeps.max(1);
    Ok(sample_replicas(&p, chains)?
        .into_iter()
        .filter_map(|mut c| c.pop())
        .collect())
}

/// A proposed transition between two configurations, for balance checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    Birth(Point),
    Death(usize),
    Displace(usize, Point),
}

/// Unnormalized density z^N e^{−U(γ)} with respect to the Lebesgue–Poisson measure.
pub fn gibbs_density(params: &GibbsParams, points: &[Point]) -> f64 {
    params.activity.powi(points.len() as i32) * (-total_energy(&params.pot, &params.bx, points)).exp()
}

/// (π(γ)·P(γ → γ'), π(γ')·P(γ' → γ)) as densities, for the move taking `points` to γ'.
pub fn transition_flux(params: &GibbsParams, points: &[Point], mv: Move) -> (f64, f64) {
    let bx = &params.bx;
    let pot = &params.pot;
    let n = points.len();
    let mix = params.mix;
    match mv {
        Move::Birth(x) => {
            let mut after = points.to_vec();
            after.push(x);
            let e = relative_energy(pot, bx, &x, points);
            let fwd = gibbs_density(params, points) * mix.birth / bx.volume() * birth_acceptance(params, n, e);
            let back = gibbs_density(params, &after) * mix.death / (n + 1) as f64
                * death_acceptance(params, n + 1, e);
            (fwd, back)
        }
        Move::Death(i) => {
            let mut after = points.to_vec();
            let x = after.swap_remove(i);
            let (b, f) = transition_flux(params, &after, Move::Birth(x));
            (f, b)
        }
        Move::Displace(i, y) => {
            let mut after = points.to_vec();
            after[i] = y;
            let q = 1.0 / ball_volume(bx.dim(), params.displacement_radius);
            let inside = bx.dist(&points[i], &y) < params.displacement_radius;
            let q = if inside { q } else { 0.0 };
            let e_old = relative_energy_skipping(pot, bx, &points[i], points, Some(i));
            let e_new = relative_energy_skipping(pot, bx, &y, points, Some(i));
            let common = mix.displacement / n as f64 * q;
            let fwd = gibbs_density(params, points) * common * displacement_acceptance(e_new - e_old);
            let back = gibbs_density(params, &after) * common * displacement_acceptance(e_old - e_new);
            (fwd, back)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub estimate: EstimateWithError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub order: usize,
    /// k̂⁽¹⁾ = E[N]/V (order 1).
    pub k1: Option<EstimateWithError>,
    /// k̂⁽²⁾(r) by radial bin (order 2).
    pub k2: Vec<RadialBin>,
    pub ess: f64,
}

pub const MIN_SNAPSHOTS: usize = 100;

/// Correlation estimates from snapshots of a single box. For order 2, `bins` equal bins on
/// [0, r_max) with r_max ≤ L/2.
pub fn estimate_correlations(
    snapshots: &[Snapshot],
    order: usize,
    bins: usize,
    r_max: f64,
) -> Result<CorrelationEstimate> {
    if snapshots.len() < MIN_SNAPSHOTS {
        return Err(Error::InsufficientSamples {
            have: snapshots.len(),
            need: MIN_SNAPSHOTS,
        });
    }
    let bx = snapshots[0].torus()?;
    let v = bx.volume();
    match order {
        1 => {
            let xs: Vec<f64> = snapshots.iter().map(|s| s.points.len() as f64 / v).collect();
            let est = EstimateWithError::batch_means(&xs, DEFAULT_BATCHES)?;
            Ok(CorrelationEstimate {
                order,
                k1: Some(est),
                k2: Vec::new(),
                ess: est.ess,
            })
        }
        2 => {
            if bins == 0 || !(r_max > 0.0 && r_max <= 0.5 * bx.side()) {
                return Err(invalid("r_max", "need bins > 0 and 0 < r_max ≤ L/2"));
            }
            let width = r_max / bins as f64;
            let mut per_bin: Vec<Vec<f64>> = vec![Vec::with_capacity(snapshots.len()); bins];
            let shells: Vec<f64> = (0..bins)
                .map(|b| ball_volume(bx.dim(), (b + 1) as f64 * width) - ball_volume(bx.dim(), b as f64 * width))
                .collect();
            let mut hist = vec![0usize; bins];
            for s in snapshots {
                hist.iter_mut().for_each(|h| *h = 0);
                let pts = &s.points;
                for i in 0..pts.len() {
                    for j in (i + 1)..pts.len() {
                        let d = bx.dist(&pts[i], &pts[j]);
                        if d < r_max {
                            let b = ((d / width) as usize).min(bins - 1);
                            hist[b] += 2;
                        }
                    }
                }
                for b in 0..bins {
                    per_bin[b].push(hist[b] as f64 / (v * shells[b]));
                }
            }
            let mut k2 = Vec::with_capacity(bins);
            let mut ess = f64::INFINITY;
            for (b, xs) in per_bin.iter().enumerate() {
                let est = EstimateWithError::batch_means(xs, DEFAULT_BATCHES)?;
                if est.stderr > 0.0 {
                    ess = ess.min(est.ess);
                }
                k2.push(RadialBin {
                    r_lo: b as f64 * width,
                    r_hi: (b + 1) as f64 * width,
                    estimate: est,
                });
            }
            Ok(CorrelationEstimate {
                order,
                k1: None,
                k2,
                ess: if ess.is_finite() { ess } else { snapshots.len() as f64 },
            })
        }
        _ => Err(invalid("order", format!("must be 1 or 2, got {order}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuelleReport {
    pub xi: f64,
    /// Indices of bins with k̂⁽²⁾ − 3·s.e. > ξ².
    pub flagged: Vec<usize>,
    pub bins: usize,
}

pub fn ruelle_report(estimate: &CorrelationEstimate, xi: f64) -> RuelleReport {
    let bound = xi * xi;
    let flagged = estimate
        .k2
        .iter()
        .enumerate()
        .filter(|(_, b)| b.estimate.mean - 3.0 * b.estimate.stderr > bound)
        .map(|(i, _)| i)
        .collect();
    RuelleReport {
        xi,
        flagged,
        bins: estimate.k2.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::random_admissible;
    use crate::stats::poisson_chi_square;
    use rand::SeedableRng;

    fn free_params(z: f64, dim: usize, side: f64) -> GibbsParams {
        GibbsParams::new(z, PairPotential::free(), TorusBox::new(dim, side).unwrap())
    }

    #[test]
    fn death_on_empty_is_rejected() {
        let mut p = free_params(0.5, 1, 10.0);
        p.mix = MoveMix {
            birth: 1e-9,
            death: 1.0 - 2e-9,
            displacement: 1e-9,
        };
        let mut s = GibbsSampler::new(p, stream(1, 0)).unwrap();
        let (kind, ok) = s.step();
        assert_eq!(kind, MoveKind::Death);
        assert!(!ok);
        assert!(s.points().is_empty());
    }

    #[test]
    fn free_chain_has_poisson_counts() {
        let mut p = free_params(0.5, 1, 10.0);
        p.sweeps = 4000;
        p.thinning = 2;
        p.seed = 17;
        let snaps = sample_equilibrium(&p).unwrap();
        let ns: Vec<f64> = snaps.iter().map(|s| s.points.len() as f64).collect();
        let est = EstimateWithError::from_samples(&ns).unwrap();
        assert!(est.within(5.0, 3.0), "{est:?}");
        let counts: Vec<usize> = snaps.iter().map(|s| s.points.len()).collect();
        assert!(poisson_chi_square(&counts, 5.0).unwrap().p_value > 0.01);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let mut p = GibbsParams::new(
            0.4,
            PairPotential::square_well(0.3, 0.5, 1.0).unwrap(),
            TorusBox::new(2, 6.0).unwrap(),
        );
        p.sweeps = 50;
        p.seed = 3;
        assert_eq!(sample_equilibrium(&p).unwrap(), sample_equilibrium(&p).unwrap());
    }

    #[test]
    fn moves_satisfy_detailed_balance() {
        let mut rng = SimRng::seed_from_u64(5);
        let pot = PairPotential::square_well(0.3, 0.5, 1.0).unwrap();
        let mut p = GibbsParams::new(0.7, pot, TorusBox::new(2, 3.0).unwrap());
        p.mix = MoveMix {
            birth: 0.3,
            death: 0.2,
            displacement: 0.5,
        };
        p.displacement_radius = 1.0;
        for case in 0..3000 {
            let n = case % 3;
            let pts = random_admissible(&mut rng, &p.bx, &pot, n);
            let mv = match (case / 3) % 3 {
                0 => Move::Birth(p.bx.uniform_point(&mut rng)),
                1 if n > 0 => Move::Death(rng.random_range(0..n)),
                2 if n > 0 => {
                    let i = rng.random_range(0..n);
                    Move::Displace(i, p.bx.translate(&pts[i], &uniform_in_ball(&mut rng, 2, 1.0)))
                }
                _ => Move::Birth(p.bx.uniform_point(&mut rng)),
            };
            let (f, b) = transition_flux(&p, &pts, mv);
            assert!((f - b).abs() <= 1e-12 * (1.0 + f.max(b)), "{mv:?}: {f} vs {b}");
        }
    }

    #[test]
    fn poisson_correlations_and_ruelle_flags() {
        let mut p = free_params(0.5, 2, 8.0);
        p.sweeps = 3000;
        p.seed = 21;
        let snaps = sample_equilibrium(&p).unwrap();
        let k1 = estimate_correlations(&snaps, 1, 0, 0.0).unwrap();
        assert!(k1.k1.unwrap().within(0.5, 3.0));
        let k2 = estimate_correlations(&snaps, 2, 4, 3.0).unwrap();
        for b in &k2.k2 {
            assert!(b.estimate.within(0.25, 3.5), "{b:?}");
        }
        assert!(ruelle_report(&k2, 0.5).flagged.is_empty());
        assert_eq!(ruelle_report(&k2, 0.25).flagged.len(), 4);
        assert!(estimate_correlations(&snaps[..50], 1, 0, 0.0).is_err());
    }

    #[test]
    fn hard_core_excludes_short_distances() {
        let pot = PairPotential::square_well(0.3, 0.5, 1.0).unwrap();
        let mut p = GibbsParams::new(0.8, pot, TorusBox::new(2, 6.0).unwrap());
        p.sweeps = 300;
        p.seed = 8;
        let snaps = sample_equilibrium(&p).unwrap();
        for s in &snaps {
            assert!(find_overlap(&pot, &p.bx, &s.points).is_none());
        }
        let k2 = estimate_correlations(&snaps, 2, 6, 1.2).unwrap();
        for b in k2.k2.iter().filter(|b| b.r_hi <= 0.5) {
            assert_eq!(b.estimate.mean, 0.0);
        }
    }

    #[test]
    fn repulsion_lowers_density() {
        let pot = PairPotential::soft_repulsive(2.0, 1.0).unwrap();
        let mut p = GibbsParams::new(0.6, pot, TorusBox::new(2, 8.0).unwrap());
        p.sweeps = 2000;
        p.seed = 4;
        let snaps = sample_equilibrium(&p).unwrap();
        let k1 = estimate_correlations(&snaps, 1, 0, 0.0).unwrap().k1.unwrap();
        assert!(k1.mean + 3.0 * k1.stderr < 0.6, "{k1:?}");
    }

    #[test]
    fn invalid_params() {
        let mut p = free_params(0.5, 1, 10.0);
        p.mix.birth = 0.5;
        assert!(p.validate().is_err());
        let p = free_params(-1.0, 1, 10.0);
        assert!(p.validate().is_err());
    }
}
