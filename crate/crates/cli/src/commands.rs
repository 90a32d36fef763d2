//! Subcommand pipelines. Each returns whether its verification passed; plain runs always
//! pass.

use std::io::{BufReader, Write};
use std::path::Path;

use kawlab::diffusion::DiffusionEngine;
use kawlab::gibbs::{estimate_correlations, independent_starts, sample_equilibrium};
use kawlab::glauber::GlauberEngine;
use kawlab::io::{read_snapshots, write_snapshot, write_snapshots};
use kawlab::kawasaki::{EventCounters, KawasakiEngine};
use kawlab::observables::{Event, NamedObservable, Observable, TimeSeries};
use kawlab::potentials::compute_constants;
use kawlab::rng::{phase_seed, stream};
use kawlab::verify::{
    detailed_balance_suite, diffusion_limit_experiment, glauber_limit_experiment, gnz_test, invariance_test,
    write_limit_csv, BalanceSuite, DiffusionLimitSetup, Dynamics, GlauberLimitSetup, GnzTestFunction, InvarianceSetup,
    LimitCurve, VerificationReport,
};
use kawlab::{Point, Snapshot};
use serde::Serialize;

use crate::config::{DynamicsName, Needs, OuterName, Resolved};
use crate::output::{OutputDir, Provenance};

pub type CmdResult = Result<bool, Box<dyn std::error::Error>>;

/// Seed phases, so sampling and dynamics never share a stream.
const PHASE_SAMPLE: u64 = 0;
const PHASE_DYNAMICS: u64 = 1;
const PHASE_CHECK: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Sample,
    RunKawasaki,
    RunGlauber,
    RunDiffusion,
    VerifyGnz,
    VerifyBalance,
    VerifyInvariance,
    LimitGlauber,
    LimitDiffusion,
    Constants,
}

impl Command {
    pub fn needs(self, dynamics: DynamicsName) -> Needs {
        let none = Needs::default();
        match self {
            Command::Sample => none,
            Command::VerifyGnz => Needs { gnz: true, ..none },
            Command::Constants => Needs { kernel: true, ..none },
            Command::RunKawasaki => Needs {
                run: true,
                kernel: true,
                kawasaki: true,
                ..none
            },
            Command::RunGlauber => Needs {
                run: true,
                glauber: true,
                ..none
            },
            Command::RunDiffusion => Needs {
                run: true,
                diffusion: true,
                ..none
            },
            Command::VerifyBalance => Needs {
                kernel: true,
                balance: true,
                ..none
            },
            Command::VerifyInvariance => Needs {
                invariance: true,
                kernel: dynamics == DynamicsName::Kawasaki,
                kawasaki: dynamics == DynamicsName::Kawasaki,
                glauber: dynamics == DynamicsName::Glauber,
                diffusion: dynamics == DynamicsName::Diffusion,
                ..none
            },
            Command::LimitGlauber => Needs {
                kernel: true,
                limit_glauber: true,
                ..none
            },
            Command::LimitDiffusion => Needs {
                kernel: true,
                limit_diffusion: true,
                ..none
            },
        }
    }
}

pub struct Context<'a> {
    pub cfg: &'a Resolved,
    pub out: &'a OutputDir,
    pub prov: &'a Provenance,
    pub snapshots: Option<&'a Path>,
}

impl Context<'_> {
    fn seed(&self, phase: u64) -> u64 {
        phase_seed(self.cfg.cfg.seed, phase)
    }

    /// Snapshots from `--snapshots`, else a fresh sampler run.
    fn snapshots(&self) -> Result<Vec<Snapshot>, Box<dyn std::error::Error>> {
        if let Some(path) = self.snapshots {
            let file = std::fs::File::open(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let snaps = read_snapshots(BufReader::new(file))?;
            let bx = self.cfg.bx();
            if let Some(s) = snaps.iter().find(|s| s.dim != bx.dim() || s.side != bx.side()) {
                return Err(format!(
                    "snapshot box (d={}, L={}) differs from the configured box (d={}, L={})",
                    s.dim,
                    s.side,
                    bx.dim(),
                    bx.side()
                )
                .into());
            }
            return Ok(snaps);
        }
        let mut p = self.cfg.gibbs();
        p.seed = self.seed(PHASE_SAMPLE);
        Ok(sample_equilibrium(&p)?)
    }

    fn start(&self) -> Result<Vec<Point>, Box<dyn std::error::Error>> {
        let mut p = self.cfg.gibbs();
        p.seed = self.seed(PHASE_SAMPLE);
        Ok(independent_starts(&p, 1)?.remove(0).points)
    }

    fn report(&self, reports: &[VerificationReport]) -> CmdResult {
        #[derive(Serialize)]
        struct Body<'a> {
            passed: bool,
            reports: &'a [VerificationReport],
        }
        let passed = reports.iter().all(|r| r.passed);
        self.out.write_json("report.json", self.prov, &Body { passed, reports })?;
        for r in reports {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            println!(
                "{verdict} {}: statistic {:.6e} threshold {:.6e} (n = {})",
                r.name, r.statistic, r.threshold, r.samples
            );
        }
        Ok(passed)
    }
}

pub fn run(cmd: Command, ctx: &Context) -> CmdResult {
    match cmd {
        Command::Sample => sample(ctx),
        Command::RunKawasaki | Command::RunGlauber | Command::RunDiffusion => trajectory(cmd, ctx),
        Command::VerifyGnz => verify_gnz(ctx),
        Command::VerifyBalance => verify_balance(ctx),
        Command::VerifyInvariance => verify_invariance(ctx),
        Command::LimitGlauber => limit_glauber(ctx),
        Command::LimitDiffusion => limit_diffusion(ctx),
        Command::Constants => constants(ctx),
    }
}

fn sample(ctx: &Context) -> CmdResult {
    let snaps = ctx.snapshots()?;
    let mut w = ctx.out.create("snapshots.txt")?;
    write_snapshots(&mut w, &snaps)?;
    w.flush()?;
    #[derive(Serialize)]
    struct Summary {
        snapshots: usize,
        mean_count: f64,
        k1: Option<f64>,
        k1_stderr: Option<f64>,
    }
    let k1 = estimate_correlations(&snaps, 1, 0, 0.0).ok().and_then(|c| c.k1);
    let mean_count = snaps.iter().map(|s| s.points.len()).sum::<usize>() as f64 / snaps.len().max(1) as f64;
    let summary = Summary {
        snapshots: snaps.len(),
        mean_count,
        k1: k1.map(|e| e.mean),
        k1_stderr: k1.map(|e| e.stderr),
    };
    ctx.out.write_json("summary.json", ctx.prov, &summary)?;
    println!("{} snapshots, mean N {:.4}", summary.snapshots, mean_count);
    Ok(true)
}

fn trajectory_observables(ctx: &Context) -> Vec<NamedObservable> {
    let cfg = ctx.cfg;
    let psi = cfg.field_or(cfg.cfg.invariance.psi.as_ref(), 0.25 * cfg.cfg.torus.side, 1.0);
    vec![
        NamedObservable::new("N", Observable::Count),
        NamedObservable::new("psi", Observable::Pairing(psi)),
        NamedObservable::new("pairs", Observable::PairCount { radius: cfg.pot().range() }),
    ]
}

fn trajectory(cmd: Command, ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let run = &cfg.cfg.run;
    let start = ctx.start()?;
    let rng = stream(ctx.seed(PHASE_DYNAMICS), 0);
    let obs = trajectory_observables(ctx);
    let bx = cfg.bx();
    let (series, points, counters, log): (TimeSeries, Vec<Point>, EventCounters, Vec<Event>) = match cmd {
        Command::RunKawasaki => {
            let mut e = KawasakiEngine::new(cfg.rate_spec(), cfg.pot(), bx, start, rng)?;
            if run.event_log {
                e.enable_log();
            }
            let s = e.run(run.horizon, run.sample_dt, &obs)?;
            (s, e.points().to_vec(), e.counters(), e.take_log())
        }
        Command::RunGlauber => {
            let mut e = GlauberEngine::new(cfg.glauber_spec(), cfg.pot(), bx, start, rng)?;
            if run.event_log {
                e.enable_log();
            }
            let s = e.run(run.horizon, run.sample_dt, &obs)?;
            (s, e.points().to_vec(), e.counters(), e.take_log())
        }
        _ => {
            let mut e = DiffusionEngine::new(cfg.diffusion(), start, rng)?;
            let s = e.run(run.horizon, run.sample_dt, &obs)?;
            let steps = e.steps();
            let counters = EventCounters {
                proposed: steps,
                accepted: steps,
                null: 0,
            };
            (s, e.points().to_vec(), counters, Vec::new())
        }
    };
    let mut w = ctx.out.create("series.jsonl")?;
    series.write_json_lines(&mut w)?;
    w.flush()?;
    if run.event_log && !log.is_empty() {
        let mut w = ctx.out.create("events.txt")?;
        for ev in &log {
            ev.write_line(&mut w, bx.dim())?;
        }
        w.flush()?;
    }
    let mut w = ctx.out.create("final.txt")?;
    write_snapshot(&mut w, &Snapshot::new(&bx, cfg.cfg.seed, 0, points))?;
    w.flush()?;
    ctx.out.write_json(
        "summary.json",
        ctx.prov,
        &serde_json::json!({
            "proposed": counters.proposed,
            "accepted": counters.accepted,
            "null": counters.null,
            "null_fraction": counters.null_fraction(),
        }),
    )?;
    if cmd == Command::RunDiffusion {
        println!("{} integrator steps", counters.accepted);
    } else {
        println!(
            "{} events proposed, {} accepted, null fraction {:.3}",
            counters.proposed,
            counters.accepted,
            counters.null_fraction()
        );
    }
    Ok(true)
}

fn verify_gnz(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let gnz = &cfg.cfg.gnz;
    let snaps: Vec<Vec<Point>> = ctx.snapshots()?.into_iter().map(|s| s.points).collect();
    let side = cfg.cfg.torus.side;
    let g = cfg.field_or(gnz.g.as_ref(), 0.3 * side, 1.0);
    let psi = cfg.field_or(gnz.psi.as_ref(), 0.25 * side, 0.6);
    let family: Vec<GnzTestFunction> = gnz
        .profiles
        .iter()
        .map(|&h| {
            let name = serde_json::to_value(h).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            GnzTestFunction::new(name, g.clone(), psi.clone(), h)
        })
        .collect();
    let pot = cfg.pot();
    let reports = gnz_test(
        &snaps,
        cfg.cfg.activity,
        &pot,
        &cfg.bx(),
        &family,
        gnz.mc_points,
        ctx.seed(PHASE_CHECK),
        gnz.sigmas,
    )?;
    ctx.report(&reports)
}

fn verify_balance(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let b = &cfg.cfg.balance;
    let suite = BalanceSuite {
        s_values: b.s_values.clone(),
        uv_pairs: b.uv_pairs.iter().map(|p| (p[0], p[1])).collect(),
        pot: cfg.pot(),
        bx: cfg.bx(),
        kernel: cfg.kernel(),
        cases: b.cases,
        max_particles: b.max_particles,
        seed: ctx.seed(PHASE_CHECK),
    };
    ctx.report(&[detailed_balance_suite(&suite)?])
}

fn verify_invariance(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let inv = &cfg.cfg.invariance;
    let dynamics = match inv.dynamics {
        DynamicsName::Kawasaki => Dynamics::Kawasaki(cfg.rate_spec()),
        DynamicsName::Glauber => Dynamics::Glauber(cfg.glauber_spec()),
        DynamicsName::Diffusion => Dynamics::Diffusion(cfg.diffusion()),
    };
    let mut p = cfg.gibbs();
    p.seed = ctx.seed(PHASE_SAMPLE);
    let starts: Vec<Vec<Point>> = independent_starts(&p, inv.replicas)?.into_iter().map(|s| s.points).collect();
    let radius = if inv.pair_radius > 0.0 { inv.pair_radius } else { cfg.pot().range() };
    let psi = cfg.field_or(inv.psi.as_ref(), 0.25 * cfg.cfg.torus.side, 1.0);
    let mut observables = vec![NamedObservable::new("psi", Observable::Pairing(psi))];
    match inv.dynamics {
        DynamicsName::Glauber => observables.push(NamedObservable::new("N", Observable::Count)),
        _ => observables.push(NamedObservable::new("pairs", Observable::PairCount { radius })),
    }
    let setup = InvarianceSetup {
        dynamics,
        pot: cfg.pot(),
        bx: cfg.bx(),
        horizon: inv.horizon,
        samples_per_run: inv.samples_per_run,
        observables,
        seed: ctx.seed(PHASE_DYNAMICS),
        sigmas: inv.sigmas,
    };
    let out = invariance_test(&setup, &starts)?;
    let mut reports = out.reports;
    let name = format!("invariance/{}/", setup.dynamics.name());
    match inv.dynamics {
        DynamicsName::Glauber => {
            let witness = out.count_varied_fraction > 0.0;
            reports.push(
                VerificationReport::new(format!("{name}count-varies"), 0.0, 0.0, 0.0, starts.len(), setup.seed)
                    .with_detail("varied_fraction", out.count_varied_fraction)
                    .require(witness, "count_varies"),
            );
        }
        _ => {
            reports.push(
                VerificationReport::new(format!("{name}count-conserved"), 0.0, 0.0, 0.0, starts.len(), setup.seed)
                    .with_detail("events_per_particle", out.events_per_particle)
                    .require(out.count_conserved, "count_conserved"),
            );
        }
    }
    println!("{:.2} accepted events per particle", out.events_per_particle);
    ctx.report(&reports)
}

fn write_curve(ctx: &Context, curve: &LimitCurve) -> CmdResult {
    let mut w = ctx.out.create("limit.csv")?;
    write_limit_csv(&mut w, &curve.rows)?;
    w.flush()?;
    for r in &curve.rows {
        println!("delta {:>6} l2err {:.6e} +- {:.2e}", r.delta, r.l2err, r.stderr);
    }
    ctx.report(std::slice::from_ref(&curve.report))
}

fn limit_glauber(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let l = &cfg.cfg.limit_glauber;
    let snaps: Vec<Vec<Point>> = ctx.snapshots()?.into_iter().map(|s| s.points).collect();
    let psi = match &l.functional {
        Some(f) => cfg.functional_or(Some(f), OuterName::Exponential, 0.0, 0.0).fields()[0].clone(),
        None => cfg.field_or(None, 1.5, 0.8),
    };
    let setup = GlauberLimitSetup {
        deltas: l.deltas.clone(),
        base_kernel: cfg.kernel(),
        pot: cfg.pot(),
        bx: cfg.bx(),
        activity: cfg.cfg.activity,
        psi,
        grid: cfg.grid(l),
        seed: ctx.seed(PHASE_CHECK),
    };
    write_curve(ctx, &glauber_limit_experiment(&setup, &snaps)?)
}

fn limit_diffusion(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let l = &cfg.cfg.limit_diffusion;
    let snaps: Vec<Vec<Point>> = ctx.snapshots()?.into_iter().map(|s| s.points).collect();
    let setup = DiffusionLimitSetup {
        deltas: l.deltas.clone(),
        s: cfg.cfg.diffusion.s,
        base_kernel: cfg.kernel(),
        pot: cfg.pot(),
        bx: cfg.bx(),
        activity: cfg.cfg.activity,
        functional: cfg.functional_or(l.functional.as_ref(), OuterName::Tanh, 2.0, 1.0),
        grid: cfg.grid(l),
        convention: cfg.cfg.diffusion.convention,
        seed: ctx.seed(PHASE_CHECK),
    };
    write_curve(ctx, &diffusion_limit_experiment(&setup, &snaps)?)
}

fn constants(ctx: &Context) -> CmdResult {
    let cfg = ctx.cfg;
    let c = compute_constants(&cfg.pot(), cfg.cfg.torus.dim, 4096)?;
    let k = cfg.kernel();
    #[derive(Serialize)]
    struct Constants {
        stability_b: f64,
        integrability_c: f64,
        z_threshold_1: f64,
        z_threshold_2: f64,
        kernel_l1_norm: f64,
        kernel_second_moment: f64,
    }
    let out = Constants {
        stability_b: c.b,
        integrability_c: c.c,
        z_threshold_1: c.z_threshold_1,
        z_threshold_2: c.z_threshold_2,
        kernel_l1_norm: k.l1_norm(),
        kernel_second_moment: k.base_second_moment(),
    };
    ctx.out.write_json("constants.json", ctx.prov, &out)?;
    println!("B = {}", out.stability_b);
    println!("C = {}", out.integrability_c);
    println!("zThreshold1 = {}", out.z_threshold_1);
    println!("zThreshold2 = {}", out.z_threshold_2);
    println!("kernel L1 norm = {}", out.kernel_l1_norm);
    println!("kernel second moment = {}", out.kernel_second_moment);
    Ok(true)
}
