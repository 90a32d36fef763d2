//! Fixtures shared by the benchmarks: equilibrium configurations and engines built from
//! fixed seeds, so timings compare like with like across revisions.

use kawlab::functionals::{CylinderFunctional, TestField};
use kawlab::gibbs::{independent_starts, GibbsParams};
use kawlab::rates::{HopKernel, KernelShape, RateSpec};
use kawlab::{PairPotential, Point, TorusBox};

pub const SEED: u64 = 2024;

pub fn square_well() -> PairPotential {
    PairPotential::square_well(0.3, 0.5, 1.0).expect("valid square well")
}

pub fn soft_repulsive() -> PairPotential {
    PairPotential::soft_repulsive(1.0, 1.0).expect("valid soft potential")
}

pub fn ball_kernel(dim: usize) -> HopKernel {
    HopKernel::new(KernelShape::Ball, 1.0, 1.0, dim).expect("valid kernel")
}

pub fn kawasaki_spec(dim: usize, s: f64, activity: f64) -> RateSpec {
    RateSpec::kawasaki_s(s, ball_kernel(dim), activity).expect("valid rate")
}

/// An equilibrium configuration of the given potential.
pub fn equilibrium(pot: PairPotential, dim: usize, side: f64, activity: f64) -> Vec<Point> {
    let bx = TorusBox::new(dim, side).expect("valid box");
    let mut p = GibbsParams::new(activity, pot, bx);
    p.sweeps = 200;
    p.seed = SEED;
    independent_starts(&p, 1).expect("sampler runs").remove(0).points
}

/// F = exp⟨ψ, ·⟩ with ψ a bump at the box center.
pub fn centered_exponential(bx: &TorusBox, radius: f64) -> CylinderFunctional {
    let mut c = [0.0; 3];
    for x in c.iter_mut().take(bx.dim()) {
        *x = 0.5 * bx.side();
    }
    CylinderFunctional::exponential(TestField::bump(c, radius, 0.5).expect("positive radius"))
}
