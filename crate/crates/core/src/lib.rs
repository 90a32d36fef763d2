//! Finite-volume simulation and verification of equilibrium Kawasaki (hop), Glauber
//! (birth-and-death) and diffusion dynamics of continuum particle systems.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod functionals;
pub mod generators;
pub mod geometry;
pub mod gibbs;
pub mod glauber;
pub mod io;
pub mod kawasaki;
pub mod observables;
pub mod potentials;
pub mod rates;
pub mod rng;
pub mod stats;
pub mod sumtree;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{Bump, CylinderFunctional, Outer, TestField};
pub use geometry::{CellList, Configuration, Point, TorusBox};
pub use io::Snapshot;
pub use potentials::{PairPotential, PotentialConstants, Shape};
pub use rates::{GlauberSpec, HopKernel, KernelShape, RateSpec, RateVariant};
pub use stats::EstimateWithError;
pub use verify::VerificationReport;
