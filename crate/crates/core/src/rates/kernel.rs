//! Radial hop kernels ã with the δ-scaling ã_δ(x) = δ^d ã(δx).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{norm2, random_direction, unit_sphere_area, Point, ORIGIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelShape {
    /// amplitude · 1{|x| < R}
    Ball,
    /// amplitude · (1 − |x|/R)₊
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopKernel {
    shape: KernelShape,
    radius: f64,
    amplitude: f64,
    delta: f64,
    dim: usize,
}

impl HopKernel {
    pub fn new(shape: KernelShape, radius: f64, amplitude: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("kernel.radius", format!("must be positive, got {radius}")));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid(
                "kernel.amplitude",
                format!("must be positive, got {amplitude}"),
            ));
        }
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        Ok(Self {
            shape,
            radius,
            amplitude,
            delta: 1.0,
            dim,
        })
    }

    /// The same base kernel at scaling `delta`.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid("delta", format!("must be positive, got {delta}")));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn base_radius(&self) -> f64 {
        self.radius
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Support radius of ã_δ, R_a/δ.
    pub fn support(&self) -> f64 {
        self.radius / self.delta
    }

    fn base_profile(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        match self.shape {
            KernelShape::Ball => self.amplitude,
            KernelShape::Triangle => self.amplitude * (1.0 - r / self.radius),
        }
    }

    /// ã_δ at distance `r`.
    pub fn value_at(&self, r: f64) -> f64 {
        self.delta.powi(self.dim as i32) * self.base_profile(self.delta * r)
    }

    /// ã_δ(v)
    pub fn value(&self, v: &Point) -> f64 {
        self.value_at(norm2(v).sqrt())
    }

    /// sup ã_δ
    pub fn peak(&self) -> f64 {
        self.delta.powi(self.dim as i32) * self.amplitude
    }

    /// ∫ã_δ = ∫ã, independent of δ.
    pub fn l1_norm(&self) -> f64 {
        let d = self.dim as f64;
        let s = unit_sphere_area(self.dim) * self.radius.powi(self.dim as i32);
        match self.shape {
            KernelShape::Ball => self.amplitude * s / d,
            KernelShape::Triangle => self.amplitude * s / (d * (d + 1.0)),
        }
    }

    /// ∫ã(x)(x¹)² dx of the unscaled kernel.
    pub fn base_second_moment(&self) -> f64 {
        let d = self.dim as f64;
        let s = unit_sphere_area(self.dim) * self.radius.powi(self.dim as i32 + 2);
        match self.shape {
            KernelShape::Ball => self.amplitude * s / (d * (d + 2.0)),
            KernelShape::Triangle => self.amplitude * s / (d * (d + 2.0) * (d + 3.0)),
        }
    }

    /// ∫ã_δ(x)(x¹)² dx = δ⁻² ∫ã(x)(x¹)² dx.
    pub fn second_moment(&self) -> f64 {
        self.base_second_moment() / (self.delta * self.delta)
    }

    /// Offset drawn from the density ã_δ / ‖ã_δ‖₁.
    pub fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let rmax = self.support();
        let d = self.dim as f64;
        let r = loop {
            let r = rmax * rng.random::<f64>().powf(1.0 / d);
            match self.shape {
                KernelShape::Ball => break r,
                KernelShape::Triangle => {
                    if rng.random::<f64>() < 1.0 - r / rmax {
                        break r;
                    }
                }
            }
        };
        let u = random_direction(rng, self.dim);
        let mut v = ORIGIN;
        for k in 0..self.dim {
            v[k] = r * u[k];
        }
        v
    }
}
