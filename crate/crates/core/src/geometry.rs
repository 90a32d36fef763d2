//! Periodic simulation box, particle configurations and cell lists.
//!
//! Points are stored as `[f64; 3]`; coordinates beyond the box dimension are
//! kept at zero and ignored by every metric operation.

use rand::Rng;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0; 3];

/// Flat torus `[0, L)^d` with the minimum-image metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusBox {
    dim: usize,
    side: f64,
}

impl TorusBox {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid("side", format!("must be positive, got {side}")));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Fails unless the minimum image is unambiguous for interactions reaching `reach`.
    pub fn require_reach(&self, reach: f64, what: &'static str) -> Result<()> {
        if self.side < 2.0 * reach {
            return Err(Error::BoxTooSmall {
                side: self.side,
                required: 2.0 * reach,
                what,
            });
        }
        Ok(())
    }

    pub fn wrap(&self, p: Point) -> Point {
        let mut out = ORIGIN;
        for (k, slot) in out.iter_mut().enumerate().take(self.dim) {
            *slot = wrap_coordinate(p[k], self.side);
        }
        out
    }

    /// Minimum-image displacement `to - from`.
    pub fn displacement(&self, from: &Point, to: &Point) -> Point {
        let mut d = ORIGIN;
        for (k, slot) in d.iter_mut().enumerate().take(self.dim) {
            let raw = to[k] - from[k];
            *slot = raw - self.side * (raw / self.side).round();
        }
        d
    }

    pub fn dist2(&self, x: &Point, y: &Point) -> f64 {
        let d = self.displacement(x, y);
        d[..self.dim].iter().map(|c| c * c).sum()
    }

    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        self.dist2(x, y).sqrt()
    }

    /// `p + v`, wrapped back into the box.
    pub fn translate(&self, p: &Point, v: &Point) -> Point {
        let mut q = *p;
        for k in 0..self.dim {
            q[k] += v[k];
        }
        self.wrap(q)
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut p = ORIGIN;
        for slot in p.iter_mut().take(self.dim) {
            *slot = rng.random::<f64>() * self.side;
            if *slot >= self.side {
                *slot = 0.0;
            }
        }
        p
    }
}

fn wrap_coordinate(c: f64, side: f64) -> f64 {
    let mut r = c - side * (c / side).floor();
    if r >= side {
        r -= side;
    }
    if r < 0.0 {
        r = 0.0;
    }
    r
}

pub fn norm2(v: &Point) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// Volume of the `dim`-dimensional ball of radius `r`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r.powi(3),
        _ => unreachable!("dimension checked at box construction"),
    }
}

/// Surface area of the unit sphere in `dim` dimensions.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension checked at box construction"),
    }
}

/// Uniform random unit vector in `dim` dimensions.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Point {
    match dim {
        1 => {
            if rng.random::<bool>() {
                [1.0, 0.0, 0.0]
            } else {
                [-1.0, 0.0, 0.0]
            }
        }
        2 => {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            [theta.cos(), theta.sin(), 0.0]
        }
        _ => {
            // Marsaglia's method
            loop {
                let a = 2.0 * rng.random::<f64>() - 1.0;
                let b = 2.0 * rng.random::<f64>() - 1.0;
                let s = a * a + b * b;
                if s < 1.0 {
                    let f = 2.0 * (1.0 - s).sqrt();
                    return [a * f, b * f, 1.0 - 2.0 * s];
                }
            }
        }
    }
}

/// A finite point configuration. Every mutation bumps the generation counter so that
/// derived indexes (cell lists) can detect staleness.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Configuration {
    points: Vec<Point>,
    generation: u64,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps every point into the box.
    pub fn from_points(bx: &TorusBox, points: impl IntoIterator<Item = Point>) -> Self {
        Self {
            points: points.into_iter().map(|p| bx.wrap(p)).collect(),
            generation: 0,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn push(&mut self, p: Point) -> usize {
        self.points.push(p);
        self.generation += 1;
        self.points.len() - 1
    }

    /// Removes point `i`; the last point takes its index.
    pub fn swap_remove(&mut self, i: usize) -> Point {
        self.generation += 1;
        self.points.swap_remove(i)
    }

    pub fn set(&mut self, i: usize, p: Point) {
        self.points[i] = p;
        self.generation += 1;
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub point: Point,
    pub distance: f64,
}

/// Uniform grid of point-index buckets with cell side at least `cutoff`.
#[derive(Debug, Clone)]
pub struct CellList {
    bx: TorusBox,
    cutoff: f64,
    per_axis: [usize; 3],
    cell_side: [f64; 3],
    buckets: Vec<Vec<usize>>,
    /// Bucket of each point, indexed like the configuration.
    owner: Vec<usize>,
    generation: u64,
    /// Cached scan pattern: per-axis cell offsets (or absolute indices when an axis has
    /// fewer than three cells).
    scan: [Vec<isize>; 3],
    wide: [bool; 3],
}

impl CellList {
    pub fn build(bx: &TorusBox, cutoff: f64, config: &Configuration) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(invalid("cutoff", format!("must be positive, got {cutoff}")));
        }
        let mut per_axis = [1usize; 3];
        let mut cell_side = [bx.side(); 3];
        let mut scan: [Vec<isize>; 3] = [vec![0], vec![0], vec![0]];
        let mut wide = [false; 3];
        for k in 0..bx.dim() {
            let n = ((bx.side() / cutoff).floor() as usize).max(1);
            per_axis[k] = n;
            cell_side[k] = bx.side() / n as f64;
            if n >= 3 {
                scan[k] = vec![-1, 0, 1];
            } else {
                wide[k] = true;
                scan[k] = (0..n as isize).collect();
            }
        }
        let total = per_axis.iter().product();
        let mut list = Self {
            bx: *bx,
            cutoff,
            per_axis,
            cell_side,
            buckets: vec![Vec::new(); total],
            owner: Vec::with_capacity(config.len()),
            generation: config.generation(),
            scan,
            wide,
        };
        for (i, p) in config.points().iter().enumerate() {
            let c = list.cell_of(p);
            list.buckets[c].push(i);
            list.owner.push(c);
        }
        Ok(list)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn cell_coords(&self, p: &Point) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..self.bx.dim() {
            let i = (p[k] / self.cell_side[k]).floor() as isize;
            c[k] = i.clamp(0, self.per_axis[k] as isize - 1) as usize;
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.per_axis[1] + c[1]) * self.per_axis[0] + c[0]
    }

    fn cell_of(&self, p: &Point) -> usize {
        self.flat(self.cell_coords(p))
    }

    fn check(&self, config: &Configuration) -> Result<()> {
        if self.generation != config.generation() {
            return Err(Error::StaleCellList {
                built: self.generation,
                current: config.generation(),
            });
        }
        Ok(())
    }

    /// Calls `visit(index, distance)` for every point strictly within `r` of `x`.
    pub fn for_each_within<F: FnMut(usize, f64)>(
        &self,
        x: &Point,
        r: f64,
        config: &Configuration,
        mut visit: F,
    ) -> Result<()> {
        self.check(config)?;
        if r > self.cutoff {
            return Err(Error::CutoffExceeded {
                radius: r,
                cutoff: self.cutoff,
            });
        }
        let r2 = r * r;
        let home = self.cell_coords(x);
        let points = config.points();
        let axis = |k: usize, off: isize| -> usize {
            if self.wide[k] {
                off as usize
            } else {
                let n = self.per_axis[k] as isize;
                (home[k] as isize + off).rem_euclid(n) as usize
            }
        };
        for &oz in &self.scan[2] {
            let cz = axis(2, oz);
            for &oy in &self.scan[1] {
                let cy = axis(1, oy);
                for &ox in &self.scan[0] {
                    let cx = axis(0, ox);
                    for &j in &self.buckets[self.flat([cx, cy, cz])] {
                        let d2 = self.bx.dist2(x, &points[j]);
                        if d2 < r2 {
                            visit(j, d2.sqrt());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn neighbors(&self, x: &Point, r: f64, config: &Configuration) -> Result<Vec<Neighbor>> {
        let mut out = Vec::new();
        self.for_each_within(x, r, config, |index, distance| {
            out.push(Neighbor {
                index,
                point: config.points()[index],
                distance,
            })
        })?;
        Ok(out)
    }

    /// Appends `p` to the configuration and indexes it.
    pub fn insert(&mut self, config: &mut Configuration, p: Point) -> Result<usize> {
        self.check(config)?;
        let i = config.push(p);
        let c = self.cell_of(&p);
        self.buckets[c].push(i);
        self.owner.push(c);
        self.generation = config.generation();
        Ok(i)
    }

    /// Swap-removes point `i` from the configuration and the index.
    pub fn remove(&mut self, config: &mut Configuration, i: usize) -> Result<Point> {
        self.check(config)?;
        let last = config.len() - 1;
        let c = self.owner[i];
        let bucket = &mut self.buckets[c];
        let pos = bucket.iter().position(|&j| j == i).expect("indexed point");
        bucket.swap_remove(pos);
        if i != last {
            let lc = self.owner[last];
            let slot = self.buckets[lc]
                .iter_mut()
                .find(|j| **j == last)
                .expect("indexed point");
            *slot = i;
        }
        self.owner.swap_remove(i);
        let p = config.swap_remove(i);
        self.generation = config.generation();
        Ok(p)
    }

    /// Moves point `i` to `p`.
    pub fn relocate(&mut self, config: &mut Configuration, i: usize, p: Point) -> Result<()> {
        self.check(config)?;
        let old = self.owner[i];
        let new = self.cell_of(&p);
        if old != new {
            let bucket = &mut self.buckets[old];
            let pos = bucket.iter().position(|&j| j == i).expect("indexed point");
            bucket.swap_remove(pos);
            self.buckets[new].push(i);
            self.owner[i] = new;
        }
        config.set(i, p);
        self.generation = config.generation();
        Ok(())
    }
}

/// O(N) reference scan used to validate cell-list queries.
pub fn brute_force_neighbors(bx: &TorusBox, x: &Point, r: f64, points: &[Point]) -> Vec<Neighbor> {
    points
        .iter()
        .enumerate()
        .filter_map(|(index, p)| {
            let distance = bx.dist(x, p);
            (distance < r).then_some(Neighbor {
                index,
                point: *p,
                distance,
            })
        })
        .collect()
}
