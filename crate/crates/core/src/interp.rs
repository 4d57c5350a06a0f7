//! Chebyshev nodes and barycentric Lagrange interpolation on intervals.
//!
//! Nodes of order `q` on `[lo, hi]` are `mid + diam/2 * cos((2j+1) pi / (2q))`
//! for `j = 0..q`, stored in decreasing order. The Lagrange basis is evaluated
//! with the barycentric formula using weights `(-1)^r sin((2r+1) pi / (2q))`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::RealMatrix;

/// Points closer than this fraction of the diameter to a node snap to it.
pub const NODE_COLLISION_TOL: f64 = 1e-14;
/// Slack, relative to the diameter, for points just outside the interval.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// `[lo, hi]`
    Closed,
    /// `(lo, hi]`
    HalfOpenLeft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closure: Closure,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            closure: Closure::Closed,
        }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            closure: Closure::HalfOpenLeft,
        }
    }

    #[inline]
    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Distance to the origin, for intervals in `[0, inf)`.
    #[inline]
    pub fn dist_to_origin(&self) -> f64 {
        self.lo.max(0.0)
    }

    /// `diam <= dist(I, 0)`.
    pub fn is_admissible(&self) -> bool {
        self.lo >= 0.0 && self.diam() <= self.dist_to_origin()
    }

    pub fn contains(&self, value: f64) -> bool {
        match self.closure {
            Closure::Closed => self.lo <= value && value <= self.hi,
            Closure::HalfOpenLeft => self.lo < value && value <= self.hi,
        }
    }

    fn contains_with_slack(&self, value: f64) -> bool {
        let slack = BOUNDARY_TOL * self.diam();
        self.lo - slack <= value && value <= self.hi + slack
    }
}

/// Chebyshev nodes and barycentric weights of order `q` on one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpBasis {
    interval: Interval,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Zeros of the `q`-th Chebyshev polynomial on `[-1, 1]`, decreasing.
pub fn chebyshev_points(q: usize) -> Vec<f64> {
    (0..q)
        .map(|j| ((2 * j + 1) as f64 * PI / (2 * q) as f64).cos())
        .collect()
}

pub fn make_basis(q: usize, interval: Interval) -> Result<InterpBasis> {
    if q == 0 {
        return Err(Error::ZeroOrder);
    }
    if !(interval.lo < interval.hi) || !interval.lo.is_finite() || !interval.hi.is_finite() {
        return Err(Error::DegenerateInterval {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    let mid = interval.midpoint();
    let half = 0.5 * interval.diam();
    let nodes = chebyshev_points(q).into_iter().map(|t| mid + half * t).collect();
    let weights = (0..q)
        .map(|r| {
            let s = ((2 * r + 1) as f64 * PI / (2 * q) as f64).sin();
            if r % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect();
    Ok(InterpBasis {
        interval,
        nodes,
        weights,
    })
}

impl InterpBasis {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Writes `L_r(point)` for all `r` into `out`.
    pub fn lagrange_row_into(&self, point: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.order());
        if !self.interval.contains_with_slack(point) {
            return Err(Error::OutsideInterval {
                point,
                lo: self.interval.lo,
                hi: self.interval.hi,
            });
        }
        let tol = NODE_COLLISION_TOL * self.interval.diam();
        if let Some(hit) = self.nodes.iter().position(|&y| (point - y).abs() <= tol) {
            out.fill(0.0);
            out[hit] = 1.0;
            return Ok(());
        }
        let mut denom = 0.0;
        for ((o, &y), &w) in out.iter_mut().zip(&self.nodes).zip(&self.weights) {
            *o = w / (point - y);
            denom += *o;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
        Ok(())
    }

    pub fn lagrange_row(&self, point: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.order()];
        self.lagrange_row_into(point, &mut row)?;
        Ok(row)
    }

    /// Interpolates the node values `values` at `point`.
    pub fn interpolate(&self, values: &[f64], point: f64) -> Result<f64> {
        let row = self.lagrange_row(point)?;
        Ok(row.iter().zip(values).map(|(l, v)| l * v).sum())
    }
}

/// Matrix with entries `L_r(points[i])`.
pub fn lagrange_matrix(basis: &InterpBasis, points: &[f64]) -> Result<RealMatrix> {
    let q = basis.order();
    let mut out = RealMatrix::zeros(points.len(), q);
    for (i, &p) in points.iter().enumerate() {
        basis.lagrange_row_into(p, out.row_mut(i))?;
    }
    Ok(out)
}

/// Chebyshev-Lobatto sample of `size` points covering the closed interval.
pub fn lobatto_grid(interval: &Interval, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![interval.midpoint()];
    }
    let mid = interval.midpoint();
    let half = 0.5 * interval.diam();
    (0..size)
        .map(|k| {
            let t = (k as f64 * PI / (size - 1) as f64).cos();
            (mid + half * t).clamp(interval.lo, interval.hi)
        })
        .collect()
}

/// Maximum deviation between a kernel and its tensor Chebyshev interpolant
/// on `a x b`, sampled on a `grid x grid` Chebyshev-Lobatto tensor grid.
pub fn interp_error_sup(
    kernel: &dyn Kernel,
    a: Interval,
    b: Interval,
    q: usize,
    grid: usize,
) -> Result<f64> {
    if grid < 2 {
        return Err(Error::InvalidArgument("grid must have at least 2 points".into()));
    }
    let basis_a = make_basis(q, a)?;
    let basis_b = make_basis(q, b)?;
    let block = crate::kernels::block_from_bases(kernel, &basis_a, &basis_b)?;
    let ys = lobatto_grid(&a, grid);
    let xis = lobatto_grid(&b, grid);
    let la = lagrange_matrix(&basis_a, &ys)?;
    let lb = lagrange_matrix(&basis_b, &xis)?;
    // (L_a K) L_b^T, evaluated row by row.
    let lak = la.matmul(&block);
    let mut worst: f64 = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let left = lak.row(i);
        for (j, &xi) in xis.iter().enumerate() {
            let approx: f64 = left.iter().zip(lb.row(j)).map(|(u, v)| u * v).sum();
            let exact = kernel.evaluate(y, xi)?;
            worst = worst.max((exact - approx).abs());
        }
    }
    Ok(worst)
}
