//! Fast discrete Laplace transform `f(y_i) = sum_j fhat_j k(y_i, xi_j)`.
//!
//! Both node sets are split into dyadic bands. On admissible band pairs the
//! kernel is replaced by its tensor Chebyshev interpolant, so the block
//! `K^{Y_m, Omega_l}` factors as `L^{Y_m} K_q (L^{Omega_l})^T` with a `q x q`
//! core. For the exponential kernel the remaining pairs are approximated by
//! the constants zero and one, which turns them into prefix sums.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blocks::{Factorization, Ordering};
use crate::error::{Error, Result};
use crate::kernels::{ExpKernel, Kernel};
use crate::linalg::RealMatrix;
use crate::partition::{make_partition, DyadicPartition, PartitionMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Exponential kernel with zero/one far-field shortcuts.
    Exp,
    /// Any asymptotically smooth kernel; every far-field pair interpolated.
    General,
}

/// Arithmetic performed by one application, counted per executed loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiply_adds: u64,
    pub additions: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.multiply_adds + self.additions
    }
}

#[derive(Debug, Clone)]
pub struct LaplacePlan {
    kernel: Arc<dyn Kernel>,
    variant: Variant,
    factors: Factorization,
    y_sorted: Vec<f64>,
    xi_sorted: Vec<f64>,
    y_order: Ordering,
    xi_order: Ordering,
    /// General variant: kernel on `Y_M x Omega` (rows of `Y_M`, all columns).
    near_rows: RealMatrix,
    /// General variant: kernel on `(Y \ Y_M) x Omega_M`.
    near_cols: RealMatrix,
}

fn validate_nodes(nodes: &[f64], what: &'static str) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} nodes are empty")));
    }
    let mut top: f64 = 0.0;
    for (index, &v) in nodes.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidNode {
                index,
                reason: "not finite",
            });
        }
        if v < 0.0 {
            return Err(Error::InvalidNode {
                index,
                reason: "negative",
            });
        }
        top = top.max(v);
    }
    if top <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} nodes must contain a positive value"
        )));
    }
    Ok(top)
}

/// Smallest `q >= 2` with `c_tilde (2 y1 xi1)^s (n/eps)^(2s) rate^q <= eps`.
pub fn general_order(kernel: &dyn Kernel, epsilon: f64, y1: f64, xi1: f64, n: usize) -> usize {
    let s = kernel.smoothness().s;
    let lc = kernel.local_error_constants();
    let log_prefactor = lc.c_tilde.ln()
        + s * (2.0 * y1 * xi1).ln()
        + 2.0 * s * (n as f64 / epsilon).ln()
        - epsilon.ln();
    let q = (log_prefactor / -lc.rate.ln()).ceil();
    let mut q = if q.is_finite() { q.max(2.0) as usize } else { 2 };
    // guard the rounding at the boundary
    while q > 2 && log_prefactor + (q - 1) as f64 * lc.rate.ln() <= 0.0 {
        q -= 1;
    }
    while log_prefactor + q as f64 * lc.rate.ln() > 0.0 {
        q += 1;
    }
    q
}

pub fn make_plan(
    epsilon: f64,
    kernel: Arc<dyn Kernel>,
    y_nodes: &[f64],
    xi_nodes: &[f64],
    variant: Variant,
) -> Result<LaplacePlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Accuracy(epsilon));
    }
    if variant == Variant::Exp && !kernel.is_exponential() {
        return Err(Error::InvalidArgument(
            "the exponential variant requires the exponential kernel".into(),
        ));
    }
    let y1 = validate_nodes(y_nodes, "spatial")?;
    let xi1 = validate_nodes(xi_nodes, "frequency")?;

    let y_order = Ordering::descending(y_nodes);
    let xi_order = Ordering::descending(xi_nodes);
    let y_sorted = y_order.sorted(y_nodes);
    let xi_sorted = xi_order.sorted(xi_nodes);

    let (partition, factors) = match variant {
        Variant::Exp => {
            let partition = make_partition(epsilon, y1, xi1, PartitionMode::Exp, None)?;
            let factors = Factorization::build(
                partition.clone(),
                kernel.as_ref(),
                &y_sorted,
                &xi_sorted,
                |p, m| (p.first_far(m), p.last_far(m)),
            )?;
            (partition, factors)
        }
        Variant::General => {
            let n = y_nodes.len().max(xi_nodes.len());
            let q = general_order(kernel.as_ref(), epsilon, y1, xi1, n);
            let partition =
                make_partition(epsilon, y1, xi1, PartitionMode::General, Some(n))?.with_order(q);
            let factors = Factorization::build(
                partition.clone(),
                kernel.as_ref(),
                &y_sorted,
                &xi_sorted,
                |p, _| (1, p.levels() - 1),
            )?;
            (partition, factors)
        }
    };

    let (near_rows, near_cols) = if variant == Variant::General {
        let levels = partition.levels();
        let ym = factors.y_range(levels);
        let om = factors.xi_range(levels);
        let rows = RealMatrix::from_vec(
            ym.len(),
            xi_sorted.len(),
            ym.clone()
                .flat_map(|i| xi_sorted.iter().map(move |&xi| (i, xi)))
                .map(|(i, xi)| kernel.evaluate(y_sorted[i], xi))
                .collect::<Result<Vec<_>>>()?,
        );
        let cols = RealMatrix::from_vec(
            ym.start,
            om.len(),
            (0..ym.start)
                .flat_map(|i| om.clone().map(move |j| (i, j)))
                .map(|(i, j)| kernel.evaluate(y_sorted[i], xi_sorted[j]))
                .collect::<Result<Vec<_>>>()?,
        );
        (rows, cols)
    } else {
        (RealMatrix::zeros(0, 0), RealMatrix::zeros(0, 0))
    };

    Ok(LaplacePlan {
        kernel,
        variant,
        factors,
        y_sorted,
        xi_sorted,
        y_order,
        xi_order,
        near_rows,
        near_cols,
    })
}

impl LaplacePlan {
    /// Plan for `exp(-y xi)`.
    pub fn exp(epsilon: f64, y_nodes: &[f64], xi_nodes: &[f64]) -> Result<Self> {
        make_plan(epsilon, Arc::new(ExpKernel), y_nodes, xi_nodes, Variant::Exp)
    }

    /// Plan for a general asymptotically smooth kernel.
    pub fn general(
        epsilon: f64,
        kernel: Arc<dyn Kernel>,
        y_nodes: &[f64],
        xi_nodes: &[f64],
    ) -> Result<Self> {
        make_plan(epsilon, kernel, y_nodes, xi_nodes, Variant::General)
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.factors.partition
    }

    pub fn q(&self) -> usize {
        self.factors.q()
    }

    pub fn levels(&self) -> usize {
        self.factors.levels()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn num_spatial(&self) -> usize {
        self.y_sorted.len()
    }

    pub fn num_frequency(&self) -> usize {
        self.xi_sorted.len()
    }

    /// Nodes per spatial band `1..=M`, in band order.
    pub fn spatial_band_sizes(&self) -> Vec<usize> {
        self.factors.y_ranges.iter().map(|r| r.len()).collect()
    }

    pub fn frequency_band_sizes(&self) -> Vec<usize> {
        self.factors.xi_ranges.iter().map(|r| r.len()).collect()
    }

    /// Inclusive frequency-band window with stored kernel blocks for spatial
    /// band `m < M`.
    pub fn block_window(&self, m: usize) -> (usize, usize) {
        self.factors.windows[m - 1]
    }

    pub fn spatial_lagrange(&self, m: usize) -> &RealMatrix {
        &self.factors.l_y[m - 1]
    }

    pub fn frequency_lagrange(&self, l: usize) -> &RealMatrix {
        &self.factors.l_xi[l - 1]
    }

    pub fn apply(&self, fhat: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut count = OpCount::default();
        self.apply_inner(fhat, &mut count)
    }

    /// Like [`LaplacePlan::apply`], also reporting the arithmetic performed.
    pub fn apply_counted(&self, fhat: &[Complex64]) -> Result<(Vec<Complex64>, OpCount)> {
        let mut count = OpCount::default();
        let out = self.apply_inner(fhat, &mut count)?;
        Ok((out, count))
    }

    pub fn apply_adjoint(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.y_sorted.len(), g.len())?;
        let g_sorted = self.y_order.gather(g);
        let out_sorted = match self.variant {
            Variant::Exp => self.adjoint_exp(&g_sorted),
            Variant::General => self.adjoint_general(&g_sorted),
        };
        Ok(self.xi_order.scatter(out_sorted))
    }

    fn apply_inner(&self, fhat: &[Complex64], count: &mut OpCount) -> Result<Vec<Complex64>> {
        check_len(self.xi_sorted.len(), fhat.len())?;
        let f_sorted = self.xi_order.gather(fhat);
        let out_sorted = match self.variant {
            Variant::Exp => self.apply_exp(&f_sorted, count),
            Variant::General => self.apply_general(&f_sorted, count),
        };
        Ok(self.y_order.scatter(out_sorted))
    }

    /// `v^{Omega_l} = (L^{Omega_l})^T fhat^{Omega_l}` for `l = 1..M-1`.
    fn project_frequencies(&self, f: &[Complex64], count: &mut OpCount) -> Vec<Vec<Complex64>> {
        let fx = &self.factors;
        (1..fx.levels())
            .map(|l| {
                let r = fx.xi_range(l);
                count.multiply_adds += (r.len() * fx.q()) as u64;
                fx.l_xi[l - 1].tr_mul_vec(&f[r])
            })
            .collect()
    }

    fn apply_exp(&self, f: &[Complex64], count: &mut OpCount) -> Vec<Complex64> {
        let fx = &self.factors;
        let levels = fx.levels();
        let q = fx.q();
        let mut out = vec![Complex64::default(); self.y_sorted.len()];
        let total: Complex64 = f.iter().sum();
        count.additions += f.len() as u64;
        if fx.partition.is_degenerate() {
            out.fill(total);
            return out;
        }

        // tail[l] = g_l = sum of fhat over bands l..=M; tail[M + 1] = 0
        let mut tail = vec![Complex64::default(); levels + 2];
        for l in (1..=levels).rev() {
            tail[l] = tail[l + 1] + f[fx.xi_range(l)].iter().sum::<Complex64>();
        }
        count.additions += levels as u64;

        let v = self.project_frequencies(f, count);

        for y in &mut out[fx.y_range(levels)] {
            *y = tail[1];
        }
        let mut h = vec![Complex64::default(); q];
        for m in 1..levels {
            let rows = fx.y_range(m);
            if rows.is_empty() {
                continue;
            }
            h.fill(Complex64::default());
            let (lo, hi) = fx.windows[m - 1];
            for l in lo..=hi {
                fx.block(m, l).mul_vec_add(&v[l - 1], &mut h);
                count.multiply_adds += (q * q) as u64;
            }
            let offset = tail[fx.partition.last_far(m) + 1];
            let dst = &mut out[rows.clone()];
            dst.fill(offset);
            fx.l_y[m - 1].mul_vec_add(&h, dst);
            count.multiply_adds += (rows.len() * q) as u64;
        }
        out
    }

    fn apply_general(&self, f: &[Complex64], count: &mut OpCount) -> Vec<Complex64> {
        let fx = &self.factors;
        let levels = fx.levels();
        let q = fx.q();
        let mut out = vec![Complex64::default(); self.y_sorted.len()];
        let v = self.project_frequencies(f, count);

        let near = fx.y_range(levels);
        self.near_rows.mul_vec_add(f, &mut out[near.clone()]);
        count.multiply_adds += (near.len() * f.len()) as u64;

        let omega_m = fx.xi_range(levels);
        let mut h = vec![Complex64::default(); q];
        for m in 1..levels {
            let rows = fx.y_range(m);
            if rows.is_empty() {
                continue;
            }
            h.fill(Complex64::default());
            for l in 1..levels {
                if fx.xi_range(l).is_empty() {
                    continue;
                }
                fx.block(m, l).mul_vec_add(&v[l - 1], &mut h);
                count.multiply_adds += (q * q) as u64;
            }
            fx.l_y[m - 1].mul_vec_add(&h, &mut out[rows.clone()]);
            count.multiply_adds += (rows.len() * q) as u64;
            if !omega_m.is_empty() {
                for i in rows.clone() {
                    out[i] += self
                        .near_cols
                        .row(i)
                        .iter()
                        .zip(&f[omega_m.clone()])
                        .fold(Complex64::default(), |acc, (&k, &c)| acc + c * k);
                }
                count.multiply_adds += (rows.len() * omega_m.len()) as u64;
            }
        }
        out
    }

    fn adjoint_exp(&self, g: &[Complex64]) -> Vec<Complex64> {
        let fx = &self.factors;
        let levels = fx.levels();
        let q = fx.q();
        let mut out = vec![Complex64::default(); self.xi_sorted.len()];
        let total: Complex64 = g.iter().sum();
        if fx.partition.is_degenerate() {
            out.fill(total);
            return out;
        }

        // band sums s_m and their suffix sums S_k = sum_{m >= k} s_m
        let mut suffix = vec![Complex64::default(); levels + 2];
        for m in (1..=levels).rev() {
            suffix[m] = suffix[m + 1] + g[fx.y_range(m)].iter().sum::<Complex64>();
        }

        // w_l = sum over m with l in [l_m, L_m] of K^T (L^{Y_m})^T g^{Y_m}
        let mut w = vec![vec![Complex64::default(); q]; levels];
        for m in 1..levels {
            let rows = fx.y_range(m);
            if rows.is_empty() {
                continue;
            }
            let u = fx.l_y[m - 1].tr_mul_vec(&g[rows]);
            let (lo, hi) = fx.windows[m - 1];
            for l in lo..=hi {
                fx.block(m, l).tr_mul_vec_add(&u, &mut w[l - 1]);
            }
        }
        for l in 1..=levels {
            // spatial bands m with L_m < l, i.e. m > M - l, see every
            // frequency of band l as the constant one
            let offset = suffix[levels - l + 1];
            let cols = fx.xi_range(l);
            let dst = &mut out[cols];
            dst.fill(offset);
            if l < levels {
                fx.l_xi[l - 1].mul_vec_add(&w[l - 1], dst);
            }
        }
        out
    }

    fn adjoint_general(&self, g: &[Complex64]) -> Vec<Complex64> {
        let fx = &self.factors;
        let levels = fx.levels();
        let q = fx.q();
        let mut out = vec![Complex64::default(); self.xi_sorted.len()];

        let near = fx.y_range(levels);
        self.near_rows.tr_mul_vec_add(&g[near.clone()], &mut out);

        let omega_m = fx.xi_range(levels);
        let mut w = vec![vec![Complex64::default(); q]; levels];
        for m in 1..levels {
            let rows = fx.y_range(m);
            if rows.is_empty() {
                continue;
            }
            let u = fx.l_y[m - 1].tr_mul_vec(&g[rows.clone()]);
            for l in 1..levels {
                fx.block(m, l).tr_mul_vec_add(&u, &mut w[l - 1]);
            }
            for i in rows {
                for (o, &k) in out[omega_m.clone()].iter_mut().zip(self.near_cols.row(i)) {
                    *o += g[i] * k;
                }
            }
        }
        for l in 1..levels {
            let cols = fx.xi_range(l);
            fx.l_xi[l - 1].mul_vec_add(&w[l - 1], &mut out[cols]);
        }
        out
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// Undo a sort: `out[perm[pos]] = sorted[pos]`.
/// Exact `O(N N')` summation `f_i = sum_j fhat_j k(y_i, xi_j)`.
pub fn naive_apply(
    kernel: &dyn Kernel,
    y_nodes: &[f64],
    xi_nodes: &[f64],
    fhat: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(xi_nodes.len(), fhat.len())?;
    y_nodes
        .par_iter()
        .map(|&y| {
            let mut acc = Complex64::default();
            for (&xi, &c) in xi_nodes.iter().zip(fhat) {
                acc += c * kernel.evaluate(y, xi)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Exact transposed summation `g_j = sum_i ghat_i k(y_i, xi_j)`.
pub fn naive_apply_adjoint(
    kernel: &dyn Kernel,
    y_nodes: &[f64],
    xi_nodes: &[f64],
    ghat: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(y_nodes.len(), ghat.len())?;
    xi_nodes
        .par_iter()
        .map(|&xi| {
            let mut acc = Complex64::default();
            for (&y, &c) in y_nodes.iter().zip(ghat) {
                acc += c * kernel.evaluate(y, xi)?;
            }
            Ok(acc)
        })
        .collect()
}
