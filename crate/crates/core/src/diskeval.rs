//! Evaluation of generalized polynomials `f(z) = sum_k fhat_k z^{xi_k}` at
//! nodes in the closed unit disk.
//!
//! Writing `z = exp(-y) exp(2 pi i x)` turns the evaluation matrix into the
//! entrywise product of the Laplace kernel `exp(-y xi)` and the Fourier
//! matrix `exp(2 pi i xi x)`. Moduli are banded dyadically in `y`; on each
//! band the Laplace part is replaced by its low-rank interpolant and the
//! Hadamard product is pushed through the Fourier backend as `q + 1`
//! right-hand sides.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blocks::{descending_order, Factorization, Ordering};
use crate::error::{Error, Result};
use crate::fourier::{calibrate_cutoff, BackendKind, FourierBackend};
use crate::kernels::ExpKernel;
use crate::linalg::{ComplexMatrix, Matrix, RealMatrix};
use crate::partition::{make_partition, DyadicPartition, PartitionMode};

/// Moduli up to `1 + UNIT_TOL` are rounded onto the unit circle.
pub const UNIT_TOL: f64 = 1e-12;

/// Polar coordinates `(y, x)` with `z = exp(-y) exp(2 pi i x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub y: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarSplit {
    /// Indices with `|z| < eps`, evaluated as zero.
    pub zero_set: Vec<usize>,
    /// Indices of the remaining nodes.
    pub retained: Vec<usize>,
    /// Polar coordinates of `retained`, in the same order.
    pub polar: Vec<Polar>,
}

/// Splits nodes into the negligible set `|z| < eps` and polar coordinates
/// of the rest.
pub fn polar_split(nodes: &[Complex64], epsilon: f64) -> Result<PolarSplit> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Accuracy(epsilon));
    }
    let mut split = PolarSplit {
        zero_set: Vec::new(),
        retained: Vec::new(),
        polar: Vec::new(),
    };
    for (index, z) in nodes.iter().enumerate() {
        let r = z.norm();
        if !r.is_finite() {
            return Err(Error::InvalidNode {
                index,
                reason: "not finite",
            });
        }
        if r > 1.0 + UNIT_TOL {
            return Err(Error::InvalidNode {
                index,
                reason: "outside the closed unit disk",
            });
        }
        if r < epsilon {
            split.zero_set.push(index);
            continue;
        }
        let y = (-r.ln()).max(0.0);
        let mut x = z.arg() / (2.0 * PI);
        if x < 0.0 {
            x += 1.0;
        }
        if x >= 1.0 {
            x = 0.0;
        }
        split.retained.push(index);
        split.polar.push(Polar { y, x });
    }
    Ok(split)
}

#[derive(Debug, Clone)]
pub struct DiskPlan {
    epsilon: f64,
    laplace_epsilon: f64,
    num_nodes: usize,
    zero_set: Vec<usize>,
    /// sorted retained position -> caller node index
    node_perm: Vec<usize>,
    xi_order: Ordering,
    factors: Factorization,
    fourier: FourierBackend,
}

fn validate_exponents(exponents: &[f64]) -> Result<bool> {
    if exponents.is_empty() {
        return Err(Error::InvalidArgument("no exponents".into()));
    }
    let mut integral = true;
    for (index, &xi) in exponents.iter().enumerate() {
        if !xi.is_finite() {
            return Err(Error::InvalidExponent {
                index,
                reason: "not finite",
            });
        }
        if xi < 1.0 {
            return Err(Error::InvalidExponent {
                index,
                reason: "exponents must be at least one",
            });
        }
        integral &= xi.fract() == 0.0;
    }
    Ok(integral)
}

/// Window cutoff `ceil(q/3)` suggested for the NFFT backend at order `q`.
pub fn nominal_cutoff(q: usize) -> usize {
    q.div_ceil(3)
}

/// Builds the evaluation plan. With the NFFT backend the Laplace factors
/// and the Fourier factor are each held to `eps / 3`.
pub fn make_disk_plan(
    epsilon: f64,
    nodes: &[Complex64],
    exponents: &[f64],
    backend: BackendKind,
) -> Result<DiskPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Accuracy(epsilon));
    }
    let integral = validate_exponents(exponents)?;
    if !integral && backend == BackendKind::Nfft {
        return Err(Error::InvalidArgument(
            "the NFFT backend requires integer exponents".into(),
        ));
    }
    let split = polar_split(nodes, epsilon)?;
    if !integral {
        for &index in &split.retained {
            let z = nodes[index];
            if z.im == 0.0 && z.re < 0.0 {
                return Err(Error::InvalidNode {
                    index,
                    reason: "on the negative real axis with noninteger exponents",
                });
            }
        }
    }

    let laplace_epsilon = match backend {
        BackendKind::Direct => epsilon,
        BackendKind::Nfft => epsilon / 3.0,
    };
    let y1 = (1.0 / epsilon).ln();
    let y_raw: Vec<f64> = split.polar.iter().map(|p| p.y.min(y1)).collect();
    let order = descending_order(&y_raw);
    let y_sorted: Vec<f64> = order.iter().map(|&i| y_raw[i]).collect();
    let x_sorted: Vec<f64> = order.iter().map(|&i| split.polar[i].x).collect();
    let node_perm: Vec<usize> = order.iter().map(|&i| split.retained[i]).collect();

    let xi_order = Ordering::descending(exponents);
    let xi_sorted = xi_order.sorted(exponents);
    let xi1 = xi_sorted[0];

    let n = nodes.len().max(xi1.ceil() as usize);
    let partition = make_partition(laplace_epsilon, y1, xi1, PartitionMode::Disk, Some(n))?;
    let factors = Factorization::build(partition, &ExpKernel, &y_sorted, &xi_sorted, |p, m| {
        if p.is_degenerate() {
            (1, 0)
        } else {
            (p.first_far(m), p.last_far(m))
        }
    })?;

    let fourier = match backend {
        BackendKind::Direct => FourierBackend::direct(&x_sorted, &xi_sorted)?,
        BackendKind::Nfft => {
            let cutoff = nominal_cutoff(factors.q()).max(calibrate_cutoff(epsilon / 3.0)?);
            FourierBackend::nfft_with_cutoff(&x_sorted, &xi_sorted, cutoff)?
        }
    };

    Ok(DiskPlan {
        epsilon,
        laplace_epsilon,
        num_nodes: nodes.len(),
        zero_set: split.zero_set,
        node_perm,
        xi_order,
        factors,
        fourier,
    })
}

impl DiskPlan {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Accuracy the Laplace factors are built for.
    pub fn laplace_epsilon(&self) -> f64 {
        self.laplace_epsilon
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

    pub fn backend(&self) -> &FourierBackend {
        &self.fourier
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_exponents(&self) -> usize {
        self.xi_order.len()
    }

    /// Node indices with `|z| < eps`.
    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    /// Caller indices of the nodes in spatial band `m`.
    pub fn band_nodes(&self, m: usize) -> Vec<usize> {
        self.node_perm[self.factors.y_range(m)].to_vec()
    }

    fn near_rows(&self) -> std::ops::Range<usize> {
        if self.factors.partition.is_degenerate() {
            0..self.node_perm.len()
        } else {
            self.factors.y_range(self.levels())
        }
    }

    /// `(L^{Omega_l} K^T)[j, s]` for frequency position `j` in band `l`.
    fn frequency_weights(&self, m: usize, l: usize) -> RealMatrix {
        self.factors.l_xi[l - 1].matmul(&self.factors.block(m, l).transpose())
    }

    /// Far-field bands `m < M` that contain nodes, with the frequency
    /// positions touched by each.
    fn active_bands(&self) -> Vec<usize> {
        if self.factors.partition.is_degenerate() {
            return Vec::new();
        }
        (1..self.levels())
            .filter(|&m| !self.factors.y_range(m).is_empty())
            .collect()
    }

    pub fn apply(&self, fhat: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.xi_order.len(), fhat.len())?;
        let f = self.xi_order.gather(fhat);
        let fx = &self.factors;
        let q = fx.q();
        let mut out_sorted = vec![Complex64::default(); self.node_perm.len()];

        let near = self.near_rows();
        if !near.is_empty() {
            let res = self.fourier.apply_block(
                near.clone(),
                0..f.len(),
                &ComplexMatrix::column_vector(f.to_vec()),
            )?;
            out_sorted[near].copy_from_slice(res.as_slice());
        }

        let bands: Vec<(usize, Vec<Complex64>)> = self
            .active_bands()
            .into_par_iter()
            .map(|m| {
                let (lo, hi) = fx.windows[m - 1];
                let far = fx.xi_span(lo, hi);
                let cols = far.start..f.len();
                let width = if lo <= hi { q + 1 } else { 1 };
                let mut rhs = ComplexMatrix::zeros(cols.len(), width);
                for (j, &fj) in f.iter().enumerate().skip(far.end) {
                    rhs.set(j - cols.start, 0, fj);
                }
                for l in lo..=hi {
                    let band = fx.xi_range(l);
                    let w = self.frequency_weights(m, l);
                    for (r, j) in band.enumerate() {
                        let row = rhs.row_mut(j - cols.start);
                        for (s, &c) in w.row(r).iter().enumerate() {
                            row[1 + s] = f[j] * c;
                        }
                    }
                }
                let rows = fx.y_range(m);
                let res = self.fourier.apply_block(rows, cols, &rhs)?;
                let l_y = &fx.l_y[m - 1];
                let vals = (0..res.rows())
                    .map(|i| {
                        let r = res.row(i);
                        let mut acc = r[0];
                        if width > 1 {
                            for (&c, &v) in l_y.row(i).iter().zip(&r[1..]) {
                                acc += v * c;
                            }
                        }
                        acc
                    })
                    .collect();
                Ok((m, vals))
            })
            .collect::<Result<_>>()?;
        for (m, vals) in bands {
            out_sorted[fx.y_range(m)].copy_from_slice(&vals);
        }

        let mut out = vec![Complex64::default(); self.num_nodes];
        for (&dst, v) in self.node_perm.iter().zip(out_sorted) {
            out[dst] = v;
        }
        Ok(out)
    }

    /// Conjugate transpose of [`DiskPlan::apply`]:
    /// `g_k = sum_j ghat_j conj(z_j^{xi_k})`. The transposed sum
    /// `sum_j ghat_j z_j^{xi_k}` is `conj` of this applied to `conj(ghat)`.
    pub fn apply_adjoint(&self, ghat: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.num_nodes, ghat.len())?;
        let g: Vec<Complex64> = self.node_perm.iter().map(|&i| ghat[i]).collect();
        let fx = &self.factors;
        let q = fx.q();
        let n_xi = self.xi_order.len();
        let mut out = vec![Complex64::default(); n_xi];

        let near = self.near_rows();
        if !near.is_empty() {
            let res = self.fourier.apply_adjoint_block(
                near.clone(),
                0..n_xi,
                &ComplexMatrix::column_vector(g[near].to_vec()),
            )?;
            for (o, v) in out.iter_mut().zip(res.as_slice()) {
                *o += v;
            }
        }

        let parts: Vec<(usize, Vec<Complex64>)> = self
            .active_bands()
            .into_par_iter()
            .map(|m| {
                let (lo, hi) = fx.windows[m - 1];
                let far = fx.xi_span(lo, hi);
                let cols = far.start..n_xi;
                let rows = fx.y_range(m);
                let width = if lo <= hi { q + 1 } else { 1 };
                let l_y = &fx.l_y[m - 1];
                let rhs = Matrix::from_fn(rows.len(), width, |i, s| {
                    let gi = g[rows.start + i];
                    if s == 0 {
                        gi
                    } else {
                        gi * l_y.get(i, s - 1)
                    }
                });
                let res = self.fourier.apply_adjoint_block(rows, cols.clone(), &rhs)?;
                let mut vals = vec![Complex64::default(); cols.len()];
                for j in far.end..n_xi {
                    vals[j - cols.start] = res.get(j - cols.start, 0);
                }
                for l in lo..=hi {
                    let w = self.frequency_weights(m, l);
                    for (r, j) in fx.xi_range(l).enumerate() {
                        let row = res.row(j - cols.start);
                        vals[j - cols.start] = w
                            .row(r)
                            .iter()
                            .zip(&row[1..])
                            .fold(Complex64::default(), |acc, (&c, &v)| acc + v * c);
                    }
                }
                Ok((cols.start, vals))
            })
            .collect::<Result<_>>()?;
        for (start, vals) in parts {
            for (o, v) in out[start..].iter_mut().zip(vals) {
                *o += v;
            }
        }
        Ok(self.xi_order.scatter(out))
    }
}

pub fn disk_apply(plan: &DiskPlan, fhat: &[Complex64]) -> Result<Vec<Complex64>> {
    plan.apply(fhat)
}

pub fn disk_apply_adjoint(plan: &DiskPlan, ghat: &[Complex64]) -> Result<Vec<Complex64>> {
    plan.apply_adjoint(ghat)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// `z^xi`: repeated squaring for integer exponents, otherwise the branch with
/// argument in `[0, 2 pi)`.
pub fn generalized_power(z: Complex64, xi: f64) -> Complex64 {
    if xi.fract() == 0.0 && xi.abs() < i32::MAX as f64 {
        return z.powi(xi as i32);
    }
    let r = z.norm();
    if r == 0.0 {
        return Complex64::default();
    }
    let mut theta = z.im.atan2(z.re);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    Complex64::from_polar(r.powf(xi), theta * xi)
}

/// Exact `f(z_j) = sum_k fhat_k z_j^{xi_k}`.
pub fn naive_disk_apply(
    nodes: &[Complex64],
    exponents: &[f64],
    fhat: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(exponents.len(), fhat.len())?;
    Ok(nodes
        .par_iter()
        .map(|&z| {
            exponents
                .iter()
                .zip(fhat)
                .fold(Complex64::default(), |acc, (&xi, &c)| acc + c * generalized_power(z, xi))
        })
        .collect())
}

/// Exact `g_k = sum_j ghat_j conj(z_j^{xi_k})`.
pub fn naive_disk_apply_adjoint(
    nodes: &[Complex64],
    exponents: &[f64],
    ghat: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(nodes.len(), ghat.len())?;
    Ok(exponents
        .par_iter()
        .map(|&xi| {
            nodes
                .iter()
                .zip(ghat)
                .fold(Complex64::default(), |acc, (&z, &c)| acc + c * generalized_power(z, xi).conj())
        })
        .collect())
}

/// Both sides of `(A o (L^Y K (L^Om)^T)) fhat = (L^Y o (A diag(fhat) L^Om K^T)) 1`.
pub fn hadamard_sides(
    l_y: &RealMatrix,
    k: &RealMatrix,
    l_xi: &RealMatrix,
    a: &ComplexMatrix,
    fhat: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let kernel = l_y.matmul(k).matmul(&l_xi.transpose());
    let left = (0..a.rows())
        .map(|i| {
            (0..a.cols()).fold(Complex64::default(), |acc, j| {
                acc + a.get(i, j) * kernel.get(i, j) * fhat[j]
            })
        })
        .collect();
    let weights = l_xi.matmul(&k.transpose());
    let right = (0..a.rows())
        .map(|i| {
            (0..weights.cols()).fold(Complex64::default(), |acc, s| {
                let f = (0..a.cols()).fold(Complex64::default(), |acc, j| {
                    acc + a.get(i, j) * fhat[j] * weights.get(j, s)
                });
                acc + f * l_y.get(i, s)
            })
        })
        .collect();
    (left, right)
}

/// Draws random factors of rank `q` and sizes `n_y x n_xi` and reports
/// whether both sides of the Hadamard factorization agree to `1e-12`
/// relative to the absolute sum of the terms.
pub fn hadamard_block_identity_check(q: usize, sizes: (usize, usize), seed: u64) -> bool {
    let (n_y, n_xi) = sizes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut real = |r: usize, c: usize| RealMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    let l_y = real(n_y, q);
    let k = real(q, q);
    let l_xi = real(n_xi, q);
    let a = ComplexMatrix::from_fn(n_y, n_xi, |_, _| {
        Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))
    });
    let fhat: Vec<Complex64> = (0..n_xi)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let (left, right) = hadamard_sides(&l_y, &k, &l_xi, &a, &fhat);
    let kernel = l_y.matmul(&k).matmul(&l_xi.transpose());
    (0..n_y).all(|i| {
        let scale: f64 = (0..n_xi)
            .map(|j| kernel.get(i, j).abs() * fhat[j].norm())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        (left[i] - right[i]).norm() <= 1e-12 * scale
    })
}
