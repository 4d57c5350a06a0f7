//! Asymptotically smooth kernels.
//!
//! A kernel `k(y, xi)` is asymptotically smooth with constants `(C, mu, nu, s)`
//! when `|y^q d^q/dy^q k| <= C q! mu^q q^nu (y xi)^(-s)` for every order `q`,
//! and symmetrically in `xi`. Tensor Chebyshev interpolation of such a kernel
//! on an admissible block converges like `(mu/4)^q`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interp::{make_basis, InterpBasis, Interval};
use crate::linalg::RealMatrix;

/// Derivative-growth constants of an asymptotically smooth kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothness {
    pub c: f64,
    pub mu: f64,
    pub nu: f64,
    pub s: f64,
}

/// Constants with `||k - I_q k|| <= c_tilde * rate^q * (dist(A,0) dist(B,0))^(-s)`
/// on admissible blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalErrorConstants {
    pub c_tilde: f64,
    pub rate: f64,
}

pub trait Kernel: Send + Sync + fmt::Debug {
    fn evaluate(&self, y: f64, xi: f64) -> Result<f64>;

    fn smoothness(&self) -> Smoothness;

    fn local_error_constants(&self) -> LocalErrorConstants;

    fn name(&self) -> &str;

    /// True only for `exp(-y xi)`, which admits the 0/1 far-field shortcuts.
    fn is_exponential(&self) -> bool {
        false
    }
}

/// `exp(-y xi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpKernel;

impl Kernel for ExpKernel {
    #[inline]
    fn evaluate(&self, y: f64, xi: f64) -> Result<f64> {
        Ok((-y * xi).exp())
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness {
            c: 1.0 / (2.0 * PI).sqrt(),
            mu: 1.0,
            nu: -0.5,
            s: 0.0,
        }
    }

    fn local_error_constants(&self) -> LocalErrorConstants {
        // 2 * (1/4)^q = 2^(1-2q)
        LocalErrorConstants {
            c_tilde: 2.0,
            rate: 0.25,
        }
    }

    fn name(&self) -> &str {
        "exp"
    }

    fn is_exponential(&self) -> bool {
        true
    }
}

/// Modified Bessel function of the second kind of order 1/2 applied to the
/// product, `K_{1/2}(y xi) = sqrt(pi / (2 y xi)) exp(-y xi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BesselHalfKernel;

impl Kernel for BesselHalfKernel {
    #[inline]
    fn evaluate(&self, y: f64, xi: f64) -> Result<f64> {
        let t = y * xi;
        if !(t > 0.0) {
            return Err(Error::SingularKernel { y, xi });
        }
        Ok((PI / (2.0 * t)).sqrt() * (-t).exp())
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness {
            c: (PI / 2.0).sqrt(),
            mu: 1.0,
            nu: 0.0,
            s: 0.5,
        }
    }

    fn local_error_constants(&self) -> LocalErrorConstants {
        LocalErrorConstants {
            c_tilde: 2.0 * PI,
            rate: 1.0 / 3.0,
        }
    }

    fn name(&self) -> &str {
        "bessel"
    }
}

/// A constant kernel; handy for checks of the interpolation machinery.
#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel(pub f64);

impl Kernel for ConstantKernel {
    fn evaluate(&self, _y: f64, _xi: f64) -> Result<f64> {
        Ok(self.0)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness {
            c: self.0.abs(),
            mu: 1.0,
            nu: 0.0,
            s: 0.0,
        }
    }

    fn local_error_constants(&self) -> LocalErrorConstants {
        LocalErrorConstants {
            c_tilde: f64::MIN_POSITIVE,
            rate: 0.5,
        }
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// User-supplied kernel from a closure and explicit constants.
pub struct FnKernel<F> {
    f: F,
    smoothness: Smoothness,
    constants: LocalErrorConstants,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> FnKernel<F> {
    /// Kernel with placeholder constants; use [`FnKernel::with_constants`]
    /// before handing it to a generalized plan.
    pub fn new(f: F) -> Self {
        Self {
            f,
            smoothness: Smoothness {
                c: 1.0,
                mu: 1.0,
                nu: 0.0,
                s: 0.0,
            },
            constants: LocalErrorConstants {
                c_tilde: 1.0,
                rate: 0.5,
            },
        }
    }

    pub fn with_constants(f: F, smoothness: Smoothness, constants: LocalErrorConstants) -> Self {
        Self {
            f,
            smoothness,
            constants,
        }
    }
}

impl<F> fmt::Debug for FnKernel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel")
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Kernel for FnKernel<F> {
    fn evaluate(&self, y: f64, xi: f64) -> Result<f64> {
        let v = (self.f)(y, xi);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularKernel { y, xi })
        }
    }

    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn local_error_constants(&self) -> LocalErrorConstants {
        self.constants
    }

    fn name(&self) -> &str {
        "custom"
    }
}

pub fn exp_kernel() -> ExpKernel {
    ExpKernel
}

pub fn bessel_half_kernel() -> BesselHalfKernel {
    BesselHalfKernel
}

/// Kernel values at all node pairs, `(s, r) -> k(y_s^A, xi_r^B)`.
pub fn block_from_bases(
    kernel: &dyn Kernel,
    rows: &InterpBasis,
    cols: &InterpBasis,
) -> Result<RealMatrix> {
    let mut out = RealMatrix::zeros(rows.order(), cols.order());
    for (s, &y) in rows.nodes().iter().enumerate() {
        for (r, &xi) in cols.nodes().iter().enumerate() {
            out.set(s, r, kernel.evaluate(y, xi)?);
        }
    }
    Ok(out)
}

pub fn kernel_block(kernel: &dyn Kernel, a: Interval, b: Interval, q: usize) -> Result<RealMatrix> {
    block_from_bases(kernel, &make_basis(q, a)?, &make_basis(q, b)?)
}

/// Bound on the tensor interpolation error for an asymptotically smooth
/// kernel on an admissible block.
pub fn local_error_bound(smoothness: &Smoothness, q: usize, a: &Interval, b: &Interval) -> f64 {
    let qf = q as f64;
    smoothness.c * smoothness.mu.powi(q as i32) * qf.powf(smoothness.nu)
        / 2f64.powi(2 * q as i32 - 1)
        * (2.0 + 2.0 / PI * qf.ln())
        * (a.dist_to_origin() * b.dist_to_origin()).powf(-smoothness.s)
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|k| k as f64).product()
}

/// Central `order`-th difference quotient of `f` at `x` with step `h`.
fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64, order: usize) -> Result<f64> {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=order {
        let offset = (j as f64 - order as f64 / 2.0) * h;
        let sign = if (order - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + offset)?;
        binom = binom * (order - j) as f64 / (j + 1) as f64;
    }
    Ok(acc / h.powi(order as i32))
}

/// Checks the asymptotic-smoothness inequalities by finite differences at
/// `samples` random points with `y, xi` log-uniform in `[1e-2, 1e2]`, for
/// orders `1..=max_order`, allowing 10% numerical slack.
pub fn certify_smoothness(
    kernel: &dyn Kernel,
    samples: usize,
    max_order: usize,
    seed: u64,
) -> Result<()> {
    let sm = kernel.smoothness();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let y = 10f64.powf(rng.gen_range(-2.0..2.0));
        let xi = 10f64.powf(rng.gen_range(-2.0..2.0));
        for q in 1..=max_order {
            let bound = sm.c
                * factorial(q)
                * sm.mu.powi(q as i32)
                * (q as f64).powf(sm.nu)
                * (y * xi).powf(-sm.s);
            let dy = central_difference(|t| kernel.evaluate(t, xi), y, 0.01 * y, q)? * y.powi(q as i32);
            let dxi =
                central_difference(|t| kernel.evaluate(y, t), xi, 0.01 * xi, q)? * xi.powi(q as i32);
            for d in [dy, dxi] {
                if d.abs() > 1.1 * bound + 1e-300 {
                    return Err(Error::InvalidArgument(format!(
                        "kernel {} violates smoothness at y={y}, xi={xi}, q={q}: {} > {bound}",
                        kernel.name(),
                        d.abs()
                    )));
                }
            }
        }
    }
    Ok(())
}
