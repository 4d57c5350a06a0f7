//! The nonequispaced Fourier matrix `A = (exp(2 pi i xi_k x_j))` with
//! `x_j in [0, 1)`, applied exactly or by gridding (NFFT).
//!
//! The NFFT backend convolves the deconvolved, zero-padded coefficients with
//! a Kaiser-Bessel window on an oversampled grid of length
//! `next_pow2(2 * bandwidth)`. The window is truncated to `2m + 1` grid
//! points around each node, `m` being the cutoff.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Nominal oversampling factor of the NFFT grid.
pub const OVERSAMPLING: f64 = 2.0;
/// Largest cutoff tried by the calibration.
pub const MAX_CUTOFF: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Direct,
    Nfft,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "nfft" => Ok(Self::Nfft),
            other => Err(Error::InvalidArgument(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone)]
struct Gridding {
    cutoff: usize,
    grid_len: usize,
    /// grid slot of each frequency
    slot: Vec<usize>,
    /// `1 / I0(...)`, the inverse window transform per frequency
    deconv: Vec<f64>,
    /// `exp(2 pi i c x_j)` for the band centre `c`
    phase: Vec<Complex64>,
    /// `2m + 2` grid indices and window weights per node
    indices: Vec<u32>,
    weights: Vec<f64>,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Gridding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gridding")
            .field("cutoff", &self.cutoff)
            .field("grid_len", &self.grid_len)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct FourierBackend {
    kind: BackendKind,
    x_nodes: Vec<f64>,
    freqs: Vec<f64>,
    epsilon_f: f64,
    gridding: Option<Gridding>,
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Kaiser-Bessel window in grid units, supported on `|d| <= m`.
fn kaiser_bessel(d: f64, m: f64, b: f64) -> f64 {
    let arg = m * m - d * d;
    if arg < 0.0 {
        0.0
    } else if arg == 0.0 {
        b / PI
    } else {
        let r = arg.sqrt();
        (b * r).sinh() / (PI * r)
    }
}

fn validate_x(x_nodes: &[f64]) -> Result<()> {
    for (index, &x) in x_nodes.iter().enumerate() {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidNode {
                index,
                reason: "Fourier node outside [0, 1)",
            });
        }
    }
    Ok(())
}

fn validate_freqs(freqs: &[f64], integral: bool) -> Result<()> {
    for (index, &f) in freqs.iter().enumerate() {
        if !f.is_finite() {
            return Err(Error::InvalidExponent {
                index,
                reason: "not finite",
            });
        }
        if integral && f.fract() != 0.0 {
            return Err(Error::InvalidExponent {
                index,
                reason: "the NFFT backend requires integer frequencies",
            });
        }
    }
    Ok(())
}

fn check_range(r: &Range<usize>, bound: usize) -> Result<()> {
    if r.start <= r.end && r.end <= bound {
        Ok(())
    } else {
        Err(Error::RangeOutOfBounds {
            start: r.start,
            end: r.end,
            bound,
        })
    }
}

impl Gridding {
    fn new(x_nodes: &[f64], freqs: &[f64], cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidArgument("NFFT cutoff must be positive".into()));
        }
        let (kmin, kmax) = freqs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| (lo.min(f), hi.max(f)));
        let (kmin, kmax) = if freqs.is_empty() {
            (0i64, 0i64)
        } else {
            (kmin as i64, kmax as i64)
        };
        let bandwidth = (kmax - kmin + 1) as usize;
        let grid_len = (2 * bandwidth)
            .next_power_of_two()
            .max((4 * cutoff + 4).next_power_of_two())
            .max(8);
        let n = grid_len as f64;
        let sigma = n / bandwidth as f64;
        let m = cutoff as f64;
        let b = PI * (2.0 - 1.0 / sigma);
        let center = kmin + (bandwidth / 2) as i64;

        let mut slot = Vec::with_capacity(freqs.len());
        let mut deconv = Vec::with_capacity(freqs.len());
        for &f in freqs {
            let k = f as i64 - center;
            slot.push(k.rem_euclid(grid_len as i64) as usize);
            let w = 2.0 * PI * k as f64 / n;
            deconv.push(1.0 / bessel_i0(m * (b * b - w * w).sqrt()));
        }

        let width = 2 * cutoff + 2;
        let mut indices = Vec::with_capacity(x_nodes.len() * width);
        let mut weights = Vec::with_capacity(x_nodes.len() * width);
        let mut phase = Vec::with_capacity(x_nodes.len());
        for &x in x_nodes {
            let u = x * n;
            let first = u.floor() as i64 - cutoff as i64;
            for t in 0..width as i64 {
                let l = first + t;
                indices.push(l.rem_euclid(grid_len as i64) as u32);
                weights.push(kaiser_bessel(u - l as f64, m, b));
            }
            phase.push(Complex64::from_polar(1.0, 2.0 * PI * ((center as f64 * x).fract())));
        }

        let mut planner = FftPlanner::new();
        Ok(Self {
            cutoff,
            grid_len,
            slot,
            deconv,
            phase,
            indices,
            weights,
            inverse: planner.plan_fft_inverse(grid_len),
            forward: planner.plan_fft_forward(grid_len),
        })
    }

    fn width(&self) -> usize {
        2 * self.cutoff + 2
    }

    /// One column of `A[rows, cols] * column`.
    fn trafo(&self, rows: Range<usize>, cols: Range<usize>, column: &[Complex64]) -> Vec<Complex64> {
        let mut grid = vec![Complex64::default(); self.grid_len];
        for (k, &c) in cols.zip(column) {
            grid[self.slot[k]] += c * self.deconv[k];
        }
        self.inverse.process(&mut grid);
        let w = self.width();
        rows.map(|j| {
            let idx = &self.indices[j * w..(j + 1) * w];
            let wts = &self.weights[j * w..(j + 1) * w];
            let acc = idx
                .iter()
                .zip(wts)
                .fold(Complex64::default(), |acc, (&i, &wt)| acc + grid[i as usize] * wt);
            acc * self.phase[j]
        })
        .collect()
    }

    /// One column of `A[rows, cols]^* * column`.
    fn adjoint(&self, rows: Range<usize>, cols: Range<usize>, column: &[Complex64]) -> Vec<Complex64> {
        let mut grid = vec![Complex64::default(); self.grid_len];
        let w = self.width();
        for (j, &v) in rows.zip(column) {
            let v = v * self.phase[j].conj();
            let idx = &self.indices[j * w..(j + 1) * w];
            let wts = &self.weights[j * w..(j + 1) * w];
            for (&i, &wt) in idx.iter().zip(wts) {
                grid[i as usize] += v * wt;
            }
        }
        self.forward.process(&mut grid);
        cols.map(|k| grid[self.slot[k]] * self.deconv[k]).collect()
    }
}

/// Smallest cutoff whose measured `||A - A_nfft||_{1->inf}` on a fixed
/// calibration problem (64 consecutive frequencies, 257 nodes spread over
/// every grid phase) is at most `epsilon_f / 2`.
pub fn calibrate_cutoff(epsilon_f: f64) -> Result<usize> {
    if !(epsilon_f > 0.0 && epsilon_f < 1.0) {
        return Err(Error::Accuracy(epsilon_f));
    }
    let freqs: Vec<f64> = (1..=64).map(|k| k as f64).collect();
    let x: Vec<f64> = (0..257).map(|j| j as f64 / 257.0).collect();
    let direct = FourierBackend::direct(&x, &freqs)?;
    let identity = ComplexMatrix::from_fn(64, 64, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    let exact = direct.apply_block(0..x.len(), 0..64, &identity)?;
    for cutoff in 1..=MAX_CUTOFF {
        let nfft = FourierBackend::nfft_with_cutoff(&x, &freqs, cutoff)?;
        let approx = nfft.apply_block(0..x.len(), 0..64, &identity)?;
        let err = exact
            .as_slice()
            .iter()
            .zip(approx.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if err <= 0.5 * epsilon_f {
            return Ok(cutoff);
        }
    }
    Err(Error::InvalidArgument(format!(
        "no NFFT cutoff up to {MAX_CUTOFF} reaches accuracy {epsilon_f}"
    )))
}

pub fn make_backend(
    kind: BackendKind,
    x_nodes: &[f64],
    freqs: &[f64],
    epsilon_f: f64,
) -> Result<FourierBackend> {
    match kind {
        BackendKind::Direct => FourierBackend::direct(x_nodes, freqs),
        BackendKind::Nfft => {
            let cutoff = calibrate_cutoff(epsilon_f)?;
            let mut backend = FourierBackend::nfft_with_cutoff(x_nodes, freqs, cutoff)?;
            backend.epsilon_f = epsilon_f;
            Ok(backend)
        }
    }
}

impl FourierBackend {
    pub fn direct(x_nodes: &[f64], freqs: &[f64]) -> Result<Self> {
        validate_x(x_nodes)?;
        validate_freqs(freqs, false)?;
        Ok(Self {
            kind: BackendKind::Direct,
            x_nodes: x_nodes.to_vec(),
            freqs: freqs.to_vec(),
            epsilon_f: 0.0,
            gridding: None,
        })
    }

    /// NFFT backend with an explicit window cutoff.
    pub fn nfft_with_cutoff(x_nodes: &[f64], freqs: &[f64], cutoff: usize) -> Result<Self> {
        validate_x(x_nodes)?;
        validate_freqs(freqs, true)?;
        let gridding = Gridding::new(x_nodes, freqs, cutoff)?;
        Ok(Self {
            kind: BackendKind::Nfft,
            x_nodes: x_nodes.to_vec(),
            freqs: freqs.to_vec(),
            epsilon_f: f64::NAN,
            gridding: Some(gridding),
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    /// Window cutoff of the NFFT backend.
    pub fn cutoff(&self) -> Option<usize> {
        self.gridding.as_ref().map(|g| g.cutoff)
    }

    pub fn grid_len(&self) -> Option<usize> {
        self.gridding.as_ref().map(|g| g.grid_len)
    }

    /// Accuracy the backend was configured for (0 for the exact backend,
    /// NaN when built from an explicit cutoff).
    pub fn epsilon_f(&self) -> f64 {
        self.epsilon_f
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `A[rows, cols] * rhs` for `rhs` of shape `|cols| x r`.
    pub fn apply_block(
        &self,
        rows: Range<usize>,
        cols: Range<usize>,
        rhs: &ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        check_range(&rows, self.x_nodes.len())?;
        check_range(&cols, self.freqs.len())?;
        if rhs.rows() != cols.len() {
            return Err(Error::LengthMismatch {
                expected: cols.len(),
                actual: rhs.rows(),
            });
        }
        let r = rhs.cols();
        match &self.gridding {
            None => {
                let x = &self.x_nodes[rows.clone()];
                let freqs = &self.freqs[cols];
                let data: Vec<Complex64> = x
                    .par_iter()
                    .flat_map_iter(|&xj| {
                        let mut acc = vec![Complex64::default(); r];
                        for (k, &xi) in freqs.iter().enumerate() {
                            let a = Complex64::from_polar(1.0, 2.0 * PI * xi * xj);
                            for (o, &c) in acc.iter_mut().zip(rhs.row(k)) {
                                *o += a * c;
                            }
                        }
                        acc
                    })
                    .collect();
                Ok(ComplexMatrix::from_vec(rows.len(), r, data))
            }
            Some(g) => {
                let columns: Vec<Vec<Complex64>> = (0..r)
                    .into_par_iter()
                    .map(|c| g.trafo(rows.clone(), cols.clone(), &rhs.column(c)))
                    .collect();
                Ok(ComplexMatrix::from_fn(rows.len(), r, |i, c| columns[c][i]))
            }
        }
    }

    /// `A[rows, cols]^* * rhs` for `rhs` of shape `|rows| x r`.
    pub fn apply_adjoint_block(
        &self,
        rows: Range<usize>,
        cols: Range<usize>,
        rhs: &ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        check_range(&rows, self.x_nodes.len())?;
        check_range(&cols, self.freqs.len())?;
        if rhs.rows() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                actual: rhs.rows(),
            });
        }
        let r = rhs.cols();
        match &self.gridding {
            None => {
                let x = &self.x_nodes[rows];
                let data: Vec<Complex64> = self.freqs[cols.clone()]
                    .par_iter()
                    .flat_map_iter(|&xi| {
                        let mut acc = vec![Complex64::default(); r];
                        for (j, &xj) in x.iter().enumerate() {
                            let a = Complex64::from_polar(1.0, -2.0 * PI * xi * xj);
                            for (o, &c) in acc.iter_mut().zip(rhs.row(j)) {
                                *o += a * c;
                            }
                        }
                        acc
                    })
                    .collect();
                Ok(ComplexMatrix::from_vec(cols.len(), r, data))
            }
            Some(g) => {
                let columns: Vec<Vec<Complex64>> = (0..r)
                    .into_par_iter()
                    .map(|c| g.adjoint(rows.clone(), cols.clone(), &rhs.column(c)))
                    .collect();
                Ok(ComplexMatrix::from_fn(cols.len(), r, |i, c| columns[c][i]))
            }
        }
    }

    pub fn apply(&self, fhat: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = ComplexMatrix::column_vector(fhat.to_vec());
        Ok(self
            .apply_block(0..self.x_nodes.len(), 0..self.freqs.len(), &rhs)?
            .into_vec())
    }

    pub fn apply_adjoint(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = ComplexMatrix::column_vector(g.to_vec());
        Ok(self
            .apply_adjoint_block(0..self.x_nodes.len(), 0..self.freqs.len(), &rhs)?
            .into_vec())
    }
}
