//! Band layout and precomputed low-rank factors shared by the Laplace and
//! unit-disk plans.

use std::borrow::Cow;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interp::{lagrange_matrix, make_basis, InterpBasis, Interval};
use crate::kernels::{block_from_bases, Kernel};
use crate::linalg::RealMatrix;
use crate::partition::{band_index, DyadicPartition};

/// Indices ordering `values` decreasingly (stable for ties).
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    perm
}

/// Decreasing sort order of a node set; gathers and scatters are skipped when
/// the input is already sorted.
#[derive(Debug, Clone)]
pub(crate) struct Ordering {
    /// sorted position -> caller index
    perm: Vec<usize>,
    identity: bool,
}

impl Ordering {
    pub fn descending(values: &[f64]) -> Self {
        let perm = descending_order(values);
        let identity = perm.iter().enumerate().all(|(k, &i)| k == i);
        Self { perm, identity }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn sorted(&self, values: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&i| values[i]).collect()
    }

    /// Caller-ordered `v` rearranged into sorted order.
    pub fn gather<'a>(&self, v: &'a [Complex64]) -> Cow<'a, [Complex64]> {
        if self.identity {
            Cow::Borrowed(v)
        } else {
            Cow::Owned(self.perm.iter().map(|&i| v[i]).collect())
        }
    }

    /// Sorted-order `v` rearranged into caller order.
    pub fn scatter(&self, sorted: Vec<Complex64>) -> Vec<Complex64> {
        if self.identity {
            return sorted;
        }
        let mut out = vec![Complex64::default(); sorted.len()];
        for (&dst, v) in self.perm.iter().zip(sorted) {
            out[dst] = v;
        }
        out
    }
}

/// Contiguous position ranges of each band `1..=levels` (stored at `m - 1`)
/// for values sorted decreasingly.
pub(crate) fn band_ranges(sorted: &[f64], top: f64, levels: usize) -> Result<Vec<Range<usize>>> {
    let mut ranges = Vec::with_capacity(levels);
    let mut start = 0;
    let mut current = 1;
    for (pos, &v) in sorted.iter().enumerate() {
        let m = band_index(v, top, levels)?;
        debug_assert!(m >= current);
        while current < m {
            ranges.push(start..pos);
            start = pos;
            current += 1;
        }
    }
    while ranges.len() < levels {
        ranges.push(start..sorted.len());
        start = sorted.len();
    }
    Ok(ranges)
}

/// Lagrange factors for bands `1..M-1` and kernel blocks for each spatial
/// band `m` over a contiguous window of frequency bands.
#[derive(Debug, Clone)]
pub(crate) struct Factorization {
    pub partition: DyadicPartition,
    pub y_ranges: Vec<Range<usize>>,
    pub xi_ranges: Vec<Range<usize>>,
    /// `L^{Y_m}` at `m - 1`, `m = 1..M-1`.
    pub l_y: Vec<RealMatrix>,
    /// `L^{Omega_l}` at `l - 1`, `l = 1..M-1`.
    pub l_xi: Vec<RealMatrix>,
    /// Inclusive frequency band window `(lo, hi)` per spatial band `m`; empty
    /// when `lo > hi`.
    pub windows: Vec<(usize, usize)>,
    /// `K^{Y_m, Omega_l}` at `[m - 1][l - lo_m]`.
    pub blocks: Vec<Vec<RealMatrix>>,
}

fn band_basis(q: usize, band: Interval) -> Result<InterpBasis> {
    make_basis(q, Interval::closed(band.lo, band.hi))
}

impl Factorization {
    /// `y_sorted` and `xi_sorted` must be decreasing with maxima at most the
    /// partition's `y1`, `xi1`.
    pub fn build(
        partition: DyadicPartition,
        kernel: &dyn Kernel,
        y_sorted: &[f64],
        xi_sorted: &[f64],
        window: impl Fn(&DyadicPartition, usize) -> (usize, usize),
    ) -> Result<Self> {
        let levels = partition.levels();
        let q = partition.q();
        let y_ranges = band_ranges(y_sorted, partition.y1(), levels)?;
        let xi_ranges = band_ranges(xi_sorted, partition.xi1(), levels)?;

        let mut y_bases = Vec::with_capacity(levels - 1);
        let mut xi_bases = Vec::with_capacity(levels - 1);
        let mut l_y = Vec::with_capacity(levels - 1);
        let mut l_xi = Vec::with_capacity(levels - 1);
        for m in 1..levels {
            let by = band_basis(q, partition.spatial_band(m))?;
            l_y.push(lagrange_matrix(&by, &y_sorted[y_ranges[m - 1].clone()])?);
            y_bases.push(by);
            let bx = band_basis(q, partition.frequency_band(m))?;
            l_xi.push(lagrange_matrix(&bx, &xi_sorted[xi_ranges[m - 1].clone()])?);
            xi_bases.push(bx);
        }

        let mut windows = Vec::with_capacity(levels - 1);
        let mut blocks = Vec::with_capacity(levels - 1);
        for m in 1..levels {
            let (lo, hi) = window(&partition, m);
            if lo <= hi && (lo < 1 || hi >= levels) {
                return Err(Error::InvalidArgument(format!(
                    "frequency window {lo}..={hi} outside far-field bands"
                )));
            }
            let row = (lo..=hi)
                .map(|l| block_from_bases(kernel, &y_bases[m - 1], &xi_bases[l - 1]))
                .collect::<Result<Vec<_>>>()?;
            windows.push((lo, hi));
            blocks.push(row);
        }

        Ok(Self {
            partition,
            y_ranges,
            xi_ranges,
            l_y,
            l_xi,
            windows,
            blocks,
        })
    }

    pub fn levels(&self) -> usize {
        self.partition.levels()
    }

    pub fn q(&self) -> usize {
        self.partition.q()
    }

    pub fn y_range(&self, m: usize) -> Range<usize> {
        self.y_ranges[m - 1].clone()
    }

    pub fn xi_range(&self, l: usize) -> Range<usize> {
        self.xi_ranges[l - 1].clone()
    }

    /// Positions of frequency bands `lo..=hi` (contiguous in sorted order).
    pub fn xi_span(&self, lo: usize, hi: usize) -> Range<usize> {
        if lo > hi {
            let at = if lo <= self.levels() {
                self.xi_ranges[lo - 1].start
            } else {
                self.xi_ranges.last().map_or(0, |r| r.end)
            };
            return at..at;
        }
        self.xi_ranges[lo - 1].start..self.xi_ranges[hi - 1].end
    }

    pub fn block(&self, m: usize, l: usize) -> &RealMatrix {
        &self.blocks[m - 1][l - self.windows[m - 1].0]
    }
}
