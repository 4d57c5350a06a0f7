//! Dyadic band partition of `[0, top]` driven by the target accuracy.
//!
//! Band `m < M` is `(top / 2^m, top / 2^(m-1)]`; band `M` is the closed near
//! field `[0, top / 2^(M-1)]`. Band indices are 1-based throughout, matching
//! the recurrences of the transforms.

use crate::error::{Error, Result};
use crate::interp::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Exponential kernel, `M = ceil(log2(y1 xi1 / eps)) + 1`.
    Exp,
    /// Asymptotically smooth kernel, `M = ceil(log2(y1 xi1 n / eps)) + 1`.
    General,
    /// Unit-disk evaluation, `M = ceil(log2(n log(1/eps) / eps)) + 1`.
    Disk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPartition {
    epsilon: f64,
    y1: f64,
    xi1: f64,
    q: usize,
    levels: usize,
    mode: PartitionMode,
    /// `l_m` for `m = 1..M-1`, stored at `m - 1`.
    first_far: Vec<usize>,
}

/// `max(2, ceil(1/2 + log4(1/eps)))`.
pub fn interpolation_order(epsilon: f64) -> usize {
    let q = (0.5 - 0.5 * epsilon.log2()).ceil();
    (q as usize).max(2)
}

fn check_accuracy(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Accuracy(epsilon))
    }
}

pub fn make_partition(
    epsilon: f64,
    y1: f64,
    xi1: f64,
    mode: PartitionMode,
    n: Option<usize>,
) -> Result<DyadicPartition> {
    check_accuracy(epsilon)?;
    for (name, v) in [("y1", y1), ("xi1", xi1)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let raw_levels = match mode {
        PartitionMode::Exp => (y1 * xi1 / epsilon).log2(),
        PartitionMode::General | PartitionMode::Disk => {
            let n = n.ok_or_else(|| {
                Error::InvalidArgument("node count is required for this partition mode".into())
            })? as f64;
            if mode == PartitionMode::General {
                (y1 * xi1 * n / epsilon).log2()
            } else {
                (n * (1.0 / epsilon).ln() / epsilon).log2()
            }
        }
    };
    let levels = (raw_levels.ceil() as i64 + 1).max(2) as usize;
    let q = interpolation_order(epsilon);

    let shift = (y1 * xi1).log2() - (1.0 / epsilon).ln().log2();
    let first_far = (1..levels)
        .map(|m| {
            let far_end = levels - m;
            let l = ((shift - m as f64).floor() + 1.0).max(1.0);
            (l.min((far_end + 1) as f64)) as usize
        })
        .collect();

    Ok(DyadicPartition {
        epsilon,
        y1,
        xi1,
        q,
        levels,
        mode,
        first_far,
    })
}

impl DyadicPartition {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn xi1(&self) -> f64 {
        self.xi1
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of bands `M`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    /// Replaces the interpolation order (the generalized transform derives it
    /// from the kernel constants).
    pub fn with_order(mut self, q: usize) -> Self {
        self.q = q.max(1);
        self
    }

    /// `l_m`, first frequency band interpolated for spatial band `m < M`.
    pub fn first_far(&self, m: usize) -> usize {
        self.first_far[m - 1]
    }

    /// `L_m = M - m`, last frequency band interpolated for spatial band `m`.
    pub fn last_far(&self, m: usize) -> usize {
        self.levels - m
    }

    /// `y1 xi1 <= eps`: the exponential kernel is within `eps` of one on the
    /// whole domain.
    pub fn is_degenerate(&self) -> bool {
        self.y1 * self.xi1 <= self.epsilon
    }

    pub fn spatial_band(&self, m: usize) -> Interval {
        band_interval(self.y1, self.levels, m)
    }

    pub fn frequency_band(&self, l: usize) -> Interval {
        band_interval(self.xi1, self.levels, l)
    }
}

/// Interval of band `m` of `[0, top]` split into `levels` bands.
pub fn band_interval(top: f64, levels: usize, m: usize) -> Interval {
    assert!((1..=levels).contains(&m), "band {m} out of 1..={levels}");
    let hi = top * 0.5f64.powi(m as i32 - 1);
    if m == levels {
        Interval::closed(0.0, hi)
    } else {
        Interval::half_open(top * 0.5f64.powi(m as i32), hi)
    }
}

/// The unique band `m` of `[0, top]` containing `value`.
pub fn band_index(value: f64, top: f64, levels: usize) -> Result<usize> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one band is required".into()));
    }
    if !(0.0..=top).contains(&value) {
        return Err(Error::OutsideInterval {
            point: value,
            lo: 0.0,
            hi: top,
        });
    }
    if value == 0.0 {
        return Ok(levels);
    }
    let guess = (-(value / top).log2()).ceil();
    let mut m = if guess.is_finite() {
        (guess.max(1.0) as usize).min(levels)
    } else {
        levels
    };
    while m > 1 && value > top * 0.5f64.powi(m as i32 - 1) {
        m -= 1;
    }
    while m < levels && value <= top * 0.5f64.powi(m as i32) {
        m += 1;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan(value: f64, top: f64, levels: usize) -> usize {
        (1..=levels)
            .find(|&m| band_interval(top, levels, m).contains(value))
            .unwrap()
    }

    #[test]
    fn order_formula() {
        // ceil(0.5 + 6.6439) = 8
        assert_eq!(interpolation_order(1e-4), 8);
        assert_eq!(interpolation_order(0.25), 2);
        assert_eq!(interpolation_order(0.9), 2);
        for q in 2..20 {
            assert_eq!(interpolation_order(4f64.powf(0.5 - q as f64)), q);
        }
    }

    #[test]
    fn levels_and_first_far_small_product() {
        let p = make_partition(2f64.powi(-10), 1.0, 1.0, PartitionMode::Exp, None).unwrap();
        assert_eq!(p.levels(), 11);
        assert!((1..11).all(|m| p.first_far(m) == 1));
        assert_eq!(p.last_far(3), 8);
    }

    #[test]
    fn disk_and_general_levels() {
        let eps: f64 = 1e-4;
        let p = make_partition(eps, 2.0, 3.0, PartitionMode::Disk, Some(1024)).unwrap();
        let expect = (1024.0 * (1.0 / eps).ln() / eps).log2().ceil() as usize + 1;
        assert_eq!(p.levels(), expect);
        let g = make_partition(eps, 2.0, 3.0, PartitionMode::General, Some(100)).unwrap();
        assert_eq!(g.levels(), (6.0 * 100.0 / eps).log2().ceil() as usize + 1);
        assert!(make_partition(eps, 1.0, 1.0, PartitionMode::Disk, None).is_err());
    }

    #[test]
    fn levels_clamp_to_two() {
        let p = make_partition(0.5, 0.1, 0.1, PartitionMode::Exp, None).unwrap();
        assert_eq!(p.levels(), 2);
        assert!(p.is_degenerate());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(
            make_partition(0.0, 1.0, 1.0, PartitionMode::Exp, None),
            Err(Error::Accuracy(0.0))
        );
        assert!(make_partition(1.0, 1.0, 1.0, PartitionMode::Exp, None).is_err());
        assert!(make_partition(0.1, -1.0, 1.0, PartitionMode::Exp, None).is_err());
        assert!(make_partition(0.1, 1.0, 0.0, PartitionMode::Exp, None).is_err());
    }

    #[test]
    fn band_index_endpoints() {
        assert_eq!(band_index(8.0, 8.0, 4).unwrap(), 1);
        assert_eq!(band_index(0.0, 8.0, 4).unwrap(), 4);
        // Y_3 = (1, 2] is open at 1, so 1 lies in Y_4 = [0, 1]
        assert_eq!(band_index(1.0, 8.0, 4).unwrap(), 4);
        assert_eq!(band_index(2.0, 8.0, 4).unwrap(), 3);
        assert_eq!(band_index(4.0 + 1e-15, 8.0, 4).unwrap(), 1);
        assert!(band_index(8.1, 8.0, 4).is_err());
        assert!(band_index(-0.1, 8.0, 4).is_err());
    }

    #[test]
    fn bands_tile_and_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let top = 10.397;
        let levels = 25;
        for m in 1..levels {
            assert!(band_interval(top, levels, m).is_admissible());
        }
        for _ in 0..100_000 {
            let v = rng.gen_range(0.0..=top) * 0.5f64.powi(rng.gen_range(0..30));
            let m = band_index(v, top, levels).unwrap();
            assert!(band_interval(top, levels, m).contains(v));
            let hits = (1..=levels)
                .filter(|&k| band_interval(top, levels, k).contains(v))
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn band_index_agrees_with_scan_on_edges() {
        let top = 3.0;
        let levels = 40;
        for m in 0..levels as i32 {
            let edge = top * 0.5f64.powi(m);
            for v in [edge, f64::from_bits(edge.to_bits() + 1), f64::from_bits(edge.to_bits() - 1)] {
                if v <= top {
                    assert_eq!(band_index(v, top, levels).unwrap(), scan(v, top, levels), "{v}");
                }
            }
        }
    }

    #[test]
    fn far_field_column_count_is_bounded() {
        for &eps in &[1e-1, 1e-2, 1e-4, 1e-6, 1e-8, 1e-12] {
            for &(y1, xi1) in &[(1.0, 1.0), (10.4, 16384.0), (1e-3, 7.0), (50.0, 1e6)] {
                let p = make_partition(eps, y1, xi1, PartitionMode::Exp, None).unwrap();
                let lim = 2.0 * (1.0 / eps).log2() + 2.0;
                for m in 1..p.levels() {
                    let (lo, hi) = (p.first_far(m), p.last_far(m));
                    assert!(lo >= 1 && lo <= hi + 1);
                    assert_eq!(hi, p.levels() - m);
                    assert!(((hi + 1 - lo) as f64) <= lim, "eps={eps} m={m}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn band_index_matches_scan(v in 0.0f64..=1.0, top in 1e-3f64..1e3, levels in 2usize..60) {
            let value = v * top;
            prop_assert_eq!(band_index(value, top, levels).unwrap(), scan(value, top, levels));
        }

        #[test]
        fn band_index_is_nonincreasing(a in 0.0f64..=1.0, b in 0.0f64..=1.0, levels in 2usize..40) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(band_index(lo, 1.0, levels).unwrap() >= band_index(hi, 1.0, levels).unwrap());
        }
    }
}
