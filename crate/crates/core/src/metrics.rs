use num_complex::Complex64;

use crate::error::{Error, Result};

/// `||f - ftilde||_inf / ||fhat||_1`.
pub fn relative_error(f: &[Complex64], ftilde: &[Complex64], fhat: &[Complex64]) -> Result<f64> {
    if f.len() != ftilde.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            actual: ftilde.len(),
        });
    }
    let l1: f64 = fhat.iter().map(|c| c.norm()).sum();
    if !(l1 > 0.0) {
        return Err(Error::InvalidArgument("coefficient vector is zero".into()));
    }
    let diff = f
        .iter()
        .zip(ftilde)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(diff / l1)
}
