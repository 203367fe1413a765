//! Polynomial (Richardson/Neville) extrapolation to zero step size.

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

/// Extrapolated value at h = 0 and an error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolated {
    pub value: c64,
    pub error: f64,
}

/// Neville tableau evaluated at h = 0 for samples (h_k, f_k).
///
/// With a halving ladder this is repeated Richardson extrapolation. The error
/// estimate is the difference between the last two diagonal entries.
pub fn neville_to_zero(steps: &[f64], values: &[c64]) -> Result<Extrapolated> {
    if steps.len() != values.len() {
        return Err(Error::InvalidParameter("steps and values differ in length".into()));
    }
    if steps.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: steps.len() });
    }
    let m = steps.len();
    let mut table: Vec<c64> = values.to_vec();
    let mut diagonal = vec![table[m - 1]];
    for level in 1..m {
        for i in 0..(m - level) {
            let h_i = steps[i];
            let h_j = steps[i + level];
            // P(0) from the two sub-polynomials
            table[i] = (table[i + 1] * h_i - table[i] * h_j) / (h_i - h_j);
        }
        diagonal.push(table[0]);
    }
    let value = table[0];
    let error = (diagonal[m - 1] - diagonal[m - 2]).norm();
    Ok(Extrapolated { value, error })
}
