//! Scaling fits on κ ladders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line y = a + b·x; returns (a, b).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

/// Residual sum of squares of log y − log(C·m(κ)) with the best constant C.
fn fixed_shape_residual(ly: &[f64], lm: &[f64]) -> f64 {
    let d: Vec<f64> = ly.iter().zip(lm).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Comparison of y ≈ C κ²|log κ| against y ≈ C κ^p with p restricted to [p_lo, p_hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogModelComparison {
    pub log_model_residual: f64,
    pub best_power: f64,
    pub power_residual: f64,
}

impl LogModelComparison {
    pub fn log_model_wins(&self) -> bool {
        self.log_model_residual < self.power_residual
    }
}

pub fn compare_log_model(kappas: &[f64], y: &[f64], p_lo: f64, p_hi: f64) -> Result<LogModelComparison> {
    if kappas.len() != y.len() {
        return Err(Error::InvalidParameter("kappas and values differ in length".into()));
    }
    if kappas.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: kappas.len() });
    }
    if kappas.iter().any(|k| !(*k > 0.0 && *k < 1.0)) || y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("need 0 < kappa < 1 and positive values".into()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let lk: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let log_shape: Vec<f64> = lk.iter().map(|l| 2.0 * l + (-l).ln()).collect();
    let log_model_residual = fixed_shape_residual(&ly, &log_shape);
    // residual is quadratic in p; clamp the unconstrained optimum
    let p_free = linear_fit(&lk, &ly)?.1;
    let best_power = p_free.clamp(p_lo, p_hi);
    let power_shape: Vec<f64> = lk.iter().map(|l| best_power * l).collect();
    let power_residual = fixed_shape_residual(&ly, &power_shape);
    Ok(LogModelComparison { log_model_residual, best_power, power_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power() {
        let k = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = k.iter().map(|v: &f64| 3.0 * v.powf(2.7)).collect();
        assert!((loglog_slope(&k, &y).unwrap() - 2.7).abs() < 1e-12);
    }

    #[test]
    fn log_model_detected() {
        let k = [0.2, 0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = k.iter().map(|v: &f64| 0.7 * v * v * (-v.ln())).collect();
        let c = compare_log_model(&k, &y, 2.0, 2.3).unwrap();
        assert!(c.log_model_residual < 1e-20);
        assert!(c.log_model_wins());
        let y: Vec<f64> = k.iter().map(|v: &f64| v.powf(2.1)).collect();
        let c = compare_log_model(&k, &y, 2.0, 2.3).unwrap();
        assert!(!c.log_model_wins());
        assert!((c.best_power - 2.1).abs() < 1e-12);
    }
}
