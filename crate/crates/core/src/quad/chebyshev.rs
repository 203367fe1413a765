//! Chebyshev interpolants on Chebyshev–Lobatto points, with exact differentiation.

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

/// Complex-valued Chebyshev series Σ c_k T_k(s), s = (2x − a − b)/(b − a).
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<c64>,
}

/// The `n + 1` Chebyshev–Lobatto points of [a, b] in increasing order.
pub fn lobatto_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..=n)
        .map(|j| {
            let s = -(std::f64::consts::PI * j as f64 / n as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * s
        })
        .collect();
    x[0] = a;
    x[n] = b;
    x
}

impl Chebyshev {
    /// Interpolates values given at `lobatto_points(a, b, n)` (increasing order).
    pub fn from_values(a: f64, b: f64, values: &[c64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("Chebyshev interpolant needs at least two values".into()));
        }
        if !(b > a) {
            return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
        }
        let n = values.len() - 1;
        // Values are indexed by increasing x, i.e. s_j = −cos(πj/n) = cos(π(n−j)/n).
        let mut coeffs = vec![c64::new(0.0, 0.0); n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let m = n - j;
                let w = if m == 0 || m == n { 0.5 } else { 1.0 };
                let angle = std::f64::consts::PI * (k * m % (2 * n)) as f64 / n as f64;
                acc += v * (w * angle.cos());
            }
            let scale = if k == 0 || k == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
            *ck = acc * scale;
        }
        Ok(Self { a, b, coeffs })
    }

    pub fn fit<F: FnMut(f64) -> c64>(a: f64, b: f64, n: usize, mut f: F) -> Result<Self> {
        let values: Vec<c64> = lobatto_points(a, b, n).into_iter().map(&mut f).collect();
        Self::from_values(a, b, &values)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn coefficients(&self) -> &[c64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> c64 {
        let s = (2.0 * x - self.a - self.b) / (self.b - self.a);
        // Clenshaw
        let mut b1 = c64::new(0.0, 0.0);
        let mut b2 = c64::new(0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * s) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * s - b2
    }

    /// Derivative with respect to x, as another series on the same interval.
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self { a: self.a, b: self.b, coeffs: vec![c64::new(0.0, 0.0)] };
        }
        let mut d = vec![c64::new(0.0, 0.0); n + 1];
        for k in (1..=n).rev() {
            let upper = if k < n { d[k + 1] } else { c64::new(0.0, 0.0) };
            d[k - 1] = upper + self.coeffs[k] * (2.0 * k as f64);
        }
        d[0] *= 0.5;
        d.truncate(n);
        let scale = 2.0 / (self.b - self.a);
        for c in d.iter_mut() {
            *c *= scale;
        }
        Self { a: self.a, b: self.b, coeffs: d }
    }

    /// Drops trailing coefficients smaller than `tol`, keeping at least one.
    /// Removing the noise plateau keeps repeated differentiation stable.
    pub fn chop(mut self, tol: f64) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.norm() < tol) {
            self.coeffs.pop();
        }
        self
    }

    /// Magnitude of the last two coefficients; a cheap resolution indicator.
    pub fn tail(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(2)..].iter().map(|c| c.norm()).sum()
    }
}
