//! Filon-type quadrature for ∫ f(μ) e^{−iμt} dμ with smooth real f.
//!
//! f is replaced on each panel by its degree-16 polynomial interpolant (at
//! Gauss–Legendre nodes) and the oscillatory factor is integrated exactly
//! against it through the Legendre moments
//! ∫_{-1}^{1} P_k(x) e^{−iωx} dx = 2 (−i)^k j_k(ω).
//! The panelization depends on f only, so one panelization serves every t.

use num_complex::Complex64 as c64;

use super::gauss::{gauss_legendre, legendre_all};
use crate::error::{Error, Result};

pub const PANEL_DEGREE: usize = 16;

/// Spherical Bessel functions j_0(x) ..= j_kmax(x), x ≥ 0.
pub fn spherical_bessel(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 0.5 {
        // Power series, x^k/(2k+1)!! Σ_m (−x²/2)^m / (m! (2k+3)(2k+5)…(2k+2m+1))
        let mut lead = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                lead *= x / (2 * k + 1) as f64;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..30 {
                term *= -0.5 * x * x / (m as f64 * (2 * k + 2 * m + 1) as f64);
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *slot = lead * sum;
        }
        return out;
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if x > kmax as f64 {
        out[0] = j0;
        if kmax >= 1 {
            out[1] = j1;
        }
        for k in 1..kmax {
            out[k + 1] = (2 * k + 1) as f64 / x * out[k] - out[k - 1];
        }
        return out;
    }
    // Miller's backward recurrence, normalized against the larger of j0, j1.
    let start = kmax + 20 + (40.0 * (kmax as f64 + x)).sqrt() as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut raw = vec![0.0; kmax + 1];
    for k in (1..=start).rev() {
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if k - 1 <= kmax {
            raw[k - 1] = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            for r in raw.iter_mut() {
                *r *= 1e-250;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / raw[0] } else { j1 / raw[1] };
    for (o, r) in out.iter_mut().zip(&raw) {
        *o = r * scale;
    }
    out
}

/// One panel [lo, hi] carrying the Legendre coefficients of the interpolant.
#[derive(Debug, Clone)]
pub struct FilonPanel {
    pub lo: f64,
    pub hi: f64,
    pub legendre: Vec<f64>,
}

impl FilonPanel {
    pub fn integrate(&self, t: f64) -> c64 {
        let h = 0.5 * (self.hi - self.lo);
        let m = 0.5 * (self.hi + self.lo);
        let omega = h * t;
        let sign = if omega < 0.0 { -1.0 } else { 1.0 };
        let j = spherical_bessel(PANEL_DEGREE, omega.abs());
        let mut acc = c64::new(0.0, 0.0);
        let mut phase = c64::new(1.0, 0.0); // (−i·sign)^k
        let step = c64::new(0.0, -sign);
        for (c, jk) in self.legendre.iter().zip(&j) {
            acc += phase * (2.0 * c * jk);
            phase *= step;
        }
        acc * h * c64::from_polar(1.0, -m * t)
    }

    /// Error indicator: panel half-width times the two highest coefficients.
    pub fn tail(&self) -> f64 {
        let n = self.legendre.len();
        0.5 * (self.hi - self.lo) * (self.legendre[n - 2].abs() + self.legendre[n - 1].abs())
    }

    pub fn mass(&self) -> f64 {
        (self.hi - self.lo) * self.legendre[0]
    }
}

/// Adaptive panelization of a smooth real function.
#[derive(Debug, Clone)]
pub struct FilonRule {
    panels: Vec<FilonPanel>,
}

struct Basis {
    nodes: Vec<f64>,
    // weight_k,i = (2k+1)/2 · w_i · P_k(x_i)
    projector: Vec<Vec<f64>>,
}

impl Basis {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(PANEL_DEGREE + 1);
        let mut projector = vec![vec![0.0; nodes.len()]; PANEL_DEGREE + 1];
        for (i, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
            let p = legendre_all(PANEL_DEGREE, x);
            for k in 0..=PANEL_DEGREE {
                projector[k][i] = (2 * k + 1) as f64 * 0.5 * w * p[k];
            }
        }
        Self { nodes, projector }
    }

    fn panel<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64) -> FilonPanel {
        let m = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let vals: Vec<f64> = self.nodes.iter().map(|x| f(m + h * x)).collect();
        let legendre = self
            .projector
            .iter()
            .map(|row| row.iter().zip(&vals).map(|(p, v)| p * v).sum())
            .collect();
        FilonPanel { lo, hi, legendre }
    }
}

impl FilonRule {
    /// Bisects panels between `breakpoints` until every panel's tail indicator
    /// is below `panel_tol`. Fails if more than `max_panels` would be needed.
    pub fn build<F: Fn(f64) -> f64>(
        f: F,
        breakpoints: &[f64],
        panel_tol: f64,
        max_panels: usize,
    ) -> Result<Self> {
        let basis = Basis::new();
        let mut pending: Vec<(f64, f64)> = breakpoints
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1]))
            .collect();
        pending.reverse();
        let mut panels = Vec::new();
        while let Some((lo, hi)) = pending.pop() {
            let p = basis.panel(&f, lo, hi);
            let mid = 0.5 * (lo + hi);
            let splittable = mid > lo && mid < hi && (hi - lo) > 1e-14 * (1.0 + lo.abs());
            if p.tail() > panel_tol && splittable {
                if panels.len() + pending.len() + 2 > max_panels {
                    return Err(Error::QuadratureFailed(format!(
                        "Filon refinement exceeded {max_panels} panels near μ = {mid:.6}"
                    )));
                }
                pending.push((mid, hi));
                pending.push((lo, mid));
            } else {
                panels.push(p);
            }
        }
        Ok(Self { panels })
    }

    pub fn panels(&self) -> &[FilonPanel] {
        &self.panels
    }

    /// ∫ f(μ) e^{−iμt} dμ.
    pub fn transform(&self, t: f64) -> c64 {
        self.panels.iter().map(|p| p.integrate(t)).sum()
    }

    pub fn error_estimate(&self) -> f64 {
        self.panels.iter().map(|p| p.tail()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_matches_closed_forms() {
        for &x in &[0.1, 0.7, 3.0, 10.0, 40.0, 300.0] {
            let j = spherical_bessel(16, x);
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert!((j[0] - x.sin() / x).abs() < 1e-14, "x={x}");
            assert!((j[2] - j2).abs() < 1e-12 * (1.0 + j2.abs()), "x={x} {} {}", j[2], j2);
        }
        // continuity across the algorithm switches
        for &x in &[0.5, 16.0] {
            let a = spherical_bessel(16, x - 1e-9);
            let b = spherical_bessel(16, x + 1e-9);
            for k in 0..=16 {
                assert!((a[k] - b[k]).abs() < 1e-7 * a[k].abs(), "x={x} k={k}");
            }
        }
    }

    #[test]
    fn gaussian_fourier_transform() {
        // ∫ e^{−μ²/2} e^{−iμt} dμ = √(2π) e^{−t²/2}
        let rule = FilonRule::build(|x| (-0.5 * x * x).exp(), &[-12.0, 0.0, 12.0], 1e-13, 10_000).unwrap();
        for &t in &[0.0, 0.5, 2.0, 5.0, 30.0, 1000.0] {
            let v = rule.transform(t);
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * t * t).exp();
            assert!((v.re - exact).abs() < 1e-10 && v.im.abs() < 1e-10, "t={t} {v}");
        }
    }

    #[test]
    fn shifted_box_is_exact_for_polynomials() {
        // f = 1 on [1, 3]: ∫ e^{−iμt} = (e^{−it} − e^{−3it})/(it)
        let rule = FilonRule::build(|_| 1.0, &[1.0, 3.0], 1e-14, 10).unwrap();
        for &t in &[0.3, 7.0, 123.0] {
            let exact = (c64::from_polar(1.0, -t) - c64::from_polar(1.0, -3.0 * t)) / c64::new(0.0, t);
            assert!((rule.transform(t) - exact).norm() < 1e-13);
        }
    }
}
