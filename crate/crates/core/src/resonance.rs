//! Taylor approximant Fₙ, the resonance λκ as the zero of Bₙ(z, κ) − z,
//! and the residue a(κ).

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feshbach::{BoundaryTrace, GoldenRule};
use crate::fit::loglog_slope;

/// Number of samples on the circle used by disc checks and the winding number.
pub const CIRCLE_SAMPLES: usize = 720;

const FIXED_POINT_ITERATIONS: usize = 100;
const NEWTON_ITERATIONS: usize = 50;

/// Fₙ(z) = Σ_k c_k (z − center)^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorApproximant {
    pub center: f64,
    pub coefficients: Vec<c64>,
    /// Radius r of the disc U_r(λ) on which the approximant is used.
    pub radius: f64,
    /// The eigenvalue λ at the center of U_r(λ).
    pub lambda: f64,
    /// sup |Fₙ| over the checked circle.
    pub bound: f64,
}

impl TaylorApproximant {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: c64) -> c64 {
        let u = z - self.center;
        self.coefficients.iter().rev().fold(c64::new(0.0, 0.0), |acc, c| acc * u + c)
    }

    pub fn derivative(&self, z: c64) -> c64 {
        let u = z - self.center;
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(c64::new(0.0, 0.0), |acc, (k, c)| acc * u + c * k as f64)
    }

    /// j-th derivative in z.
    pub fn derivative_n(&self, z: c64, j: usize) -> c64 {
        let u = z - self.center;
        let mut acc = c64::new(0.0, 0.0);
        for (k, c) in self.coefficients.iter().enumerate().skip(j).rev() {
            let falling: f64 = ((k - j + 1)..=k).map(|i| i as f64).product();
            acc = acc * u + c * falling;
        }
        acc
    }

    /// Circle |z − λ| = ρ sampled at `CIRCLE_SAMPLES` points.
    pub fn circle(&self, rho: f64) -> impl Iterator<Item = c64> + '_ {
        (0..CIRCLE_SAMPLES).map(move |j| {
            let theta = 2.0 * PI * j as f64 / CIRCLE_SAMPLES as f64;
            self.lambda + c64::from_polar(rho, theta)
        })
    }

    /// (sup |Fₙ|, max Im Fₙ) on the closed disc of radius ρ, sampled on
    /// circles at ρ/4, ρ/2, 3ρ/4, ρ and at the center.
    pub fn disc_sample(&self, rho: f64) -> (f64, f64) {
        let mut sup = self.eval(c64::new(self.lambda, 0.0)).norm();
        let mut max_im = self.eval(c64::new(self.lambda, 0.0)).im;
        for frac in [0.25, 0.5, 0.75, 1.0] {
            for z in self.circle(frac * rho) {
                let f = self.eval(z);
                sup = sup.max(f.norm());
                max_im = max_im.max(f.im);
            }
        }
        (sup, max_im)
    }

    /// sup |Fₙ'| on the disc of radius ρ (sampled).
    pub fn derivative_sup(&self, rho: f64) -> f64 {
        let mut sup: f64 = self.derivative(c64::new(self.lambda, 0.0)).norm();
        for frac in [0.25, 0.5, 0.75, 1.0] {
            for z in self.circle(frac * rho) {
                sup = sup.max(self.derivative(z).norm());
            }
        }
        sup
    }
}

/// Default r: half the distance from λ to the boundary of I.
pub fn default_radius(trace: &BoundaryTrace, lambda: f64) -> f64 {
    0.5 * (lambda - trace.interval.0).min(trace.interval.1 - lambda)
}

/// Taylor polynomial of order n of F(· + i0, κ) at λ₁, validated on the
/// circle |z − λ| = r/2; r is halved once if −Im Fₙ > 0 fails there.
pub fn build_taylor(trace: &BoundaryTrace, lambda: f64, lambda1: f64, n: usize, r: f64) -> Result<TaylorApproximant> {
    if !(trace.interval.0 < lambda1 && lambda1 < trace.interval.1) {
        return Err(Error::InvalidParameter(format!("lambda1 = {lambda1} must lie inside the trace interval")));
    }
    if n > trace.n + 1 {
        return Err(Error::InvalidParameter(format!(
            "order {n} needs {n} derivatives, the trace carries {}",
            trace.n + 1
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let coefficients = trace.taylor_coefficients(lambda1, n)?;
    let mut radius = r;
    for attempt in 0..2 {
        let mut approx = TaylorApproximant { center: lambda1, coefficients: coefficients.clone(), radius, lambda, bound: 0.0 };
        let (sup, max_im) = approx.disc_sample(0.5 * radius);
        if max_im < 0.0 {
            approx.bound = sup;
            return Ok(approx);
        }
        if attempt == 0 {
            radius *= 0.5;
        }
    }
    Err(Error::ApproximantNotDissipative { radius: 0.5 * radius })
}

/// The second-order prediction λ + κ(φ, Vφ) + κ²F(λ + i0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub lambda: f64,
    pub first_order: f64,
    pub golden: GoldenRule,
}

impl Expansion {
    pub fn predict(&self, kappa: f64) -> c64 {
        self.golden.f_lambda * (kappa * kappa) + self.lambda + kappa * self.first_order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub kappa: f64,
    pub lambda_res: c64,
    pub gamma_fgr: f64,
    pub amplitude: c64,
    pub iterations: usize,
    pub newton: bool,
    /// |λκ − λ − κ(φ, Vφ) − κ²F(λ + i0, 0)|.
    pub expansion_gap: f64,
    /// Fixed-point step sizes |z_{k+1} − z_k|.
    pub residuals: Vec<f64>,
    /// κ² sup|Fₙ'| on U_r.
    pub contraction: f64,
}

/// Solves z = λ₁ + κ²Fₙ(z) starting at λ₁; Newton takes over after 100 steps.
pub fn find_resonance(approx: &TaylorApproximant, kappa: f64, expansion: &Expansion) -> Result<Resonance> {
    let k2 = kappa * kappa;
    let tol = 1e-12 * expansion.lambda.abs().max(1.0);
    let lambda1 = c64::new(approx.center, 0.0);
    let contraction = k2 * approx.derivative_sup(approx.radius);
    let map = |z: c64| lambda1 + approx.eval(z) * k2;
    let inside = |z: c64| (z - approx.lambda).norm() < approx.radius;

    let mut z = lambda1;
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..FIXED_POINT_ITERATIONS {
        let next = map(z);
        let step = (next - z).norm();
        if step <= tol {
            z = next;
            converged = true;
            break;
        }
        residuals.push(step);
        z = next;
        iterations += 1;
        if !inside(z) {
            return Err(Error::LeftDisc { z, radius: approx.radius });
        }
    }
    let mut newton = false;
    if !converged {
        newton = true;
        for _ in 0..NEWTON_ITERATIONS {
            let h = z - map(z);
            let dh = c64::new(1.0, 0.0) - approx.derivative(z) * k2;
            let step = h / dh;
            z -= step;
            iterations += 1;
            if !inside(z) {
                return Err(Error::LeftDisc { z, radius: approx.radius });
            }
            if step.norm() <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::RootNotConverged(iterations));
        }
    }
    if z.im > tol {
        return Err(Error::UpperHalfPlane(z.im));
    }
    let amplitude = 1.0 / (c64::new(1.0, 0.0) - approx.derivative(z) * k2);
    Ok(Resonance {
        kappa,
        lambda_res: z,
        gamma_fgr: expansion.golden.gamma,
        amplitude,
        iterations,
        newton,
        expansion_gap: (z - expansion.predict(kappa)).norm(),
        residuals,
        contraction,
    })
}

/// Winding number of z ↦ Bₙ(z, κ) − z along |z − λ| = ρ.
pub fn winding_number(approx: &TaylorApproximant, kappa: f64, rho: f64) -> f64 {
    let k2 = kappa * kappa;
    let h = |z: c64| c64::new(approx.center, 0.0) + approx.eval(z) * k2 - z;
    let pts: Vec<c64> = approx.circle(rho).collect();
    let mut total = 0.0;
    for j in 0..pts.len() {
        let a = h(pts[j]);
        let b = h(pts[(j + 1) % pts.len()]);
        total += (b / a).arg();
    }
    total / (2.0 * PI)
}

/// Least-squares slope of log(expansion_gap) against log κ.
pub fn expansion_check(ladder: &[Resonance]) -> Result<f64> {
    if ladder.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: ladder.len() });
    }
    let ks: Vec<f64> = ladder.iter().map(|r| r.kappa).collect();
    let gaps: Vec<f64> = ladder.iter().map(|r| r.expansion_gap).collect();
    loglog_slope(&ks, &gaps)
}

/// One JSON line per resonance record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub kappa: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub gamma: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub gap: f64,
}

impl From<&Resonance> for ResonanceRecord {
    fn from(r: &Resonance) -> Self {
        Self {
            kappa: r.kappa,
            re_lambda: r.lambda_res.re,
            im_lambda: r.lambda_res.im,
            gamma: r.gamma_fgr,
            re_a: r.amplitude.re,
            im_a: r.amplitude.im,
            gap: r.expansion_gap,
        }
    }
}

pub fn write_jsonl<W: Write>(records: &[ResonanceRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<ResonanceRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
