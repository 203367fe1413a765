//! Survival amplitude (φ, e^{−iHκt} g(Hκ) φ) by spectral integration and by
//! direct propagation, its split a(κ)e^{−iλκt} + b(κ, t), and remainder bounds.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feshbach::{parse_f64, BoundaryTrace, ReducedFunction};
use crate::linalg;
use crate::models::MatrixModel;
use crate::quad::{gauss_legendre, FilonRule};
use crate::resonance::{Resonance, TaylorApproximant};

/// Smooth step ψ(x) = e^{−1/x}/(e^{−1/x} + e^{−1/(1−x)}), 0 for x ≤ 0 and 1 for x ≥ 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// g ∈ C₀^∞ with g ≡ 1 on the plateau [p, q] and supp g ⊂ [a, b].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
    /// Approximate sup |g^{(k)}| for k = 0, 1, ….
    pub derivative_bounds: Vec<f64>,
}

/// Cutoff on `interval` with plateau [λ − d, λ + d]; derivative bounds are
/// recorded up to order `max_order`.
pub fn make_cutoff(interval: (f64, f64), lambda: f64, d: f64, max_order: usize) -> Result<Cutoff> {
    let (a, b) = interval;
    let (p, q) = (lambda - d, lambda + d);
    if !(d > 0.0) || !(a < p && q < b) {
        return Err(Error::InvalidParameter(format!(
            "plateau [{p}, {q}] must lie strictly inside [{a}, {b}]"
        )));
    }
    let mut g = Cutoff { support: (a, b), plateau: (p, q), derivative_bounds: vec![] };
    g.derivative_bounds = g.estimate_derivative_bounds(max_order);
    Ok(g)
}

impl Cutoff {
    pub fn eval(&self, mu: f64) -> f64 {
        let (a, b) = self.support;
        let (p, q) = self.plateau;
        smooth_step((mu - a) / (p - a)) * smooth_step((b - mu) / (b - q))
    }

    fn estimate_derivative_bounds(&self, max_order: usize) -> Vec<f64> {
        let (a, b) = self.support;
        let (p, q) = self.plateau;
        let mut bounds = vec![1.0];
        for k in 1..=max_order {
            let mut sup: f64 = 0.0;
            for (lo, hi) in [(a, p), (q, b)] {
                let h = 2e-3 * (hi - lo);
                let m = 2000;
                for i in 0..=m {
                    let x = lo + (hi - lo) * i as f64 / m as f64;
                    sup = sup.max(self.central_difference(x, k, h).abs());
                }
            }
            bounds.push(sup);
        }
        bounds
    }

    fn central_difference(&self, x: f64, k: usize, h: f64) -> f64 {
        // Σ_j (−1)^j C(k, j) g(x + (k/2 − j)h) / h^k
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * self.eval(x + (0.5 * k as f64 - j as f64) * h);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        acc / h.powi(k as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurvivalSource {
    SpectralIntegral,
    DirectPropagation,
    Synthetic,
}

impl SurvivalSource {
    pub fn name(&self) -> &'static str {
        match self {
            SurvivalSource::SpectralIntegral => "spectral-integral",
            SurvivalSource::DirectPropagation => "direct-propagation",
            SurvivalSource::Synthetic => "synthetic",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "spectral-integral" => Ok(Self::SpectralIntegral),
            "direct-propagation" => Ok(Self::DirectPropagation),
            "synthetic" => Ok(Self::Synthetic),
            other => Err(Error::Parse(format!("unknown survival source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSeries {
    pub times: Vec<f64>,
    pub values: Vec<c64>,
    pub source: SurvivalSource,
    pub kappa: f64,
    /// Quadrature error estimate (spectral integral) or 0.
    pub error: f64,
}

impl SurvivalSeries {
    pub fn sup_distance(&self, other: &SurvivalSeries) -> Result<f64> {
        if self.times != other.times {
            return Err(Error::InvalidParameter("series live on different time grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// CSV with columns t, ReS, ImS, absS after a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# kappa={:e} source={} error={:e}", self.kappa, self.source.name(), self.error)?;
        writeln!(out, "t,ReS,ImS,absS")?;
        for (t, s) in self.times.iter().zip(&self.values) {
            writeln!(out, "{:e},{:e},{:e},{:e}", t, s.re, s.im, s.norm())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let meta = lines.next().ok_or_else(|| Error::Parse("empty survival file".into()))??;
        let meta = meta.strip_prefix('#').ok_or_else(|| Error::Parse("missing survival metadata line".into()))?;
        let mut kappa = None;
        let mut source = None;
        let mut error = 0.0;
        for field in meta.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse(format!("bad field '{field}'")))?;
            match key {
                "kappa" => kappa = Some(parse_f64(value)?),
                "source" => source = Some(SurvivalSource::parse(value)?),
                "error" => error = parse_f64(value)?,
                _ => {}
            }
        }
        let header = lines.next().ok_or_else(|| Error::Parse("missing survival header".into()))??;
        if header.trim() != "t,ReS,ImS,absS" {
            return Err(Error::Parse(format!("unexpected survival header '{header}'")));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_>>()?;
            if f.len() != 4 {
                return Err(Error::Parse(format!("survival row has {} fields, expected 4", f.len())));
            }
            times.push(f[0]);
            values.push(c64::new(f[1], f[2]));
        }
        match (kappa, source) {
            (Some(kappa), Some(source)) => Ok(Self { times, values, source, kappa, error }),
            _ => Err(Error::Parse("survival metadata needs kappa and source".into())),
        }
    }
}

/// Tolerance on the Filon tail indicator of each panel.
pub const PANEL_TOLERANCE: f64 = 1e-10;
const MAX_PANELS: usize = 50_000;

/// S(t) = (1/π) ∫ e^{−iμt} g(μ) Im(B(μ + i0, κ) − μ)⁻¹ dμ.
pub fn survival_spectral(
    trace: &BoundaryTrace,
    reduced: &ReducedFunction,
    g: &Cutoff,
    times: &[f64],
) -> Result<SurvivalSeries> {
    let kappa = reduced.kappa;
    if kappa == 0.0 {
        // Im(λ − μ)⁻¹ → π δ(μ − λ)
        let l = reduced.lambda1;
        let values = times.iter().map(|&t| c64::from_polar(g.eval(l), -l * t)).collect();
        return Ok(SurvivalSeries { times: times.to_vec(), values, source: SurvivalSource::SpectralIntegral, kappa, error: 0.0 });
    }
    if trace.kappa != kappa {
        return Err(Error::InvalidParameter(format!(
            "trace is at kappa = {}, reduced function at {kappa}",
            trace.kappa
        )));
    }
    let (a, b) = g.support;
    if !(trace.contains(a) && trace.contains(b)) {
        return Err(Error::InvalidParameter("the trace interval must cover the cutoff support".into()));
    }
    let density = |mu: f64| {
        let w = g.eval(mu);
        if w == 0.0 {
            0.0
        } else {
            w * (1.0 / (reduced.boundary(trace, mu) - mu)).im / PI
        }
    };
    let breaks = peak_breakpoints(trace, reduced, &[a, g.plateau.0, g.plateau.1, b], (a, b));
    let rule = FilonRule::build(density, &breaks, PANEL_TOLERANCE, MAX_PANELS)?;
    let values = times.par_iter().map(|&t| rule.transform(t)).collect();
    Ok(SurvivalSeries {
        times: times.to_vec(),
        values,
        source: SurvivalSource::SpectralIntegral,
        kappa,
        error: rule.error_estimate(),
    })
}

/// Breakpoints graded geometrically around the quasi-Lorentzian peak of
/// Im(B − μ)⁻¹ at μ* = λ₁ + κ² Re F(λ₁), whose half-width is κ²|Im F(λ₁)|.
fn peak_breakpoints(trace: &BoundaryTrace, reduced: &ReducedFunction, fixed: &[f64], span: (f64, f64)) -> Vec<f64> {
    let k2 = reduced.kappa * reduced.kappa;
    let f1 = trace.eval(reduced.lambda1.clamp(trace.interval.0, trace.interval.1));
    let peak = reduced.lambda1 + k2 * f1.re;
    let width = (k2 * f1.im.abs()).max(1e-14);
    let mut pts: Vec<f64> = fixed.to_vec();
    pts.push(peak);
    let mut step = 0.25 * width;
    while step < span.1 - span.0 {
        pts.push(peak - step);
        pts.push(peak + step);
        step *= 2.0;
    }
    pts.retain(|x| *x >= span.0 && *x <= span.1);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Spectral data of Hκ seen from φ, for propagation by exact diagonalization.
#[derive(Debug, Clone)]
pub struct DirectPropagator {
    pub kappa: f64,
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    /// Recurrence horizon π/Δx of a discretized continuum.
    pub horizon: Option<f64>,
}

impl DirectPropagator {
    pub fn new(model: &MatrixModel, kappa: f64) -> Result<Self> {
        let (energies, weights) = linalg::spectral_weights(&model.h_kappa(kappa), &model.phi)?;
        Ok(Self { kappa, energies, weights, horizon: model.level_spacing.map(|dx| PI / dx) })
    }

    pub fn series(&self, g: &Cutoff, times: &[f64]) -> Result<SurvivalSeries> {
        if let Some(horizon) = self.horizon {
            if let Some(&t) = times.iter().find(|&&t| t > horizon) {
                return Err(Error::BeyondRecurrence { t, horizon });
            }
        }
        let gw: Vec<(f64, f64)> = self
            .energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| (e, w * g.eval(e)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let values = times
            .par_iter()
            .map(|&t| gw.iter().map(|&(e, w)| c64::from_polar(w, -e * t)).sum())
            .collect();
        Ok(SurvivalSeries { times: times.to_vec(), values, source: SurvivalSource::DirectPropagation, kappa: self.kappa, error: 0.0 })
    }
}

/// S(t) = Σ_j |⟨φ, ψ_j⟩|² g(E_j) e^{−iE_j t} from a full eigendecomposition of Hκ.
pub fn survival_direct(model: &MatrixModel, g: &Cutoff, kappa: f64, times: &[f64]) -> Result<SurvivalSeries> {
    if let (Some(dx), Some(&tmax)) = (model.level_spacing, times.iter().max_by(|a, b| a.total_cmp(b))) {
        if tmax > PI / dx {
            return Err(Error::BeyondRecurrence { t: tmax, horizon: PI / dx });
        }
    }
    DirectPropagator::new(model, kappa)?.series(g, times)
}

/// b(κ, t) = S(t) − a(κ)e^{−iλκt} and its weighted sup norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    pub b: Vec<c64>,
    pub sup: f64,
    /// sup_t (1 + t)^n |b|.
    pub sup_weighted_n: f64,
    /// sup_t (1 + t)^{n−1} |b|.
    pub sup_weighted_n1: f64,
}

pub fn remainder_decompose(series: &SurvivalSeries, res: &Resonance, n: usize) -> Remainder {
    let b: Vec<c64> = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(&t, &s)| s - res.amplitude * (c64::new(0.0, -t) * res.lambda_res).exp())
        .collect();
    let mut sup: f64 = 0.0;
    let mut wn: f64 = 0.0;
    let mut wn1: f64 = 0.0;
    for (&t, v) in series.times.iter().zip(&b) {
        let m = v.norm();
        sup = sup.max(m);
        wn = wn.max((1.0 + t).powi(n as i32) * m);
        wn1 = wn1.max((1.0 + t).powi(n as i32 - 1) * m);
    }
    Remainder { b, sup, sup_weighted_n: wn, sup_weighted_n1: wn1 }
}

/// j-th derivatives of 1/D from the derivatives of D (Leibniz on D·G = 1).
pub fn reciprocal_derivatives(d: &[c64]) -> Vec<c64> {
    let mut g: Vec<c64> = Vec::with_capacity(d.len());
    g.push(1.0 / d[0]);
    for k in 1..d.len() {
        let mut acc = c64::new(0.0, 0.0);
        let mut binom = 1.0;
        for j in 0..k {
            acc += g[j] * d[k - j] * binom;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        g.push(-acc / d[0]);
    }
    g
}

/// r_n^{(j)}(E) for j = 0..=n.
pub fn rn_derivatives(trace: &BoundaryTrace, approx: &TaylorApproximant, reduced: &ReducedFunction, energy: f64) -> Vec<c64> {
    let n = approx.order();
    let k2 = reduced.kappa * reduced.kappa;
    let z = c64::new(energy, 0.0);
    let denominators = |f: &dyn Fn(usize) -> c64| -> Vec<c64> {
        (0..=n)
            .map(|k| match k {
                0 => f(0) * k2 + reduced.lambda1 - energy,
                1 => f(1) * k2 - 1.0,
                _ => f(k) * k2,
            })
            .collect()
    };
    let d = denominators(&|k| trace.derivative(k, energy));
    let dn = denominators(&|k| approx.derivative_n(z, k));
    let g = reciprocal_derivatives(&d);
    let gn = reciprocal_derivatives(&dn);
    g.iter().zip(&gn).map(|(a, b)| a - b).collect()
}

/// ‖r_n^{(j)}‖_{L¹(I)} for j = 0..=n.
pub fn rn_l1_check(trace: &BoundaryTrace, approx: &TaylorApproximant, reduced: &ReducedFunction) -> Result<Vec<f64>> {
    let n = approx.order();
    if trace.n < n {
        return Err(Error::InvalidParameter(format!("trace carries {} derivatives, need {n}", trace.n + 1)));
    }
    if trace.kappa != reduced.kappa {
        return Err(Error::InvalidParameter("trace and reduced function are at different kappa".into()));
    }
    let (a, b) = trace.interval;
    let k2 = reduced.kappa * reduced.kappa;
    // Bₙ(E) − E must stay away from zero on I
    let m = 2000;
    for i in 0..=m {
        let e = a + (b - a) * i as f64 / m as f64;
        let im = approx.eval(c64::new(e, 0.0)).im;
        if !(im < 0.0) && k2 > 0.0 {
            return Err(Error::NotDissipative { energy: e, im });
        }
    }
    // composite Gauss on the graded breakpoints; r_n near the peak carries
    // cancellation noise that defeats adaptive refinement
    let breaks = peak_breakpoints(trace, reduced, &[a, b], (a, b));
    let (nodes, weights) = gauss_legendre(RN_NODES);
    let mut norms = vec![0.0; n + 1];
    for w in breaks.windows(2) {
        for s in 0..RN_SUBDIVISIONS {
            let lo = w[0] + (w[1] - w[0]) * s as f64 / RN_SUBDIVISIONS as f64;
            let hi = w[0] + (w[1] - w[0]) * (s + 1) as f64 / RN_SUBDIVISIONS as f64;
            let half = 0.5 * (hi - lo);
            for (x, wt) in nodes.iter().zip(&weights) {
                let r = rn_derivatives(trace, approx, reduced, lo + half * (x + 1.0));
                for (acc, v) in norms.iter_mut().zip(&r) {
                    *acc += half * wt * v.norm();
                }
            }
        }
    }
    Ok(norms)
}

const RN_NODES: usize = 24;
const RN_SUBDIVISIONS: usize = 4;

/// Lifetime τ = 2/(κ²Γ).
pub fn lifetime(kappa: f64, gamma: f64) -> f64 {
    2.0 / (kappa * kappa * gamma)
}

/// The fit window [0.1τ, 1.5τ].
pub fn default_fit_window(kappa: f64, gamma: f64) -> (f64, f64) {
    let tau = lifetime(kappa, gamma);
    (0.1 * tau, 1.5 * tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a_tilde: c64,
    pub lambda_tilde: c64,
    pub samples: usize,
}

/// Weighted least squares of log S(t) = log ã − iλ̃t over the window, with weights |S|².
pub fn fit_resonance_from_decay(series: &SurvivalSeries, window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, c64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, s)| (*t, *s))
        .collect();
    if pts.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let smax = pts.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    let mut logs = Vec::with_capacity(pts.len());
    let mut prev_arg: Option<(f64, f64)> = None;
    for &(t, s) in &pts {
        let m = s.norm();
        if !(m > 1e-8 * smax) || !m.is_finite() {
            return Err(Error::ZeroCrossing(t));
        }
        let raw = s.arg();
        let arg = match prev_arg {
            None => raw,
            Some((_, last)) => {
                let mut d = raw - last.rem_euclid(2.0 * PI);
                d = (d + PI).rem_euclid(2.0 * PI) - PI;
                last + d
            }
        };
        prev_arg = Some((t, arg));
        logs.push(c64::new(m.ln(), arg));
    }
    let w: Vec<f64> = pts.iter().map(|p| p.1.norm_sqr()).collect();
    let sw: f64 = w.iter().sum();
    let mt = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my: c64 = logs.iter().zip(&w).map(|(l, w)| l * *w).sum::<c64>() / sw;
    let stt: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::EmptyWindow);
    }
    let sty: c64 = pts.iter().zip(&logs).zip(&w).map(|((p, l), w)| (l - my) * (w * (p.0 - mt))).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    Ok(DecayFit { a_tilde: intercept.exp(), lambda_tilde: c64::new(0.0, 1.0) * slope, samples: pts.len() })
}

/// (dist(log(w1/w2), 2πiℤ), ((2+π)/2)|w1 − w2|/min(|w1|, |w2|)).
pub fn log_ratio_bound(w1: c64, w2: c64) -> Result<(f64, f64)> {
    if w1.norm() == 0.0 || w2.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    let l = (w1 / w2).ln();
    let im = (l.im + PI).rem_euclid(2.0 * PI) - PI;
    let lhs = c64::new(l.re, im).norm();
    let rhs = 0.5 * (2.0 + PI) * (w1 - w2).norm() / w1.norm().min(w2.norm());
    Ok((lhs, rhs))
}

/// C = sup_I |λ₁ − E + iκ² Im F(λ + i0, κ)| / |B(E + i0, κ) − E|.
pub fn g_domination(trace: &BoundaryTrace, reduced: &ReducedFunction, lambda: f64) -> f64 {
    let k2 = reduced.kappa * reduced.kappa;
    let im_f = trace.eval(lambda).im;
    let (a, b) = trace.interval;
    let m = 4000;
    (0..=m)
        .map(|i| {
            let e = a + (b - a) * i as f64 / m as f64;
            let model = c64::new(reduced.lambda1 - e, k2 * im_f);
            model.norm() / (reduced.boundary(trace, e) - e).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kappa: f64,
    pub a_fit: c64,
    pub lambda_fit: c64,
    pub lambda_res: c64,
    pub amplitude: c64,
    pub b_sup: f64,
    pub b_sup_weighted: f64,
    pub b_sup_weighted_n1: f64,
    pub rn_l1_norms: Vec<f64>,
    pub uniqueness_gap: f64,
    pub g_domination: f64,
    pub cutoff_derivative_bounds: Vec<f64>,
}
