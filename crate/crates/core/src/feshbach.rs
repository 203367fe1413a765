//! The reduced function F(z, κ), its boundary values on the real axis and
//! the Golden Rule width.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::models::{FriedrichsModel, MatrixModel, SpectralModel};
use crate::quad::{lobatto_points, neville_to_zero, stieltjes_boundary, Chebyshev, Extrapolated};

/// Default number of Chebyshev intervals in a trace (nodes − 1).
pub const DEFAULT_TRACE_NODES: usize = 64;

/// F(z, κ) = (φ, VP̄(z − Ĥκ)⁻¹P̄Vφ) off the real axis.
pub fn f_offaxis(model: &SpectralModel, z: c64, kappa: f64) -> Result<c64> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter("F_offaxis needs Im z != 0".into()));
    }
    match model {
        SpectralModel::Friedrichs(m) => Ok(m.f(z)),
        SpectralModel::Matrix(m) => f_offaxis_matrix(m, z, kappa),
    }
}

/// Dense linear solve in the complement of φ.
pub fn f_offaxis_matrix(model: &MatrixModel, z: c64, kappa: f64) -> Result<c64> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter("F_offaxis needs Im z != 0".into()));
    }
    let hk = model.compress(&model.h_kappa(kappa));
    let u = model.compress_vector(&(&model.v * &model.phi));
    let n = hk.nrows();
    let mut m = -hk;
    for i in 0..n {
        m[(i, i)] += z;
    }
    let x = linalg::solve(&m, &u, z)?;
    Ok(u.dotc(&x))
}

/// Spectral data of Ĥκ on Ran P̄: F(z) = Σ w_j/(z − E_j).
#[derive(Debug, Clone)]
pub struct ReducedSpectrum {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReducedSpectrum {
    pub fn new(model: &MatrixModel, kappa: f64) -> Result<Self> {
        let hk = model.compress(&model.h_kappa(kappa));
        let u = model.compress_vector(&(&model.v * &model.phi));
        let n = hk.nrows();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || hk[(i, j)] == c64::new(0.0, 0.0)));
        if diagonal {
            let energies = (0..n).map(|i| hk[(i, i)].re).collect();
            let weights = u.iter().map(|c| c.norm_sqr()).collect();
            return Ok(Self { energies, weights });
        }
        let e = linalg::eigh(&hk)?;
        let proj: CVector = e.vectors.adjoint() * &u;
        Ok(Self { energies: e.values, weights: proj.iter().map(|c| c.norm_sqr()).collect() })
    }

    pub fn f(&self, z: c64) -> c64 {
        self.energies.iter().zip(&self.weights).map(|(&e, &w)| w / (z - e)).sum()
    }

    /// d^k F/dz^k = Σ w_j (−1)^k k!/(z − E_j)^{k+1}.
    pub fn f_derivative(&self, z: c64, k: usize) -> c64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * sign * fact / (z - e).powi(k as i32 + 1))
            .sum()
    }
}

/// Geometric η ladder η₀, η₀/q, η₀/q², … expressed in units of the level spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaLadder {
    /// η₀ in units of Δx.
    pub start: f64,
    /// Ratio q > 1 between consecutive levels.
    pub ratio: f64,
    /// Smallest admissible η in units of Δx.
    pub floor: f64,
    pub max_levels: usize,
}

impl Default for EtaLadder {
    fn default() -> Self {
        Self { start: 50.0, ratio: std::f64::consts::SQRT_2, floor: 3.0, max_levels: 16 }
    }
}

impl EtaLadder {
    /// Admissible η values for spacing `dx`, largest first.
    pub fn etas(&self, dx: f64) -> Result<Vec<f64>> {
        if !(self.ratio > 1.0) || !(dx > 0.0) {
            return Err(Error::InvalidParameter("eta ladder needs ratio > 1 and a positive spacing".into()));
        }
        let etas: Vec<f64> = (0..self.max_levels)
            .map(|k| self.start * dx / self.ratio.powi(k as i32))
            .filter(|&eta| eta >= self.floor * dx * (1.0 - 1e-12))
            .collect();
        if etas.len() < 3 {
            return Err(Error::ExtrapolationFailed(format!(
                "eta ladder reaches the level spacing after {} levels; refine the grid",
                etas.len()
            )));
        }
        Ok(etas)
    }
}

/// F(E + i0) from samples F(E + iη) on the ladder.
pub fn eta_extrapolate(spectrum: &ReducedSpectrum, energy: f64, etas: &[f64]) -> Result<Extrapolated> {
    let values: Vec<c64> = etas.iter().map(|&eta| spectrum.f(c64::new(energy, eta))).collect();
    neville_to_zero(etas, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMethodKind {
    ClosedForm,
    PvQuadrature,
    EtaExtrapolation,
}

impl TraceMethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraceMethodKind::ClosedForm => "closed-form",
            TraceMethodKind::PvQuadrature => "pv-quadrature",
            TraceMethodKind::EtaExtrapolation => "eta-extrapolation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(Self::ClosedForm),
            "pv-quadrature" => Ok(Self::PvQuadrature),
            "eta-extrapolation" => Ok(Self::EtaExtrapolation),
            other => Err(Error::Parse(format!("unknown trace method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceMethod {
    ClosedForm,
    PvQuadrature,
    EtaExtrapolation(EtaLadder),
}

impl TraceMethod {
    pub fn kind(&self) -> TraceMethodKind {
        match self {
            TraceMethod::ClosedForm => TraceMethodKind::ClosedForm,
            TraceMethod::PvQuadrature => TraceMethodKind::PvQuadrature,
            TraceMethod::EtaExtrapolation(_) => TraceMethodKind::EtaExtrapolation,
        }
    }
}

/// Pointwise evaluator of F(E + i0, κ) with an error estimate.
pub enum BoundaryEvaluator<'a> {
    Closed(&'a FriedrichsModel),
    Pv(&'a FriedrichsModel),
    Eta { spectrum: ReducedSpectrum, etas: Vec<f64> },
}

impl<'a> BoundaryEvaluator<'a> {
    pub fn new(model: &'a SpectralModel, kappa: f64, method: TraceMethod) -> Result<Self> {
        match (model, method) {
            (SpectralModel::Friedrichs(m), TraceMethod::ClosedForm) => Ok(Self::Closed(m)),
            (SpectralModel::Friedrichs(m), TraceMethod::PvQuadrature) => Ok(Self::Pv(m)),
            (SpectralModel::Matrix(m), TraceMethod::EtaExtrapolation(ladder)) => {
                let dx = m.level_spacing.ok_or_else(|| {
                    Error::InvalidParameter("eta extrapolation needs a model with a level spacing".into())
                })?;
                let etas = ladder.etas(dx)?;
                Ok(Self::Eta { spectrum: ReducedSpectrum::new(m, kappa)?, etas })
            }
            (SpectralModel::Friedrichs(_), m) => Err(Error::InvalidParameter(format!(
                "method {} is not available for Friedrichs models",
                m.kind().name()
            ))),
            (SpectralModel::Matrix(_), m) => Err(Error::InvalidParameter(format!(
                "method {} is not available for matrix models",
                m.kind().name()
            ))),
        }
    }

    pub fn eval(&self, energy: f64) -> Result<(c64, f64)> {
        match self {
            Self::Closed(m) => Ok((m.f(c64::new(energy, 0.0)), 0.0)),
            Self::Pv(m) => {
                let (a, b) = m.continuum_support.bounds();
                if !(energy > a && energy < b) {
                    return Ok((m.f(c64::new(energy, 0.0)), 0.0));
                }
                let v = stieltjes_boundary(|x| m.coupling.density(x), a, b, energy);
                Ok((v, 1e-12 * (1.0 + v.norm())))
            }
            Self::Eta { spectrum, etas } => {
                let e = eta_extrapolate(spectrum, energy, etas)?;
                Ok((e.value, e.error))
            }
        }
    }
}

/// F(E + i0, κ) and its E-derivatives on Chebyshev–Lobatto points of I.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub interval: (f64, f64),
    pub kappa: f64,
    pub grid: Vec<f64>,
    pub values: Vec<c64>,
    /// `derivatives[k − 1][j]` = d^k F/dE^k at `grid[j]`, k = 1..=n+1.
    pub derivatives: Vec<Vec<c64>>,
    pub n: usize,
    pub method: TraceMethodKind,
    /// Largest pointwise error estimate of the sampled values.
    pub node_error: f64,
    /// Largest relative mismatch between interpolant and finite-difference
    /// derivatives (orders up to 3), when pointwise evaluation allows it.
    pub derivative_check: Option<f64>,
    series: Vec<Chebyshev>,
}

pub fn boundary_trace(
    model: &SpectralModel,
    interval: (f64, f64),
    kappa: f64,
    n: usize,
    method: TraceMethod,
) -> Result<BoundaryTrace> {
    boundary_trace_with_nodes(model, interval, kappa, n, method, DEFAULT_TRACE_NODES)
}

pub fn boundary_trace_with_nodes(
    model: &SpectralModel,
    interval: (f64, f64),
    kappa: f64,
    n: usize,
    method: TraceMethod,
    nodes: usize,
) -> Result<BoundaryTrace> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("interval [{a}, {b}] is not a compact interval")));
    }
    let lambda = model.lambda();
    if !(lambda > a && lambda < b) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie inside I = [{a}, {b}]")));
    }
    if nodes < 4 {
        return Err(Error::InvalidParameter("a trace needs at least 4 Chebyshev intervals".into()));
    }
    let eval = BoundaryEvaluator::new(model, kappa, method)?;
    let grid = lobatto_points(a, b, nodes);
    let samples: Vec<(c64, f64)> = grid.par_iter().map(|&e| eval.eval(e)).collect::<Result<_>>()?;
    let values: Vec<c64> = samples.iter().map(|s| s.0).collect();
    let node_error = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    for (&e, v) in grid.iter().zip(&values) {
        if !(v.im < 0.0) {
            return Err(Error::NotDissipative { energy: e, im: v.im });
        }
    }
    let mut trace = BoundaryTrace::from_samples(grid, values, kappa, n, method.kind(), node_error)?;
    if !matches!(method, TraceMethod::EtaExtrapolation(_)) {
        trace.derivative_check = Some(trace.finite_difference_check(|e| eval.eval(e).map(|v| v.0))?);
    }
    Ok(trace)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl BoundaryTrace {
    /// Rebuilds the interpolants from values on Chebyshev–Lobatto points.
    pub fn from_samples(
        grid: Vec<f64>,
        values: Vec<c64>,
        kappa: f64,
        n: usize,
        method: TraceMethodKind,
        node_error: f64,
    ) -> Result<Self> {
        if grid.len() < 5 || grid.len() != values.len() {
            return Err(Error::InvalidParameter("trace needs at least 5 matching grid points and values".into()));
        }
        let a = grid[0];
        let b = *grid.last().unwrap();
        let expected = lobatto_points(a, b, grid.len() - 1);
        let scale = (b - a).abs().max(1.0);
        if grid.iter().zip(&expected).any(|(g, e)| (g - e).abs() > 1e-9 * scale) {
            return Err(Error::Parse("trace grid is not a Chebyshev-Lobatto grid".into()));
        }
        let vmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tol = node_error.max(4.0 * f64::EPSILON * vmax);
        let base = Chebyshev::from_values(a, b, &values)?.chop(tol);
        let mut series = vec![base];
        for _ in 0..=n {
            let next = series.last().unwrap().derivative();
            series.push(next);
        }
        let derivatives = series[1..].iter().map(|s| grid.iter().map(|&e| s.eval(e)).collect()).collect();
        Ok(Self {
            interval: (a, b),
            kappa,
            grid,
            values,
            derivatives,
            n,
            method,
            node_error,
            derivative_check: None,
            series,
        })
    }

    /// F(E + i0) from the interpolant.
    pub fn eval(&self, energy: f64) -> c64 {
        self.series[0].eval(energy)
    }

    /// d^k F/dE^k, k ≤ n + 1.
    pub fn derivative(&self, k: usize, energy: f64) -> c64 {
        self.series[k].eval(energy)
    }

    /// Taylor coefficients F^{(k)}(E)/k! for k = 0..=order.
    pub fn taylor_coefficients(&self, energy: f64, order: usize) -> Result<Vec<c64>> {
        if order >= self.series.len() {
            return Err(Error::InvalidParameter(format!(
                "trace carries derivatives up to order {}, requested {order}",
                self.series.len() - 1
            )));
        }
        Ok((0..=order).map(|k| self.series[k].eval(energy) / factorial(k)).collect())
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy >= self.interval.0 && energy <= self.interval.1
    }

    /// max_k sup_grid |F^{(k)}|, k = 0..=n+1.
    pub fn derivative_bound(&self) -> f64 {
        let mut m = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for d in &self.derivatives {
            m = d.iter().map(|v| v.norm()).fold(m, f64::max);
        }
        m
    }

    fn finite_difference_check<F: Fn(f64) -> Result<c64>>(&self, f: F) -> Result<f64> {
        let (a, b) = self.interval;
        let h = 1e-2 * (b - a);
        let orders = (self.n + 1).min(3);
        let mut worst: f64 = 0.0;
        for frac in [0.2, 0.35, 0.5, 0.65, 0.8] {
            let x = a + frac * (b - a);
            let s: Vec<c64> = (-3..=3).map(|k| f(x + k as f64 * h)).collect::<Result<_>>()?;
            let at = |k: i32| s[(k + 3) as usize];
            let fd = [
                (-at(2) + at(1) * 8.0 - at(-1) * 8.0 + at(-2)) / (12.0 * h),
                (-at(2) + at(1) * 16.0 - at(0) * 30.0 + at(-1) * 16.0 - at(-2)) / (12.0 * h * h),
                (-at(3) + at(2) * 8.0 - at(1) * 13.0 + at(-1) * 13.0 - at(-2) * 8.0 + at(-3)) / (8.0 * h * h * h),
            ];
            for k in 1..=orders {
                let cheb = self.derivative(k, x);
                let rel = (cheb - fd[k - 1]).norm() / cheb.norm().max(1e-300);
                worst = worst.max(rel);
            }
        }
        Ok(worst)
    }

    /// CSV with columns E, ReF, ImF, ReF1, ImF1, … preceded by a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# kappa={:e} n={} method={} node_error={:e}",
            self.kappa,
            self.n,
            self.method.name(),
            self.node_error
        )?;
        let mut header = String::from("E,ReF,ImF");
        for k in 1..=self.n + 1 {
            header.push_str(&format!(",ReF{k},ImF{k}"));
        }
        writeln!(out, "{header}")?;
        for (j, e) in self.grid.iter().enumerate() {
            let mut line = format!("{:e},{:e},{:e}", e, self.values[j].re, self.values[j].im);
            for d in &self.derivatives {
                line.push_str(&format!(",{:e},{:e}", d[j].re, d[j].im));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let meta = lines.next().ok_or_else(|| Error::Parse("empty trace file".into()))??;
        let meta = meta.strip_prefix('#').ok_or_else(|| Error::Parse("missing trace metadata line".into()))?;
        let mut kappa = None;
        let mut n = None;
        let mut method = None;
        let mut node_error = 0.0;
        for field in meta.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse(format!("bad field '{field}'")))?;
            match key {
                "kappa" => kappa = Some(parse_f64(value)?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "method" => method = Some(TraceMethodKind::parse(value)?),
                "node_error" => node_error = parse_f64(value)?,
                _ => {}
            }
        }
        let (kappa, n, method) = match (kappa, n, method) {
            (Some(k), Some(n), Some(m)) => (k, n, m),
            _ => return Err(Error::Parse("trace metadata needs kappa, n and method".into())),
        };
        let header = lines.next().ok_or_else(|| Error::Parse("missing trace header".into()))??;
        let columns = header.split(',').count();
        if columns != 3 + 2 * (n + 1) {
            return Err(Error::Parse(format!("trace header has {columns} columns, expected {}", 3 + 2 * (n + 1))));
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line.split(',').map(parse_f64).collect::<Result<_>>()?;
            if f.len() != columns {
                return Err(Error::Parse(format!("row has {} fields, expected {columns}", f.len())));
            }
            grid.push(f[0]);
            values.push(c64::new(f[1], f[2]));
        }
        Self::from_samples(grid, values, kappa, n, method, node_error)
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")))
}

/// Golden Rule data at κ = 0: F(λ + i0, 0) and Γ = −2 Im F(λ + i0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenRule {
    pub lambda: f64,
    pub f_lambda: c64,
    pub gamma: f64,
}

impl GoldenRule {
    fn from_value(lambda: f64, f_lambda: c64) -> Result<Self> {
        let gamma = -2.0 * f_lambda.im;
        if !(gamma > 0.0) {
            return Err(Error::GammaNotPositive(gamma));
        }
        Ok(Self { lambda, f_lambda, gamma })
    }
}

/// Γ from a κ = 0 trace.
pub fn fgr_gamma(trace: &BoundaryTrace, lambda: f64) -> Result<GoldenRule> {
    if trace.kappa != 0.0 {
        return Err(Error::InvalidParameter("the Golden Rule width needs the kappa = 0 trace".into()));
    }
    if !trace.contains(lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} lies outside the trace interval")));
    }
    GoldenRule::from_value(lambda, trace.eval(lambda))
}

/// Γ by direct pointwise evaluation of F(λ + i0, 0).
pub fn golden_rule(model: &SpectralModel, method: TraceMethod) -> Result<GoldenRule> {
    let eval = BoundaryEvaluator::new(model, 0.0, method)?;
    let lambda = model.lambda();
    GoldenRule::from_value(lambda, eval.eval(lambda)?.0)
}

/// |(φ, (z − Hκ)⁻¹φ)⁻¹ − (z − B(z, κ))|.
pub fn feshbach_identity_check(model: &MatrixModel, z: c64, kappa: f64) -> Result<f64> {
    let n = model.dim();
    let mut m = -model.h_kappa(kappa);
    for i in 0..n {
        m[(i, i)] += z;
    }
    let x = linalg::solve(&m, &model.phi, z)?;
    let lhs = 1.0 / model.phi.dotc(&x);
    let reduced = ReducedFunction::new(model.lambda, model.first_order(), kappa);
    let rhs = z - reduced.b_from_f(f_offaxis_matrix(model, z, kappa)?);
    Ok((lhs - rhs).norm())
}

/// B(z, κ) = λ₁(κ) + κ²F(z, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedFunction {
    pub lambda1: f64,
    pub kappa: f64,
}

impl ReducedFunction {
    pub fn new(lambda: f64, first_order: f64, kappa: f64) -> Self {
        Self { lambda1: lambda + kappa * first_order, kappa }
    }

    pub fn for_model(model: &SpectralModel, kappa: f64) -> Self {
        Self::new(model.lambda(), model.first_order(), kappa)
    }

    pub fn b_from_f(&self, f: c64) -> c64 {
        f * (self.kappa * self.kappa) + self.lambda1
    }

    pub fn offaxis(&self, model: &SpectralModel, z: c64) -> Result<c64> {
        Ok(self.b_from_f(f_offaxis(model, z, self.kappa)?))
    }

    /// B(E + i0, κ) from a trace at the same κ.
    pub fn boundary(&self, trace: &BoundaryTrace, energy: f64) -> c64 {
        self.b_from_f(trace.eval(energy))
    }
}

/// Plemelj density check: −Im F(E + i0)/π for a Friedrichs model should equal |v(E)|².
pub fn plemelj_density(model: &FriedrichsModel, energy: f64) -> (f64, f64) {
    (-model.f(c64::new(energy, 0.0)).im / PI, model.coupling.density(energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_friedrichs, discretize, Coupling, FriedrichsParams};

    fn lorentz(g: f64) -> SpectralModel {
        SpectralModel::Friedrichs(
            build_friedrichs(&FriedrichsParams {
                lambda: 0.0,
                coupling: Coupling::Lorentzian { g, x0: 0.0, w: 1.0 },
                diag_shift: 0.0,
            })
            .unwrap(),
        )
    }

    #[test]
    fn offaxis_closed_form_value() {
        let f = f_offaxis(&lorentz(1.0), c64::new(0.0, 1.0), 0.0).unwrap();
        assert!((f - c64::new(0.0, -0.5)).norm() < 1e-15);
        assert!(f_offaxis(&lorentz(1.0), c64::new(0.3, 0.0), 0.0).is_err());
    }

    #[test]
    fn matrix_solve_matches_eigendecomposition() {
        let m = MatrixModel::random(10, 7, 0.1).unwrap();
        let z = c64::new(0.3, 0.1);
        for kappa in [0.0, 0.4] {
            let solve = f_offaxis_matrix(&m, z, kappa).unwrap();
            let spec = ReducedSpectrum::new(&m, kappa).unwrap().f(z);
            assert!((solve - spec).norm() < 1e-10);
        }
    }

    #[test]
    fn closed_form_trace_and_derivatives() {
        let tr = boundary_trace(&lorentz(1.0), (-0.5, 0.5), 0.0, 2, TraceMethod::ClosedForm).unwrap();
        assert!((tr.eval(0.0) - c64::new(0.0, -1.0)).norm() < 1e-14);
        // F' = −1/(E + i)², equal to 1 at E = 0
        assert!((tr.derivative(1, 0.0) - c64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((tr.derivative(3, 0.2) - (-6.0 / c64::new(0.2, 1.0).powi(4))).norm() < 1e-8);
        assert!(tr.derivative_check.unwrap() < 1e-5);
        let gr = fgr_gamma(&tr, 0.0).unwrap();
        assert!((gr.gamma - 2.0).abs() < 1e-13);
    }

    #[test]
    fn pv_trace_matches_closed_form() {
        let m = lorentz(1.0);
        let cf = boundary_trace(&m, (-0.5, 0.5), 0.0, 2, TraceMethod::ClosedForm).unwrap();
        let pv = boundary_trace(&m, (-0.5, 0.5), 0.0, 2, TraceMethod::PvQuadrature).unwrap();
        for (a, b) in cf.values.iter().zip(&pv.values) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_coupling_is_rejected() {
        let m = lorentz(0.0);
        assert!(matches!(
            boundary_trace(&m, (-0.5, 0.5), 0.0, 2, TraceMethod::ClosedForm),
            Err(Error::NotDissipative { .. })
        ));
        assert!(matches!(golden_rule(&m, TraceMethod::ClosedForm), Err(Error::GammaNotPositive(_))));
    }

    #[test]
    fn csv_round_trip() {
        let tr = boundary_trace(&lorentz(1.0), (-0.5, 0.5), 0.1, 2, TraceMethod::ClosedForm).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = BoundaryTrace::read_csv(&buf[..]).unwrap();
        assert_eq!(back.grid.len(), tr.grid.len());
        assert_eq!(back.kappa, tr.kappa);
        for (a, b) in back.values.iter().zip(&tr.values) {
            assert_eq!(a, b);
        }
        assert!((back.derivative(2, 0.1) - tr.derivative(2, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn identity_on_small_models() {
        let m = MatrixModel::random(8, 3, 0.2).unwrap();
        assert!(feshbach_identity_check(&m, c64::new(0.3, 0.1), 0.3).unwrap() < 1e-9);
        let Ok(SpectralModel::Friedrichs(f)) = Ok::<_, Error>(lorentz(1.0)) else { unreachable!() };
        let star = discretize(&f, 100, 5.0).unwrap();
        assert!(feshbach_identity_check(&star, c64::new(0.0, 1.0), 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn ladder_respects_floor() {
        let l = EtaLadder::default();
        let etas = l.etas(0.02).unwrap();
        assert_eq!(etas.len(), 9);
        assert!(etas.iter().all(|&e| e >= 0.06 - 1e-15));
        assert!(EtaLadder { start: 4.0, ratio: 2.0, floor: 2.0, max_levels: 6 }.etas(0.1).is_err());
    }
}
