//! Model Hamiltonians: exactly solvable Friedrichs models and finite matrix models.

use std::f64::consts::PI;

use num_complex::Complex64 as c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::quad::{integrate_real, GaussRule};

/// Relative continuum mass allowed outside the truncation box.
pub const TAIL_MASS: f64 = 1e-8;

/// Spectral coupling density |v(x)|² of the continuum to the discrete level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coupling {
    /// (g²w/π) / ((x − x0)² + w²), total mass g².
    Lorentzian { g: f64, x0: f64, w: f64 },
    /// (2g²/(πR²)) √(R² − (x − center)²), total mass g².
    Semicircle { g: f64, center: f64, radius: f64 },
    /// Σ c_k x^k on [a, b], zero elsewhere.
    CompactPolynomial { coefficients: Vec<f64>, support: [f64; 2] },
}

/// Continuum support, possibly truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Support {
    Bounded { a: f64, b: f64 },
    /// The whole line, truncated to `[center − half_width, center + half_width]`.
    Unbounded { center: f64, half_width: f64 },
}

impl Support {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Support::Bounded { a, b } => (a, b),
            Support::Unbounded { center, half_width } => (center - half_width, center + half_width),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Support::Bounded { .. })
    }
}

impl Coupling {
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Coupling::Lorentzian { g, x0, w } => g * g * w / PI / ((x - x0).powi(2) + w * w),
            Coupling::Semicircle { g, center, radius } => {
                let u = x - center;
                if u.abs() >= *radius {
                    0.0
                } else {
                    2.0 * g * g / (PI * radius * radius) * (radius * radius - u * u).sqrt()
                }
            }
            Coupling::CompactPolynomial { coefficients, support } => {
                if x < support[0] || x > support[1] {
                    0.0
                } else {
                    horner(coefficients, x)
                }
            }
        }
    }

    /// ∫ |v|², exact.
    pub fn mass(&self) -> f64 {
        match self {
            Coupling::Lorentzian { g, .. } | Coupling::Semicircle { g, .. } => g * g,
            Coupling::CompactPolynomial { coefficients, support } => {
                let [a, b] = *support;
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let p = (k + 1) as i32;
                        c * (b.powi(p) - a.powi(p)) / p as f64
                    })
                    .sum()
            }
        }
    }

    /// Support of the density; Lorentzian tails are cut where the outside mass
    /// drops below `TAIL_MASS` of the total.
    pub fn support(&self) -> Support {
        match self {
            Coupling::Lorentzian { x0, w, .. } => {
                // outside mass fraction 1 − (2/π) arctan(L/w)
                let half_width = w * (0.5 * PI * (1.0 - TAIL_MASS)).tan();
                Support::Unbounded { center: *x0, half_width }
            }
            Coupling::Semicircle { center, radius, .. } => {
                Support::Bounded { a: center - radius, b: center + radius }
            }
            Coupling::CompactPolynomial { support, .. } => Support::Bounded { a: support[0], b: support[1] },
        }
    }

    /// Stieltjes transform ∫ |v(x)|²/(z − x) dx for Im z ≠ 0, and the
    /// boundary value from above when Im z = 0.
    pub fn stieltjes(&self, z: c64) -> c64 {
        if z.im < 0.0 {
            return self.stieltjes(z.conj()).conj();
        }
        match self {
            Coupling::Lorentzian { g, x0, w } => g * g / (z - x0 + c64::new(0.0, *w)),
            Coupling::Semicircle { g, center, radius } => {
                let u = z - center;
                let root = if z.im == 0.0 {
                    let ur = u.re;
                    if ur.abs() < *radius {
                        c64::new(0.0, (radius * radius - ur * ur).sqrt())
                    } else {
                        c64::new(ur.signum() * (ur * ur - radius * radius).sqrt(), 0.0)
                    }
                } else {
                    (u - radius).sqrt() * (u + radius).sqrt()
                };
                (u - root) * (2.0 * g * g / (radius * radius))
            }
            Coupling::CompactPolynomial { coefficients, support } => {
                let [a, b] = *support;
                let pz = horner_c(coefficients, z);
                let log_term = if z.im == 0.0 {
                    let e = z.re;
                    let re = ((e - a).abs() / (e - b).abs()).ln();
                    let im = if e > a && e < b { -PI } else { 0.0 };
                    c64::new(re, im)
                } else {
                    (z - a).ln() - (z - b).ln()
                };
                // (p(x) − p(z))/(z − x) is a polynomial in x of degree deg p − 1
                let deg = coefficients.len().max(1);
                let rule = GaussRule::new(deg / 2 + 1);
                let smooth = rule.integrate(a, b, |x| {
                    let d = z - x;
                    if d.norm() == 0.0 {
                        -horner_c(&derivative_coeffs(coefficients), z)
                    } else {
                        (c64::new(horner(coefficients, x), 0.0) - pz) / d
                    }
                });
                pz * log_term + smooth
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Coupling::Lorentzian { g, x0, w } => {
                check_finite(&[*g, *x0, *w])?;
                if !(*w > 0.0) {
                    return Err(Error::InvalidParameter(format!("lorentzian width w must be positive, got {w}")));
                }
            }
            Coupling::Semicircle { g, center, radius } => {
                check_finite(&[*g, *center, *radius])?;
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "semicircle radius must be positive, got {radius}"
                    )));
                }
            }
            Coupling::CompactPolynomial { coefficients, support } => {
                let [a, b] = *support;
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonIntegrable("polynomial density needs a bounded support".into()));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonIntegrable("polynomial coefficients must be finite".into()));
                }
                if !(b > a) {
                    return Err(Error::InvalidParameter(format!("empty support [{a}, {b}]")));
                }
                // nonnegativity on a fine sample
                let m = 4096;
                for i in 0..=m {
                    let x = a + (b - a) * i as f64 / m as f64;
                    let v = horner(coefficients, x);
                    if v < -1e-12 * (1.0 + coefficients.iter().map(|c| c.abs()).sum::<f64>()) {
                        return Err(Error::InvalidParameter(format!(
                            "coupling density is negative at x = {x} ({v:.3e})"
                        )));
                    }
                }
            }
        }
        let mass = self.mass();
        if !mass.is_finite() {
            return Err(Error::NonIntegrable(format!("total coupling mass is {mass}")));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("coupling parameters must be finite".into()))
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn horner_c(c: &[f64], z: c64) -> c64 {
    c.iter().rev().fold(c64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, ck)| k as f64 * ck).collect()
}

/// Parameters of a Friedrichs model as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedrichsParams {
    pub lambda: f64,
    pub coupling: Coupling,
    #[serde(default)]
    pub diag_shift: f64,
}

/// One level at `lambda` coupled to a continuum with density |v|²;
/// V = diag_shift·|φ⟩⟨φ| + (|φ⟩⟨v| + |v⟩⟨φ|).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedrichsModel {
    pub lambda: f64,
    pub coupling: Coupling,
    pub continuum_support: Support,
    pub diag_shift: f64,
}

pub fn build_friedrichs(params: &FriedrichsParams) -> Result<FriedrichsModel> {
    params.coupling.validate()?;
    if !params.lambda.is_finite() || !params.diag_shift.is_finite() {
        return Err(Error::InvalidParameter("lambda and diag_shift must be finite".into()));
    }
    let support = params.coupling.support();
    if let Support::Bounded { a, b } = support {
        if !(params.lambda > a && params.lambda < b) {
            return Err(Error::NotEmbedded { lambda: params.lambda, lo: a, hi: b });
        }
    }
    Ok(FriedrichsModel {
        lambda: params.lambda,
        coupling: params.coupling.clone(),
        continuum_support: support,
        diag_shift: params.diag_shift,
    })
}

impl FriedrichsModel {
    /// F(z) = ∫ |v|²/(z − x) dx; κ-independent since P̄VP̄ = 0.
    pub fn f(&self, z: c64) -> c64 {
        self.coupling.stieltjes(z)
    }

    /// F(z) by adaptive quadrature over the (truncated) support.
    pub fn f_quadrature(&self, z: c64) -> Result<c64> {
        if z.im == 0.0 {
            return Err(Error::InvalidParameter("quadrature route needs Im z != 0".into()));
        }
        let (a, b) = self.continuum_support.bounds();
        let mut breaks = Vec::new();
        // geometric grading away from the pole and from the density's center
        let mut centers = vec![(z.re.clamp(a, b), z.im.abs())];
        if let Coupling::Lorentzian { x0, w, .. } = self.coupling {
            centers.push((x0, w));
        }
        for (c, scale) in centers {
            breaks.push(c);
            let mut step = scale;
            while step < b - a {
                breaks.push(c - step);
                breaks.push(c + step);
                step *= 4.0;
            }
        }
        breaks.retain(|p| *p > a && *p < b);
        breaks.push(a);
        breaks.push(b);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let re = integrate_real(|x| (self.coupling.density(x) / (z - x)).re, &breaks, 1e-13, 1e-12)?;
        let im = integrate_real(|x| (self.coupling.density(x) / (z - x)).im, &breaks, 1e-13, 1e-12)?;
        Ok(c64::new(re, im))
    }

    /// (φ, Vφ).
    pub fn first_order(&self) -> f64 {
        self.diag_shift
    }
}

/// Finite Hermitian model (H, V, A, φ, λ).
#[derive(Debug, Clone)]
pub struct MatrixModel {
    pub h: CMatrix,
    pub v: CMatrix,
    pub a: CMatrix,
    pub phi: CVector,
    pub lambda: f64,
    /// Grid spacing of a discretized continuum, if any.
    pub level_spacing: Option<f64>,
    /// Continuum form of i[H, A], used in place of the matrix commutator for
    /// the Mourre estimate when the model discretizes a continuum.
    pub commutator_form: Option<CMatrix>,
    /// Index k when φ = e_k, which enables block shortcuts.
    pub phi_index: Option<usize>,
}

impl MatrixModel {
    pub fn new(h: CMatrix, v: CMatrix, a: CMatrix, phi: CVector, lambda: f64) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || v.shape() != (n, n) || a.shape() != (n, n) || phi.len() != n {
            return Err(Error::InvalidParameter("H, V, A and phi must have matching sizes".into()));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("matrix model needs dimension >= 2".into()));
        }
        let norm = phi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("phi must be nonzero".into()));
        }
        let phi = phi / c64::new(norm, 0.0);
        let model = Self {
            h: linalg::hermitian_part(&h),
            v: linalg::hermitian_part(&v),
            a: linalg::hermitian_part(&a),
            phi_index: basis_index(&phi),
            phi,
            lambda,
            level_spacing: None,
            commutator_form: None,
        };
        let res = model.eigen_residual();
        if res > 0.0 && res > 1e-10 * linalg::op_norm(&model.h).max(1.0) {
            return Err(Error::InvalidModel(format!(
                "phi is not an eigenvector of H at lambda: residual {res:.3e}"
            )));
        }
        Ok(model)
    }

    /// Random model with H = λφφ* + P̄MP̄, V and A Hermitian, all of unit scale.
    pub fn random(dim: usize, seed: u64, lambda: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = linalg::random_unit_vector(dim, &mut rng);
        let m = linalg::random_hermitian(dim, &mut rng);
        let v = linalg::random_hermitian(dim, &mut rng);
        let a = linalg::random_hermitian(dim, &mut rng);
        let p = linalg::outer(&phi, &phi);
        let pbar = linalg::identity(dim) - &p;
        let h = &p * c64::new(lambda, 0.0) + &pbar * m * &pbar;
        Self::new(h, v, a, phi, lambda)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn h_kappa(&self, kappa: f64) -> CMatrix {
        &self.h + &self.v * c64::new(kappa, 0.0)
    }

    /// ‖Hφ − λφ‖.
    pub fn eigen_residual(&self) -> f64 {
        (&self.h * &self.phi - &self.phi * c64::new(self.lambda, 0.0)).norm()
    }

    /// (φ, Vφ), real for Hermitian V.
    pub fn first_order(&self) -> f64 {
        linalg::inner(&self.phi, &(&self.v * &self.phi)).re
    }

    /// Orthonormal basis of the complement of φ, as columns.
    pub fn complement(&self) -> CMatrix {
        match self.phi_index {
            Some(k) => {
                let n = self.dim();
                let mut q = CMatrix::zeros(n, n - 1);
                for j in 0..n - 1 {
                    let row = if j < k { j } else { j + 1 };
                    q[(row, j)] = c64::new(1.0, 0.0);
                }
                q
            }
            None => linalg::complement_basis(&self.phi),
        }
    }

    /// Q*MQ, i.e. the compression of M to Ran P̄ in the complement basis.
    pub fn compress(&self, m: &CMatrix) -> CMatrix {
        match self.phi_index {
            Some(k) => m.clone().remove_row(k).remove_column(k),
            None => {
                let q = self.complement();
                q.adjoint() * m * q
            }
        }
    }

    /// Q*w for a vector w.
    pub fn compress_vector(&self, w: &CVector) -> CVector {
        match self.phi_index {
            Some(k) => w.clone().remove_row(k),
            None => self.complement().adjoint() * w,
        }
    }
}

fn basis_index(phi: &CVector) -> Option<usize> {
    let mut hit = None;
    for (i, z) in phi.iter().enumerate() {
        if *z == c64::new(1.0, 0.0) {
            if hit.is_some() {
                return None;
            }
            hit = Some(i);
        } else if *z != c64::new(0.0, 0.0) {
            return None;
        }
    }
    hit
}

/// Offset between λ and the center c of the conjugate operator
/// A = (i/2)((x − c)∂ + ∂(x − c)); c = λ − 1 makes i[H, A] = x − c ≈ 1 near λ.
pub const DILATION_OFFSET: f64 = 1.0;

/// Star-matrix surrogate of a Friedrichs model on `n` midpoint grid points.
///
/// `l` is the half-width of the box used for unbounded supports; bounded
/// supports are discretized as they are.
pub fn discretize(model: &FriedrichsModel, n: usize, l: f64) -> Result<MatrixModel> {
    if n < 2 {
        return Err(Error::GridTooCoarse(format!("need at least 2 grid points, got {n}")));
    }
    let (lo, hi) = match model.continuum_support {
        Support::Bounded { a, b } => (a, b),
        Support::Unbounded { .. } => {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter(format!("truncation half-width must be positive, got {l}")));
            }
            (-l, l)
        }
    };
    if !(model.lambda > lo && model.lambda < hi) {
        return Err(Error::NotEmbedded { lambda: model.lambda, lo, hi });
    }
    let dx = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let dim = n + 1;
    let zero = c64::new(0.0, 0.0);
    let mut h = CMatrix::zeros(dim, dim);
    let mut v = CMatrix::zeros(dim, dim);
    h[(0, 0)] = c64::new(model.lambda, 0.0);
    v[(0, 0)] = c64::new(model.diag_shift, 0.0);
    for (i, &x) in grid.iter().enumerate() {
        h[(i + 1, i + 1)] = c64::new(x, 0.0);
        let vi = (dx * model.coupling.density(x)).sqrt();
        v[(0, i + 1)] = c64::new(vi, 0.0);
        v[(i + 1, 0)] = c64::new(vi, 0.0);
    }
    let center = model.lambda - DILATION_OFFSET;
    let mut a = CMatrix::zeros(dim, dim);
    // (i/2)(Xc D + D Xc) with central differences; entries i·s/2 for real antisymmetric s
    for i in 0..n.saturating_sub(1) {
        let s = (grid[i] + grid[i + 1] - 2.0 * center) / (2.0 * dx);
        a[(i + 1, i + 2)] = c64::new(0.0, 0.5 * s);
        a[(i + 2, i + 1)] = c64::new(0.0, -0.5 * s);
    }
    let mut form = CMatrix::zeros(dim, dim);
    for (i, &x) in grid.iter().enumerate() {
        form[(i + 1, i + 1)] = c64::new(x - center, 0.0);
    }
    let mut phi = CVector::from_element(dim, zero);
    phi[0] = c64::new(1.0, 0.0);
    let mut out = MatrixModel::new(h, v, a, phi, model.lambda)?;
    out.level_spacing = Some(dx);
    out.commutator_form = Some(form);
    Ok(out)
}

/// P = φφ* and P̄ = 1 − P.
#[derive(Debug, Clone)]
pub struct Projections {
    pub p: CMatrix,
    pub pbar: CMatrix,
}

pub fn projections(model: &MatrixModel) -> Projections {
    let p = linalg::outer(&model.phi, &model.phi);
    let pbar = linalg::identity(model.dim()) - &p;
    Projections { p, pbar }
}

impl Projections {
    /// max(‖P² − P‖, ‖P − P*‖, ‖PP̄‖, ‖P + P̄ − 1‖).
    pub fn invariant_residual(&self) -> f64 {
        let n = self.p.nrows();
        [
            (&self.p * &self.p - &self.p).norm(),
            linalg::hermiticity_residual(&self.p),
            (&self.p * &self.pbar).norm(),
            (&self.p + &self.pbar - linalg::identity(n)).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// T̂ = P̄TP̄.
    pub fn hat(&self, t: &CMatrix) -> CMatrix {
        &self.pbar * t * &self.pbar
    }
}

/// Either kind of model.
#[derive(Debug, Clone)]
pub enum SpectralModel {
    Friedrichs(FriedrichsModel),
    Matrix(MatrixModel),
}

impl SpectralModel {
    pub fn lambda(&self) -> f64 {
        match self {
            SpectralModel::Friedrichs(m) => m.lambda,
            SpectralModel::Matrix(m) => m.lambda,
        }
    }

    pub fn first_order(&self) -> f64 {
        match self {
            SpectralModel::Friedrichs(m) => m.first_order(),
            SpectralModel::Matrix(m) => m.first_order(),
        }
    }

    /// λ₁(κ) = λ + κ(φ, Vφ).
    pub fn lambda1(&self, kappa: f64) -> f64 {
        self.lambda() + kappa * self.first_order()
    }
}
