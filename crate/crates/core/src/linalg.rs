//! Dense complex linear algebra helpers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; Hermitian eigendecompositions
//! are delegated to faer, which is considerably faster at the sizes the
//! direct-propagation oracle needs (a few thousand).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<c64>;
pub type CVector = DVector<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    /// U f(D) U^*.
    pub fn apply<F: Fn(f64) -> c64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let fj = f(e);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Columns whose eigenvalues lie in the closed interval [lo, hi].
    pub fn subspace(&self, lo: f64, hi: f64) -> (Vec<f64>, CMatrix) {
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&j| self.values[j] >= lo && self.values[j] <= hi)
            .collect();
        let n = self.vectors.nrows();
        let mut cols = CMatrix::zeros(n, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            cols.set_column(k, &self.vectors.column(j));
        }
        (idx.iter().map(|&j| self.values[j]).collect(), cols)
    }
}

/// Hermitian eigendecomposition of `m` (lower triangle is used).
pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter("eigh needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let real = m.iter().all(|z| z.im == 0.0);
    if real {
        let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let evd = fm.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|i| s[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0));
        Ok(Eigh { values, vectors })
    } else {
        let fm = faer::Mat::<c64>::from_fn(n, n, |i, j| m[(i, j)]);
        let evd = fm.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|i| s[i].re).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        Ok(Eigh { values, vectors })
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let real = m.iter().all(|z| z.im == 0.0);
    let mut vals: Vec<f64> = if real {
        let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        fm.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|_| Error::EigenFailed)?
    } else {
        let fm = faer::Mat::<c64>::from_fn(n, n, |i, j| m[(i, j)]);
        fm.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|_| Error::EigenFailed)?
    };
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvalues E_j of Hermitian `m` with weights |⟨phi, ψ_j⟩|², without
/// materializing the eigenvectors as a complex matrix.
pub fn spectral_weights(m: &CMatrix, phi: &CVector) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.nrows();
    if n != m.ncols() || phi.len() != n {
        return Err(Error::InvalidParameter("spectral_weights needs a square matrix and a matching vector".into()));
    }
    let real = m.iter().chain(phi.iter()).all(|z| z.im == 0.0);
    if real {
        let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let evd = fm.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|j| s[j]).collect();
        let weights = (0..n)
            .map(|j| {
                let overlap: f64 = (0..n).map(|i| phi[i].re * u[(i, j)]).sum();
                overlap * overlap
            })
            .collect();
        Ok((values, weights))
    } else {
        let fm = faer::Mat::<c64>::from_fn(n, n, |i, j| m[(i, j)]);
        let evd = fm.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|j| s[j].re).collect();
        let weights = (0..n)
            .map(|j| {
                let overlap: c64 = (0..n).map(|i| phi[i].conj() * u[(i, j)]).sum();
                overlap.norm_sqr()
            })
            .collect();
        Ok((values, weights))
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// (M + M^*)/2, which is exactly Hermitian in floating point.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// ‖M − M^*‖ in Frobenius norm.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    match eigvalsh(&hermitian_part(&gram)) {
        Ok(v) => v.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => m.norm(),
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or(Error::SingularSolve(c64::new(f64::NAN, f64::NAN)))
}

pub fn solve(m: &CMatrix, rhs: &CVector, z: c64) -> Result<CVector> {
    let lu = m.clone().lu();
    let x = lu.solve(rhs).ok_or(Error::SingularSolve(z))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSolve(z));
    }
    Ok(x)
}

/// Orthonormal basis (as columns) of the orthogonal complement of the unit vector `phi`,
/// built from a Householder reflector.
pub fn complement_basis(phi: &CVector) -> CMatrix {
    let n = phi.len();
    let p0 = phi[0];
    let alpha = if p0.norm() == 0.0 { c64::new(-1.0, 0.0) } else { -p0 / p0.norm() };
    let mut u = phi.clone();
    u[0] -= alpha;
    let un = u.norm_squared();
    let mut refl = identity(n);
    if un > 0.0 {
        refl -= (&u * u.adjoint()) * c64::new(2.0 / un, 0.0);
    }
    refl.columns(1, n - 1).into_owned()
}

pub fn inner(a: &CVector, b: &CVector) -> c64 {
    a.dotc(b)
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Standard complex Gaussian Hermitian matrix scaled to unit spectral norm.
pub fn random_hermitian<R: rand::Rng>(n: usize, rng: &mut R) -> CMatrix {
    let raw = CMatrix::from_fn(n, n, |_, _| c64::new(gauss(rng), gauss(rng)));
    let h = hermitian_part(&raw);
    let s = op_norm(&h).max(1e-300);
    hermitian_part(&(h * c64::new(1.0 / s, 0.0)))
}

pub fn random_unit_vector<R: rand::Rng>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| c64::new(gauss(rng), gauss(rng)));
    let norm = v.norm();
    v / c64::new(norm, 0.0)
}

fn gauss<R: rand::Rng>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
