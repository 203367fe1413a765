//! Commutator calculus on finite Hermitian matrices: iterated commutators,
//! the arctan regularization A_ε, the binomial identities, the reduced
//! commutator identity, the virial theorem and Mourre certificates.
//!
//! Convention: ad_A(X) = [X, A] and ad_A^{(k+1)}(X) = [ad_A^{(k)}(X), A], so
//! that i^k ad_A^{(k)}(X) is Hermitian for Hermitian X and A.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I};
use crate::models::{projections, MatrixModel};
use crate::quad::gauss_legendre;

/// Gauss–Legendre nodes for the resolvent integrals after t = 1/s.
pub const RESOLVENT_NODES: usize = 512;

fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m * c64::new(s, 0.0)
}

fn cscale(m: &CMatrix, s: c64) -> CMatrix {
    m * s
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn power(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = linalg::identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// ad_A^{(k)}(X) for k = 0..=nu.
pub fn iterated_commutators(x: &CMatrix, a: &CMatrix, nu: usize) -> Vec<CMatrix> {
    let mut out = vec![x.clone()];
    for k in 0..nu {
        let next = linalg::commutator(&out[k], a);
        out.push(next);
    }
    out
}

/// i^k ad^{(k)}, the Hermitian form of the k-th commutator.
pub fn hermitian_form(ad: &CMatrix, k: usize) -> CMatrix {
    cscale(ad, I.powu(k as u32))
}

/// (a, b) with ‖Xψ‖ ≤ a‖Hψ‖ + b‖ψ‖, from a = b = ‖X(H + i)⁻¹‖.
pub fn relative_bound(x: &CMatrix, h: &CMatrix) -> Result<(f64, f64)> {
    let mut shifted = h.clone();
    for i in 0..h.nrows() {
        shifted[(i, i)] += I;
    }
    let c = linalg::op_norm(&(x * linalg::inverse(&shifted)?));
    Ok((c, c))
}

#[derive(Debug, Clone)]
pub struct CommutatorLedger {
    pub nu: usize,
    pub ads_h: Vec<CMatrix>,
    pub ads_v: Vec<CMatrix>,
    /// (a_k, b_k) for ad^{(k)}(H) relative to H.
    pub relative_bounds_h: Vec<(f64, f64)>,
    /// (a_k, b_k) for ad^{(k)}(V) relative to H.
    pub relative_bounds_v: Vec<(f64, f64)>,
    /// max_k ‖i^k ad^{(k)} − (i^k ad^{(k)})*‖ / max(‖ad^{(k)}‖, 1).
    pub hermiticity_residual: f64,
}

pub fn build_ledger(model: &MatrixModel, nu: usize) -> Result<CommutatorLedger> {
    let ads_h = iterated_commutators(&model.h, &model.a, nu);
    let ads_v = iterated_commutators(&model.v, &model.a, nu);
    let mut herm: f64 = 0.0;
    for ads in [&ads_h, &ads_v] {
        for (k, ad) in ads.iter().enumerate() {
            let r = linalg::hermiticity_residual(&hermitian_form(ad, k)) / ad.norm().max(1.0);
            herm = herm.max(r);
        }
    }
    let relative_bounds_h = ads_h.iter().map(|x| relative_bound(x, &model.h)).collect::<Result<_>>()?;
    let relative_bounds_v = ads_v.iter().map(|x| relative_bound(x, &model.h)).collect::<Result<_>>()?;
    Ok(CommutatorLedger { nu, ads_h, ads_v, relative_bounds_h, relative_bounds_v, hermiticity_residual: herm })
}

/// A_ε = ε⁻¹ arctan(εA) by functional calculus.
pub fn a_eps(a: &CMatrix, eps: f64) -> Result<CMatrix> {
    if eps == 0.0 {
        return Err(Error::InvalidParameter("epsilon must be nonzero".into()));
    }
    let e = linalg::eigh(a)?;
    Ok(linalg::hermitian_part(&e.apply(|x| c64::new((eps * x).atan() / eps, 0.0))))
}

/// ∫₀¹ f(s) ds by Gauss–Legendre on `RESOLVENT_NODES` nodes.
fn unit_integral<F: FnMut(f64) -> Result<CMatrix>>(n: usize, mut f: F) -> Result<CMatrix> {
    let (nodes, weights) = gauss_legendre(RESOLVENT_NODES);
    let mut acc = CMatrix::zeros(n, n);
    for (x, w) in nodes.iter().zip(&weights) {
        acc += scale(&f(0.5 * (x + 1.0))?, 0.5 * w);
    }
    Ok(acc)
}

/// (sεA + σi)⁻¹, the rescaled resolvent s⁻¹(εA + σit)⁻¹ at t = 1/s.
fn rescaled_resolvent(a: &CMatrix, eps: f64, s: f64, sigma: f64) -> Result<CMatrix> {
    let mut m = scale(a, s * eps);
    for i in 0..a.nrows() {
        m[(i, i)] += c64::new(0.0, sigma);
    }
    linalg::inverse(&m)
}

/// A_ε from the resolvent integral ε⁻¹/2 ∫₁^∞ [(εA + it)⁻¹ + (εA − it)⁻¹] dt,
/// mapped to (0, 1] by t = 1/s.
pub fn a_eps_quadrature(a: &CMatrix, eps: f64) -> Result<CMatrix> {
    if eps == 0.0 {
        return Err(Error::InvalidParameter("epsilon must be nonzero".into()));
    }
    let n = a.nrows();
    let sum = unit_integral(n, |s| {
        let r = rescaled_resolvent(a, eps, s, 1.0)? + rescaled_resolvent(a, eps, s, -1.0)?;
        Ok(scale(&r, 1.0 / s))
    })?;
    Ok(scale(&sum, 0.5 / eps))
}

/// [H, A_ε] = −½ Σ_σ ∫₁^∞ (εA + σit)⁻¹ ad_A(H) (εA + σit)⁻¹ dt.
pub fn commutator_resolvent_form(h: &CMatrix, a: &CMatrix, eps: f64) -> Result<CMatrix> {
    let ad = linalg::commutator(h, a);
    let n = a.nrows();
    let sum = unit_integral(n, |s| {
        let mut acc = CMatrix::zeros(n, n);
        for sigma in [1.0, -1.0] {
            let r = rescaled_resolvent(a, eps, s, sigma)?;
            acc += &r * &ad * &r;
        }
        Ok(acc)
    })?;
    Ok(scale(&sum, -0.5))
}

/// The representation of [H, A_ε] through ad_A(H) and ad_A^{(3)}(H): a
/// closed part plus ε²/4 Σ_σ ∫₁^∞ (εA + σit)⁻² ad^{(3)} (εA + σit)⁻² dt.
pub fn commutator_third_order_form(h: &CMatrix, a: &CMatrix, eps: f64) -> Result<CMatrix> {
    let n = a.nrows();
    let ads = iterated_commutators(h, a, 3);
    let (ad1, ad3) = (&ads[1], &ads[3]);
    let one = linalg::identity(n);
    let mut closed = CMatrix::zeros(n, n);
    for sigma in [1.0, -1.0] {
        let left = linalg::inverse(&(&one - cscale(a, I * (sigma * eps))))?;
        let right = linalg::inverse(&(&one + cscale(a, I * (sigma * eps))))?;
        closed += scale(&(left * ad1 * right), 0.5);
    }
    let damp = linalg::inverse(&(&one + scale(&(a * a), eps * eps)))?;
    closed += scale(&(&damp * ad3 * &damp), 0.5 * eps * eps);
    let tail = unit_integral(n, |s| {
        let mut acc = CMatrix::zeros(n, n);
        for sigma in [1.0, -1.0] {
            let r = rescaled_resolvent(a, eps, s, sigma)?;
            let r2 = &r * &r;
            acc += &r2 * ad3 * &r2;
        }
        Ok(scale(&acc, s * s))
    })?;
    Ok(closed + scale(&tail, 0.25 * eps * eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityKind {
    Algebraic,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub kind: IdentityKind,
    /// Frobenius norm of lhs − rhs.
    pub residual: f64,
    /// Norm scale of the terms involved.
    pub scale: f64,
}

impl IdentityResidual {
    fn new(name: &str, kind: IdentityKind, lhs: &CMatrix, rhs: &CMatrix, scale: f64) -> Self {
        Self { name: name.into(), kind, residual: (lhs - rhs).norm(), scale: scale.max(lhs.norm()).max(1e-300) }
    }

    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Both sides of the commutator identities for (H, A) at regularization ε and order n.
pub fn commutator_identities_check(h: &CMatrix, a: &CMatrix, eps: f64, n: usize, z: c64) -> Result<Vec<IdentityResidual>> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter("z must be off the real axis".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("order n must be at least 1".into()));
    }
    let dim = h.nrows();
    let one = linalg::identity(dim);
    let mut out = Vec::new();

    // resolvent of A
    let ads = iterated_commutators(h, a, 3);
    let r = linalg::inverse(&(a - cscale(&one, z)))?;
    let r2 = &r * &r;
    let lhs = linalg::commutator(h, &r);
    let rhs = -(&r * &ads[1] * &r);
    let sc = r.norm() * r.norm() * ads[1].norm();
    out.push(IdentityResidual::new("resolvent-commutator", IdentityKind::Algebraic, &lhs, &rhs, sc));
    let rhs3 = scale(&(&r2 * &ads[1] + &ads[1] * &r2), -0.5) + scale(&(&r2 * &ads[3] * &r2), 0.5);
    let sc3 = sc.max(r2.norm() * r2.norm() * ads[3].norm());
    out.push(IdentityResidual::new("resolvent-commutator-third-order", IdentityKind::Algebraic, &lhs, &rhs3, sc3));

    // regularization
    let ae = a_eps(a, eps)?;
    let aq = a_eps_quadrature(a, eps)?;
    out.push(IdentityResidual::new("arctan-resolvent-integral", IdentityKind::Quadrature, &ae, &aq, a.norm()));
    let direct = linalg::commutator(h, &ae);
    let sc = h.norm() * ae.norm();
    out.push(IdentityResidual::new(
        "commutator-resolvent-integral",
        IdentityKind::Quadrature,
        &direct,
        &commutator_resolvent_form(h, a, eps)?,
        sc,
    ));
    out.push(IdentityResidual::new(
        "commutator-third-order-integral",
        IdentityKind::Quadrature,
        &direct,
        &commutator_third_order_form(h, a, eps)?,
        sc,
    ));
    out.push(IdentityResidual::new("regularization-commutes", IdentityKind::Algebraic, &linalg::commutator(&ae, a), &CMatrix::zeros(dim, dim), ae.norm() * a.norm()));

    // binomial expansions in A_ε
    let m = 2 * n + 1;
    let adse = iterated_commutators(h, &ae, m);
    let pows: Vec<CMatrix> = (0..=m).map(|k| power(&ae, k)).collect();
    let term_scale = |k: usize, j: usize| pows[k].norm() * adse[j].norm();

    let lhs = h * &pows[n];
    let mut rhs = CMatrix::zeros(dim, dim);
    let mut sc: f64 = 0.0;
    for k in 0..=n {
        rhs += scale(&(&pows[n - k] * &adse[k]), binomial(n, k));
        sc = sc.max(binomial(n, k) * term_scale(n - k, k));
    }
    out.push(IdentityResidual::new("binomial-right", IdentityKind::Algebraic, &lhs, &rhs, sc));

    let lhs = &pows[n] * h;
    let mut rhs = h * &pows[n];
    for k in 1..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        rhs += scale(&(&adse[k] * &pows[n - k]), sign * binomial(n, k));
        sc = sc.max(binomial(n, k) * term_scale(n - k, k));
    }
    out.push(IdentityResidual::new("binomial-left", IdentityKind::Algebraic, &lhs, &rhs, sc));

    let lhs = linalg::commutator(h, &pows[m]);
    let c1 = linalg::commutator(h, &ae);
    let cn1 = linalg::commutator(h, &pows[n + 1]);
    let split = &cn1 * &pows[n] + &pows[n] * &cn1 - &pows[n] * &c1 * &pows[n];
    let sc_odd = (m as f64) * pows[n].norm().powi(2) * c1.norm();
    out.push(IdentityResidual::new("odd-power-split", IdentityKind::Algebraic, &lhs, &split, sc_odd));
    let mut expanded = scale(&(&pows[n] * &c1 * &pows[n]), m as f64);
    let mut sc = sc_odd;
    for k in 2..=n + 1 {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let b = binomial(n + 1, k);
        expanded += scale(&(&pows[n + 1 - k] * &adse[k] * &pows[n]), b);
        expanded += scale(&(&pows[n] * &adse[k] * &pows[n + 1 - k]), sign * b);
        sc = sc.max(b * pows[n + 1 - k].norm() * adse[k].norm() * pows[n].norm());
    }
    out.push(IdentityResidual::new("odd-power-expansion", IdentityKind::Algebraic, &lhs, &expanded, sc));
    Ok(out)
}

/// Ĝ_j with ad^{(j)}_Â(Ĥ) = P̄ ad^{(j)}_A(H) P̄ + Ĝ_j, assembled from
/// Ĝ₁ = P̄(APH − HPA)P̄ and Ĝ_{j+1} = [Ĝ_j, Â] + P̄(AP ad^{(j)} − ad^{(j)} PA)P̄.
pub fn reduced_remainder(h: &CMatrix, a: &CMatrix, p: &CMatrix, j: usize) -> Vec<CMatrix> {
    let n = h.nrows();
    let pbar = linalg::identity(n) - p;
    let ahat = &pbar * a * &pbar;
    let ads = iterated_commutators(h, a, j);
    let mut g = vec![CMatrix::zeros(n, n)];
    for k in 0..j {
        let block = &pbar * (a * p * &ads[k] - &ads[k] * p * a) * &pbar;
        let next = linalg::commutator(&g[k], &ahat) + block;
        g.push(next);
    }
    g
}

/// max over orders 1..=j of ‖ad^{(k)}_Â(Ĥκ) − P̄ ad^{(k)}_A(Hκ) P̄ − Ĝ_k‖ relative
/// to ‖ad^{(k)}_Â(Ĥκ)‖.
pub fn reduced_commutator_check(model: &MatrixModel, kappa: f64, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("order j must be at least 1".into()));
    }
    let pr = projections(model);
    reduced_identity_residual(&model.h_kappa(kappa), &model.a, &pr.p, j)
}

pub fn reduced_identity_residual(h: &CMatrix, a: &CMatrix, p: &CMatrix, j: usize) -> Result<f64> {
    let n = h.nrows();
    let pbar = linalg::identity(n) - p;
    let hhat = &pbar * h * &pbar;
    let ahat = &pbar * a * &pbar;
    let lhs = iterated_commutators(&hhat, &ahat, j);
    let ads = iterated_commutators(h, a, j);
    let g = reduced_remainder(h, a, p, j);
    let mut worst: f64 = 0.0;
    for k in 1..=j {
        let rhs = &pbar * &ads[k] * &pbar + &g[k];
        let sc = lhs[k].norm().max(ads[k].norm()).max(1e-300);
        worst = worst.max((&lhs[k] - rhs).norm() / sc);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Virial {
    /// |(ψ, i[Hκ, A]ψ)| for the eigenvector ψ of Hκ closest to φ.
    pub expectation: f64,
    /// ‖[Hκ, A]‖.
    pub scale: f64,
    /// |⟨φ, ψ⟩|².
    pub overlap: f64,
}

/// Virial expectation in the eigenvector of Hκ continuing φ (φ itself at κ = 0).
pub fn virial_check(model: &MatrixModel, kappa: f64) -> Result<Virial> {
    let hk = model.h_kappa(kappa);
    let c = linalg::commutator(&hk, &model.a);
    let (psi, overlap) = if kappa == 0.0 {
        (model.phi.clone(), 1.0)
    } else {
        let e = linalg::eigh(&hk)?;
        let overlaps: Vec<f64> = (0..e.values.len())
            .map(|j| linalg::inner(&model.phi, &e.vectors.column(j).into_owned()).norm_sqr())
            .collect();
        let best = (0..overlaps.len()).max_by(|&x, &y| overlaps[x].total_cmp(&overlaps[y])).unwrap_or(0);
        (e.vectors.column(best).into_owned(), overlaps[best])
    };
    Ok(Virial { expectation: virial_expectation(&c, &psi), scale: linalg::op_norm(&c), overlap })
}

/// |(ψ, i C ψ)| for a commutator C.
pub fn virial_expectation(commutator: &CMatrix, psi: &linalg::CVector) -> f64 {
    (linalg::inner(psi, &(commutator * psi)) * I).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MourreCertificate {
    pub interval: (f64, f64),
    pub kappa: f64,
    pub reduced: bool,
    /// Smallest eigenvalue of the compressed commutator.
    pub theta: f64,
    pub theta_target: f64,
    /// Number of compressed eigenvalues below the target.
    pub deficiency_rank: usize,
    pub subspace_dimension: usize,
}

impl MourreCertificate {
    pub fn certified(&self) -> bool {
        self.theta > 0.0 && self.deficiency_rank == 0
    }
}

/// Hermitian matrix standing for i[Hκ, A]: the model's continuum commutator
/// form plus κ i[V, A] when one is attached, else the matrix commutator.
pub fn commutator_operator(model: &MatrixModel, kappa: f64) -> CMatrix {
    let cv = cscale(&linalg::commutator(&model.v, &model.a), I * kappa);
    let full = match &model.commutator_form {
        Some(form) => form + cv,
        None => cscale(&linalg::commutator(&model.h, &model.a), I) + cv,
    };
    linalg::hermitian_part(&full)
}

/// Compressions of i[Hκ, A] (or i[Ĥκ, Â] on Ran P̄) to the spectral subspace
/// of Hκ (or Ĥκ) for Δ, with θ the smallest eigenvalue. Without an explicit
/// target, θ_target is half the reduced κ = 0 value.
pub fn mourre_certificate(
    model: &MatrixModel,
    delta: (f64, f64),
    reduced: bool,
    kappa: f64,
    theta_target: Option<f64>,
) -> Result<MourreCertificate> {
    let (lo, hi) = delta;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("[{lo}, {hi}] is not an interval")));
    }
    let target = match theta_target {
        Some(t) => t,
        None => 0.5 * compressed_spectrum(model, delta, true, 0.0)?.0[0],
    };
    let (vals, dim) = compressed_spectrum(model, delta, reduced, kappa)?;
    Ok(MourreCertificate {
        interval: delta,
        kappa,
        reduced,
        theta: vals[0],
        theta_target: target,
        deficiency_rank: vals.iter().filter(|&&v| v < target).count(),
        subspace_dimension: dim,
    })
}

fn compressed_spectrum(model: &MatrixModel, delta: (f64, f64), reduced: bool, kappa: f64) -> Result<(Vec<f64>, usize)> {
    let hk = model.h_kappa(kappa);
    let mut c = commutator_operator(model, kappa);
    let (hs, cs) = if reduced {
        // i[Ĥκ, Â] = P̄ i[Hκ, A] P̄ + i P̄(APHκ − HκPA)P̄
        let p = projections(model).p;
        let extra = cscale(&(&model.a * &p * &hk - &hk * &p * &model.a), I);
        c += linalg::hermitian_part(&extra);
        (linalg::hermitian_part(&model.compress(&hk)), linalg::hermitian_part(&model.compress(&c)))
    } else {
        (hk, c)
    };
    let e = linalg::eigh(&hs)?;
    let (_, u) = e.subspace(delta.0, delta.1);
    if u.ncols() == 0 {
        return Err(Error::EmptySpectralSubspace { lo: delta.0, hi: delta.1 });
    }
    let compressed = linalg::hermitian_part(&(u.adjoint() * cs * &u));
    Ok((linalg::eigvalsh(&compressed)?, u.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_friedrichs, discretize, Coupling, FriedrichsParams};

    #[test]
    fn commuting_pair_has_no_commutators() {
        let m = MatrixModel::random(6, 4, 0.2).unwrap();
        let ads = iterated_commutators(&m.h, &m.h, 3);
        assert!(ads[1..].iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn second_commutator_expansion() {
        let m = MatrixModel::random(6, 5, 0.0).unwrap();
        let l = build_ledger(&m, 2).unwrap();
        let (h, a) = (&m.h, &m.a);
        let direct = h * a * a - scale(&(a * h * a), 2.0) + a * a * h;
        assert!((&l.ads_h[2] - direct).norm() < 1e-12);
        assert!(l.hermiticity_residual < 1e-12);
    }

    #[test]
    fn arctan_eigenvalues_and_small_eps() {
        let m = MatrixModel::random(5, 6, 0.0).unwrap();
        let a = scale(&m.a, 3.0);
        let eps = 0.2;
        let ae = a_eps(&a, eps).unwrap();
        let va = linalg::eigvalsh(&a).unwrap();
        let ve = linalg::eigvalsh(&ae).unwrap();
        for (x, y) in va.iter().zip(&ve) {
            assert!(((eps * x).atan() / eps - y).abs() < 1e-13);
        }
        let small = a_eps(&a, 1e-3).unwrap();
        let na = linalg::op_norm(&a);
        assert!(linalg::op_norm(&(small - &a)) < 1e-6 * na.powi(3));
        let q = a_eps_quadrature(&a, eps).unwrap();
        assert!((q - ae).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn identities_on_a_random_pair() {
        let m = MatrixModel::random(6, 7, 0.1).unwrap();
        let res = commutator_identities_check(&m.h, &m.a, 0.1, 3, c64::new(0.3, 0.7)).unwrap();
        for r in &res {
            assert!(r.relative() < 1e-10, "{} residual {:e}", r.name, r.relative());
        }
    }

    #[test]
    fn reduced_identity() {
        let m = MatrixModel::random(8, 8, 0.0).unwrap();
        assert!(reduced_commutator_check(&m, 0.3, 1).unwrap() < 1e-12);
        assert!(reduced_commutator_check(&m, 0.3, 3).unwrap() < 1e-10);
        let n = m.dim();
        let zero = CMatrix::zeros(n, n);
        assert_eq!(reduced_identity_residual(&m.h, &m.a, &zero, 2).unwrap(), 0.0);
    }

    fn star() -> MatrixModel {
        let f = build_friedrichs(&FriedrichsParams {
            lambda: 0.0,
            coupling: Coupling::Lorentzian { g: 1.0, x0: 0.0, w: 1.0 },
            diag_shift: 0.0,
        })
        .unwrap();
        discretize(&f, 200, 5.0).unwrap()
    }

    #[test]
    fn virial_vanishes_in_eigenstates() {
        let s = star();
        let v = virial_check(&s, 0.0).unwrap();
        assert!(v.expectation < 1e-12);
        let m = MatrixModel::random(7, 9, 0.4).unwrap();
        let v = virial_check(&m, 0.0).unwrap();
        assert!(v.expectation < 1e-10 * v.scale);
        let v = virial_check(&m, 0.2).unwrap();
        assert!(v.expectation < 1e-10 * v.scale);
        let c = linalg::commutator(&m.h, &m.a);
        let off = linalg::random_unit_vector(7, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1));
        assert!(virial_expectation(&c, &off) > 1e-6);
    }

    #[test]
    fn certificates_on_the_star_model() {
        let s = star();
        let red = mourre_certificate(&s, (-0.2, 0.2), true, 0.05, None).unwrap();
        assert!(red.theta > 0.0);
        assert_eq!(red.deficiency_rank, 0);
        let full = mourre_certificate(&s, (-0.2, 0.2), false, 0.0, None).unwrap();
        assert!(full.deficiency_rank >= 1);
        assert!(matches!(
            mourre_certificate(&s, (50.0, 60.0), true, 0.0, None),
            Err(Error::EmptySpectralSubspace { .. })
        ));
    }
}
