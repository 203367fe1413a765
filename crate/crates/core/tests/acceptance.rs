//! Acceptance criteria A1–A9. Each test prints one `A<k> PASS|FAIL` line.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonance_core::c64;
use resonance_core::decay::{
    default_fit_window, fit_resonance_from_decay, lifetime, log_ratio_bound, make_cutoff, remainder_decompose,
    rn_l1_check, survival_direct, survival_spectral, Cutoff,
};
use resonance_core::feshbach::{
    boundary_trace, feshbach_identity_check, golden_rule, BoundaryTrace, EtaLadder, GoldenRule, ReducedFunction,
    TraceMethod,
};
use resonance_core::fit::{compare_log_model, loglog_slope};
use resonance_core::linalg::{self, CMatrix};
use resonance_core::models::{build_friedrichs, discretize, Coupling, FriedrichsParams, MatrixModel, SpectralModel};
use resonance_core::mourre::{
    commutator_identities_check, mourre_certificate, reduced_identity_residual, virial_check, IdentityKind,
};
use resonance_core::resonance::{build_taylor, default_radius, find_resonance, Expansion, Resonance, TaylorApproximant};

static SERIAL: Mutex<()> = Mutex::new(());

const LADDER: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
const ORDER: usize = 2;

const A1_TOL: f64 = 1e-9;
const A1_BUDGET: Duration = Duration::from_secs(10);
const A2_TOL: f64 = 1e-3;
const A2_BUDGET: Duration = Duration::from_secs(30);
const A3_MIN_SLOPE: f64 = 2.5;
const A3_BUDGET: Duration = Duration::from_secs(10);
const A4_FACTOR: f64 = 10.0;
const A4_BUDGET: Duration = Duration::from_secs(10);
const A5_MIN_SLOPE: f64 = 2.0;
const A5_STABILITY: f64 = 3.0;
const A5_BUDGET: Duration = Duration::from_secs(120);
const A6_TOL: f64 = 1e-3;
const A6_BUDGET: Duration = Duration::from_secs(300);
const A7_MIN_SLOPE: f64 = 2.0;
const A7_POWERS: (f64, f64) = (2.0, 2.3);
const A7_BUDGET: Duration = Duration::from_secs(60);
const A8_STABILITY: f64 = 3.0;
const A8_PAIRS: usize = 1_000_000;
const A8_BUDGET: Duration = Duration::from_secs(60);
const A9_ALGEBRAIC: f64 = 1e-10;
const A9_QUADRATURE: f64 = 1e-6;
const A9_TRIPLES: usize = 100;
const A9_BUDGET: Duration = Duration::from_secs(60);

fn report(id: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    let ok = pass && within;
    // written to the raw handle so the line survives libtest output capture
    let line = format!(
        "{id} {} {detail} [{:.1} s of {:.0} s]\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{id}: {detail}");
    assert!(within, "{id}: runtime {:.1} s exceeds {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64());
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn lorentzian() -> SpectralModel {
    let p = FriedrichsParams { lambda: 0.0, coupling: Coupling::Lorentzian { g: 1.0, x0: 0.0, w: 1.0 }, diag_shift: 0.0 };
    SpectralModel::Friedrichs(build_friedrichs(&p).unwrap())
}

fn semicircle() -> SpectralModel {
    let p = FriedrichsParams {
        lambda: 0.3,
        coupling: Coupling::Semicircle { g: 1.0, center: 0.0, radius: 2.0 },
        diag_shift: 0.0,
    };
    SpectralModel::Friedrichs(build_friedrichs(&p).unwrap())
}

struct Point {
    kappa: f64,
    trace: BoundaryTrace,
    reduced: ReducedFunction,
    approx: TaylorApproximant,
    resonance: Resonance,
}

struct Pipeline {
    model: SpectralModel,
    interval: (f64, f64),
    method: TraceMethod,
    golden: GoldenRule,
    expansion: Expansion,
}

impl Pipeline {
    fn new(model: SpectralModel, interval: (f64, f64), method: TraceMethod) -> Self {
        let golden = golden_rule(&model, method).unwrap();
        let expansion = Expansion { lambda: model.lambda(), first_order: model.first_order(), golden };
        Self { model, interval, method, golden, expansion }
    }

    fn point(&self, kappa: f64) -> Point {
        let trace = boundary_trace(&self.model, self.interval, kappa, ORDER, self.method).unwrap();
        let reduced = ReducedFunction::for_model(&self.model, kappa);
        let lambda = self.model.lambda();
        let r = default_radius(&trace, lambda);
        let approx = build_taylor(&trace, lambda, reduced.lambda1, ORDER, r).unwrap();
        let resonance = find_resonance(&approx, kappa, &self.expansion).unwrap();
        Point { kappa, trace, reduced, approx, resonance }
    }

    fn cutoff(&self) -> Cutoff {
        let (a, b) = self.interval;
        let lambda = self.model.lambda();
        make_cutoff(self.interval, lambda, 0.5 * (lambda - a).min(b - lambda), ORDER + 2).unwrap()
    }

    fn times(&self, kappa: f64, points: usize) -> Vec<f64> {
        let span = 3.0 * lifetime(kappa, self.golden.gamma);
        (0..points).map(|k| span * k as f64 / (points - 1) as f64).collect()
    }
}

fn lorentzian_pipeline() -> Pipeline {
    Pipeline::new(lorentzian(), (-0.5, 0.5), TraceMethod::ClosedForm)
}

#[test]
fn a1_feshbach_identity() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for m in 0..50 {
        let dim = rng.gen_range(4..=64);
        let model = MatrixModel::random(dim, 1000 + m, rng.gen_range(-0.5..0.5)).unwrap();
        for _ in 0..50 {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let z = c64::new(rng.gen_range(-3.0..3.0), sign * rng.gen_range(0.01..2.0));
            let kappa = rng.gen_range(0.0..1.0);
            let res = feshbach_identity_check(&model, z, kappa).unwrap();
            worst = worst.max(res / (1.0 + z.norm()));
        }
    }
    report(
        "A1",
        worst < A1_TOL,
        start.elapsed(),
        A1_BUDGET,
        &format!("max |residual|/(1+|z|) = {worst:.2e} over 50 models x 50 samples (tol {A1_TOL:e})"),
    );
}

#[test]
fn a2_golden_rule_three_ways() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let model = lorentzian();
    let closed = golden_rule(&model, TraceMethod::ClosedForm).unwrap().gamma;
    let pv = golden_rule(&model, TraceMethod::PvQuadrature).unwrap().gamma;
    let SpectralModel::Friedrichs(f) = &model else { unreachable!() };
    let star = SpectralModel::Matrix(discretize(f, 2000, 20.0).unwrap());
    let eta = golden_rule(&star, TraceMethod::EtaExtrapolation(EtaLadder::default())).unwrap().gamma;
    let values = [closed, pv, eta];
    let spread = values
        .iter()
        .flat_map(|x| values.iter().map(move |y| (x - y).abs() / y.abs()))
        .fold(0.0, f64::max);
    report(
        "A2",
        spread < A2_TOL && (closed - 2.0).abs() < 1e-12,
        start.elapsed(),
        A2_BUDGET,
        &format!("Gamma closed={closed:.10} pv={pv:.10} eta(N=2000)={eta:.10}, max relative spread {spread:.2e} (tol {A2_TOL:e})"),
    );
}

#[test]
fn a3_second_order_expansion() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let p = lorentzian_pipeline();
    let gaps: Vec<f64> = LADDER.iter().map(|&k| p.point(k).resonance.expansion_gap).collect();
    let slope = loglog_slope(&LADDER, &gaps).unwrap();
    report(
        "A3",
        slope >= A3_MIN_SLOPE,
        start.elapsed(),
        A3_BUDGET,
        &format!("expansion gap slope {slope:.3} (min {A3_MIN_SLOPE}), gaps {}", sci(&gaps)),
    );
}

fn exact_pole(kappa: f64) -> c64 {
    let i = c64::new(0.0, 1.0);
    (-i + i * (1.0 - 4.0 * kappa * kappa).sqrt()) * 0.5
}

#[test]
fn a4_exact_pole() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let p = lorentzian_pipeline();
    let ratios: Vec<f64> = LADDER
        .iter()
        .map(|&k| (p.point(k).resonance.lambda_res - exact_pole(k)).norm() / k.powi(6))
        .collect();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    report(
        "A4",
        worst <= A4_FACTOR,
        start.elapsed(),
        A4_BUDGET,
        &format!("max |lambda_k - exact|/k^6 = {worst:.3} (max {A4_FACTOR}), per rung {ratios:.3?}"),
    );
}

#[test]
fn a5_decay_law() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let p = lorentzian_pipeline();
    let g = p.cutoff();
    let mut sups = vec![];
    let mut stability = vec![];
    let mut sign_pinned = true;
    for &k in &LADDER {
        let pt = p.point(k);
        let series = survival_spectral(&pt.trace, &pt.reduced, &g, &p.times(k, 601)).unwrap();
        let rem = remainder_decompose(&series, &pt.resonance, ORDER);
        sups.push(rem.sup);
        stability.push(rem.sup_weighted_n1 / (k * k));
        // a = 1/(1 − κ²Fₙ'(λκ)) against the opposite orientation 1/(1 + κ²Fₙ'(λκ))
        let fit = fit_resonance_from_decay(&series, default_fit_window(k, p.golden.gamma)).unwrap();
        let flipped = 1.0 / (1.0 + pt.approx.derivative(pt.resonance.lambda_res) * (k * k));
        sign_pinned &= (fit.a_tilde - pt.resonance.amplitude).norm() < (fit.a_tilde - flipped).norm();
    }
    let slope = loglog_slope(&LADDER, &sups).unwrap();
    let (lo, hi) = stability.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = hi / lo;
    report(
        "A5",
        slope >= A5_MIN_SLOPE && spread <= A5_STABILITY && sign_pinned,
        start.elapsed(),
        A5_BUDGET,
        &format!(
            "sup|b| slope {slope:.3} (min {A5_MIN_SLOPE}); sup(1+t)^(n-1)|b|/k^2 = {stability:.3?}, spread {spread:.2} (max {A5_STABILITY}); \
             a = 1/(1 - k^2 F_n') closer to the decay fit than 1/(1 + k^2 F_n'): {sign_pinned}"
        ),
    );
}

#[test]
fn a6_direct_propagation() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let kappa = 0.1;
    let p = lorentzian_pipeline();
    let g = p.cutoff();
    let pt = p.point(kappa);
    let times = p.times(kappa, 301);
    let spectral = survival_spectral(&pt.trace, &pt.reduced, &g, &times).unwrap();
    let SpectralModel::Friedrichs(f) = &p.model else { unreachable!() };
    let star = discretize(f, 4000, 20.0).unwrap();
    let direct = survival_direct(&star, &g, kappa, &times).unwrap();
    let dist = direct.sup_distance(&spectral).unwrap();
    report(
        "A6",
        dist <= A6_TOL,
        start.elapsed(),
        A6_BUDGET,
        &format!("sup |S_direct - S_spectral| = {dist:.2e} on t in [0, {:.0}] (tol {A6_TOL:e})", times[times.len() - 1]),
    );
}

fn rn_columns(p: &Pipeline) -> Vec<Vec<f64>> {
    let norms: Vec<Vec<f64>> = LADDER
        .iter()
        .map(|&k| {
            let pt = p.point(k);
            rn_l1_check(&pt.trace, &pt.approx, &pt.reduced).unwrap()
        })
        .collect();
    (0..=ORDER).map(|j| norms.iter().map(|r| r[j]).collect()).collect()
}

#[test]
fn a7_rn_l1_scaling() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let semi = Pipeline::new(semicircle(), (-0.2, 0.8), TraceMethod::PvQuadrature);
    let lor = lorentzian_pipeline();
    let mut slopes_ok = true;
    let mut detail = String::new();
    for (name, p) in [("semicircle", &semi), ("lorentzian", &lor)] {
        let cols = rn_columns(p);
        let slopes: Vec<f64> = cols.iter().map(|c| loglog_slope(&LADDER, c).unwrap()).collect();
        slopes_ok &= slopes[..ORDER].iter().all(|&s| s >= A7_MIN_SLOPE);
        let cmp = compare_log_model(&LADDER, &cols[ORDER], A7_POWERS.0, A7_POWERS.1).unwrap();
        detail += &format!(
            "{name}: slopes j=0..n {slopes:.3?}, j=n log-model residual {:.3e} vs power {:.2} residual {:.3e}; ",
            cmp.log_model_residual, cmp.best_power, cmp.power_residual
        );
    }
    // the exactly solvable model has no logarithmic term at j = n; the log criterion uses the semicircle
    let cols = rn_columns(&semi);
    let log_wins = compare_log_model(&LADDER, &cols[ORDER], A7_POWERS.0, A7_POWERS.1).unwrap().log_model_wins();
    report(
        "A7",
        slopes_ok && log_wins,
        start.elapsed(),
        A7_BUDGET,
        &format!("{detail}j<n slopes >= {A7_MIN_SLOPE}: {slopes_ok}; semicircle log model wins: {log_wins}"),
    );
}

#[test]
fn a8_uniqueness() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let p = lorentzian_pipeline();
    let g = p.cutoff();
    let constants: Vec<f64> = LADDER
        .iter()
        .map(|&k| {
            let pt = p.point(k);
            let series = survival_spectral(&pt.trace, &pt.reduced, &g, &p.times(k, 601)).unwrap();
            let fit = fit_resonance_from_decay(&series, default_fit_window(k, p.golden.gamma)).unwrap();
            let lk = pt.resonance.lambda_res;
            (fit.lambda_tilde - lk).norm() / (pt.kappa * pt.kappa * lk.im.abs())
        })
        .collect();
    let c0 = constants[0];
    let c_max = constants.iter().cloned().fold(0.0, f64::max);
    let stable = c_max <= A8_STABILITY * c0;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0usize;
    for _ in 0..A8_PAIRS {
        let w1 = c64::from_polar(10f64.powf(rng.gen_range(-3.0..3.0)), rng.gen_range(-4.0..4.0));
        let w2 = if rng.gen::<bool>() {
            w1 * c64::from_polar(1.0 + rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))
        } else {
            c64::from_polar(10f64.powf(rng.gen_range(-3.0..3.0)), rng.gen_range(-4.0..4.0))
        };
        let (lhs, rhs) = log_ratio_bound(w1, w2).unwrap();
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
            violations += 1;
        }
    }
    report(
        "A8",
        stable && violations == 0,
        start.elapsed(),
        A8_BUDGET,
        &format!(
            "C_k = |lambda_k - fit|/(k^2|Im lambda_k|) = {}, max {c_max:.3e} <= {A8_STABILITY} x C(k_max) = {:.3e}: {stable}; \
             log-ratio bound violations {violations}/{A8_PAIRS}",
            sci(&constants),
            A8_STABILITY * c0
        ),
    );
}

fn random_triple(rng: &mut ChaCha8Rng) -> (CMatrix, CMatrix, CMatrix) {
    let dim = rng.gen_range(4..=12);
    let h = linalg::random_hermitian(dim, rng);
    let a = linalg::random_hermitian(dim, rng);
    let phi = linalg::random_unit_vector(dim, rng);
    (h, a, linalg::outer(&phi, &phi))
}

#[test]
fn a9_commutator_calculus() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_alg, mut worst_quad, mut worst_hat) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..A9_TRIPLES {
        let (h, a, p) = random_triple(&mut rng);
        let n = 1 + t % 4;
        let z = c64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..2.0));
        for r in commutator_identities_check(&h, &a, rng.gen_range(0.05..1.0), n, z).unwrap() {
            match r.kind {
                IdentityKind::Algebraic => worst_alg = worst_alg.max(r.relative()),
                IdentityKind::Quadrature => worst_quad = worst_quad.max(r.relative()),
            }
        }
        worst_hat = worst_hat.max(reduced_identity_residual(&h, &a, &p, 2).unwrap());
    }
    let identities_ok = worst_alg < A9_ALGEBRAIC && worst_hat < A9_ALGEBRAIC && worst_quad < A9_QUADRATURE;

    let SpectralModel::Friedrichs(f) = lorentzian() else { unreachable!() };
    let star = discretize(&f, 400, 5.0).unwrap();
    let random = MatrixModel::random(32, 9, 0.1).unwrap();
    let virial = [&star, &random]
        .iter()
        .map(|m| {
            let v = virial_check(m, 0.0).unwrap();
            v.expectation / v.scale.max(1.0)
        })
        .fold(0.0, f64::max);

    let delta = (-0.2, 0.2);
    let mut certs_ok = true;
    let mut cert_detail = vec![];
    for kappa in [0.0125, 0.025, 0.05] {
        let reduced = mourre_certificate(&star, delta, true, kappa, None).unwrap();
        let full = mourre_certificate(&star, delta, false, kappa, Some(reduced.theta_target)).unwrap();
        certs_ok &= reduced.certified() && full.deficiency_rank >= 1;
        cert_detail.push(format!(
            "k={kappa}: reduced theta {:.3} rank {}, unreduced rank {}",
            reduced.theta, reduced.deficiency_rank, full.deficiency_rank
        ));
    }
    report(
        "A9",
        identities_ok && virial < 1e-10 && certs_ok,
        start.elapsed(),
        A9_BUDGET,
        &format!(
            "{A9_TRIPLES} triples: algebraic {worst_alg:.2e}, reduced j=1,2 {worst_hat:.2e} (tol {A9_ALGEBRAIC:e}), \
             two-route {worst_quad:.2e} (tol {A9_QUADRATURE:e}); virial {virial:.2e}; {}",
            cert_detail.join("; ")
        ),
    );
}
