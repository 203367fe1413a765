use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonance_core::decay::{
    self, default_fit_window, lifetime, make_cutoff, remainder_decompose, survival_direct, survival_spectral, Cutoff,
    DecayReport, SurvivalSeries,
};
use resonance_core::feshbach::{
    boundary_trace, feshbach_identity_check, golden_rule, BoundaryTrace, GoldenRule, ReducedFunction, TraceMethod,
};
use resonance_core::fit::{compare_log_model, loglog_slope, LogModelComparison};
use resonance_core::models::{MatrixModel, SpectralModel};
use resonance_core::mourre::{
    commutator_identities_check, mourre_certificate, reduced_commutator_check, virial_check, IdentityKind,
    MourreCertificate, Virial,
};
use resonance_core::resonance::{
    build_taylor, default_radius, find_resonance, winding_number, write_jsonl, Expansion, Resonance, ResonanceRecord,
    TaylorApproximant,
};
use resonance_core::c64;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, StageContext};
use crate::manifest::Run;

/// Relative tolerance of the Feshbach identity, scaled by 1 + |z|.
pub const FESHBACH_TOLERANCE: f64 = 1e-9;
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-10;
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
pub const EXPANSION_MIN_SLOPE: f64 = 2.5;
pub const REMAINDER_MIN_SLOPE: f64 = 2.0;
pub const DIRECT_AGREEMENT: f64 = 1e-3;

fn contract(stage: &str, message: String) -> CliError {
    CliError::Contract { stage: stage.into(), message }
}

struct Setup {
    model: SpectralModel,
    method: TraceMethod,
    interval: (f64, f64),
    lambda: f64,
}

fn setup(cfg: &ExperimentConfig) -> CliResult<Setup> {
    let interval = cfg.interval()?;
    let (model, method) = cfg.trace_setup()?;
    Ok(Setup { lambda: model.lambda(), model, method, interval })
}

#[derive(Debug, Clone, Serialize)]
struct GammaSummary {
    lambda: f64,
    gamma: f64,
    f_lambda: c64,
    method: String,
    closed_form_gamma: Option<f64>,
}

pub fn run_fgr(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    let s = setup(cfg)?;
    run.begin("golden-rule");
    let golden = golden_rule(&s.model, s.method).stage("golden-rule")?;
    let closed = match &s.model {
        SpectralModel::Friedrichs(_) => golden_rule(&s.model, TraceMethod::ClosedForm).ok().map(|g| g.gamma),
        SpectralModel::Matrix(_) => cfg
            .friedrichs()?
            .and_then(|f| golden_rule(&SpectralModel::Friedrichs(f), TraceMethod::ClosedForm).ok())
            .map(|g| g.gamma),
    };
    run.begin("trace");
    let trace = boundary_trace(&s.model, s.interval, 0.0, cfg.n, s.method).stage("trace")?;
    run.write("trace_kappa0.csv", |w| trace.write_csv(w))?;
    run.write_json(
        "gamma.json",
        &GammaSummary {
            lambda: golden.lambda,
            gamma: golden.gamma,
            f_lambda: golden.f_lambda,
            method: trace.method.name().into(),
            closed_form_gamma: closed,
        },
    )
}

struct KappaPoint {
    trace: BoundaryTrace,
    reduced: ReducedFunction,
    approx: TaylorApproximant,
    resonance: Resonance,
    winding: f64,
}

fn resonance_point(s: &Setup, cfg: &ExperimentConfig, kappa: f64, expansion: &Expansion) -> CliResult<KappaPoint> {
    let stage = format!("resonance kappa={kappa}");
    let trace = boundary_trace(&s.model, s.interval, kappa, cfg.n, s.method).stage(&stage)?;
    let reduced = ReducedFunction::for_model(&s.model, kappa);
    let r = default_radius(&trace, s.lambda);
    let approx = build_taylor(&trace, s.lambda, reduced.lambda1, cfg.n, r).stage(&stage)?;
    let resonance = find_resonance(&approx, kappa, expansion).stage(&stage)?;
    let winding = winding_number(&approx, kappa, 0.5 * approx.radius);
    Ok(KappaPoint { trace, reduced, approx, resonance, winding })
}

/// κ₀ with c κ₀² = r/2, c the sup of |Fₙ| on the disc at κ = 0.
fn kappa0_estimate(s: &Setup, cfg: &ExperimentConfig) -> CliResult<f64> {
    let trace = boundary_trace(&s.model, s.interval, 0.0, cfg.n, s.method).stage("kappa0")?;
    let approx = build_taylor(&trace, s.lambda, s.lambda, cfg.n, default_radius(&trace, s.lambda)).stage("kappa0")?;
    Ok((0.5 * approx.radius / approx.bound.max(1e-300)).sqrt())
}

fn golden_and_expansion(s: &Setup) -> CliResult<(GoldenRule, Expansion)> {
    let golden = golden_rule(&s.model, s.method).stage("golden-rule")?;
    Ok((golden, Expansion { lambda: s.lambda, first_order: s.model.first_order(), golden }))
}

fn check_kappa0(cfg: &ExperimentConfig, s: &Setup) -> CliResult<f64> {
    let k0 = kappa0_estimate(s, cfg)?;
    if cfg.kappa.max >= k0 {
        return Err(CliError::Config(format!(
            "kappa.max = {} is not below the model's kappa0 estimate {k0:.4}",
            cfg.kappa.max
        )));
    }
    Ok(k0)
}

#[derive(Debug, Clone, Serialize)]
struct ResonanceEntry {
    kappa: f64,
    lambda_res: c64,
    amplitude: c64,
    iterations: usize,
    newton: bool,
    expansion_gap: f64,
    contraction: f64,
    winding_number: f64,
    amplitude_deviation_over_kappa2: f64,
}

impl ResonanceEntry {
    fn new(p: &KappaPoint) -> Self {
        let r = &p.resonance;
        Self {
            kappa: r.kappa,
            lambda_res: r.lambda_res,
            amplitude: r.amplitude,
            iterations: r.iterations,
            newton: r.newton,
            expansion_gap: r.expansion_gap,
            contraction: r.contraction,
            winding_number: p.winding,
            amplitude_deviation_over_kappa2: (r.amplitude - 1.0).norm() / (r.kappa * r.kappa),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResonanceSummary {
    gamma: f64,
    kappa0_estimate: f64,
    expansion_slope: Option<f64>,
    entries: Vec<ResonanceEntry>,
}

fn record(p: &KappaPoint) -> ResonanceRecord {
    ResonanceRecord::from(&p.resonance)
}

fn check_windings(points: &[KappaPoint]) -> CliResult<()> {
    for p in points {
        if (p.winding - 1.0).abs() > 1e-6 {
            return Err(contract(
                "resonance",
                format!("winding number {:.6} != 1 at kappa = {}", p.winding, p.resonance.kappa),
            ));
        }
    }
    Ok(())
}

pub fn run_resonance(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    let s = setup(cfg)?;
    run.begin("golden-rule");
    let (golden, expansion) = golden_and_expansion(&s)?;
    let k0 = check_kappa0(cfg, &s)?;
    run.begin("resonance");
    let points: Vec<KappaPoint> =
        cfg.kappa.values().into_iter().map(|k| resonance_point(&s, cfg, k, &expansion)).collect::<CliResult<_>>()?;
    let ladder: Vec<Resonance> = points.iter().map(|p| p.resonance.clone()).collect();
    let slope = if ladder.len() >= 3 { Some(resonance_core::resonance::expansion_check(&ladder).stage("resonance")?) } else { None };
    let records: Vec<ResonanceRecord> = points.iter().map(record).collect();
    run.write("resonances.jsonl", |w| write_jsonl(&records, w))?;
    run.write_json(
        "resonance_summary.json",
        &ResonanceSummary {
            gamma: golden.gamma,
            kappa0_estimate: k0,
            expansion_slope: slope,
            entries: points.iter().map(ResonanceEntry::new).collect(),
        },
    )?;
    check_windings(&points)?;
    if let Some(slope) = slope {
        if slope < EXPANSION_MIN_SLOPE {
            return Err(contract("resonance", format!("expansion slope {slope:.3} < {EXPANSION_MIN_SLOPE}")));
        }
    }
    Ok(())
}

fn cutoff(cfg: &ExperimentConfig, s: &Setup) -> CliResult<Cutoff> {
    let (a, b) = s.interval;
    let d = cfg.decay.plateau.unwrap_or(0.5 * (s.lambda - a).min(b - s.lambda));
    make_cutoff(s.interval, s.lambda, d, cfg.n + 2).map_err(|e| CliError::Config(e.to_string()))
}

/// At least `time.points` samples, refined so the carrier e^{-iλ₁t} turns by at most π/4 per step.
fn time_grid(cfg: &ExperimentConfig, kappa: f64, gamma: f64, lambda1: f64) -> Vec<f64> {
    let span = cfg.time.lifetimes * lifetime(kappa, gamma);
    let carrier = (span * lambda1.abs() / std::f64::consts::FRAC_PI_4).ceil() as usize;
    let m = (cfg.time.points - 1).max(carrier);
    (0..=m).map(|k| span * k as f64 / m as f64).collect()
}

struct DecayPoint {
    series: SurvivalSeries,
    report: DecayReport,
}

fn decay_point(cfg: &ExperimentConfig, s: &Setup, p: &KappaPoint, g: &Cutoff, gamma: f64) -> CliResult<DecayPoint> {
    let kappa = p.resonance.kappa;
    let stage = format!("decay kappa={kappa}");
    let times = time_grid(cfg, kappa, gamma, p.reduced.lambda1);
    let series = survival_spectral(&p.trace, &p.reduced, g, &times).stage(&stage)?;
    let rem = remainder_decompose(&series, &p.resonance, cfg.n);
    let fit = decay::fit_resonance_from_decay(&series, default_fit_window(kappa, gamma)).stage(&stage)?;
    let rn = decay::rn_l1_check(&p.trace, &p.approx, &p.reduced).stage(&stage)?;
    let report = DecayReport {
        kappa,
        a_fit: fit.a_tilde,
        lambda_fit: fit.lambda_tilde,
        lambda_res: p.resonance.lambda_res,
        amplitude: p.resonance.amplitude,
        b_sup: rem.sup,
        b_sup_weighted: rem.sup_weighted_n,
        b_sup_weighted_n1: rem.sup_weighted_n1,
        rn_l1_norms: rn,
        uniqueness_gap: (fit.lambda_tilde - p.resonance.lambda_res).norm(),
        g_domination: decay::g_domination(&p.trace, &p.reduced, s.lambda),
        cutoff_derivative_bounds: g.derivative_bounds.clone(),
    };
    Ok(DecayPoint { series, report })
}

#[derive(Debug, Clone, Serialize)]
struct DecaySummary {
    report: DecayReport,
    survival_at_zero: c64,
    max_modulus: f64,
    quadrature_error: f64,
    direct_agreement: Option<f64>,
    recurrence_horizon: Option<f64>,
}

pub fn run_decay(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    let s = setup(cfg)?;
    run.begin("golden-rule");
    let (golden, expansion) = golden_and_expansion(&s)?;
    check_kappa0(cfg, &s)?;
    let kappa = cfg.kappa.max;
    run.begin("resonance");
    let p = resonance_point(&s, cfg, kappa, &expansion)?;
    run.begin("survival");
    let g = cutoff(cfg, &s)?;
    let d = decay_point(cfg, &s, &p, &g, golden.gamma)?;
    run.write("survival_spectral.csv", |w| d.series.write_csv(w))?;
    let mut direct_agreement = None;
    let mut horizon = None;
    if cfg.decay.direct {
        run.begin("direct-propagation");
        let m = cfg.matrix_model()?;
        horizon = m.level_spacing.map(|dx| std::f64::consts::PI / dx);
        let direct = survival_direct(&m, &g, kappa, &d.series.times).stage("direct-propagation")?;
        run.write("survival_direct.csv", |w| direct.write_csv(w))?;
        direct_agreement = Some(direct.sup_distance(&d.series).stage("direct-propagation")?);
    }
    let max_modulus = d.series.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    run.write_json(
        "decay_report.json",
        &DecaySummary {
            survival_at_zero: d.series.values[0],
            max_modulus,
            quadrature_error: d.series.error,
            direct_agreement,
            recurrence_horizon: horizon,
            report: d.report,
        },
    )?;
    if max_modulus > 1.0 + 1e-6 {
        return Err(contract("survival", format!("|S(t)| reaches {max_modulus:.8} > 1")));
    }
    if let Some(dist) = direct_agreement {
        if dist > DIRECT_AGREEMENT {
            return Err(contract("direct-propagation", format!("direct and spectral survival differ by {dist:.3e}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Slopes {
    expansion: f64,
    remainder: f64,
    remainder_weighted_n1: f64,
    remainder_weighted_n: f64,
    rn: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ScalingReport {
    kappas: Vec<f64>,
    slopes: Slopes,
    rn_top_log_model: LogModelComparison,
    remainder_weighted_n_log_model: LogModelComparison,
    remainder_weighted_n1_over_kappa2: Vec<f64>,
    uniqueness_constant: Vec<f64>,
    g_domination: Vec<f64>,
    amplitude_deviation_over_kappa2: Vec<f64>,
    winding_numbers: Vec<f64>,
    contracts: BTreeMap<String, bool>,
}

pub fn run_sweep(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    let s = setup(cfg)?;
    if cfg.kappa.count < 3 {
        return Err(CliError::Config("sweep needs a kappa ladder with at least 3 entries".into()));
    }
    run.begin("golden-rule");
    let (golden, expansion) = golden_and_expansion(&s)?;
    check_kappa0(cfg, &s)?;
    let g = cutoff(cfg, &s)?;
    run.begin("ladder");
    let kappas = cfg.kappa.values();
    let mut points = Vec::new();
    let mut reports = Vec::new();
    for &k in &kappas {
        let p = resonance_point(&s, cfg, k, &expansion)?;
        reports.push(decay_point(cfg, &s, &p, &g, golden.gamma)?.report);
        points.push(p);
    }
    let records: Vec<ResonanceRecord> = points.iter().map(record).collect();
    run.write("resonances.jsonl", |w| write_jsonl(&records, w))?;

    let n = cfg.n;
    let col = |f: &dyn Fn(&DecayReport) -> f64| reports.iter().map(f).collect::<Vec<f64>>();
    let gaps: Vec<f64> = points.iter().map(|p| p.resonance.expansion_gap).collect();
    let b = col(&|r| r.b_sup);
    let bn1 = col(&|r| r.b_sup_weighted_n1);
    let bn = col(&|r| r.b_sup_weighted);
    let rn: Vec<Vec<f64>> = (0..=n).map(|j| col(&|r| r.rn_l1_norms[j])).collect();
    let slope = |y: &[f64]| loglog_slope(&kappas, y).stage("scaling");
    let slopes = Slopes {
        expansion: slope(&gaps)?,
        remainder: slope(&b)?,
        remainder_weighted_n1: slope(&bn1)?,
        remainder_weighted_n: slope(&bn)?,
        rn: rn.iter().map(|y| slope(y)).collect::<CliResult<_>>()?,
    };
    let k2 = |i: usize| kappas[i] * kappas[i];
    let mut contracts = BTreeMap::new();
    contracts.insert("expansion".to_string(), slopes.expansion >= EXPANSION_MIN_SLOPE);
    contracts.insert("remainder".to_string(), slopes.remainder >= REMAINDER_MIN_SLOPE);
    contracts.insert("rn_j0".to_string(), slopes.rn[0] >= REMAINDER_MIN_SLOPE);
    contracts.insert("winding".to_string(), points.iter().all(|p| (p.winding - 1.0).abs() < 1e-6));
    let report = ScalingReport {
        slopes,
        rn_top_log_model: compare_log_model(&kappas, &rn[n], 2.0, 2.3).stage("scaling")?,
        remainder_weighted_n_log_model: compare_log_model(&kappas, &bn, 2.0, 2.3).stage("scaling")?,
        remainder_weighted_n1_over_kappa2: (0..kappas.len()).map(|i| bn1[i] / k2(i)).collect(),
        uniqueness_constant: reports
            .iter()
            .enumerate()
            .map(|(i, r)| r.uniqueness_gap / (k2(i) * r.lambda_res.im.abs()))
            .collect(),
        g_domination: col(&|r| r.g_domination),
        amplitude_deviation_over_kappa2: points.iter().map(|p| ResonanceEntry::new(p).amplitude_deviation_over_kappa2).collect(),
        winding_numbers: points.iter().map(|p| p.winding).collect(),
        kappas: kappas.clone(),
        contracts,
    };
    run.write("scaling_points.csv", |w| {
        use std::io::Write;
        let rn_cols: Vec<String> = (0..=n).map(|j| format!("rn_{j}")).collect();
        writeln!(w, "kappa,gap,b_sup,b_weighted_n1,b_weighted_n,{},uniqueness_gap", rn_cols.join(","))?;
        for (i, r) in reports.iter().enumerate() {
            let rn_vals: Vec<String> = r.rn_l1_norms.iter().map(|v| format!("{v:e}")).collect();
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{},{:e}",
                kappas[i],
                gaps[i],
                r.b_sup,
                r.b_sup_weighted_n1,
                r.b_sup_weighted,
                rn_vals.join(","),
                r.uniqueness_gap
            )?;
        }
        Ok(())
    })?;
    run.write_json("scaling.json", &report)?;
    let failed: Vec<&String> = report.contracts.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k).collect();
    if !failed.is_empty() {
        return Err(contract("scaling", format!("failed contracts: {failed:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct IdentitySummary {
    name: String,
    kind: IdentityKind,
    max_relative_residual: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Debug, Clone, Serialize)]
struct MourreSummary {
    samples: usize,
    identities: Vec<IdentitySummary>,
    virial: Virial,
    virial_passed: bool,
    reduced_certificate: Option<MourreCertificate>,
    unreduced_certificate: Option<MourreCertificate>,
    certificates_passed: Option<bool>,
}

pub fn run_mourre_check(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    let m = &cfg.mourre;
    run.begin("identities");
    let mut worst: BTreeMap<String, (IdentityKind, f64)> = BTreeMap::new();
    let z = c64::new(0.3, 0.7);
    for i in 0..m.samples {
        let dim = m.min_dim + i % (m.max_dim - m.min_dim + 1);
        let model = MatrixModel::random(dim, cfg.seed.wrapping_add(i as u64), 0.1).stage("identities")?;
        for r in commutator_identities_check(&model.h, &model.a, m.eps, m.order, z).stage("identities")? {
            let e = worst.entry(r.name.clone()).or_insert((r.kind, 0.0));
            e.1 = e.1.max(r.relative());
        }
        for j in 1..=2 {
            let r = reduced_commutator_check(&model, m.kappa, j).stage("identities")?;
            let e = worst.entry(format!("reduced-commutator-j{j}")).or_insert((IdentityKind::Algebraic, 0.0));
            e.1 = e.1.max(r);
        }
    }
    let identities: Vec<IdentitySummary> = worst
        .into_iter()
        .map(|(name, (kind, r))| {
            let tolerance = match kind {
                IdentityKind::Algebraic => ALGEBRAIC_TOLERANCE,
                IdentityKind::Quadrature => QUADRATURE_TOLERANCE,
            };
            IdentitySummary { name, kind, max_relative_residual: r, tolerance, passed: r < tolerance }
        })
        .collect();

    run.begin("model");
    let model = cfg.matrix_model_on(m.grid)?;
    let virial = virial_check(&model, 0.0).stage("virial")?;
    let virial_passed = virial.expectation <= 1e-10 * virial.scale.max(1.0);
    let (reduced, unreduced, certs_ok) = if model.commutator_form.is_some() {
        let lambda = model.lambda;
        let delta = m.delta.map(|[a, b]| (a, b)).unwrap_or((lambda - 0.2, lambda + 0.2));
        let red = mourre_certificate(&model, delta, true, m.kappa, None).stage("certificate")?;
        let full = mourre_certificate(&model, delta, false, 0.0, Some(red.theta_target)).stage("certificate")?;
        let ok = red.certified() && full.deficiency_rank >= 1;
        (Some(red), Some(full), Some(ok))
    } else {
        (None, None, None)
    };
    let summary = MourreSummary {
        samples: m.samples,
        identities,
        virial,
        virial_passed,
        reduced_certificate: reduced,
        unreduced_certificate: unreduced,
        certificates_passed: certs_ok,
    };
    run.write_json("mourre.json", &summary)?;
    let mut failed: Vec<String> = summary.identities.iter().filter(|i| !i.passed).map(|i| i.name.clone()).collect();
    if !virial_passed {
        failed.push("virial".into());
    }
    if certs_ok == Some(false) {
        failed.push("mourre-certificate".into());
    }
    if !failed.is_empty() {
        return Err(contract("mourre-check", format!("failed: {failed:?}")));
    }
    println!("mourre-check: {} identities, virial and certificates pass", summary.identities.len());
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct FeshbachSample {
    z: c64,
    kappa: f64,
    residual: f64,
    bound: f64,
}

#[derive(Debug, Clone, Serialize)]
struct FeshbachSummary {
    samples: Vec<FeshbachSample>,
    max_residual: f64,
    max_relative: f64,
    passed: bool,
}

pub fn run_feshbach_check(cfg: &ExperimentConfig, run: &mut Run) -> CliResult<()> {
    run.begin("model");
    let model = cfg.matrix_model_on(cfg.feshbach.grid)?;
    run.begin("feshbach");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.feshbach.samples);
    for _ in 0..cfg.feshbach.samples {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let z = c64::new(model.lambda + rng.gen_range(-1.0..1.0), sign * rng.gen_range(0.01..1.0));
        let kappa = rng.gen_range(0.0..cfg.kappa.max);
        let residual = feshbach_identity_check(&model, z, kappa).stage("feshbach")?;
        samples.push(FeshbachSample { z, kappa, residual, bound: FESHBACH_TOLERANCE * (1.0 + z.norm()) });
    }
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let max_relative = samples.iter().map(|s| s.residual / (1.0 + s.z.norm())).fold(0.0, f64::max);
    let passed = samples.iter().all(|s| s.residual <= s.bound);
    run.write_json("feshbach_check.json", &FeshbachSummary { samples, max_residual, max_relative, passed })?;
    if !passed {
        return Err(contract("feshbach", format!("identity residual {max_relative:.3e} (relative to 1 + |z|) exceeds {FESHBACH_TOLERANCE:e}")));
    }
    println!("feshbach-check: max residual {max_residual:.3e}");
    Ok(())
}
