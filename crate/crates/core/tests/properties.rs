use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resonance_core::c64;
use resonance_core::decay::{log_ratio_bound, make_cutoff, reciprocal_derivatives, SurvivalSeries, SurvivalSource};
use resonance_core::feshbach::{boundary_trace, f_offaxis, feshbach_identity_check, TraceMethod};
use resonance_core::linalg;
use resonance_core::models::{build_friedrichs, Coupling, FriedrichsParams, MatrixModel, SpectralModel};
use resonance_core::mourre::{commutator_identities_check, hermitian_form, iterated_commutators, IdentityKind};
use resonance_core::resonance::{read_jsonl, write_jsonl, ResonanceRecord};

fn nonzero() -> impl Strategy<Value = c64> {
    (-6.0f64..6.0, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(m, a)| c64::from_polar(10f64.powf(m), a))
}

fn coupling() -> impl Strategy<Value = Coupling> {
    prop_oneof![
        (0.1f64..2.0, -1.0f64..1.0, 0.2f64..3.0).prop_map(|(g, x0, w)| Coupling::Lorentzian { g, x0, w }),
        (0.1f64..2.0, -0.5f64..0.5, 1.5f64..3.0).prop_map(|(g, center, radius)| Coupling::Semicircle { g, center, radius }),
    ]
}

proptest! {
    #[test]
    fn log_ratio_bound_holds(w1 in nonzero(), w2 in nonzero()) {
        let (lhs, rhs) = log_ratio_bound(w1, w2).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15, "{lhs} > {rhs}");
    }

    #[test]
    fn nearby_values_have_nearby_logs(w in nonzero(), d in 0.0f64..0.01, a in -3.2f64..3.2) {
        let w2 = w * (c64::new(1.0, 0.0) + c64::from_polar(d, a));
        let (lhs, rhs) = log_ratio_bound(w, w2).unwrap();
        prop_assert!(lhs <= rhs + 1e-15);
    }

    #[test]
    fn herglotz_sign(c in coupling(), x in -1.0f64..1.0, y in 0.01f64..3.0) {
        let model = SpectralModel::Friedrichs(build_friedrichs(&FriedrichsParams { lambda: 0.0, coupling: c, diag_shift: 0.0 }).unwrap());
        let up = f_offaxis(&model, c64::new(x, y), 0.0).unwrap();
        let down = f_offaxis(&model, c64::new(x, -y), 0.0).unwrap();
        prop_assert!(up.im < 0.0);
        prop_assert!((up.conj() - down).norm() <= 1e-12 * up.norm().max(1.0));
    }

    #[test]
    fn cutoff_is_a_plateau_bump(lambda in -0.3f64..0.3, frac in 0.05f64..0.9, mu in -1.0f64..1.0) {
        let d = frac * (lambda + 0.5).min(0.5 - lambda);
        let g = make_cutoff((-0.5, 0.5), lambda, d, 3).unwrap();
        let v = g.eval(mu);
        prop_assert!((0.0..=1.0).contains(&v));
        if (mu - lambda).abs() <= d {
            prop_assert_eq!(v, 1.0);
        }
        if !(-0.5..=0.5).contains(&mu) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn reciprocal_derivatives_invert_leibniz(d in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6)) {
        let mut d: Vec<c64> = d.into_iter().map(|(re, im)| c64::new(re, im)).collect();
        d[0] += c64::new(3.0, 0.0);
        let g = reciprocal_derivatives(&d);
        for k in 0..d.len() {
            let mut sum = c64::new(0.0, 0.0);
            let mut binom = 1.0;
            for j in 0..=k {
                sum += g[j] * d[k - j] * binom;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            let expected = if k == 0 { 1.0 } else { 0.0 };
            prop_assert!((sum - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_derivatives_match_finite_differences(x0 in -0.5f64..0.5, w in 0.5f64..2.0, e in -0.4f64..0.4) {
        let model = SpectralModel::Friedrichs(build_friedrichs(&FriedrichsParams {
            lambda: 0.0,
            coupling: Coupling::Lorentzian { g: 1.0, x0, w },
            diag_shift: 0.0,
        }).unwrap());
        let trace = boundary_trace(&model, (-0.5, 0.5), 0.0, 2, TraceMethod::ClosedForm).unwrap();
        let h = 1e-4;
        for k in 1..=2 {
            let fd = (trace.derivative(k - 1, e + h) - trace.derivative(k - 1, e - h)) / (2.0 * h);
            let scale = trace.derivative(k, e).norm().max(1.0);
            prop_assert!((fd - trace.derivative(k, e)).norm() < 1e-6 * scale);
        }
    }

    #[test]
    fn jsonl_round_trip(kappa in 0.0f64..1.0, re in -1.0f64..1.0, im in -1.0f64..0.0, a in -2.0f64..2.0) {
        let rec = ResonanceRecord { kappa, re_lambda: re, im_lambda: im, gamma: -2.0 * im, re_a: a, im_a: -a, gap: kappa * re.abs() };
        let mut buf = Vec::new();
        write_jsonl(&[rec, rec], &mut buf).unwrap();
        prop_assert_eq!(read_jsonl(buf.as_slice()).unwrap(), vec![rec, rec]);
    }

    #[test]
    fn survival_csv_round_trip(values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20), kappa in 0.0f64..1.0) {
        let series = SurvivalSeries {
            times: (0..values.len()).map(|k| 0.37 * k as f64).collect(),
            values: values.into_iter().map(|(re, im)| c64::new(re, im)).collect(),
            source: SurvivalSource::SpectralIntegral,
            kappa,
            error: 1e-12,
        };
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        prop_assert_eq!(SurvivalSeries::read_csv(buf.as_slice()).unwrap(), series);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn feshbach_identity_on_random_models(seed in any::<u64>(), dim in 2usize..24, x in -2.0f64..2.0, y in 0.05f64..2.0, kappa in 0.0f64..1.0) {
        let model = MatrixModel::random(dim, seed, 0.1).unwrap();
        for z in [c64::new(x, y), c64::new(x, -y)] {
            prop_assert!(feshbach_identity_check(&model, z, kappa).unwrap() < 1e-10 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn commutator_identities_on_random_pairs(seed in any::<u64>(), dim in 2usize..8, n in 1usize..5, eps in 0.05f64..1.0, x in -2.0f64..2.0, y in 0.2f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = linalg::random_hermitian(dim, &mut rng);
        let a = linalg::random_hermitian(dim, &mut rng);
        for r in commutator_identities_check(&h, &a, eps, n, c64::new(x, y)).unwrap() {
            let tol = match r.kind {
                IdentityKind::Algebraic => 1e-10,
                IdentityKind::Quadrature => 1e-6,
            };
            prop_assert!(r.relative() < tol, "{} = {:e}", r.name, r.relative());
        }
    }

    #[test]
    fn iterated_commutator_forms_are_hermitian(seed in any::<u64>(), dim in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = linalg::random_hermitian(dim, &mut rng);
        let a = linalg::random_hermitian(dim, &mut rng);
        for (k, ad) in iterated_commutators(&h, &a, 4).iter().enumerate() {
            prop_assert!(linalg::hermiticity_residual(&hermitian_form(ad, k)) < 1e-13);
        }
    }
}
