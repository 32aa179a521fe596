use ndarray::{Array1, Array2};
use proptest::prelude::*;

use spikeblock::eval::{diag_mse_direct, diag_mse_scaled, scaled_terms, ExperimentConfig, ModelTemplate, Sweep};
use spikeblock::limits::{mmse_from_saddle, stationarity_residuals};
use spikeblock::{solve_limit, Prior, ProblemSpec, SolverOptions};

fn discrete_prior() -> impl Strategy<Value = Prior> {
    (2usize..6)
        .prop_flat_map(|k| (prop::collection::vec(-3.0..3.0f64, k), prop::collection::vec(0.05..1.0f64, k)))
        .prop_filter_map("atoms must not collapse", |(atoms, w)| {
            let spread = atoms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - atoms.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread < 0.1 {
                return None;
            }
            let total: f64 = w.iter().sum();
            Prior::standardized(atoms, w.iter().map(|x| x / total).collect()).ok()
        })
}

fn any_prior() -> impl Strategy<Value = Prior> {
    prop_oneof![
        Just(Prior::gaussian()),
        Just(Prior::rademacher()),
        (0.05..0.95f64).prop_map(|p| Prior::bernoulli_standardized(p).unwrap()),
        discrete_prior(),
    ]
}

fn vector(n: usize) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(-3.0..3.0f64, n).prop_map(Array1::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_monotone_and_convex(p in any_prior(), g in 0.0..20.0f64) {
        let h = 0.05;
        let (d0, d1, d2) = (
            p.relative_entropy(g).unwrap(),
            p.relative_entropy(g + h).unwrap(),
            p.relative_entropy(g + 2.0 * h).unwrap(),
        );
        prop_assert!(d0 >= 0.0);
        prop_assert!(d1 >= d0 - 1e-12);
        prop_assert!(d0 + d2 - 2.0 * d1 >= -1e-10);
    }

    #[test]
    fn entropy_derivative_matches_difference(p in any_prior(), g in 0.05..20.0f64) {
        let h = 1e-4;
        let fd = (p.relative_entropy(g + h).unwrap() - p.relative_entropy(g - h).unwrap()) / (2.0 * h);
        let d = p.relative_entropy_deriv(g).unwrap();
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((fd - d).abs() < 1e-6, "D' = {}, difference {}", d, fd);
        let fd2 = (p.relative_entropy_deriv(g + h).unwrap() - p.relative_entropy_deriv(g - h).unwrap()) / (2.0 * h);
        prop_assert!((fd2 - p.relative_entropy_second_deriv(g).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn posterior_variance_is_mean_slope(p in any_prior(), a in -6.0..6.0f64, b in 0.0..8.0f64) {
        let h = 1e-5;
        let v = p.posterior_variance(a, b).unwrap();
        prop_assert!(v >= 0.0);
        let fd = (p.posterior_mean(a + h, b).unwrap() - p.posterior_mean(a - h, b).unwrap()) / (2.0 * h);
        prop_assert!((fd - v).abs() < 1e-6 * (1.0 + v));
    }

    #[test]
    fn direct_mse_ignores_sign(u in vector(12), s in -2.0..2.0f64) {
        let uh = &u * s;
        prop_assert!((diag_mse_direct(&u, &uh) - diag_mse_direct(&u, &(-&uh))).abs() < 1e-12);
        prop_assert_eq!(diag_mse_direct(&u, &(-&u)), 0.0);
        prop_assert!(diag_mse_direct(&u, &uh) >= 0.0);
    }

    #[test]
    fn scaled_terms_ignore_scale_and_sign(u in vector(10), v in vector(10), s in 0.1..10.0f64) {
        prop_assume!(v.dot(&v) > 1e-6);
        let (a1, b1) = scaled_terms(&u, &v).unwrap();
        let (a2, b2) = scaled_terms(&u, &(&v * -s)).unwrap();
        prop_assert!((a1 - a2).abs() < 1e-12);
        prop_assert!((b1 - b2).abs() < 1e-9 * (1.0 + b1));
        prop_assert!(diag_mse_scaled(&u, &v).unwrap() >= -1e-12);
    }
}

fn random_spec() -> impl Strategy<Value = ProblemSpec> {
    (1usize..=3)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.2..1.0f64, k),
                prop::collection::vec(any_prior(), k),
                prop::collection::vec(0.0..4.0f64, k * k),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0..2.0f64], k),
            )
        })
        .prop_map(|(beta, priors, lam, r)| {
            let k = beta.len();
            let total: f64 = beta.iter().sum();
            let beta = beta.iter().map(|b| b / total).collect();
            ProblemSpec::new(beta, priors, Array2::from_shape_vec((k, k), lam).unwrap(), r).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn saddle_point_is_stationary(spec in random_spec()) {
        let saddle = solve_limit(&spec, &SolverOptions::default()).unwrap();
        let lam = spec.lambda();
        let k = spec.groups();
        for i in 0..k {
            let expect: f64 = (0..k).map(|j| (lam[[i, j]] + lam[[j, i]]) * saddle.q_star[j]).sum();
            prop_assert!((saddle.r_tilde_star[i] - expect).abs() < 1e-8);
            let beta = spec.beta()[i];
            prop_assert!((-1e-12..=beta + 1e-12).contains(&saddle.q_star[i]));
            if saddle.q_star[i] < beta - 1e-9 {
                let d = spec.priors()[i].relative_entropy_deriv(spec.r()[i] + saddle.r_tilde_star[i]).unwrap();
                prop_assert!((saddle.q_star[i] - 2.0 * beta * d).abs() < 1e-8);
            }
        }
        let (inner, outer) = stationarity_residuals(&spec, &saddle.q_star, &saddle.r_tilde_star).unwrap();
        prop_assert!(inner.max(outer) < 1e-8);
        let m = mmse_from_saddle(&saddle, &spec).unwrap();
        prop_assert!(m.vector_mmse.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn priors_round_trip_through_json(p in any_prior()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: Prior = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn experiment_config_round_trips(
        alpha in 0.0..1.0f64,
        lambda in 0.1..5.0f64,
        values in prop::collection::vec(0.0..1.0f64, 1..6),
        trials in 1usize..100,
        seed in any::<u64>(),
        p in any_prior(),
    ) {
        let text = format!(
            r#"{{"model": {{"kind": "two_group", "alpha": {alpha}, "lambda": {lambda}, "priors": [{{"kind": "gaussian"}}, {prior}]}},
                "n": 64, "sweep": {{"variable": "alpha", "values": {values:?}}},
                "algorithms": [{{"kind": "amp"}}, {{"kind": "joint_pca"}}], "trials": {trials}, "base_seed": {seed}}}"#,
            prior = serde_json::to_string(&p).unwrap(),
        );
        let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
        let two_group = matches!(cfg.model, ModelTemplate::TwoGroup { .. });
        prop_assert!(two_group);
        let same_grid = matches!(&cfg.sweep, Sweep::Alpha { values: v } if v == &values);
        prop_assert!(same_grid);
        let again: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let text = r#"{"model": {"kind": "two_group", "lambda": 2.0, "priors": [{"kind": "gaussian"}, {"kind": "gaussian"}]},
        "n": 64, "sweep": {"variable": "alpha", "values": [0.5]}, "algorithms": [], "trials": 1, "base_seed": 0, "colour": 1}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
}
