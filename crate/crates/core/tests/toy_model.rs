use gprg::ek::EKParams;
use gprg::flow::{run_weighted_flow, FlowSettings, StopRule, WeightedFlowOptions};
use gprg::spectral::hermite_probabilist;
use gprg::toy::{
    compare_weights, run_toy_experiment, toy_kernel, toy_theory_f1_exact_saddle, weighted_ek_predictor, ToyConfig,
};

#[test]
fn quadrupling_trials_halves_the_stderr() {
    let mut c = ToyConfig::paper(1.0);
    c.trials = 1000;
    let small = run_toy_experiment(&c).unwrap();
    c.trials = 4000;
    let large = run_toy_experiment(&c).unwrap();
    let ratio = small.f1_stderr / large.f1_stderr;
    assert!((ratio - 2.0).abs() <= 0.4, "stderr ratio {ratio}");
}

#[test]
fn test_set_and_quadrature_projections_agree() {
    let mut c = ToyConfig::paper(2.0);
    c.trials = 2000;
    let r = run_toy_experiment(&c).unwrap();
    let diff = (r.f1_experiment - r.f1_test_set).abs();
    // The test-set estimate carries extra sampling error from its 1000 points.
    assert!(diff < 0.1 * r.f1_experiment.abs() + 3.0 * r.f1_stderr, "{r:?}");
    assert_eq!(r.warnings, Vec::<String>::new());
}

#[test]
fn weight_ratio_does_not_depend_on_lambda1() {
    for l1 in [0.5, 1.0, 2.0, 4.0] {
        let cmp = compare_weights(&ToyConfig::paper(l1)).unwrap();
        assert!((cmp.ratio - 2.0).abs() < 1e-9, "{l1}: {cmp:?}");
        assert!((cmp.toy_mean - (1.0 - 0.1 / 400.0 * 2.0)).abs() < 1e-12);
    }
}

#[test]
fn flowed_weight_in_the_saddle_equations() {
    let c = ToyConfig::paper(1.0);
    let kernel = toy_kernel(c.lambda1, c.lambda2).unwrap();
    let measure = c.measure().unwrap();
    let settings = FlowSettings {
        stop_rule: StopRule::Count(1),
        epsilon: 0.5,
        ..FlowSettings::default()
    };
    let run = run_weighted_flow(kernel.spectrum(), c.sigma2, c.eta, &settings, &measure, &WeightedFlowOptions::default())
        .unwrap();
    let theory = &run.run.theory;
    assert_eq!(theory.spectrum.ids(), vec![1]);
    let grid = measure.grid().unwrap();
    let params = EKParams::new(c.eta, theory.sigma_c2).unwrap();
    let pred = weighted_ek_predictor(
        &theory.spectrum,
        |x| hermite_probabilist(5, x[0]),
        theory.weight.values(),
        &params,
        &grid,
    )
    .unwrap();
    assert!(!pred.nonpositive_weight);
    // The flowed weight is linear in He2, and x·He5 only overlaps He4 and
    // He6, so the first-order weight induces no coefficient on x; the toy's
    // He2² weight does.
    assert!(pred.coefficients[0].abs() < 1e-12, "{:?}", pred.coefficients);
    assert!(toy_theory_f1_exact_saddle(&c).unwrap() < 0.0);
}
