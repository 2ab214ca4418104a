//! End-to-end behaviour of the run, pairing and selection pipeline.

use postsel_core::engine::{
    collect_runs, pair_events, run_experiment, run_rounds, ExperimentConfig, QuantumSource,
    Selection, Setting, Tally,
};
use postsel_core::hidden::{
    enumerate_assignments, hv_expectation_st, simulate_hv_experiment, NoncontextualModel, HV_AXES,
};
use postsel_core::rng::CounterRng;
use postsel_core::select::{
    check_bound, closed_form, estimate_from_tally, estimate_probabilities, postselect, select_t,
    st_estimate, BoundOutcome,
};
use proptest::prelude::*;

fn within(value: f64, expected: f64, se: f64, k: f64) -> bool {
    (value - expected).abs() <= k * se
}

#[test]
fn undetected_fraction_follows_efficiency() {
    let eta = 0.7;
    let cfg = ExperimentConfig::new(20_000, eta, 11).unwrap();
    let tally = run_experiment(&cfg).unwrap();
    let p = 1.0 - eta * eta;
    for s in Setting::ALL {
        let c = tally.setting(s);
        let n = c.total() as f64;
        let frac = c.zero as f64 / n;
        assert!(
            within(frac, p, (p * (1.0 - p) / n).sqrt(), 5.0),
            "{s:?}: {frac}"
        );
    }
}

#[test]
fn selection_keeps_half_at_full_efficiency() {
    let cfg = ExperimentConfig::new(40_000, 1.0, 3).unwrap();
    let runs = collect_runs(
        &QuantumSource::singlet(),
        &CounterRng::new(cfg.seed),
        1.0,
        0..cfg.trials_per_setting,
    );
    let events = pair_events(&runs).unwrap();
    let ens = postselect(&events);
    assert!(select_t(&events).is_err());
    let n = events.len() as f64 / 2.0;
    let frac = ens.kept_t.len() as f64 / n;
    assert!(within(frac, 0.5, (0.25 / n).sqrt(), 5.0), "{frac}");
    assert!(ens.kept_t.iter().all(|e| e.value() == -1));
    assert_eq!(ens.kept_t.len() as u64 + ens.dropped_t_plus, n as u64);
}

#[test]
fn ideal_run_is_exactly_minus_one() {
    let cfg = ExperimentConfig::new(10_000, 1.0, 5).unwrap();
    let est = estimate_from_tally(&run_experiment(&cfg).unwrap(), Selection::Postselected).unwrap();
    assert_eq!(est.st_value, -1.0);
    assert_eq!(est.standard_error, 0.0);
    assert_eq!(est.joint.unwrap().value, -1.0);
    assert_eq!(check_bound(&est).outcome, BoundOutcome::QuantumViolation);
}

#[test]
fn list_and_tally_paths_agree() {
    let eta = 0.8;
    let rng = CounterRng::new(21);
    let src = QuantumSource::singlet();
    let runs = collect_runs(&src, &rng, eta, 0..5_000);
    let events = pair_events(&runs).unwrap();
    let listed = st_estimate(&estimate_probabilities(&runs, &postselect(&events)).unwrap());
    let tallied = estimate_from_tally(
        &run_rounds(&src, &rng, eta, 0..5_000),
        Selection::Postselected,
    )
    .unwrap();
    assert_eq!(listed.st_value, tallied.st_value);
    assert_eq!(listed.counts, tallied.counts);
}

#[test]
fn tally_merge_is_partition_invariant() {
    let rng = CounterRng::new(8);
    let src = QuantumSource::singlet();
    let whole = run_rounds(&src, &rng, 0.6, 0..3_000);
    let mut parts = Tally::default();
    for r in [0..1, 1..1_234, 1_234..1_235, 1_235..3_000] {
        parts.merge(&run_rounds(&src, &rng, 0.6, r));
    }
    assert_eq!(whole, parts);
}

#[test]
fn detector_estimate_near_closed_form() {
    let eta = 0.75;
    let cfg = ExperimentConfig::new(400_000, eta, 17).unwrap();
    let est = estimate_from_tally(&run_experiment(&cfg).unwrap(), Selection::Postselected).unwrap();
    let cf = closed_form::st_value(eta, Selection::Postselected);
    assert!(
        within(est.st_value, cf, est.standard_error, 4.0),
        "{} vs {cf}",
        est.st_value
    );
    let joint = est.joint.unwrap();
    assert!(
        within(joint.value, cf, joint.standard_error, 4.0),
        "{} vs {cf}",
        joint.value
    );
}

#[test]
fn hv_simulation_stays_non_negative() {
    let model = NoncontextualModel::uniform();
    for seed in 0..5 {
        let cfg = ExperimentConfig::new(20_000, 1.0, seed).unwrap();
        let joint = simulate_hv_experiment(&model, &cfg).unwrap().joint.unwrap();
        assert!(
            joint.value >= -3.0 * joint.standard_error,
            "seed {seed}: {joint:?}"
        );
    }
}

fn arb_model() -> impl Strategy<Value = NoncontextualModel> {
    let grid = enumerate_assignments(2, &HV_AXES).unwrap();
    let n = grid.len();
    (
        prop::collection::vec(0.0f64..1.0, n),
        prop::option::of(0.0f64..=1.0),
    )
        .prop_filter_map("positive weight", move |(raw, d)| {
            let total: f64 = raw.iter().sum();
            (total > 1e-6).then(|| {
                let support = grid
                    .iter()
                    .cloned()
                    .zip(raw.iter().map(|w| w / total))
                    .collect();
                NoncontextualModel::new(support, d).unwrap()
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn any_noncontextual_model_has_non_negative_st(model in arb_model()) {
        prop_assert!(hv_expectation_st(&model) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimate_ignores_event_order(seed in any::<u64>(), rot in 0usize..1000, eta in 0.3f64..=1.0) {
        let rng = CounterRng::new(seed);
        let mut runs = collect_runs(&QuantumSource::singlet(), &rng, eta, 0..250);
        let events = pair_events(&runs).unwrap();
        let base = st_estimate(&estimate_probabilities(&runs, &postselect(&events)).unwrap());

        let mut shuffled = events.clone();
        shuffled.reverse();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        runs.reverse();
        let again = st_estimate(&estimate_probabilities(&runs, &postselect(&shuffled)).unwrap());
        prop_assert_eq!(base.st_value, again.st_value);
        prop_assert_eq!(base.counts, again.counts);
    }

    #[test]
    fn simulated_hv_models_pass(model in arb_model(), seed in any::<u64>()) {
        let cfg = ExperimentConfig::new(2_000, 1.0, seed).unwrap();
        let est = simulate_hv_experiment(&model, &cfg).unwrap();
        let joint = est.joint.unwrap();
        prop_assert!(joint.value >= -3.0 * joint.standard_error - 1e-12, "{:?}", joint);
        prop_assert!((-1.0..=0.0).contains(&est.st_value));
    }
}
