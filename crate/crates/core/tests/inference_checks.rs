//! Interval equivalence on simulated data, coverage smoke tests, and the
//! harmonic-moment estimator on martingale samples.

use bpre_core::environment::EnvironmentModel;
use bpre_core::inference::{
    ci_criticality, ci_population, coverage_experiment, harmonic_moment_estimate,
    CoverageTarget,
};
use bpre_core::offspring::OffspringLaw;
use bpre_core::simulator::{run_summaries, ReplicationMode, RunLimits};

fn two_geometric() -> EnvironmentModel {
    EnvironmentModel::new(vec![
        (OffspringLaw::geometric1(0.3).unwrap(), 0.5),
        (OffspringLaw::geometric1(0.6).unwrap(), 0.5),
    ])
    .unwrap()
}

#[test]
fn interval_events_coincide_replicate_by_replicate() {
    let model = two_geometric();
    let (mu, sigma_sq) = model.criticality();
    let sigma = sigma_sq.sqrt();
    let n = 64;
    let kappa = 0.1;
    let population = ci_population(n, mu, sigma, kappa).unwrap();
    let summaries = run_summaries(
        &model,
        n,
        2_000,
        51,
        ReplicationMode::Annealed,
        RunLimits::default(),
    )
    .unwrap();
    for (i, p) in summaries.iter().enumerate() {
        let mu_hit = ci_criticality(p.log_z, n, sigma, kappa).unwrap().contains(mu);
        let zn_hit = population.contains(p.log_z);
        assert_eq!(mu_hit, zn_hit, "replicate {i} disagrees");
    }
}

#[test]
fn coverage_counters_are_identical_across_targets() {
    let model = two_geometric();
    let a = coverage_experiment(
        &model,
        64,
        0.1,
        1_000,
        90,
        CoverageTarget::Criticality,
        RunLimits::default(),
    )
    .unwrap();
    let b = coverage_experiment(
        &model,
        64,
        0.1,
        1_000,
        90,
        CoverageTarget::Population,
        RunLimits::default(),
    )
    .unwrap();
    assert_eq!(a.hits, b.hits);
    assert_eq!(a.coverage.to_bits(), b.coverage.to_bits());
}

#[test]
fn half_kappa_means_half_coverage() {
    let model = two_geometric();
    let out = coverage_experiment(
        &model,
        128,
        0.5,
        800,
        17,
        CoverageTarget::Criticality,
        RunLimits::default(),
    )
    .unwrap();
    // SE = sqrt(0.25/800) ~ 0.0177; allow 4 SE around 0.5.
    assert!(
        (out.coverage - 0.5).abs() < 4.0 * 0.0177,
        "coverage = {}",
        out.coverage
    );
}

#[test]
fn degenerate_environment_rejected() {
    let model =
        EnvironmentModel::new(vec![(OffspringLaw::two_point(2, 1.0).unwrap(), 1.0)]).unwrap();
    assert!(coverage_experiment(
        &model,
        16,
        0.1,
        100,
        1,
        CoverageTarget::Criticality,
        RunLimits::default()
    )
    .is_err());
}

#[test]
fn harmonic_moment_is_stable_on_martingale_samples() {
    let model = two_geometric();
    let summaries = run_summaries(
        &model,
        20,
        10_000,
        33,
        ReplicationMode::Annealed,
        RunLimits::default(),
    )
    .unwrap();
    let w: Vec<f64> = summaries.iter().map(|p| p.log_w.exp()).collect();
    let hm = harmonic_moment_estimate(&w, 0.1).unwrap();
    assert!(hm.estimate.is_finite() && hm.estimate > 0.0);
    assert!(
        hm.std_error / hm.estimate < 0.05,
        "relative SE = {}",
        hm.std_error / hm.estimate
    );
    // Stability across horizons supports a finite harmonic moment.
    let summaries2 = run_summaries(
        &model,
        40,
        10_000,
        34,
        ReplicationMode::Annealed,
        RunLimits::default(),
    )
    .unwrap();
    let w2: Vec<f64> = summaries2.iter().map(|p| p.log_w.exp()).collect();
    let hm2 = harmonic_moment_estimate(&w2, 0.1).unwrap();
    assert!(
        (hm.estimate - hm2.estimate).abs() < 8.0 * (hm.std_error + hm2.std_error),
        "n=20: {} vs n=40: {}",
        hm.estimate,
        hm2.estimate
    );
}
