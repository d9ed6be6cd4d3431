//! Offspring-law contracts across parameter grids: mass normalization,
//! moment consistency, Monte Carlo sampler checks, and total-variation
//! agreement of the aggregate sampler with brute-force convolutions.

use bpre_core::offspring::{OffspringLaw, SumSample};
use bpre_core::simulator::{derive_stream, StreamPurpose};
use std::collections::HashMap;

fn parameter_grid() -> Vec<OffspringLaw> {
    let mut laws = Vec::new();
    for i in 1..=9 {
        let t = i as f64 * 0.1;
        laws.push(OffspringLaw::geometric1(t).unwrap());
        laws.push(OffspringLaw::two_point(3, t).unwrap());
        laws.push(OffspringLaw::shifted_poisson(t * 3.0).unwrap());
    }
    laws.push(OffspringLaw::two_point(17, 0.25).unwrap());
    laws
}

/// Support cutoff leaving tail mass below 1e-13 for every grid law.
fn cap(law: &OffspringLaw) -> u64 {
    match law {
        OffspringLaw::TwoPoint { high, .. } => *high,
        OffspringLaw::Geometric1 { .. } => 600,
        OffspringLaw::ShiftedPoisson { .. } => 120,
    }
}

#[test]
fn pmf_sums_to_one() {
    for law in parameter_grid() {
        let total: f64 = (1..=cap(&law)).map(|k| law.pmf(k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{law:?}: total = {total}");
    }
}

#[test]
fn mean_matches_truncated_first_moment() {
    for law in parameter_grid() {
        let m: f64 = (1..=cap(&law)).map(|k| k as f64 * law.pmf(k).unwrap()).sum();
        assert!((m - law.mean()).abs() < 1e-10, "{law:?}: {m} vs {}", law.mean());
    }
}

#[test]
fn variance_matches_truncated_second_moment() {
    for law in parameter_grid() {
        let m = law.mean();
        let v: f64 = (1..=cap(&law))
            .map(|k| {
                let d = k as f64 - m;
                d * d * law.pmf(k).unwrap()
            })
            .sum();
        assert!((v - law.variance()).abs() < 1e-9, "{law:?}: {v} vs {}", law.variance());
    }
}

#[test]
fn second_moment_dominates_squared_mean() {
    for law in parameter_grid() {
        let m2 = law.moment(2.0).unwrap();
        let m = law.mean();
        assert!(m2 >= m * m - 1e-12, "{law:?}");
        if law.variance() > 0.0 {
            assert!(m2 > m * m, "{law:?}: Jensen should be strict");
        }
    }
}

#[test]
fn fractional_moments_match_direct_sums() {
    for law in parameter_grid() {
        for p in [1.2, 1.5, 2.5, 3.0] {
            let direct: f64 = (1..=cap(&law))
                .map(|k| (k as f64).powf(p) * law.pmf(k).unwrap())
                .sum();
            let series = law.moment(p).unwrap();
            assert!(
                (series - direct).abs() < 1e-9 * direct.max(1.0),
                "{law:?} p = {p}: {series} vs {direct}"
            );
        }
    }
}

#[test]
fn k_log_k_matches_direct_sum() {
    for law in parameter_grid() {
        let direct: f64 = (1..=cap(&law))
            .map(|k| k as f64 * (k as f64).ln() * law.pmf(k).unwrap())
            .sum();
        let series = law.k_log_k_moment().unwrap();
        assert!(
            (series - direct).abs() < 1e-9 * direct.max(1.0),
            "{law:?}: {series} vs {direct}"
        );
    }
}

#[test]
fn geometric_sample_mean_within_monte_carlo_error() {
    let law = OffspringLaw::geometric1(0.5).unwrap();
    let mut rng = derive_stream(101, StreamPurpose::Replicate, 0);
    let n = 1_000_000u64;
    let total: u64 = (0..n).map(|_| law.sample(&mut rng)).sum();
    let mean = total as f64 / n as f64;
    // var = (1-s)/s^2 = 2, SE = sqrt(2/1e6).
    let se = (2.0_f64 / n as f64).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * se, "mean = {mean}");
}

#[test]
fn per_particle_samples_respect_support() {
    let mut rng = derive_stream(55, StreamPurpose::Replicate, 0);
    for law in parameter_grid() {
        for _ in 0..2_000 {
            let k = law.sample(&mut rng);
            assert!(k >= 1, "{law:?} produced {k}");
            assert!(law.pmf(k).unwrap() > 0.0, "{law:?} produced off-support {k}");
        }
    }
}

/// Brute-force n-fold convolution of the pmf, truncated where mass is gone.
fn convolve(law: &OffspringLaw, count: usize, support_cap: u64) -> Vec<f64> {
    let pmf: Vec<f64> = (0..=support_cap).map(|k| {
        if k == 0 {
            0.0
        } else {
            law.pmf(k).unwrap()
        }
    })
    .collect();
    let cap = (support_cap as usize) * count;
    let mut dist = vec![0.0; cap + 1];
    dist[0] = 1.0;
    for _ in 0..count {
        let mut next = vec![0.0; cap + 1];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (k, &q) in pmf.iter().enumerate() {
                if q > 0.0 && i + k <= cap {
                    next[i + k] += p * q;
                }
            }
        }
        dist = next;
    }
    dist
}

#[test]
fn aggregate_sampler_matches_convolution_in_total_variation() {
    let laws = [
        OffspringLaw::two_point(3, 0.5).unwrap(),
        OffspringLaw::geometric1(0.5).unwrap(),
        OffspringLaw::geometric1(0.3).unwrap(),
        OffspringLaw::shifted_poisson(1.0).unwrap(),
    ];
    let draws = 100_000;
    for (li, law) in laws.iter().enumerate() {
        let support_cap = match law {
            OffspringLaw::TwoPoint { high, .. } => *high,
            _ => 60,
        };
        for count in 1..=6usize {
            let exact = convolve(law, count, support_cap);
            let mut rng = derive_stream(500 + li as u64, StreamPurpose::Replicate, count as u64);
            let mut freq: HashMap<u128, u64> = HashMap::new();
            for _ in 0..draws {
                match law.sample_sum(count as u128, &mut rng) {
                    SumSample::Exact(v) => *freq.entry(v).or_insert(0) += 1,
                    SumSample::Approximate { .. } => panic!("tiny counts must stay exact"),
                }
            }
            let mut tv = 0.0;
            for (j, &p) in exact.iter().enumerate() {
                let emp = freq.remove(&(j as u128)).unwrap_or(0) as f64 / draws as f64;
                tv += (emp - p).abs();
            }
            // Mass the sampler put beyond the convolution's truncation.
            tv += freq.values().map(|&c| c as f64 / draws as f64).sum::<f64>();
            tv /= 2.0;
            assert!(tv < 0.02, "{law:?} count = {count}: TV = {tv}");
        }
    }
}

#[test]
fn geometric_aggregate_mass_at_minimum() {
    // Sum of 4 Geometric1(0.5) equals 4 exactly when the negative-binomial
    // part is 0: probability 0.5^4 = 0.0625.
    let law = OffspringLaw::geometric1(0.5).unwrap();
    let mut rng = derive_stream(7_777, StreamPurpose::Replicate, 0);
    let draws = 200_000;
    let hits = (0..draws)
        .filter(|_| law.sample_sum(4, &mut rng) == SumSample::Exact(4))
        .count();
    let p = hits as f64 / draws as f64;
    let se = (0.0625_f64 * (1.0 - 0.0625) / draws as f64).sqrt();
    assert!((p - 0.0625).abs() < 4.0 * se, "p = {p}");
}
