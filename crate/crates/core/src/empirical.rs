//! Statistics over empirical samples: exact Wasserstein-1 distance to the
//! standard normal, Kolmogorov-Smirnov distance, weighted CDF-deviation
//! profiles, tail frequencies, and log-log rate fitting.
//!
//! The Wasserstein integral is computed in closed form. Between consecutive
//! order statistics the empirical CDF is constant, so the integrand
//! `|F - Phi|` changes sign at most once, at `Phi^{-1}(level)`; each piece
//! integrates via the antiderivative `x Phi(x) + phi(x)` (or its survival
//! form on the right half-line, avoiding cancellation), and the two
//! unbounded tails are `int_{-inf}^{min} Phi` and `int_{max}^{inf} (1-Phi)`.
//! No truncation or quadrature is involved.

use crate::gaussian;
use crate::simulator::{derive_stream, EmpiricalSample, StreamPurpose};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Power-law fit of distances against horizons in log-log coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub points: Vec<(usize, f64)>,
}

/// Weighted CDF-deviation profile `(1 + |x|^(1+delta')) |F_N(x) - Phi(x)|`.
#[derive(Debug, Clone)]
pub struct NonuniformProfile {
    pub sup_weighted: f64,
    pub per_x: Vec<(f64, f64)>,
}

/// Tail frequency with its binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// Fraction of values `>= x`.
    Upper,
    /// Fraction of values `<= x`.
    Lower,
}

/// Empirical CDF at `x` via binary search.
pub fn ecdf(sample: &EmpiricalSample, x: f64) -> Result<f64> {
    let values = nonempty(sample)?;
    Ok(count_at_most(values, x) as f64 / values.len() as f64)
}

/// Exact `int |F_N - Phi|` for the sorted sample.
pub fn wasserstein_to_normal(sample: &EmpiricalSample) -> Result<f64> {
    let values = nonempty(sample)?;
    Ok(wasserstein_uniform_sorted(values))
}

/// Kolmogorov-Smirnov distance `sup_x |F_N(x) - Phi(x)|`, evaluated at both
/// one-sided limits of every order statistic.
pub fn ks_to_normal(sample: &EmpiricalSample) -> Result<f64> {
    let values = nonempty(sample)?;
    let n = values.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let p = gaussian::cdf(x);
        sup = sup
            .max(((i + 1) as f64 / n - p).abs())
            .max((i as f64 / n - p).abs());
    }
    Ok(sup)
}

/// Weighted deviation profile over the given grid plus every order
/// statistic (both one-sided limits; the larger is reported).
pub fn nonuniform_profile(
    sample: &EmpiricalSample,
    delta_prime: f64,
    grid: &[f64],
) -> Result<NonuniformProfile> {
    if !(delta_prime > 0.0) {
        return Err(Error::Domain(format!(
            "delta' must be positive, got {delta_prime}"
        )));
    }
    let values = nonempty(sample)?;
    let n = values.len() as f64;
    let weight = |x: f64| 1.0 + x.abs().powf(1.0 + delta_prime);

    let mut per_x: Vec<(f64, f64)> = Vec::with_capacity(grid.len() + values.len());
    for &x in grid {
        let dev = (count_at_most(values, x) as f64 / n - gaussian::cdf(x)).abs();
        per_x.push((x, dev * weight(x)));
    }
    // Order statistics: runs of equal values share one evaluation.
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let mut j = i + 1;
        while j < values.len() && values[j] == x {
            j += 1;
        }
        let p = gaussian::cdf(x);
        let dev = (j as f64 / n - p).abs().max((i as f64 / n - p).abs());
        per_x.push((x, dev * weight(x)));
        i = j;
    }
    per_x.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite profile points"));
    let sup_weighted = per_x.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    Ok(NonuniformProfile {
        sup_weighted,
        per_x,
    })
}

/// Tail frequency at `x` with binomial standard error.
pub fn tail_freq(sample: &EmpiricalSample, x: f64, side: TailSide) -> Result<TailEstimate> {
    let values = nonempty(sample)?;
    let n = values.len();
    let count = match side {
        TailSide::Upper => n - values.partition_point(|v| *v < x),
        TailSide::Lower => count_at_most(values, x),
    };
    let p = count as f64 / n as f64;
    Ok(TailEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
    })
}

/// Ordinary least squares of `log d` on `log n`.
pub fn fit_rate(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(n, d) in points {
        if n == 0 {
            return Err(Error::Domain("rate fit requires positive n".into()));
        }
        if !(d > 0.0) {
            return Err(Error::Domain(format!(
                "rate fit requires positive distances, got {d} at n = {n}"
            )));
        }
    }
    let mut seen: Vec<usize> = points.iter().map(|&(n, _)| n).collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != points.len() {
        return Err(Error::Domain("rate fit requires distinct n".into()));
    }

    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, d)| d.ln()).collect();
    let len = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / len;
    let ybar = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms,
        points: points.to_vec(),
    })
}

/// Percentile bootstrap interval for the Wasserstein distance:
/// `resamples` draws with replacement, interval from the 2.5% and 97.5%
/// order statistics. Resample `r` uses the stream
/// `(sample.master_seed, Bootstrap, r)`, so the interval is reproducible
/// and thread-count independent.
pub fn wasserstein_bootstrap(sample: &EmpiricalSample, resamples: usize) -> Result<(f64, f64)> {
    let values = nonempty(sample)?;
    if resamples < 2 {
        return Err(Error::Domain("bootstrap needs at least 2 resamples".into()));
    }
    let n = values.len();
    let crossings = uniform_crossings(n);
    let mut dws: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_stream(sample.master_seed, StreamPurpose::Bootstrap, r as u64);
            let mut draw: Vec<f64> = (0..n).map(|_| values[rng.gen_range(0..n)]).collect();
            draw.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
            wasserstein_uniform_with_crossings(&draw, &crossings)
        })
        .collect();
    dws.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let pick = |q: f64| dws[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok((pick(0.025), pick(0.975)))
}

/// Exact Wasserstein distance between an arbitrary step CDF and the
/// standard normal. `xs` are the jump locations in ascending order and
/// `cum[i]` the CDF value just after `xs[i]`; `cum` must be nondecreasing
/// and end at 1.
pub fn wasserstein_step_cdf(xs: &[f64], cum: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.len() != cum.len() {
        return Err(Error::Domain(
            "step CDF needs matching, nonempty jump and level arrays".into(),
        ));
    }
    if (cum[xs.len() - 1] - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "step CDF must end at 1, got {}",
            cum[xs.len() - 1]
        )));
    }
    let mut total = gaussian::cdf_integral(xs[0]);
    for i in 0..xs.len() - 1 {
        let level = cum[i];
        let crossing = if level >= 1.0 {
            f64::INFINITY
        } else {
            gaussian::quantile(level)?
        };
        total += segment_abs(xs[i], xs[i + 1], level, crossing);
    }
    total += gaussian::survival_integral(xs[xs.len() - 1]);
    Ok(total)
}

pub(crate) fn wasserstein_uniform_sorted(values: &[f64]) -> f64 {
    let crossings = uniform_crossings(values.len());
    wasserstein_uniform_with_crossings(values, &crossings)
}

/// `Phi^{-1}((i+1)/n)` for i = 0..n-2: the sign-change locations shared by
/// every sample of size `n`.
pub(crate) fn uniform_crossings(n: usize) -> Vec<f64> {
    (1..n)
        .map(|i| gaussian::quantile(i as f64 / n as f64).expect("level in (0,1)"))
        .collect()
}

pub(crate) fn wasserstein_uniform_with_crossings(values: &[f64], crossings: &[f64]) -> f64 {
    let n = values.len();
    let mut total = gaussian::cdf_integral(values[0]);
    for i in 0..n - 1 {
        total += segment_abs(
            values[i],
            values[i + 1],
            (i + 1) as f64 / n as f64,
            crossings[i],
        );
    }
    total += gaussian::survival_integral(values[n - 1]);
    total
}

/// `int_a^b |Phi - level|` with the sign change pre-located at `crossing`.
fn segment_abs(a: f64, b: f64, level: f64, crossing: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if crossing <= a {
        above_level(a, b, level)
    } else if crossing >= b {
        below_level(a, b, level)
    } else {
        below_level(a, crossing, level) + above_level(crossing, b, level)
    }
}

/// `int_a^b (level - Phi)` where `Phi <= level`.
fn below_level(a: f64, b: f64, level: f64) -> f64 {
    if b <= 0.0 {
        level * (b - a) - (gaussian::cdf_integral(b) - gaussian::cdf_integral(a))
    } else {
        (gaussian::survival_integral(a) - gaussian::survival_integral(b))
            - (1.0 - level) * (b - a)
    }
}

/// `int_a^b (Phi - level)` where `Phi >= level`.
fn above_level(a: f64, b: f64, level: f64) -> f64 {
    if a >= 0.0 {
        (1.0 - level) * (b - a)
            - (gaussian::survival_integral(a) - gaussian::survival_integral(b))
    } else {
        (gaussian::cdf_integral(b) - gaussian::cdf_integral(a)) - level * (b - a)
    }
}

fn count_at_most(values: &[f64], x: f64) -> usize {
    values.partition_point(|v| *v <= x)
}

fn nonempty(sample: &EmpiricalSample) -> Result<&[f64]> {
    if sample.values().is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    Ok(sample.values())
}
