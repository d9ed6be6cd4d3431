//! Interval estimation and tail-bound evaluators.
//!
//! Confidence intervals for the criticality parameter come from the
//! normalized statistic's normal approximation; prediction intervals for the
//! future population size are the same event exponentiated, so they are
//! constructed and compared in log scale exclusively — the linear-scale
//! endpoints `exp(n mu +- sigma sqrt(n) z)` overflow any fixed-width float
//! at realistic horizons.

use crate::environment::EnvironmentModel;
use crate::gaussian;
use crate::simulator::{run_summaries, ReplicationMode, RunLimits};
use crate::{Error, Result};
use serde::Serialize;

/// Boundary-inclusion tolerance for interval membership. Ties have
/// probability zero in theory; this absorbs float rounding in practice.
const CONTAINS_TOL: f64 = 1e-12;

/// A two-sided interval at confidence level `1 - kappa`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub scale: IntervalScale,
    pub kappa: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntervalScale {
    Linear,
    /// Endpoints are logs of the interval for the underlying quantity.
    Log,
}

impl Interval {
    /// Closed-interval membership with rounding tolerance.
    pub fn contains(&self, v: f64) -> bool {
        self.lo - CONTAINS_TOL <= v && v <= self.hi + CONTAINS_TOL
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Confidence interval for the criticality parameter from one observed
/// `log Z_n`: `log Z_n / n +- sigma Phi^{-1}(1 - kappa/2) / sqrt(n)`.
pub fn ci_criticality(log_zn: f64, n: usize, sigma: f64, kappa: f64) -> Result<Interval> {
    let z = validate_ci(n, sigma, kappa)?;
    let center = log_zn / n as f64;
    let half = sigma * z / (n as f64).sqrt();
    Ok(Interval {
        lo: center - half,
        hi: center + half,
        scale: IntervalScale::Linear,
        kappa,
        n,
    })
}

/// Prediction interval for `Z_n` when `mu` and `sigma` are known, stored in
/// log scale: `[n mu - sigma sqrt(n) z, n mu + sigma sqrt(n) z]`.
pub fn ci_population(n: usize, mu: f64, sigma: f64, kappa: f64) -> Result<Interval> {
    let z = validate_ci(n, sigma, kappa)?;
    let center = n as f64 * mu;
    let half = sigma * (n as f64).sqrt() * z;
    Ok(Interval {
        lo: center - half,
        hi: center + half,
        scale: IntervalScale::Log,
        kappa,
        n,
    })
}

fn validate_ci(n: usize, sigma: f64, kappa: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("interval needs n >= 1".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!(
            "kappa must lie in (0, 1), got {kappa}"
        )));
    }
    gaussian::quantile(1.0 - kappa / 2.0)
}

/// Miscoverage schedule `kappa_n = exp(-alpha n^beta (log n)^gamma)`.
///
/// Only this three-parameter family is accepted: the validity conditions
/// are o(.) statements that cannot be verified from finitely many values of
/// an arbitrary sequence, but reduce to exponent comparisons here.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaSchedule {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Growth regimes under which shrinking-miscoverage intervals stay valid:
/// `|log kappa_n| = o(log n)` or `|log kappa_n| = o(n^(1/3))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleRegime {
    SubLogarithmic,
    SubCubeRoot,
}

impl KappaSchedule {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "schedule alpha must be positive, got {alpha}"
            )));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "schedule beta must be >= 0, got {beta}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter("schedule gamma must be finite".into()));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// `kappa_n`; defined (and inside (0,1)) for n >= 2.
    pub fn kappa_at(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(Error::Domain("schedule is defined for n >= 2".into()));
        }
        let nf = n as f64;
        Ok((-self.alpha * nf.powf(self.beta) * nf.ln().powf(self.gamma)).exp())
    }

    /// Symbolic check of `|log kappa_n| = alpha n^beta (log n)^gamma`
    /// against the regime's growth cap.
    pub fn satisfies(&self, regime: ScheduleRegime) -> bool {
        match regime {
            ScheduleRegime::SubLogarithmic => self.beta == 0.0 && self.gamma < 1.0,
            ScheduleRegime::SubCubeRoot => {
                self.beta < 1.0 / 3.0 || (self.beta == 1.0 / 3.0 && self.gamma < 0.0)
            }
        }
    }
}

/// What a coverage run checks per replicate: the criticality interval
/// containing the true `mu`, or the realized `log Z_n` falling inside the
/// log-scale population interval. The two events are algebraically
/// identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageTarget {
    Criticality,
    Population,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverageOutcome {
    pub coverage: f64,
    pub std_error: f64,
    pub hits: usize,
    pub replicates: usize,
}

/// Fraction of replicates whose interval covers the target, with binomial
/// standard error. `mu` and `sigma` are taken as known from the model.
pub fn coverage_experiment(
    model: &EnvironmentModel,
    n: usize,
    kappa: f64,
    replicates: usize,
    master_seed: u64,
    target: CoverageTarget,
    limits: RunLimits,
) -> Result<CoverageOutcome> {
    let (mu, sigma_sq) = model.criticality();
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(
            "coverage experiments require positive walk variance".into(),
        ));
    }
    let sigma = sigma_sq.sqrt();
    let population_interval = ci_population(n, mu, sigma, kappa)?;
    let summaries = run_summaries(
        model,
        n,
        replicates,
        master_seed,
        ReplicationMode::Annealed,
        limits,
    )?;
    let mut hits = 0usize;
    for p in &summaries {
        let hit = match target {
            CoverageTarget::Criticality => {
                ci_criticality(p.log_z, n, sigma, kappa)?.contains(mu)
            }
            CoverageTarget::Population => population_interval.contains(p.log_z),
        };
        if hit {
            hits += 1;
        }
    }
    let coverage = hits as f64 / replicates as f64;
    Ok(CoverageOutcome {
        coverage,
        std_error: (coverage * (1.0 - coverage) / replicates as f64).sqrt(),
        hits,
        replicates,
    })
}

/// Nonuniform normal-approximation bound
/// `C (1 + x^2) exp(-xhat^2 / 2) / sqrt(n)` with
/// `xhat = |x| / sqrt(1 + c |x| / sqrt(n))`. Even in `x`.
pub fn nonuniform_bound(x: f64, n: usize, c: f64, big_c: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let xhat_sq = x * x / (1.0 + c * x.abs() / sqrt_n);
    big_c / sqrt_n * (1.0 + x * x) * (-0.5 * xhat_sq).exp()
}

/// Sub-exponential bounds on the two tails of the normalized statistic:
/// upper `2 exp(-x^2 / (2 (1 + c x / sqrt(n))))`, lower the same exponent
/// scaled by `big_c`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BernsteinBounds {
    pub upper_tail: f64,
    pub lower_tail: f64,
}

pub fn bernstein_bounds(x: f64, n: usize, c: f64, big_c: f64) -> Result<BernsteinBounds> {
    if x < 0.0 {
        return Err(Error::Domain(format!(
            "tail bounds are defined for x >= 0, got {x}"
        )));
    }
    let e = (-x * x / (2.0 * (1.0 + c * x / (n as f64).sqrt()))).exp();
    Ok(BernsteinBounds {
        upper_tail: 2.0 * e,
        lower_tail: big_c * e,
    })
}

/// Smallest `c >= 0` making the upper-tail bound dominate every empirical
/// point `(x, p)` with `x > 0`: solve
/// `2 exp(-x^2 / (2 (1 + c x / sqrt(n)))) >= p` for `c` pointwise and take
/// the maximum.
pub fn fit_bernstein_c(points: &[(f64, f64)], n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    points
        .iter()
        .filter(|&&(x, p)| x > 0.0 && p > 0.0)
        .map(|&(x, p)| (x * x / (2.0 * (2.0 / p).ln()) - 1.0) * sqrt_n / x)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarmonicMoment {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sample mean of `w^(-a)` with its standard error. Stability of this
/// estimate across increasing horizons supports finiteness of the harmonic
/// moment `sup_n E W_n^(-a)`.
pub fn harmonic_moment_estimate(w: &[f64], a: f64) -> Result<HarmonicMoment> {
    if w.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("order must be positive, got {a}")));
    }
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain(
            "harmonic moments need strictly positive values".into(),
        ));
    }
    let n = w.len() as f64;
    let vals: Vec<f64> = w.iter().map(|&v| v.powf(-a)).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let std_error = if w.len() < 2 {
        0.0
    } else {
        let var = vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(HarmonicMoment {
        estimate: mean,
        std_error,
    })
}
