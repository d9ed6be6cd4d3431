//! One-generation offspring distributions.
//!
//! Every law lives on {1, 2, 3, ...}: a particle always produces at least
//! one child, so populations never shrink to zero and `log Z_n >= 0`.
//! Three parametric families are supported, each with closed-form mean and
//! variance, an exact probability mass function, a per-particle sampler, and
//! an aggregate sampler that draws the sum over a whole generation in O(1)
//! work regardless of the population size.

use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Largest population count advanced with the exact aggregate samplers.
/// Beyond this the trajectory switches to the log-scale surrogate.
pub const EXACT_COUNT_MAX: u128 = 1 << 62;

/// Past this scale an integer draw is not representable exactly in f64
/// anyway, so the primitive samplers switch to a rounded normal.
const F64_INTEGER_MAX: f64 = 9.007_199_254_740_992e15; // 2^53

/// Series summation stops once the analytic tail bound drops below this.
const SERIES_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 1_000_000;

/// Offspring distribution of a single generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffspringLaw {
    /// Mass `1 - weight` on 1 and `weight` on `high` (`high >= 2`).
    TwoPoint { high: u64, weight: f64 },
    /// Geometric on {1, 2, ...}: `pmf(k) = p (1-p)^(k-1)`.
    Geometric1 { success: f64 },
    /// `1 + Poisson(rate)`; `rate = 0` is the degenerate unit law.
    ShiftedPoisson { rate: f64 },
}

/// One aggregate draw: exact integer count, or the log of the CLT surrogate
/// once the population exceeds [`EXACT_COUNT_MAX`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumSample {
    Exact(u128),
    Approximate { log_value: f64 },
}

impl OffspringLaw {
    pub fn two_point(high: u64, weight: f64) -> Result<Self> {
        if high < 2 {
            return Err(Error::InvalidParameter(format!(
                "two-point high value must be >= 2, got {high}"
            )));
        }
        if high > u64::from(u32::MAX) {
            return Err(Error::InvalidParameter(format!(
                "two-point high value must fit 32 bits, got {high}"
            )));
        }
        if !(0.0..=1.0).contains(&weight) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "two-point weight must lie in [0, 1], got {weight}"
            )));
        }
        Ok(Self::TwoPoint { high, weight })
    }

    pub fn geometric1(success: f64) -> Result<Self> {
        if !(success > 0.0 && success < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric success probability must lie in (0, 1), got {success}"
            )));
        }
        Ok(Self::Geometric1 { success })
    }

    pub fn shifted_poisson(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shifted-Poisson rate must be finite and >= 0, got {rate}"
            )));
        }
        Ok(Self::ShiftedPoisson { rate })
    }

    /// Probability mass at `k >= 1`.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("pmf is defined for k >= 1 only".into()));
        }
        Ok(match *self {
            Self::TwoPoint { high, weight } => {
                if k == 1 {
                    1.0 - weight
                } else if k == high {
                    weight
                } else {
                    0.0
                }
            }
            Self::Geometric1 { success } => {
                success * (1.0 - success).powf((k - 1) as f64)
            }
            Self::ShiftedPoisson { rate } => {
                let j = (k - 1) as f64;
                if rate == 0.0 {
                    if k == 1 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-rate + j * rate.ln() - ln_factorial(k - 1)).exp()
                }
            }
        })
    }

    /// First moment, in closed form.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::TwoPoint { high, weight } => 1.0 - weight + weight * high as f64,
            Self::Geometric1 { success } => 1.0 / success,
            Self::ShiftedPoisson { rate } => 1.0 + rate,
        }
    }

    /// Variance, in closed form.
    pub fn variance(&self) -> f64 {
        match *self {
            Self::TwoPoint { high, weight } => {
                let d = (high - 1) as f64;
                d * d * weight * (1.0 - weight)
            }
            Self::Geometric1 { success } => (1.0 - success) / (success * success),
            Self::ShiftedPoisson { rate } => rate,
        }
    }

    /// `p`-th moment `sum_k k^p pmf(k)` for `p > 1`.
    ///
    /// `p = 2` uses the closed form; other orders sum the series until the
    /// geometric tail bound falls below 1e-12.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!(
                "moment order must exceed 1, got {p}"
            )));
        }
        if p == 2.0 {
            return Ok(match *self {
                Self::TwoPoint { high, weight } => {
                    let b = high as f64;
                    1.0 - weight + weight * b * b
                }
                Self::Geometric1 { success } => (2.0 - success) / (success * success),
                Self::ShiftedPoisson { rate } => rate * rate + 3.0 * rate + 1.0,
            });
        }
        self.series_sum(SeriesWeight::Power(p))
    }

    /// `sum_k k log(k) pmf(k)`, the offspring-level ingredient of the
    /// `E (Z_1/m_0) log Z_1` condition.
    pub fn k_log_k_moment(&self) -> Result<f64> {
        self.series_sum(SeriesWeight::KLogK)
    }

    /// One particle's offspring count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::TwoPoint { high, weight } => {
                if rng.gen::<f64>() < weight {
                    high
                } else {
                    1
                }
            }
            Self::Geometric1 { success } => {
                // Inverse CDF: k = ceil(log(1-u) / log(1-p)).
                let u: f64 = rng.gen();
                let k = ((1.0 - u).ln() / (1.0 - success).ln()).ceil();
                if k < 1.0 {
                    1
                } else {
                    k as u64
                }
            }
            Self::ShiftedPoisson { rate } => {
                1 + poisson_count(rng, rate).min(u128::from(u64::MAX - 1)) as u64
            }
        }
    }

    /// Draw the sum of `count` i.i.d. offspring counts without looping.
    ///
    /// Decompositions: two-point sums are `count + (high-1) * Binomial`,
    /// geometric sums are `count + NegativeBinomial` (drawn as a
    /// gamma-Poisson mixture), shifted-Poisson sums are
    /// `count + Poisson(count * rate)`. Counts above [`EXACT_COUNT_MAX`]
    /// return the log-scale surrogate instead.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u128, rng: &mut R) -> SumSample {
        if count == 0 {
            return SumSample::Exact(0);
        }
        if count > EXACT_COUNT_MAX {
            let log_value = self.sample_log_sum((count as f64).ln(), rng);
            return SumSample::Approximate { log_value };
        }
        let extra: u128 = match *self {
            Self::TwoPoint { high, weight } => {
                u128::from(high - 1) * binomial_count(rng, count, weight)
            }
            Self::Geometric1 { success } => {
                // Sum of count geometrics on {1,2,...} = count + NB(count, p).
                let scale = (1.0 - success) / success;
                if scale == 0.0 {
                    0
                } else {
                    let gamma = Gamma::new(count as f64, scale)
                        .expect("shape and scale are positive");
                    let mixed_rate = gamma.sample(rng);
                    poisson_count(rng, mixed_rate)
                }
            }
            Self::ShiftedPoisson { rate } => poisson_count(rng, count as f64 * rate),
        };
        SumSample::Exact(count + extra)
    }

    /// Advance `log(count)` one generation in the surrogate regime:
    /// `log(sum) = log(count) + log(mean) + N(0, variance / (mean^2 count))`.
    ///
    /// The neglected bias is O(1/count), far below statistical resolution at
    /// the counts where this path engages.
    pub fn sample_log_sum<R: Rng + ?Sized>(&self, log_count: f64, rng: &mut R) -> f64 {
        let m = self.mean();
        let noise_sd = self.variance().sqrt() / m * (-0.5 * log_count).exp();
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        log_count + m.ln() + noise_sd * z
    }

    fn series_sum(&self, weight: SeriesWeight) -> Result<f64> {
        // Two-point laws have finite support: sum directly.
        if let Self::TwoPoint { high, weight: q } = *self {
            return Ok((1.0 - q) * weight.eval(1) + q * weight.eval(high));
        }
        if let Self::ShiftedPoisson { rate } = *self {
            if rate == 0.0 {
                return Ok(weight.eval(1));
            }
        }
        let mut total = 0.0;
        let mut term;
        for k in 1..=SERIES_MAX_TERMS as u64 {
            term = weight.eval(k) * self.pmf(k)?;
            total += term;
            // Uniform bound on successive term ratios for all j >= k.
            let growth = (1.0 + 1.0 / k as f64).powf(weight.growth_exponent());
            let ratio = match *self {
                Self::Geometric1 { success } => (1.0 - success) * growth,
                Self::ShiftedPoisson { rate } => rate / k as f64 * growth,
                Self::TwoPoint { .. } => unreachable!(),
            };
            // The growth bound needs k >= 2 for the k log k weight (its
            // first term vanishes and would stop the sum immediately).
            if k >= 2 && ratio < 1.0 && term * ratio / (1.0 - ratio) < SERIES_TOL {
                return Ok(total);
            }
        }
        Err(Error::SeriesTruncation(format!(
            "tail bound not reached within {SERIES_MAX_TERMS} terms for {self:?}"
        )))
    }
}

#[derive(Clone, Copy)]
enum SeriesWeight {
    Power(f64),
    KLogK,
}

impl SeriesWeight {
    fn eval(self, k: u64) -> f64 {
        let kf = k as f64;
        match self {
            Self::Power(p) => kf.powf(p),
            Self::KLogK => kf * kf.ln(),
        }
    }

    /// Exponent `e` with `f(k+1)/f(k) <= (1 + 1/k)^e` for all k >= 1.
    fn growth_exponent(self) -> f64 {
        match self {
            Self::Power(p) => p,
            // (k+1)log(k+1) / (k log k) <= (1+1/k)^2 for k >= 2; for k = 1
            // the numerator weight f(1) = 0 makes the bound moot.
            Self::KLogK => 2.0,
        }
    }
}

/// Exact Poisson draw for moderate rates; rounded normal once the mean
/// exceeds the f64 integer range (where exactness is unrepresentable and the
/// total-variation gap is O(lambda^-1/2) ~ 1e-8).
fn poisson_count<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u128 {
    if lambda == 0.0 {
        return 0;
    }
    if lambda <= F64_INTEGER_MAX {
        let d = rand_distr::Poisson::new(lambda).expect("positive finite rate");
        let v: f64 = d.sample(rng);
        v as u128
    } else {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        let v = (lambda + lambda.sqrt() * z).round();
        if v < 0.0 {
            0
        } else {
            v as u128
        }
    }
}

/// Exact binomial draw, rounded-normal past the f64 integer range.
fn binomial_count<R: Rng + ?Sized>(rng: &mut R, n: u128, p: f64) -> u128 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= F64_INTEGER_MAX as u128 {
        let d = rand_distr::Binomial::new(n as u64, p).expect("validated parameters");
        u128::from(d.sample(rng))
    } else {
        let nf = n as f64;
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        let v = (nf * p + (nf * p * (1.0 - p)).sqrt() * z).round();
        v.clamp(0.0, nf) as u128
    }
}

/// log(n!) — exact products up to 20, Lanczos log-gamma beyond.
fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 20 {
        let mut f = 1.0_f64;
        for i in 2..=n {
            f *= i as f64;
        }
        return f.ln();
    }
    ln_gamma(n as f64 + 1.0)
}

/// Lanczos approximation (g = 7, 9 coefficients), |rel err| < 2e-10 for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
