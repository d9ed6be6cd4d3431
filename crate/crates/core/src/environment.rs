//! The i.i.d. random environment: a finite-support mixture of offspring
//! laws, with exact moments of the associated-walk increment
//! `X = log(mean offspring)` and machine-checkable moment conditions.
//!
//! Finite support keeps every expectation an exact finite sum, so condition
//! values are computed rather than estimated.

use crate::offspring::OffspringLaw;
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// Finite mixture over offspring laws; weights sum to one.
#[derive(Debug, Clone)]
pub struct EnvironmentModel {
    atoms: Vec<(OffspringLaw, f64)>,
}

/// Exact moments of `X = log(mean offspring)` under the atom weights.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XMoments {
    pub mu: f64,
    pub sigma_sq: f64,
    /// `E |X - mu|^(2 + delta)`.
    pub abs_central_moment: f64,
}

/// Numeric record of the moment conditions a scenario must satisfy.
///
/// Finiteness is structural for finite mixtures of the implemented laws;
/// the values are reported for documentation and the booleans capture the
/// structural requirements (support away from zero, positive walk variance).
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// No mass at zero offspring — true by construction for every law.
    pub h2: bool,
    /// Criticality: `mu > 0`.
    pub supercritical: bool,
    pub mu: f64,
    pub a3star: NondegeneracyCondition,
    /// `E X^(2+delta)`.
    pub a1: MomentCondition,
    /// `E m^(p) / m^p`.
    pub a2: MomentCondition,
    /// `E m^lambda0`.
    pub a3: MomentCondition,
    /// `E m^(p) / m`.
    pub a4: MomentCondition,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentCondition {
    /// The order parameter the condition is evaluated at.
    pub order: f64,
    pub value: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NondegeneracyCondition {
    pub sigma_sq: f64,
    /// `E (Z_1/m_0) log Z_1` is finite for every implemented family.
    pub z1_log_z1_finite: bool,
    /// Its value, when the defining series converged.
    pub z1_log_z1: Option<f64>,
}

impl EnvironmentModel {
    pub fn new(atoms: Vec<(OffspringLaw, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter(
                "environment needs at least one atom".into(),
            ));
        }
        let mut total = 0.0;
        for (i, (_, w)) in atoms.iter().enumerate() {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "environment atom {i} has weight {w}; weights must be >= 0"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "environment weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(OffspringLaw, f64)] {
        &self.atoms
    }

    /// Draw one environment: an atom index with its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, (_, w)) in self.atoms.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.atoms.len() - 1
    }

    /// Draw one environment law.
    pub fn sample_law<R: Rng + ?Sized>(&self, rng: &mut R) -> &OffspringLaw {
        &self.atoms[self.sample_index(rng)].0
    }

    /// Criticality parameter and walk variance `(mu, sigma_sq)`.
    pub fn criticality(&self) -> (f64, f64) {
        let mu: f64 = self.weighted(|law| law.mean().ln());
        let sigma_sq = self.weighted(|law| {
            let d = law.mean().ln() - mu;
            d * d
        });
        (mu, sigma_sq)
    }

    /// Exact moments of `X = log(mean offspring)`; `delta` selects the
    /// absolute central moment order `2 + delta`.
    pub fn x_moments(&self, delta: f64) -> Result<XMoments> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        let (mu, sigma_sq) = self.criticality();
        let abs_central_moment =
            self.weighted(|law| (law.mean().ln() - mu).abs().powf(2.0 + delta));
        Ok(XMoments {
            mu,
            sigma_sq,
            abs_central_moment,
        })
    }

    /// `P(Z_1 = 1) = E pmf(1)`; strictly below one whenever the walk
    /// variance is positive.
    pub fn prob_z1_equals_one(&self) -> f64 {
        self.weighted(|law| law.pmf(1).expect("k = 1 is in the domain"))
    }

    /// Evaluate the moment conditions at the given orders. All expectations
    /// are exact finite sums over the atom support.
    pub fn check_conditions(&self, delta: f64, p: f64, lambda0: f64) -> Result<ConditionReport> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        if !(lambda0 > 0.0) {
            return Err(Error::Domain(format!(
                "lambda0 must be positive, got {lambda0}"
            )));
        }
        let (mu, sigma_sq) = self.criticality();

        let a1_value = self.weighted(|law| law.mean().ln().powf(2.0 + delta));
        let mut a2_value = 0.0;
        let mut a4_value = 0.0;
        for (law, w) in &self.atoms {
            let mp = law.moment(p)?;
            let m = law.mean();
            a2_value += w * mp / m.powf(p);
            a4_value += w * mp / m;
        }
        let a3_value = self.weighted(|law| law.mean().powf(lambda0));

        let z1_log_z1 = self.z1_log_z1().ok();

        Ok(ConditionReport {
            h2: true,
            supercritical: mu > 0.0,
            mu,
            a3star: NondegeneracyCondition {
                sigma_sq,
                z1_log_z1_finite: true,
                z1_log_z1,
            },
            a1: MomentCondition {
                order: delta,
                value: a1_value,
                finite: a1_value.is_finite(),
            },
            a2: MomentCondition {
                order: p,
                value: a2_value,
                finite: a2_value.is_finite(),
            },
            a3: MomentCondition {
                order: lambda0,
                value: a3_value,
                finite: a3_value.is_finite(),
            },
            a4: MomentCondition {
                order: p,
                value: a4_value,
                finite: a4_value.is_finite(),
            },
        })
    }

    /// `E (Z_1/m_0) log Z_1 = E [ (1/m) sum_k k log(k) pmf(k) ]`.
    pub fn z1_log_z1(&self) -> Result<f64> {
        let mut total = 0.0;
        for (law, w) in &self.atoms {
            total += w * law.k_log_k_moment()? / law.mean();
        }
        Ok(total)
    }

    fn weighted<F: Fn(&OffspringLaw) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|(law, w)| w * f(law)).sum()
    }
}
