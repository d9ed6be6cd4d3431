//! Scenario configuration: strict JSON parsing (unknown keys are fatal —
//! silent typos corrupt experiments) and validation with errors that name
//! the offending key.

use bpre_core::environment::EnvironmentModel;
use bpre_core::inference::KappaSchedule;
use bpre_core::offspring::OffspringLaw;
use bpre_core::simulator::ReplicationMode;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub environment: EnvConfig,
    pub horizons: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub atoms: Vec<AtomConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub law: LawConfig,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Annealed,
    Quenched,
}

impl From<Mode> for ReplicationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Annealed => ReplicationMode::Annealed,
            Mode::Quenched => ReplicationMode::Quenched,
        }
    }
}

/// Offspring law as a tagged record, e.g. `{"type": "geometric1", "p": 0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LawConfig {
    Geometric1 { p: f64 },
    TwoPoint { b: u64, q: f64 },
    ShiftedPoisson { lambda: f64 },
}

// Hand-written so unknown keys inside law records are rejected; serde's
// internally tagged enums silently ignore them.
impl<'de> Deserialize<'de> for LawConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        let obj = value
            .as_object()
            .ok_or_else(|| D::Error::custom("law must be an object"))?;
        let ty = obj
            .get("type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| D::Error::custom("law needs a string \"type\""))?;
        let allowed: &[&str] = match ty {
            "geometric1" => &["type", "p"],
            "two_point" => &["type", "b", "q"],
            "shifted_poisson" => &["type", "lambda"],
            other => {
                return Err(D::Error::custom(format!(
                    "unknown law type \"{other}\" (expected geometric1, two_point or shifted_poisson)"
                )))
            }
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(D::Error::custom(format!(
                    "unknown key \"{key}\" in \"{ty}\" law"
                )));
            }
        }
        let num = |key: &str| {
            obj.get(key).and_then(|v| v.as_f64()).ok_or_else(|| {
                D::Error::custom(format!("\"{ty}\" law needs a numeric \"{key}\""))
            })
        };
        Ok(match ty {
            "geometric1" => LawConfig::Geometric1 { p: num("p")? },
            "two_point" => {
                let b = obj.get("b").and_then(|v| v.as_u64()).ok_or_else(|| {
                    D::Error::custom("\"two_point\" law needs an integer \"b\"")
                })?;
                LawConfig::TwoPoint { b, q: num("q")? }
            }
            "shifted_poisson" => LawConfig::ShiftedPoisson {
                lambda: num("lambda")?,
            },
            _ => unreachable!(),
        })
    }
}

impl LawConfig {
    pub fn build(&self) -> Result<OffspringLaw, CliError> {
        let law = match *self {
            LawConfig::Geometric1 { p } => OffspringLaw::geometric1(p),
            LawConfig::TwoPoint { b, q } => OffspringLaw::two_point(b, q),
            LawConfig::ShiftedPoisson { lambda } => OffspringLaw::shifted_poisson(lambda),
        };
        law.map_err(|e| CliError::Validation(format!("environment.atoms.law: {e}")))
    }
}

impl ScenarioConfig {
    /// Parse and validate one config document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.environment.atoms.is_empty() {
            return Err(CliError::Validation(
                "environment.atoms: need at least one atom".into(),
            ));
        }
        let sum: f64 = self.environment.atoms.iter().map(|a| a.weight).sum();
        if self.environment.atoms.iter().any(|a| !(a.weight >= 0.0)) {
            return Err(CliError::Validation(
                "environment.atoms.weight: weights must be >= 0".into(),
            ));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CliError::Validation(format!(
                "environment.atoms.weight: weights sum to {sum}, must sum to 1"
            )));
        }
        for atom in &self.environment.atoms {
            atom.law.build()?;
        }
        if self.horizons.is_empty() {
            return Err(CliError::Validation("horizons: must be nonempty".into()));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) || self.horizons[0] == 0 {
            return Err(CliError::Validation("horizons must ascend".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Validation("replicates: must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(CliError::Validation(format!(
                "delta: must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if let Some(dp) = self.delta_prime {
            if !(dp > 0.0) {
                return Err(CliError::Validation(format!(
                    "delta_prime: must be positive, got {dp}"
                )));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k < 1.0) {
                return Err(CliError::Validation(format!(
                    "kappa: must lie in (0, 1), got {k}"
                )));
            }
        }
        if self.kappa.is_some() && self.kappa_schedule.is_some() {
            return Err(CliError::Validation(
                "kappa and kappa_schedule are mutually exclusive".into(),
            ));
        }
        if let Some(s) = self.kappa_schedule {
            KappaSchedule::new(s.alpha, s.beta, s.gamma)
                .map_err(|e| CliError::Validation(format!("kappa_schedule: {e}")))?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<EnvironmentModel, CliError> {
        let atoms = self
            .environment
            .atoms
            .iter()
            .map(|a| Ok((a.law.build()?, a.weight)))
            .collect::<Result<Vec<_>, CliError>>()?;
        EnvironmentModel::new(atoms)
            .map_err(|e| CliError::Validation(format!("environment: {e}")))
    }

    pub fn effective_delta_prime(&self) -> f64 {
        self.delta_prime.unwrap_or(0.5 * self.delta)
    }

    /// Miscoverage at horizon `n`, from the fixed value or the schedule.
    pub fn kappa_at(&self, n: usize) -> Result<f64, CliError> {
        if let Some(k) = self.kappa {
            return Ok(k);
        }
        if let Some(s) = self.kappa_schedule {
            let schedule = KappaSchedule::new(s.alpha, s.beta, s.gamma)
                .map_err(|e| CliError::Validation(format!("kappa_schedule: {e}")))?;
            return schedule
                .kappa_at(n)
                .map_err(|e| CliError::Validation(format!("kappa_schedule: {e}")));
        }
        Err(CliError::Validation(
            "this command needs kappa or kappa_schedule in the config".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "environment": {"atoms": [{"law": {"type": "geometric1", "p": 0.5}, "weight": 1.0}]},
        "horizons": [8, 16],
        "replicates": 100,
        "master_seed": 7,
        "delta": 1.0
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.mode, Mode::Annealed);
        assert!((c.effective_delta_prime() - 0.5).abs() < 1e-15);
        assert!(c.kappa.is_none());
        assert!(c.output_dir.is_none());
    }

    #[test]
    fn round_trip_preserves_the_config() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn unknown_top_level_key_is_fatal() {
        let bad = MINIMAL.replace("\"delta\": 1.0", "\"delta\": 1.0, \"detla\": 2");
        let err = ScenarioConfig::parse(&bad).unwrap_err();
        assert!(format!("{err}").contains("detla"), "{err}");
    }

    #[test]
    fn unknown_law_key_is_fatal() {
        let bad = MINIMAL.replace("\"p\": 0.5", "\"p\": 0.5, \"pp\": 1");
        let err = ScenarioConfig::parse(&bad).unwrap_err();
        assert!(format!("{err}").contains("pp"), "{err}");
    }

    #[test]
    fn weight_sum_error_names_the_key() {
        let bad = MINIMAL.replace("\"weight\": 1.0", "\"weight\": 0.9");
        let err = ScenarioConfig::parse(&bad).unwrap_err();
        assert!(
            format!("{err}").contains("environment.atoms.weight"),
            "{err}"
        );
    }

    #[test]
    fn unsorted_horizons_rejected() {
        let bad = MINIMAL.replace("[8, 16]", "[256, 64]");
        let err = ScenarioConfig::parse(&bad).unwrap_err();
        assert!(format!("{err}").contains("horizons must ascend"), "{err}");
    }

    #[test]
    fn kappa_and_schedule_are_exclusive() {
        let bad = MINIMAL.replace(
            "\"delta\": 1.0",
            "\"delta\": 1.0, \"kappa\": 0.05, \"kappa_schedule\": {\"alpha\": 1.0, \"beta\": 0.0, \"gamma\": 0.5}",
        );
        assert!(ScenarioConfig::parse(&bad).is_err());
    }

    #[test]
    fn law_variants_parse() {
        let text = r#"{
            "environment": {"atoms": [
                {"law": {"type": "two_point", "b": 3, "q": 0.5}, "weight": 0.25},
                {"law": {"type": "shifted_poisson", "lambda": 1.5}, "weight": 0.25},
                {"law": {"type": "geometric1", "p": 0.4}, "weight": 0.5}
            ]},
            "horizons": [4],
            "replicates": 10,
            "master_seed": 1,
            "delta": 0.5,
            "mode": "quenched"
        }"#;
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.mode, Mode::Quenched);
        assert_eq!(c.environment.atoms.len(), 3);
        assert!(c.model().is_ok());
    }
}
