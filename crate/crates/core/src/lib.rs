//! Simulation and statistical toolkit for supercritical branching processes
//! in i.i.d. random environments.
//!
//! The population follows `Z_0 = 1`, `Z_{n+1} = sum_{i=1}^{Z_n} X_{n,i}`,
//! where the common offspring law of generation `n` is redrawn i.i.d. from a
//! finite mixture of parametric families. Every implemented family puts no
//! mass on zero offspring, so populations never die out and `log Z_n`
//! decomposes as the associated random walk `S_n` plus the martingale
//! correction `log W_n`.
//!
//! The crate provides:
//!
//! * exact offspring-law moments and aggregate (whole-generation) samplers
//!   ([`offspring`]),
//! * environment mixtures with closed-form criticality statistics and
//!   machine-checkable moment conditions ([`environment`]),
//! * seed-deterministic parallel Monte Carlo replication ([`simulator`]),
//! * a high-accuracy standard-normal kernel ([`gaussian`]),
//! * exact Wasserstein-1 distance of empirical samples to the standard
//!   normal, Kolmogorov-Smirnov distance, weighted CDF-deviation profiles,
//!   and log-log rate fitting ([`empirical`]),
//! * brute-force enumeration of the exact law of `log Z_n` at tiny horizons
//!   ([`oracle`]),
//! * confidence/prediction intervals for the criticality parameter and the
//!   future population size, with coverage experiments and sub-exponential
//!   tail bound evaluators ([`inference`]).

pub mod empirical;
pub mod environment;
pub mod gaussian;
pub mod inference;
pub mod offspring;
pub mod oracle;
pub mod simulator;

pub use empirical::{fit_rate, ks_to_normal, wasserstein_to_normal, NonuniformProfile, RateFit};
pub use environment::{ConditionReport, EnvironmentModel, XMoments};
pub use inference::{Interval, KappaSchedule, ScheduleRegime};
pub use offspring::OffspringLaw;
pub use oracle::DiscreteDistribution;
pub use simulator::{EmpiricalSample, ReplicationMode, RunLimits, Trajectory};

/// Errors shared by the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An operation was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A requested computation exceeds the configured resource budget.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    /// A truncated series failed to reach its tail-bound tolerance.
    #[error("series truncation: {0}")]
    SeriesTruncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
