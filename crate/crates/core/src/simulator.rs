//! Quenched-path generation and seed-deterministic parallel replication.
//!
//! Each replicate owns a random stream derived from
//! `(master seed, purpose, index)` via a splitmix64 absorb/squeeze into a
//! ChaCha key, so results are independent of scheduling and thread count.
//! Populations are advanced with exact integer counts up to
//! [`EXACT_COUNT_MAX`](crate::offspring::EXACT_COUNT_MAX) offspring sums and
//! in log scale beyond, with the switch generation recorded on the
//! trajectory.

use crate::environment::EnvironmentModel;
use crate::offspring::{OffspringLaw, SumSample};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One quenched path: per-generation `log Z_k`, walk `S_k`, and martingale
/// part `log W_k = log Z_k - S_k`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub log_z: Vec<f64>,
    pub s: Vec<f64>,
    pub log_w: Vec<f64>,
    /// First generation whose value came from the log-scale surrogate.
    pub approximate_from: Option<usize>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.log_z.len() - 1
    }
}

/// Terminal state of one replicate.
#[derive(Debug, Clone, Copy)]
pub struct PathSummary {
    pub log_z: f64,
    pub s: f64,
    pub log_w: f64,
    pub approximate_from: Option<usize>,
}

/// Whether each replicate redraws its environment sequence (annealed, the
/// default) or all replicates share one fixed sequence (quenched).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplicationMode {
    Annealed,
    Quenched,
}

/// Stream namespaces; replicates, the shared quenched environment, and
/// resampling draws never collide.
#[derive(Debug, Clone, Copy)]
pub enum StreamPurpose {
    Replicate = 1,
    SharedEnvironment = 2,
    Bootstrap = 3,
}

/// Budget guard for replication campaigns.
#[derive(Debug, Clone, Copy)]
pub struct RunLimits {
    pub max_horizon: usize,
    pub max_replicates: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            max_horizon: 4096,
            max_replicates: 10_000_000,
        }
    }
}

impl RunLimits {
    pub fn unlimited() -> Self {
        Self {
            max_horizon: usize::MAX,
            max_replicates: usize::MAX,
        }
    }

    fn check(&self, horizon: usize, replicates: usize) -> Result<()> {
        if horizon > self.max_horizon {
            return Err(Error::ResourceLimit(format!(
                "horizon {horizon} exceeds the cap {}; raise the limit explicitly to proceed",
                self.max_horizon
            )));
        }
        if replicates > self.max_replicates {
            return Err(Error::ResourceLimit(format!(
                "{replicates} replicates exceed the cap {}; raise the limit explicitly to proceed",
                self.max_replicates
            )));
        }
        Ok(())
    }
}

/// Sorted normalized statistics `(log Z_n - n mu) / (sigma sqrt(n))` across
/// replicates.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    pub horizon: usize,
    pub mu: f64,
    pub sigma: f64,
    pub master_seed: u64,
    pub replicate_count: usize,
}

impl EmpiricalSample {
    /// Wrap raw statistic values; sorts them.
    pub fn from_values(
        mut values: Vec<f64>,
        horizon: usize,
        mu: f64,
        sigma: f64,
        master_seed: u64,
    ) -> Self {
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
        let replicate_count = values.len();
        Self {
            values,
            horizon,
            mu,
            sigma,
            master_seed,
            replicate_count,
        }
    }

    /// Values in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Derive an independent ChaCha stream for `(master_seed, purpose, index)`.
///
/// Each input is absorbed through a full splitmix64 avalanche before the
/// next, so nearby seeds or indices cannot cancel each other out.
pub fn derive_stream(master_seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let mut h: u64 = 0x243f_6a88_85a3_08d3;
    for v in [master_seed, purpose as u64, index] {
        h = mix64(h ^ v);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        h = mix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum EnvSource<'a> {
    Fresh,
    Fixed(&'a [usize]),
}

/// Core generation loop. Calls `record(k, log_z_k, s_k)` for k = 1..=n and
/// returns the first surrogate generation, if any.
fn evolve<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    env: &EnvSource<'_>,
    n: usize,
    rng: &mut R,
    mut record: impl FnMut(usize, f64, f64),
) -> Option<usize> {
    enum Pop {
        Exact(u128),
        LogScale(f64),
    }
    let mut state = Pop::Exact(1);
    let mut s = 0.0;
    let mut approximate_from = None;
    for k in 1..=n {
        let law: &OffspringLaw = match env {
            EnvSource::Fresh => model.sample_law(rng),
            EnvSource::Fixed(seq) => &model.atoms()[seq[k - 1]].0,
        };
        s += law.mean().ln();
        let log_z = match state {
            Pop::Exact(count) => match law.sample_sum(count, rng) {
                SumSample::Exact(v) => {
                    state = Pop::Exact(v);
                    (v as f64).ln()
                }
                SumSample::Approximate { log_value } => {
                    approximate_from.get_or_insert(k);
                    state = Pop::LogScale(log_value);
                    log_value
                }
            },
            Pop::LogScale(lz) => {
                let next = law.sample_log_sum(lz, rng);
                approximate_from.get_or_insert(k);
                state = Pop::LogScale(next);
                next
            }
        };
        record(k, log_z, s);
    }
    approximate_from
}

/// Simulate one path to horizon `n`, drawing a fresh environment each
/// generation.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    n: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    simulate(model, &EnvSource::Fresh, n, rng)
}

/// Simulate one path against a fixed environment sequence (atom indices,
/// one per generation).
pub fn simulate_path_quenched<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    env_indices: &[usize],
    rng: &mut R,
) -> Result<Trajectory> {
    for &i in env_indices {
        if i >= model.atoms().len() {
            return Err(Error::Domain(format!(
                "environment index {i} out of range"
            )));
        }
    }
    simulate(model, &EnvSource::Fixed(env_indices), env_indices.len(), rng)
}

fn simulate<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    env: &EnvSource<'_>,
    n: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let mut log_z = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    let mut log_w = Vec::with_capacity(n + 1);
    log_z.push(0.0);
    s.push(0.0);
    log_w.push(0.0);
    let approximate_from = evolve(model, env, n, rng, |_, lz, sk| {
        log_z.push(lz);
        s.push(sk);
        log_w.push(lz - sk);
    });
    Ok(Trajectory {
        log_z,
        s,
        log_w,
        approximate_from,
    })
}

/// `(log Z_n - n mu) / (sigma sqrt(n))` at the trajectory's final horizon.
pub fn normalized_statistic(traj: &Trajectory, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "normalization requires sigma > 0, got {sigma}"
        )));
    }
    let n = traj.horizon() as f64;
    Ok((traj.log_z[traj.horizon()] - n * mu) / (sigma * n.sqrt()))
}

/// Run `replicates` independent paths to horizon `n` and return their
/// terminal states in replicate order.
///
/// Replicate `i` uses the stream derived from `(master_seed, Replicate, i)`;
/// in quenched mode the shared environment sequence comes from
/// `(master_seed, SharedEnvironment, 0)`. Output is identical for any
/// worker-thread count.
pub fn run_summaries(
    model: &EnvironmentModel,
    n: usize,
    replicates: usize,
    master_seed: u64,
    mode: ReplicationMode,
    limits: RunLimits,
) -> Result<Vec<PathSummary>> {
    if n == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if replicates == 0 {
        return Err(Error::Domain("need at least one replicate".into()));
    }
    limits.check(n, replicates)?;
    let shared_env: Option<Vec<usize>> = match mode {
        ReplicationMode::Annealed => None,
        ReplicationMode::Quenched => {
            let mut env_rng = derive_stream(master_seed, StreamPurpose::SharedEnvironment, 0);
            Some((0..n).map(|_| model.sample_index(&mut env_rng)).collect())
        }
    };
    let summaries: Vec<PathSummary> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(master_seed, StreamPurpose::Replicate, i as u64);
            let env = match &shared_env {
                None => EnvSource::Fresh,
                Some(seq) => EnvSource::Fixed(seq),
            };
            let mut last = (0.0, 0.0);
            let approximate_from = evolve(model, &env, n, &mut rng, |_, lz, sk| {
                last = (lz, sk);
            });
            PathSummary {
                log_z: last.0,
                s: last.1,
                log_w: last.0 - last.1,
                approximate_from,
            }
        })
        .collect();
    Ok(summaries)
}

/// Replication campaign producing the sorted sample of normalized
/// statistics. Requires a nondegenerate environment (`sigma^2 > 0`).
pub fn run_replications(
    model: &EnvironmentModel,
    n: usize,
    replicates: usize,
    master_seed: u64,
    mode: ReplicationMode,
    limits: RunLimits,
) -> Result<EmpiricalSample> {
    let (mu, sigma_sq) = model.criticality();
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain(
            "replication campaigns require positive walk variance (sigma^2 > 0)".into(),
        ));
    }
    let sigma = sigma_sq.sqrt();
    let summaries = run_summaries(model, n, replicates, master_seed, mode, limits)?;
    let scale = sigma * (n as f64).sqrt();
    let values = summaries
        .iter()
        .map(|p| (p.log_z - n as f64 * mu) / scale)
        .collect();
    Ok(EmpiricalSample::from_values(
        values,
        n,
        mu,
        sigma,
        master_seed,
    ))
}
