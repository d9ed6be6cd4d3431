//! Exact small-horizon ground truth.
//!
//! Enumerates every environment sequence and convolves exact offspring
//! masses to obtain the law of `log Z_n` for tiny horizons and truncated
//! supports, then computes the exact Wasserstein distance of the normalized
//! statistic. Direct O(support^2) convolution is used throughout: at these
//! sizes exactness and auditability beat speed.

use crate::empirical::wasserstein_step_cdf;
use crate::environment::EnvironmentModel;
use crate::offspring::OffspringLaw;
use crate::simulator::EmpiricalSample;
use crate::{Error, Result};

/// Largest horizon the enumeration accepts.
pub const MAX_EXACT_HORIZON: usize = 6;
/// Work guard: `atoms^n * z_cap` may not exceed this.
const MAX_SUPPORT_WORK: f64 = 1e7;
/// Probabilities below this are dropped into the truncation mass.
const PROB_FLOOR: f64 = 1e-18;

/// A finitely supported law of `log Z_n`, with the mass lost to support
/// truncation tracked explicitly.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    /// `(log k, P(Z_n = k))`, ascending in value, zero-mass atoms omitted.
    pub atoms: Vec<(f64, f64)>,
    pub truncation_mass: f64,
}

impl DiscreteDistribution {
    /// Total retained probability mass.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, p)| p).sum()
    }

    /// CDF evaluated at `x` (over retained mass only).
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|&&(v, _)| v <= x)
            .map(|&(_, p)| p)
            .sum()
    }
}

/// Exact law of `log Z_n` under population truncation at `z_cap`.
///
/// Environment sequences are enumerated exhaustively (`atoms^n` of them);
/// within a sequence the population law advances by exact convolution, with
/// mass landing beyond `z_cap` (or floored below 1e-18) accounted into
/// `truncation_mass`.
pub fn exact_log_population_distribution(
    model: &EnvironmentModel,
    n: usize,
    z_cap: usize,
) -> Result<DiscreteDistribution> {
    if n == 0 || n > MAX_EXACT_HORIZON {
        return Err(Error::Domain(format!(
            "exact enumeration supports horizons 1..={MAX_EXACT_HORIZON}, got {n}"
        )));
    }
    if z_cap < 2 {
        return Err(Error::Domain("z_cap must be at least 2".into()));
    }
    let atom_count = model.atoms().len();
    let work = (atom_count as f64).powi(n as i32) * z_cap as f64;
    if work > MAX_SUPPORT_WORK {
        return Err(Error::ResourceLimit(format!(
            "exact enumeration would touch ~{work:.0} support points \
             (limit {MAX_SUPPORT_WORK:.0})"
        )));
    }

    let tables: Vec<ConvTable> = model
        .atoms()
        .iter()
        .map(|(law, _)| ConvTable::build(law, z_cap))
        .collect::<Result<_>>()?;

    let mut global = vec![0.0_f64; z_cap + 1];
    let mut total_lost = 0.0;

    // Odometer over environment sequences of length n.
    let mut seq = vec![0usize; n];
    loop {
        let mut p_seq = 1.0;
        for &a in &seq {
            p_seq *= model.atoms()[a].1;
        }
        if p_seq > 0.0 {
            let (dist, lost) = evolve_sequence(&tables, &seq, z_cap);
            for (k, &p) in dist.iter().enumerate() {
                global[k] += p_seq * p;
            }
            total_lost += p_seq * lost;
        }
        // Advance the odometer.
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            seq[pos] += 1;
            if seq[pos] < atom_count {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    let atoms: Vec<(f64, f64)> = global
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &p)| p > 0.0)
        .map(|(k, &p)| ((k as f64).ln(), p))
        .collect();
    Ok(DiscreteDistribution {
        atoms,
        truncation_mass: total_lost,
    })
}

fn evolve_sequence(tables: &[ConvTable], seq: &[usize], z_cap: usize) -> (Vec<f64>, f64) {
    let mut dist = vec![0.0_f64; z_cap + 1];
    dist[1] = 1.0;
    let mut lost = 0.0;
    for &a in seq {
        let table = &tables[a];
        let mut next = vec![0.0_f64; z_cap + 1];
        for z in 1..=z_cap {
            let p = dist[z];
            if p == 0.0 {
                continue;
            }
            lost += p * table.row_loss[z];
            for (j, &q) in table.rows[z].iter().enumerate() {
                next[j] += p * q;
            }
        }
        dist = next;
    }
    (dist, lost)
}

/// All z-fold convolutions of one offspring law, truncated at `z_cap`.
struct ConvTable {
    /// `rows[z][j] = P(sum of z offspring = j)` for j <= z_cap.
    rows: Vec<Vec<f64>>,
    /// Mass missing from row z (spill past z_cap plus floored entries).
    row_loss: Vec<f64>,
}

impl ConvTable {
    fn build(law: &OffspringLaw, z_cap: usize) -> Result<Self> {
        let mut pmf = vec![0.0_f64; z_cap + 1];
        for k in 1..=z_cap {
            pmf[k] = law.pmf(k as u64)?;
        }
        // suffix[k] = P(offspring >= k), with the beyond-cap tail computed
        // positively (no cancellation against 1).
        let beyond = tail_beyond_cap(law, z_cap);
        let mut suffix = vec![0.0_f64; z_cap + 2];
        suffix[z_cap + 1] = beyond;
        for k in (1..=z_cap).rev() {
            suffix[k] = suffix[k + 1] + pmf[k];
        }

        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); z_cap + 1];
        let mut row_loss = vec![0.0_f64; z_cap + 1];
        rows[1] = pmf.clone();
        row_loss[1] = beyond;
        for z in 2..=z_cap {
            let mut row = vec![0.0_f64; z_cap + 1];
            let mut loss = row_loss[z - 1];
            for i in (z - 1)..=z_cap {
                let p = rows[z - 1][i];
                if p == 0.0 {
                    continue;
                }
                // Mass from i existing particles whose extra offspring push
                // past the cap.
                loss += p * suffix[z_cap - i + 1];
                for k in 1..=(z_cap - i) {
                    let q = p * pmf[k];
                    if q < PROB_FLOOR {
                        loss += q;
                    } else {
                        row[i + k] += q;
                    }
                }
            }
            rows[z] = row;
            row_loss[z] = loss;
        }
        Ok(Self { rows, row_loss })
    }
}

/// `P(offspring > z_cap)`, summed upward so tiny tails keep full precision.
fn tail_beyond_cap(law: &OffspringLaw, z_cap: usize) -> f64 {
    match *law {
        OffspringLaw::TwoPoint { high, weight } => {
            if high as usize > z_cap {
                weight
            } else {
                0.0
            }
        }
        OffspringLaw::Geometric1 { success } => (1.0 - success).powf(z_cap as f64),
        OffspringLaw::ShiftedPoisson { rate } => {
            if rate == 0.0 {
                return 0.0;
            }
            let mut total = 0.0;
            let mut k = z_cap as u64 + 1;
            loop {
                let t = law.pmf(k).expect("k >= 1");
                total += t;
                k += 1;
                if (t < 1e-25 && (k as f64) > rate) || k > z_cap as u64 + 1_000_000 {
                    break;
                }
            }
            total
        }
    }
}

/// Exact Wasserstein distance of `(log Z_n - n mu) / (sigma sqrt(n))` to the
/// standard normal, for an exactly enumerated law.
pub fn exact_wasserstein(
    dist: &DiscreteDistribution,
    mu: f64,
    sigma: f64,
    n: usize,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if dist.truncation_mass > 1e-9 {
        return Err(Error::Domain(format!(
            "truncation mass {} too large for exact distance (limit 1e-9)",
            dist.truncation_mass
        )));
    }
    if dist.atoms.is_empty() {
        return Err(Error::Domain("distribution has no atoms".into()));
    }
    let scale = sigma * (n as f64).sqrt();
    let xs: Vec<f64> = dist
        .atoms
        .iter()
        .map(|&(v, _)| (v - n as f64 * mu) / scale)
        .collect();
    // Renormalize the retained mass; the induced error is O(truncation_mass).
    let total = dist.total_mass();
    let mut cum = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for &(_, p) in &dist.atoms {
        acc += p;
        cum.push(acc / total);
    }
    *cum.last_mut().expect("nonempty") = 1.0;
    wasserstein_step_cdf(&xs, &cum)
}

/// KS distance between the exact law and an empirical sample of the
/// normalized statistic, evaluated at both one-sided limits of every exact
/// atom. The atom transform mirrors [`exact_wasserstein`] bit for bit, so
/// shared support points coincide exactly.
pub fn ks_exact_vs_sample(dist: &DiscreteDistribution, sample: &EmpiricalSample) -> Result<f64> {
    if dist.atoms.is_empty() || sample.values().is_empty() {
        return Err(Error::Domain("need a nonempty law and sample".into()));
    }
    let n = sample.horizon;
    let scale = sample.sigma * (n as f64).sqrt();
    let total = dist.total_mass();
    let values = sample.values();
    let count = values.len() as f64;
    let mut ks = 0.0_f64;
    let mut cum = 0.0;
    for &(v, p) in &dist.atoms {
        let x = (v - n as f64 * sample.mu) / scale;
        let below = values.partition_point(|s| *s < x) as f64 / count;
        ks = ks.max((below - cum / total).abs());
        cum += p;
        let at_most = values.partition_point(|s| *s <= x) as f64 / count;
        ks = ks.max((at_most - cum / total).abs());
    }
    Ok(ks)
}
