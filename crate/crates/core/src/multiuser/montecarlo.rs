//! Seeded Monte Carlo over random user drops.
//!
//! Trial `t` draws its users from a ChaCha8 stream seeded by
//! `splitmix64(base_seed + t·γ)`. The seed does not depend on the phase
//! shifter or power, so sweeps over those are paired trial by trial.
//! Results are collected in trial order, which makes every output
//! independent of the worker count.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::{evaluate_checked, watts_to_dbm, PowerModel, Scenario, SimResult};
use crate::error::{Error, Result};
use crate::geometry::PolarLocation;
use crate::quantization::PhaseShifter;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(base: u64, trial: u64) -> u64 {
    splitmix64(base.wrapping_add(trial.wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UserDistribution {
    pub theta_min: f64,
    pub theta_max: f64,
    pub range_min_m: f64,
    pub range_max_m: f64,
}

impl Default for UserDistribution {
    fn default() -> Self {
        Self {
            theta_min: -FRAC_PI_2,
            theta_max: FRAC_PI_2,
            range_min_m: 20.0,
            range_max_m: 60.0,
        }
    }
}

impl UserDistribution {
    fn validate(&self) -> Result<()> {
        let ok = self.theta_min < self.theta_max
            && self.theta_min >= -FRAC_PI_2
            && self.theta_max <= FRAC_PI_2
            && self.range_min_m > 0.0
            && self.range_min_m <= self.range_max_m
            && self.range_max_m.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("invalid user distribution {self:?}")))
        }
    }

    /// Uniform angle in the open interval, uniform range.
    pub fn sample(&self, rng: &mut impl Rng) -> PolarLocation {
        loop {
            let theta = rng.random_range(self.theta_min..self.theta_max);
            let range = if self.range_min_m == self.range_max_m {
                self.range_min_m
            } else {
                rng.random_range(self.range_min_m..=self.range_max_m)
            };
            // Rejects the closed endpoint -π/2.
            if let Ok(loc) = PolarLocation::new(theta, range) {
                return loc;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub distribution: UserDistribution,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            distribution: UserDistribution::default(),
            workers: None,
        }
    }
}

fn serialize_label<S: Serializer>(spec: &PhaseShifter, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&spec.label())
}

/// One CSV row per trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    #[serde(rename = "B", serialize_with = "serialize_label")]
    pub spec: PhaseShifter,
    #[serde(rename = "M")]
    pub num_users: usize,
    #[serde(rename = "N")]
    pub num_antennas: usize,
    #[serde(rename = "P_t_dBm")]
    pub transmit_power_dbm: f64,
    pub sum_rate_bps_hz: f64,
    pub ee_bit_hz_joule: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub mean_sum_rate_bps_hz: f64,
    pub stderr_sum_rate_bps_hz: f64,
    pub mean_ee_bit_hz_joule: f64,
    pub stderr_ee_bit_hz_joule: f64,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
    #[serde(skip)]
    pub results: Vec<SimResult>,
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `config.trials` independent user drops of `template` (its user count
/// fixes `M`; its user positions are replaced).
pub fn monte_carlo(template: &Scenario, power: &PowerModel, config: &MonteCarloConfig) -> Result<MonteCarloSummary> {
    if config.trials == 0 {
        return Err(Error::InvalidScenario("at least one trial is required".into()));
    }
    if template.users.is_empty() {
        return Err(Error::InvalidScenario("template needs at least one user".into()));
    }
    config.distribution.validate()?;
    let m = template.num_users();

    let run = |t: usize| -> Result<(TrialRow, SimResult, usize)> {
        let seed = trial_seed(template.rng_seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scenario = template.clone();
        scenario.users = (0..m).map(|_| config.distribution.sample(&mut rng)).collect();
        let outside = scenario.users_outside_near_field().len();
        let result = evaluate_checked(&scenario, power)?;
        let row = TrialRow {
            trial: t,
            spec: scenario.spec,
            num_users: m,
            num_antennas: scenario.cfg.num_antennas(),
            transmit_power_dbm: watts_to_dbm(scenario.transmit_power_w),
            sum_rate_bps_hz: result.sum_rate_bps_hz,
            ee_bit_hz_joule: result.ee_bit_hz_joule,
            seed,
        };
        Ok((row, result, outside))
    };

    let outcomes: Vec<Result<(TrialRow, SimResult, usize)>> = match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidScenario(format!("worker pool: {e}")))?;
            pool.install(|| (0..config.trials).into_par_iter().map(run).collect())
        }
        None => (0..config.trials).into_par_iter().map(run).collect(),
    };
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let outside: usize = outcomes.iter().map(|o| o.2).sum();
    if outside > 0 {
        warn!(
            "{outside} of {} drawn users lie outside the near-field region [Z_F, Z_R]",
            config.trials * m
        );
    }
    let (rows, results): (Vec<TrialRow>, Vec<SimResult>) = outcomes.into_iter().map(|(r, s, _)| (r, s)).unzip();

    let (mean_rate, se_rate) = mean_stderr(rows.iter().map(|r| r.sum_rate_bps_hz));
    let (mean_ee, se_ee) = mean_stderr(rows.iter().map(|r| r.ee_bit_hz_joule));
    Ok(MonteCarloSummary {
        trials: config.trials,
        mean_sum_rate_bps_hz: mean_rate,
        stderr_sum_rate_bps_hz: se_rate,
        mean_ee_bit_hz_joule: mean_ee,
        stderr_ee_bit_hz_joule: se_ee,
        rows,
        results,
    })
}

/// Writes rows with header
/// `trial,B,M,N,P_t_dBm,sum_rate_bps_hz,ee_bit_hz_joule,seed`.
pub fn write_trials_csv<W: Write>(rows: &[TrialRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
