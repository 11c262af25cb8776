//! Downlink multi-user hybrid beamforming.
//!
//! Each of the `M` RF chains drives a quantized MRT beam towards one user;
//! an `M × M` digital precoder acting on the effective channel
//! `H_eff = H F_RF` then trades interference against noise. The total
//! precoder is scaled so that `‖F_RF F_BB‖_F² = P_t`.

pub mod montecarlo;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{free_space_reference_gain, los_channel, ArrayConfig, ChannelVector, DistanceModel, PolarLocation};
use crate::quantization::{mrt_discrete_beamformer, PhaseShifter};

pub use montecarlo::{monte_carlo, write_trials_csv, MonteCarloConfig, MonteCarloSummary, TrialRow, UserDistribution};

/// `σ² = -70 dBm`.
pub const DEFAULT_NOISE_POWER_W: f64 = 1e-10;

/// Relative singular-value floor below which zero-forcing is refused.
pub const ZF_CONDITION_FLOOR: f64 = 1e-10;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DigitalMode {
    MrtOnly,
    #[default]
    Mmse,
    Zf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cfg: ArrayConfig,
    pub users: Vec<PolarLocation>,
    pub spec: PhaseShifter,
    pub transmit_power_w: f64,
    pub noise_power_w: f64,
    pub beta_ref: f64,
    pub rng_seed: u64,
    pub digital_mode: DigitalMode,
    pub channel_model: DistanceModel,
}

impl Scenario {
    /// Scenario with `σ² = -70 dBm`, free-space `β₀`, MMSE precoding and
    /// Fresnel-model channels.
    pub fn new(cfg: ArrayConfig, users: Vec<PolarLocation>, spec: PhaseShifter, transmit_power_w: f64) -> Self {
        Self {
            beta_ref: free_space_reference_gain(&cfg),
            cfg,
            users,
            spec,
            transmit_power_w,
            noise_power_w: DEFAULT_NOISE_POWER_W,
            rng_seed: 0,
            digital_mode: DigitalMode::Mmse,
            channel_model: DistanceModel::Fresnel,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Hard errors only.
    pub(crate) fn check(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::InvalidScenario("at least one user is required".into()));
        }
        if !(self.transmit_power_w.is_finite() && self.transmit_power_w >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "transmit power must be >= 0, got {}",
                self.transmit_power_w
            )));
        }
        if !(self.noise_power_w.is_finite() && self.noise_power_w > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "noise power must be positive, got {}",
                self.noise_power_w
            )));
        }
        if !(self.beta_ref.is_finite() && self.beta_ref > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "reference gain must be positive, got {}",
                self.beta_ref
            )));
        }
        Ok(())
    }

    /// Users outside `[Z_F, Z_R]` at their own angle.
    pub fn users_outside_near_field(&self) -> Vec<usize> {
        self.users
            .iter()
            .enumerate()
            .filter(|(_, u)| !self.cfg.field_boundaries(u.theta).contains(u.range))
            .map(|(m, _)| m)
            .collect()
    }

    /// `check` plus a warning for every user outside the near-field region.
    pub fn validate(&self) -> Result<()> {
        self.check()?;
        for m in self.users_outside_near_field() {
            let u = &self.users[m];
            let b = self.cfg.field_boundaries(u.theta);
            warn!(
                "user {m} at r = {:.3} m lies outside the near-field region [{:.3}, {:.3}] m",
                u.range, b.fresnel_m, b.rayleigh_m
            );
        }
        Ok(())
    }

    pub fn channels(&self) -> Result<Vec<ChannelVector>> {
        self.users
            .iter()
            .map(|u| los_channel(&self.cfg, u, self.beta_ref, self.channel_model))
            .collect()
    }
}

/// Per-user reference SNR `P_u β₀ N / (r² σ²)` in dB, with `P_u = P_t / M`.
pub fn reference_snr_db(scenario: &Scenario, user: usize) -> Result<f64> {
    let u = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::InvalidScenario(format!("no user {user}")))?;
    let pu = scenario.transmit_power_w / scenario.num_users() as f64;
    let n = scenario.cfg.num_antennas() as f64;
    Ok(10.0 * (pu * scenario.beta_ref * n / (u.range * u.range * scenario.noise_power_w)).log10())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub p_bb_w: f64,
    pub p_rf_w: f64,
    /// Per-shifter power for 1- to 4-bit shifters.
    pub p_ps_w: [f64; 4],
    /// Replaces the table for every resolution when set; required for
    /// continuous or finer-than-4-bit shifters.
    pub p_ps_override_w: Option<f64>,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_bb_w: 0.2,
            p_rf_w: 0.24,
            p_ps_w: [0.005, 0.010, 0.015, 0.045],
            p_ps_override_w: None,
        }
    }
}

impl PowerModel {
    pub fn ps_power_w(&self, spec: PhaseShifter) -> Result<f64> {
        if let Some(p) = self.p_ps_override_w {
            return Ok(p);
        }
        match spec.bits() {
            Some(b @ 1..=4) => Ok(self.p_ps_w[b as usize - 1]),
            _ => Err(Error::InvalidScenario(format!(
                "no phase-shifter power for {spec} shifters; set an override"
            ))),
        }
    }

    /// `P_BB + M P_RF + M N P_PS + P_t`.
    pub fn total_power_w(&self, num_rf: usize, num_antennas: usize, spec: PhaseShifter, transmit_power_w: f64) -> Result<f64> {
        let m = num_rf as f64;
        Ok(self.p_bb_w + m * self.p_rf_w + m * num_antennas as f64 * self.ps_power_w(spec)? + transmit_power_w)
    }

    /// Phase-shifter power of `M N` shifters.
    pub fn ps_total_w(&self, num_rf: usize, num_antennas: usize, spec: PhaseShifter) -> Result<f64> {
        Ok((num_rf * num_antennas) as f64 * self.ps_power_w(spec)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridBeamformer {
    /// `N × M`, column `m` is the quantized MRT beam of user `m`.
    pub analog: DMatrix<Complex64>,
    /// `M × M`, already scaled for the power constraint.
    pub digital: DMatrix<Complex64>,
}

impl HybridBeamformer {
    pub fn combined(&self) -> DMatrix<Complex64> {
        &self.analog * &self.digital
    }
}

fn channel_matrix(channels: &[ChannelVector]) -> DMatrix<Complex64> {
    let n = channels[0].len();
    // Row m is h_m^H.
    DMatrix::from_fn(channels.len(), n, |m, i| channels[m].entries[i].conj())
}

/// Index pair with the most collinear rows of `h`.
fn most_collinear_pair(h: &DMatrix<Complex64>) -> (usize, usize) {
    let mut best = (0, 1.min(h.nrows() - 1), f64::NEG_INFINITY);
    for i in 0..h.nrows() {
        for j in i + 1..h.nrows() {
            let ri = h.row(i);
            let rj = h.row(j);
            let c = ri.dotc(&rj).norm() / (ri.norm() * rj.norm());
            if c > best.2 {
                best = (i, j, c);
            }
        }
    }
    (best.0, best.1)
}

/// Analog stage from quantized MRT, digital stage per the scenario mode.
pub fn hybrid_beamformer(scenario: &Scenario) -> Result<HybridBeamformer> {
    scenario.validate()?;
    let channels = scenario.channels()?;
    hybrid_beamformer_with(scenario, &channels)
}

fn hybrid_beamformer_with(scenario: &Scenario, channels: &[ChannelVector]) -> Result<HybridBeamformer> {
    let cfg = &scenario.cfg;
    let n = cfg.num_antennas();
    let m = scenario.num_users();
    let beams: Vec<_> = scenario
        .users
        .iter()
        .map(|u| mrt_discrete_beamformer(cfg, u, scenario.spec).entries)
        .collect();
    let analog = DMatrix::from_fn(n, m, |i, j| beams[j][i]);
    let h = channel_matrix(channels);
    let h_eff = &h * &analog;
    let pt = scenario.transmit_power_w;

    let digital = match scenario.digital_mode {
        DigitalMode::MrtOnly => DMatrix::identity(m, m),
        DigitalMode::Mmse => {
            if pt == 0.0 {
                DMatrix::zeros(m, m)
            } else {
                let reg = Complex64::new(m as f64 * scenario.noise_power_w / pt, 0.0);
                let gram = h_eff.adjoint() * &h_eff + DMatrix::from_diagonal_element(m, m, reg);
                let rhs = h_eff.adjoint();
                match gram.clone().cholesky() {
                    Some(ch) => ch.solve(&rhs),
                    None => gram.lu().solve(&rhs).ok_or_else(|| {
                        let (a, b) = most_collinear_pair(&h_eff);
                        Error::SingularChannel(a, b)
                    })?,
                }
            }
        }
        DigitalMode::Zf => {
            let svd = h_eff.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smax == 0.0 || smin / smax < ZF_CONDITION_FLOOR {
                let (a, b) = most_collinear_pair(&h_eff);
                return Err(Error::SingularChannel(a, b));
            }
            svd.pseudo_inverse(0.0).map_err(|_| Error::SingularChannel(0, 0))?
        }
    };

    let combined = &analog * &digital;
    let norm = combined.norm();
    let digital = if pt == 0.0 || norm == 0.0 {
        DMatrix::zeros(m, m)
    } else {
        digital * Complex64::new(pt.sqrt() / norm, 0.0)
    };
    Ok(HybridBeamformer { analog, digital })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub sinr: Vec<f64>,
    pub sum_rate_bps_hz: f64,
    pub total_power_w: f64,
    pub ee_bit_hz_joule: f64,
}

/// `|h_m^H F_RF f_BB,j|²` for all `(m, j)`.
pub fn gain_matrix(scenario: &Scenario, bf: &HybridBeamformer) -> Result<DMatrix<f64>> {
    let channels = scenario.channels()?;
    let h = channel_matrix(&channels);
    Ok((h * bf.combined()).map(|z| z.norm_sqr()))
}

fn evaluate_gains(scenario: &Scenario, gains: &DMatrix<f64>, power: &PowerModel) -> Result<SimResult> {
    let m = scenario.num_users();
    let sinr: Vec<f64> = (0..m)
        .map(|u| {
            let signal = gains[(u, u)];
            let interference: f64 = (0..m).filter(|&j| j != u).map(|j| gains[(u, j)]).sum();
            signal / (interference + scenario.noise_power_w)
        })
        .collect();
    let sum_rate: f64 = sinr.iter().map(|s| (1.0 + s).log2()).sum();
    let total = power.total_power_w(m, scenario.cfg.num_antennas(), scenario.spec, scenario.transmit_power_w)?;
    Ok(SimResult {
        sinr,
        sum_rate_bps_hz: sum_rate,
        total_power_w: total,
        ee_bit_hz_joule: sum_rate / total,
    })
}

/// SINR per user, sum-rate and energy efficiency.
pub fn evaluate(scenario: &Scenario, power: &PowerModel) -> Result<SimResult> {
    scenario.validate()?;
    evaluate_checked(scenario, power)
}

/// `evaluate` without the per-user range warnings.
pub(crate) fn evaluate_checked(scenario: &Scenario, power: &PowerModel) -> Result<SimResult> {
    scenario.check()?;
    let channels = scenario.channels()?;
    let bf = hybrid_beamformer_with(scenario, &channels)?;
    let h = channel_matrix(&channels);
    let gains = (h * bf.combined()).map(|z| z.norm_sqr());
    evaluate_gains(scenario, &gains, power)
}
