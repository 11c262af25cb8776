//! Lobe taxonomy and closed-form lobe metrics.
//!
//! Harmonic `k` of the quantizer series produces one lobe: the main lobe
//! (`k = 1`), a Type-I grating lobe that focuses at `(θ_k, r_k)` (`k > 1`)
//! or a Type-II grating lobe that only steers towards `θ_k` (`k ≤ 0`).
//! Widths are in the `sin θ` domain; all closed forms assume
//! half-wavelength spacing.

pub mod search;
pub mod subarrays;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beampattern::special::{fresnel_envelope, power_ratio, power_ratio_arguments};
use crate::beampattern::{lobe_at, ring_difference};
use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, PolarLocation};
use crate::quantization::{default_index_set, fourier_coefficient, in_support, BeamTarget, PhaseShifter};

use search::{half_power_on_ring, RingCrossing, RingSearch};

/// Half-power beam-width constant: `BW = 1.76 / N`.
pub const BEAM_WIDTH_FACTOR: f64 = 1.76;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LobeType {
    #[serde(rename = "main")]
    Main,
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamDepth {
    Finite(f64),
    Unbounded,
}

impl BeamDepth {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BeamDepth::Finite(v) => Some(*v),
            BeamDepth::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, BeamDepth::Unbounded)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    ClosedForm,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeReport {
    pub k: i64,
    pub lobe_type: LobeType,
    pub angle_rad: f64,
    /// Focus range; Type-II lobes and far-field lobes have none.
    pub focus_range_m: Option<f64>,
    pub beam_height: f64,
    pub beam_width: f64,
    /// Type-II lobes have no depth.
    pub beam_depth: Option<BeamDepth>,
    pub surrogate_width: Option<f64>,
    pub r0_m: Option<f64>,
    pub beta2: Option<f64>,
    /// Type-II power limit `|a_k|² |F(β∞)/β∞|²`.
    pub power_bound: Option<f64>,
    pub effective_near_field_m: f64,
    pub source: MetricSource,
}

pub fn classify(k: i64, spec: PhaseShifter) -> Result<LobeType> {
    if !in_support(k, spec) {
        return Err(Error::NotInSupport(k));
    }
    Ok(match k {
        1 => LobeType::Main,
        k if k > 1 => LobeType::TypeI,
        _ => LobeType::TypeII,
    })
}

/// `θ_k = asin(mod(k sinθ_u + 1, 2) - 1)`.
pub fn grating_lobe_angle(k: i64, theta_u: f64) -> f64 {
    if k == 1 {
        return theta_u;
    }
    ((k as f64 * theta_u.sin() + 1.0).rem_euclid(2.0) - 1.0).asin()
}

/// Focus `(θ_k, cos²θ_k / (k cos²θ_u) · r_u)` of a lobe with `k ≥ 1`.
pub fn type1_focus(k: i64, target: &PolarLocation) -> Result<PolarLocation> {
    if k < 1 {
        return Err(Error::WrongLobeType { k, expected: "focusing (k >= 1)" });
    }
    if k == 1 {
        return Ok(*target);
    }
    let theta_k = grating_lobe_angle(k, target.theta);
    let range = theta_k.cos().powi(2) / (k as f64 * target.theta.cos().powi(2)) * target.range;
    PolarLocation::new(theta_k, range)
}

/// `η(B) = |a_1|²`.
pub fn eta_power_ratio(spec: PhaseShifter) -> f64 {
    fourier_coefficient(1, spec).powi(2)
}

pub fn beam_width(cfg: &ArrayConfig) -> f64 {
    BEAM_WIDTH_FACTOR / cfg.num_antennas() as f64
}

fn check_spacing(cfg: &ArrayConfig) {
    if !cfg.is_half_wavelength() {
        warn!("closed-form lobe metrics assume half-wavelength spacing");
    }
}

/// `BD_1 = 2 r_u² r_DF / (r_DF² - r_u²)` for `r_u < r_DF`.
pub fn main_lobe_depth(cfg: &ArrayConfig, target: &PolarLocation) -> BeamDepth {
    let r_df = cfg.effective_near_field_distance(target.theta);
    let ru = target.range;
    if ru < r_df {
        BeamDepth::Finite(2.0 * ru * ru * r_df / (r_df * r_df - ru * ru))
    } else {
        BeamDepth::Unbounded
    }
}

pub fn main_lobe_metrics(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter) -> LobeReport {
    check_spacing(cfg);
    LobeReport {
        k: 1,
        lobe_type: LobeType::Main,
        angle_rad: target.theta,
        focus_range_m: Some(target.range),
        beam_height: fourier_coefficient(1, spec).abs(),
        beam_width: beam_width(cfg),
        beam_depth: Some(main_lobe_depth(cfg, target)),
        surrogate_width: None,
        r0_m: None,
        beta2: None,
        power_bound: None,
        effective_near_field_m: cfg.effective_near_field_distance(target.theta),
        source: MetricSource::ClosedForm,
    }
}

/// `BD_k = (cos²θ_k / cos²θ_u) · 2 r_u² r_DF / (k² r_DF² - r_u²)` for `r_u < k r_DF`.
pub fn type1_depth(cfg: &ArrayConfig, target: &PolarLocation, k: i64) -> BeamDepth {
    let r_df = cfg.effective_near_field_distance(target.theta);
    let ru = target.range;
    let kf = k as f64;
    if ru < kf * r_df {
        let theta_k = grating_lobe_angle(k, target.theta);
        let ratio = theta_k.cos().powi(2) / target.theta.cos().powi(2);
        BeamDepth::Finite(ratio * 2.0 * ru * ru * r_df / (kf * kf * r_df * r_df - ru * ru))
    } else {
        BeamDepth::Unbounded
    }
}

pub fn type1_metrics(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter, k: i64) -> Result<LobeReport> {
    if classify(k, spec)? != LobeType::TypeI {
        return Err(Error::WrongLobeType { k, expected: "Type-I" });
    }
    check_spacing(cfg);
    let focus = type1_focus(k, target)?;
    Ok(LobeReport {
        k,
        lobe_type: LobeType::TypeI,
        angle_rad: focus.theta,
        focus_range_m: Some(focus.range),
        beam_height: fourier_coefficient(k, spec).abs(),
        beam_width: beam_width(cfg),
        beam_depth: Some(type1_depth(cfg, target, k)),
        surrogate_width: None,
        r0_m: None,
        beta2: None,
        power_bound: None,
        effective_near_field_m: cfg.effective_near_field_distance(target.theta),
        source: MetricSource::ClosedForm,
    })
}

/// `Φ_{k,0} = -k cos²θ_u / r_u + cos²θ_k / r_0`.
pub fn type2_ring_difference(target: &PolarLocation, k: i64, r0: f64) -> f64 {
    let theta_k = grating_lobe_angle(k, target.theta);
    ring_difference(k, target.ring_level(), theta_k.cos().powi(2) / r0)
}

/// Closed-form surrogate width `N d|Φ| + (1 - √3) √(d|Φ|)`.
pub fn type2_surrogate_width(cfg: &ArrayConfig, phi: f64) -> f64 {
    let x = cfg.spacing() * phi.abs();
    cfg.num_antennas() as f64 * x + (1.0 - 3f64.sqrt()) * x.sqrt()
}

/// `β∞ = √((N² λ / 8) |k| cos²θ_u / r_u)`.
pub fn type2_beta_infinity(cfg: &ArrayConfig, target: &PolarLocation, k: i64) -> f64 {
    let n = cfg.num_antennas() as f64;
    (n * n * cfg.wavelength() / 8.0 * (k.abs() as f64) * target.ring_level()).sqrt()
}

pub fn type2_power_bound(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter, k: i64) -> f64 {
    let beta = type2_beta_infinity(cfg, target, k);
    (fourier_coefficient(k, spec) * fresnel_envelope(beta)).powi(2)
}

pub fn type2_metrics(
    cfg: &ArrayConfig,
    target: &PolarLocation,
    spec: PhaseShifter,
    k: i64,
    r0: f64,
) -> Result<LobeReport> {
    if classify(k, spec)? != LobeType::TypeII {
        return Err(Error::WrongLobeType { k, expected: "Type-II" });
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidLocation(format!("r0 must be positive, got {r0}")));
    }
    check_spacing(cfg);
    let theta_k = grating_lobe_angle(k, target.theta);
    let phi = type2_ring_difference(target, k, r0);
    let (_, beta2) = power_ratio_arguments(cfg, 0.0, phi)?;
    let bounds = cfg.field_boundaries(target.theta);
    let closed_form_valid = target.range >= bounds.fresnel_m && target.range < bounds.effective_near_field_m;
    let (width, source) = if closed_form_valid {
        (Some(type2_surrogate_width(cfg, phi)), MetricSource::ClosedForm)
    } else {
        warn!(
            "r_u = {:.3} m is outside [{:.3}, {:.3}) m; surrogate width from numeric search",
            target.range, bounds.fresnel_m, bounds.effective_near_field_m
        );
        let width = surrogate_width_numeric(cfg, &BeamTarget::Near(*target), spec, k, r0).map(|c| c.width());
        (width, MetricSource::Numeric)
    };
    Ok(LobeReport {
        k,
        lobe_type: LobeType::TypeII,
        angle_rad: theta_k,
        focus_range_m: None,
        beam_height: type2_power_bound(cfg, target, spec, k).sqrt(),
        beam_width: beam_width(cfg),
        beam_depth: None,
        surrogate_width: width,
        r0_m: Some(r0),
        beta2: Some(beta2),
        power_bound: Some(type2_power_bound(cfg, target, spec, k)),
        effective_near_field_m: bounds.effective_near_field_m,
        source,
    })
}

/// Reports for every dominant harmonic of a near-field beamformer. Type-II
/// lobes use `r0 = r_u`.
pub fn near_field_lobes(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter) -> Result<Vec<LobeReport>> {
    default_index_set(spec)
        .into_iter()
        .map(|k| match classify(k, spec)? {
            LobeType::Main => Ok(main_lobe_metrics(cfg, target, spec)),
            LobeType::TypeI => type1_metrics(cfg, target, spec, k),
            LobeType::TypeII => type2_metrics(cfg, target, spec, k, target.range),
        })
        .collect()
}

/// Far-field lobes: every dominant harmonic steers to `θ_k` with height
/// `|a_k|` and width `1.76/N`, without a finite depth.
pub fn farfield_lobes(cfg: &ArrayConfig, theta_u: f64, spec: PhaseShifter) -> Vec<LobeReport> {
    default_index_set(spec)
        .into_iter()
        .map(|k| LobeReport {
            k,
            lobe_type: classify(k, spec).expect("dominant set lies in the support"),
            angle_rad: grating_lobe_angle(k, theta_u),
            focus_range_m: None,
            beam_height: fourier_coefficient(k, spec).abs(),
            beam_width: beam_width(cfg),
            beam_depth: Some(BeamDepth::Unbounded),
            surrogate_width: None,
            r0_m: None,
            beta2: None,
            power_bound: None,
            effective_near_field_m: cfg.effective_near_field_distance(theta_u),
            source: MetricSource::ClosedForm,
        })
        .collect()
}

/// Surrogate width from the power-ratio approximation: twice the first
/// `Δ > 0` at which `R(Δ, Φ_{k,0})` drops to 1/2.
pub fn surrogate_width_by_power_ratio(cfg: &ArrayConfig, target: &PolarLocation, k: i64, r0: f64) -> Result<Option<f64>> {
    let phi = type2_ring_difference(target, k, r0);
    let (_, beta2) = power_ratio_arguments(cfg, 0.0, phi)?;
    // Δ per unit β₁.
    let (unit, _) = power_ratio_arguments(cfg, 1.0, phi)?;
    let scale = 1.0 / unit;
    let g = |delta: f64| power_ratio(cfg, delta, phi).map_or(f64::NAN, |r| r - 0.5);
    let root = search::first_crossing(&g, 0.0, 0.01 * scale, (beta2 + 10.0) * scale, 1e-14);
    Ok(root.map(|d| 2.0 * d))
}

/// Half-power crossings of `|f_k|` along the ring through `(θ_k, r_0)`,
/// referenced to the on-angle value.
pub fn surrogate_width_numeric(
    cfg: &ArrayConfig,
    target: &BeamTarget,
    spec: PhaseShifter,
    k: i64,
    r0: f64,
) -> Option<RingCrossing> {
    let theta_k = grating_lobe_angle(k, target.theta());
    let level = theta_k.cos().powi(2) / r0;
    let pattern = |t: f64, r: f64| lobe_at(cfg, target, spec, k, t, r).norm();
    let n = cfg.num_antennas() as f64;
    let search = RingSearch {
        level,
        step: 0.05 / n,
        max_offset: 0.5,
        refine_peak: false,
    };
    half_power_on_ring(&pattern, theta_k, &search)
}

/// Power `|f_k(θ_k, r)|²` of a Type-II lobe along its angle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Type2PowerProfile {
    pub k: i64,
    pub theta_rad: f64,
    pub ranges_m: Vec<f64>,
    pub power: Vec<f64>,
    /// `β₂` of the ring through each sample.
    pub beta2: Vec<f64>,
    pub bound: f64,
    /// Power is non-decreasing along the sampled ranges.
    pub monotone: bool,
    /// Samples whose power exceeds the bound.
    pub bound_violations: Vec<usize>,
}

pub fn type2_power_profile(
    cfg: &ArrayConfig,
    target: &PolarLocation,
    spec: PhaseShifter,
    k: i64,
    ranges: &[f64],
) -> Result<Type2PowerProfile> {
    if classify(k, spec)? != LobeType::TypeII {
        return Err(Error::WrongLobeType { k, expected: "Type-II" });
    }
    let theta_k = grating_lobe_angle(k, target.theta);
    let bt = BeamTarget::Near(*target);
    let power: Vec<f64> = ranges
        .par_iter()
        .map(|&r| lobe_at(cfg, &bt, spec, k, theta_k, r).norm_sqr())
        .collect();
    let beta2 = ranges
        .iter()
        .map(|&r| {
            let phi = type2_ring_difference(target, k, r);
            power_ratio_arguments(cfg, 0.0, phi).map_or(0.0, |b| b.1)
        })
        .collect();
    let bound = type2_power_bound(cfg, target, spec, k);
    let monotone = power.windows(2).all(|w| w[1] >= w[0]);
    let bound_violations = power
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > bound * (1.0 + 1e-9))
        .map(|(i, _)| i)
        .collect();
    Ok(Type2PowerProfile {
        k,
        theta_rad: theta_k,
        ranges_m: ranges.to_vec(),
        power,
        beta2,
        bound,
        monotone,
        bound_violations,
    })
}

/// Numeric metrics of one lobe of an arbitrary pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NumericLobe {
    pub peak_theta: f64,
    pub peak_range: f64,
    pub peak: f64,
    pub width: Option<f64>,
    pub depth: BeamDepth,
}

/// Peak, half-power width along the ring through `seed` and half-power
/// depth along range at the peak angle, all referenced to the lobe peak.
/// Range crossings are searched within `[r_min, r_max]`.
pub fn numeric_lobe(
    cfg: &ArrayConfig,
    pattern: &impl Fn(f64, f64) -> f64,
    seed: &PolarLocation,
    r_min: f64,
    r_max: f64,
) -> NumericLobe {
    let n = cfg.num_antennas() as f64;
    let search = RingSearch {
        level: seed.ring_level(),
        step: 0.05 / n,
        max_offset: 20.0 / n,
        refine_peak: true,
    };
    let ring = half_power_on_ring(pattern, seed.theta, &search);
    let theta = ring.map_or(seed.theta, |c| c.center_theta());
    let range_seed = theta.cos().powi(2) / seed.ring_level();
    let depth = search::half_power_along_range(pattern, theta, range_seed, r_min, r_max);
    NumericLobe {
        peak_theta: theta,
        peak_range: depth.peak_range,
        peak: depth.reference.max(ring.map_or(0.0, |c| c.reference)),
        width: ring.map(|c| c.width()),
        depth: depth.depth(),
    }
}

/// Far-field lobe: peak and half-power width on the far ring.
pub fn numeric_farfield_lobe(cfg: &ArrayConfig, pattern: &impl Fn(f64, f64) -> f64, seed_theta: f64) -> Option<RingCrossing> {
    let n = cfg.num_antennas() as f64;
    let search = RingSearch {
        level: 0.0,
        step: 0.05 / n,
        max_offset: 20.0 / n,
        refine_peak: true,
    };
    half_power_on_ring(pattern, seed_theta, &search)
}

/// `|f_k|` at a fixed off-focus point across array sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub k: i64,
    pub off_point: PolarLocation,
    pub num_antennas: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub strictly_decreasing: bool,
}

impl AsymptoticReport {
    pub fn magnitude_at(&self, n: usize) -> Option<f64> {
        self.num_antennas.iter().position(|&m| m == n).map(|i| self.magnitudes[i])
    }
}

pub fn asymptotic_focus_check(
    carrier_hz: f64,
    num_antennas: &[usize],
    target: &PolarLocation,
    spec: PhaseShifter,
    k: i64,
    off_point: &PolarLocation,
) -> Result<AsymptoticReport> {
    let bt = BeamTarget::Near(*target);
    let magnitudes = num_antennas
        .par_iter()
        .map(|&n| {
            let cfg = ArrayConfig::new(n, carrier_hz)?;
            Ok(lobe_at(&cfg, &bt, spec, k, off_point.theta, off_point.range).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let strictly_decreasing = magnitudes.windows(2).all(|w| w[1] < w[0]);
    Ok(AsymptoticReport {
        k,
        off_point: *off_point,
        num_antennas: num_antennas.to_vec(),
        magnitudes,
        strictly_decreasing,
    })
}
