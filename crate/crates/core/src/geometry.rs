//! Array geometry, field-region boundaries and near-field channels.
//!
//! The array is a uniform linear array on the y-axis centred at the origin.
//! Antenna `n` sits at `(0, n d)` for `n` in `[-(N-1)/2, (N-1)/2]`, so the
//! centre element is the phase reference of every steering vector.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::RangeInclusive;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Fresnel-integral argument at which `|(C(β)+jS(β))/β|` drops to
/// `1/√2`; fixes the effective near-field distance.
pub const ETA_3DB: f64 = 1.31;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    num_antennas: usize,
    carrier_hz: f64,
    spacing_m: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced array.
    pub fn new(num_antennas: usize, carrier_hz: f64) -> Result<Self> {
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        Self::with_spacing(num_antennas, carrier_hz, SPEED_OF_LIGHT / carrier_hz / 2.0)
    }

    pub fn with_spacing(num_antennas: usize, carrier_hz: f64, spacing_m: f64) -> Result<Self> {
        if num_antennas < 3 || num_antennas % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "antenna count must be odd and at least 3, got {num_antennas}"
            )));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "antenna spacing must be positive, got {spacing_m}"
            )));
        }
        Ok(Self {
            num_antennas,
            carrier_hz,
            spacing_m,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Largest antenna index, `(N-1)/2`.
    pub fn half_span(&self) -> i64 {
        (self.num_antennas as i64 - 1) / 2
    }

    pub fn indices(&self) -> RangeInclusive<i64> {
        -self.half_span()..=self.half_span()
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_m
    }

    /// `2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn aperture(&self) -> f64 {
        (self.num_antennas - 1) as f64 * self.spacing_m
    }

    pub fn is_half_wavelength(&self) -> bool {
        (self.spacing_m - self.wavelength() / 2.0).abs() <= 1e-12 * self.wavelength()
    }

    pub fn check_index(&self, n: i64) -> Result<()> {
        let half = self.half_span();
        if n < -half || n > half {
            return Err(Error::IndexOutOfRange { index: n, half });
        }
        Ok(())
    }

    /// Fresnel and Rayleigh distances plus the effective near-field
    /// distance for a user at angle `theta`.
    pub fn field_boundaries(&self, theta: f64) -> FieldBoundaries {
        let aperture = self.aperture();
        FieldBoundaries {
            fresnel_m: 1.2 * aperture,
            rayleigh_m: 2.0 * aperture * aperture / self.wavelength(),
            effective_near_field_m: self.effective_near_field_distance(theta),
            theta_rad: theta,
        }
    }

    /// `r_DF = N² λ cos²θ / (8 η²)`, the range beyond which the main lobe
    /// loses its finite beam-depth.
    pub fn effective_near_field_distance(&self, theta: f64) -> f64 {
        let n = self.num_antennas as f64;
        n * n * self.wavelength() * theta.cos().powi(2) / (8.0 * ETA_3DB * ETA_3DB)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldBoundaries {
    pub fresnel_m: f64,
    pub rayleigh_m: f64,
    pub effective_near_field_m: f64,
    pub theta_rad: f64,
}

impl FieldBoundaries {
    pub fn contains(&self, range: f64) -> bool {
        range >= self.fresnel_m && range <= self.rayleigh_m
    }
}

/// A point in the array's polar frame: angle from broadside and range from
/// the array centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarLocation {
    pub theta: f64,
    pub range: f64,
}

impl PolarLocation {
    pub fn new(theta: f64, range: f64) -> Result<Self> {
        if !theta.is_finite() || theta.abs() >= FRAC_PI_2 {
            return Err(Error::InvalidLocation(format!(
                "angle must lie in (-pi/2, pi/2), got {theta}"
            )));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::InvalidLocation(format!(
                "range must be positive, got {range}"
            )));
        }
        Ok(Self { theta, range })
    }

    pub fn from_degrees(theta_deg: f64, range: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), range)
    }

    /// `cos²θ / r`, the quantity that is constant along a distance ring.
    pub fn ring_level(&self) -> f64 {
        self.theta.cos().powi(2) / self.range
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceModel {
    Exact,
    #[default]
    Fresnel,
}

pub fn exact_distance(cfg: &ArrayConfig, n: i64, loc: &PolarLocation) -> Result<f64> {
    cfg.check_index(n)?;
    let nd = n as f64 * cfg.spacing();
    let r = loc.range;
    Ok((r * r + nd * nd - 2.0 * r * nd * loc.theta.sin()).sqrt())
}

/// Second-order (Fresnel) approximation of [`exact_distance`].
pub fn fresnel_approx_distance(cfg: &ArrayConfig, n: i64, loc: &PolarLocation) -> Result<f64> {
    cfg.check_index(n)?;
    let nd = n as f64 * cfg.spacing();
    Ok(loc.range - nd * loc.theta.sin() + nd * nd * loc.theta.cos().powi(2) / (2.0 * loc.range))
}

/// Phase of steering-vector entry `n`, `-(2π/λ)(r_n - r)`.
///
/// The Fresnel branch is evaluated from the closed quadratic
/// `(2π/λ)(n d sinθ - n²d²cos²θ / 2r)` rather than by subtracting two
/// nearly equal distances.
pub fn steering_phase(cfg: &ArrayConfig, n: i64, loc: &PolarLocation, model: DistanceModel) -> f64 {
    let nd = n as f64 * cfg.spacing();
    match model {
        DistanceModel::Fresnel => {
            cfg.wavenumber()
                * (nd * loc.theta.sin() - nd * nd * loc.theta.cos().powi(2) / (2.0 * loc.range))
        }
        DistanceModel::Exact => {
            let r = loc.range;
            let rn = (r * r + nd * nd - 2.0 * r * nd * loc.theta.sin()).sqrt();
            -cfg.wavenumber() * (rn - r)
        }
    }
}

/// A length-N column vector `v`; [`ChannelVector::inner`] applies `v^H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    /// Complex path gain folded into the entries (1 for a bare steering
    /// vector).
    pub gain: Complex64,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `v^H x`.
    pub fn inner(&self, x: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.entries.len());
        self.entries
            .iter()
            .zip(x)
            .map(|(v, x)| v.conj() * x)
            .sum()
    }
}

pub fn steering_vector(cfg: &ArrayConfig, loc: &PolarLocation, model: DistanceModel) -> ChannelVector {
    let fresnel = 1.2 * cfg.aperture();
    if loc.range < fresnel {
        warn!(
            "steering vector requested at r = {:.3} m, inside the Fresnel distance {:.3} m",
            loc.range, fresnel
        );
    }
    let scale = 1.0 / (cfg.num_antennas() as f64).sqrt();
    let entries = cfg
        .indices()
        .map(|n| Complex64::from_polar(scale, steering_phase(cfg, n, loc, model)))
        .collect();
    ChannelVector {
        entries,
        gain: Complex64::new(1.0, 0.0),
    }
}

/// Free-space reference gain at 1 m, `(λ/4π)²`.
pub fn free_space_reference_gain(cfg: &ArrayConfig) -> f64 {
    (cfg.wavelength() / (4.0 * PI)).powi(2)
}

/// Line-of-sight channel `h` with `h^H = √N h b^H(θ, r)` and
/// `h = (√β / r) e^{-j 2π r / λ}`.
pub fn los_channel(
    cfg: &ArrayConfig,
    loc: &PolarLocation,
    beta_ref: f64,
    model: DistanceModel,
) -> Result<ChannelVector> {
    if !(beta_ref.is_finite() && beta_ref > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "reference channel gain must be positive, got {beta_ref}"
        )));
    }
    let gain = Complex64::from_polar(beta_ref.sqrt() / loc.range, -cfg.wavenumber() * loc.range);
    let b = steering_vector(cfg, loc, model);
    let scale = (cfg.num_antennas() as f64).sqrt() * gain.conj();
    Ok(ChannelVector {
        entries: b.entries.iter().map(|z| scale * z).collect(),
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn xl_array() -> ArrayConfig {
        ArrayConfig::new(513, 60e9).unwrap()
    }

    #[test]
    fn rejects_even_or_tiny_arrays() {
        assert!(ArrayConfig::new(4, 60e9).is_err());
        assert!(ArrayConfig::new(1, 60e9).is_err());
        assert!(ArrayConfig::new(3, -1.0).is_err());
        assert!(ArrayConfig::with_spacing(5, 60e9, 0.0).is_err());
    }

    #[test]
    fn boundaries_of_the_reference_array() {
        let cfg = xl_array();
        // 5 mm display wavelength gives 1.28 m / 1.536 m / 655.36 m.
        let b = cfg.field_boundaries(0.0);
        assert_relative_eq!(cfg.aperture(), 1.28, max_relative = 1e-3);
        assert_relative_eq!(b.fresnel_m, 1.536, max_relative = 1e-3);
        assert_relative_eq!(b.rayleigh_m, 655.36, max_relative = 1e-3);
        assert_relative_eq!(b.rayleigh_m, 131072.0 * cfg.wavelength(), max_relative = 1e-14);
        assert!(b.fresnel_m < b.rayleigh_m);
        assert!(b.contains(25.0));
    }

    #[test]
    fn smallest_array_boundaries() {
        let cfg = ArrayConfig::new(3, 60e9).unwrap();
        let lambda = cfg.wavelength();
        assert_relative_eq!(cfg.aperture(), lambda, max_relative = 1e-14);
        assert_relative_eq!(cfg.field_boundaries(0.3).rayleigh_m, 2.0 * lambda, max_relative = 1e-14);

        let cfg = ArrayConfig::new(65, 60e9).unwrap();
        assert_relative_eq!(cfg.field_boundaries(0.0).rayleigh_m, 2048.0 * cfg.wavelength(), max_relative = 1e-14);
        assert_relative_eq!(cfg.field_boundaries(0.0).rayleigh_m, 10.24, max_relative = 2e-3);
    }

    #[test]
    fn effective_near_field_distance_reference_value() {
        let r_df = xl_array().effective_near_field_distance(PI / 5.0);
        assert_relative_eq!(r_df, 62.688, max_relative = 1e-4);
    }

    #[test]
    fn distances_at_center_and_broadside() {
        let cfg = xl_array();
        let user = PolarLocation::new(PI / 5.0, 25.0).unwrap();
        assert_eq!(exact_distance(&cfg, 0, &user).unwrap(), 25.0);
        assert_eq!(fresnel_approx_distance(&cfg, 0, &user).unwrap(), 25.0);

        let broadside = PolarLocation::new(0.0, 25.0).unwrap();
        let half = cfg.half_span();
        let nd = half as f64 * cfg.spacing();
        assert_relative_eq!(
            exact_distance(&cfg, half, &broadside).unwrap(),
            (625.0 + nd * nd).sqrt(),
            max_relative = 1e-15
        );
        for n in [1, 17, 100, half] {
            assert_eq!(
                exact_distance(&cfg, n, &broadside).unwrap(),
                exact_distance(&cfg, -n, &broadside).unwrap()
            );
        }
        assert!(matches!(
            exact_distance(&cfg, half + 1, &broadside),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn fresnel_error_below_sixteenth_wavelength_beyond_fresnel_distance() {
        let cfg = xl_array();
        let user = PolarLocation::new(PI / 5.0, 25.0).unwrap();
        let lambda = cfg.wavelength();
        for n in cfg.indices() {
            let exact = exact_distance(&cfg, n, &user).unwrap();
            let approx = fresnel_approx_distance(&cfg, n, &user).unwrap();
            assert!((exact - approx).abs() < lambda / 16.0, "n = {n}");
        }
        let edge = cfg.half_span();
        let exact = exact_distance(&cfg, edge, &user).unwrap();
        let approx = fresnel_approx_distance(&cfg, edge, &user).unwrap();
        assert!(exact > approx && exact - approx < lambda / 16.0);
    }

    #[test]
    fn fresnel_error_grows_as_range_shrinks() {
        let cfg = xl_array();
        let edge = cfg.half_span();
        for theta in [0.2, PI / 5.0, 1.0] {
            let mut last = 0.0;
            for range in [40.0, 20.0, 10.0, 5.0, 2.0, 1.536, 1.0, 0.5] {
                let loc = PolarLocation::new(theta, range).unwrap();
                let err = (exact_distance(&cfg, edge, &loc).unwrap()
                    - fresnel_approx_distance(&cfg, edge, &loc).unwrap())
                .abs();
                assert!(err > last, "theta {theta} range {range}");
                last = err;
            }
        }
    }

    #[test]
    fn near_endfire_the_linear_term_dominates() {
        let cfg = xl_array();
        let loc = PolarLocation::new(FRAC_PI_2 - 1e-6, 25.0).unwrap();
        let n = 200;
        let nd = n as f64 * cfg.spacing();
        let approx = fresnel_approx_distance(&cfg, n, &loc).unwrap();
        assert_relative_eq!(approx, 25.0 - nd * loc.theta.sin(), max_relative = 1e-12);
    }

    #[test]
    fn steering_vectors_have_unit_norm_and_match_far_broadside_limit() {
        let cfg = ArrayConfig::new(3, 60e9).unwrap();
        let far = PolarLocation::new(0.0, 1e12).unwrap();
        let b = steering_vector(&cfg, &far, DistanceModel::Exact);
        for z in &b.entries {
            assert_relative_eq!(z.re, 1.0 / 3f64.sqrt(), epsilon = 1e-9);
            assert!(z.im.abs() < 1e-9);
        }

        let cfg = xl_array();
        let user = PolarLocation::new(PI / 5.0, 25.0).unwrap();
        for model in [DistanceModel::Exact, DistanceModel::Fresnel] {
            let b = steering_vector(&cfg, &user, model);
            assert!((b.norm() - 1.0).abs() < 1e-12);
            assert!((b.inner(&b.entries).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_vectors_decorrelate_outside_beam_depth() {
        let cfg = xl_array();
        let near = steering_vector(&cfg, &PolarLocation::new(PI / 5.0, 25.0).unwrap(), DistanceModel::Fresnel);
        let far = steering_vector(&cfg, &PolarLocation::new(PI / 5.0, 50.0).unwrap(), DistanceModel::Fresnel);
        assert!(near.inner(&far.entries).norm() < 0.71);
    }

    #[test]
    fn los_channel_norm_and_path_loss() {
        let cfg = xl_array();
        let beta = free_space_reference_gain(&cfg);
        assert_relative_eq!(beta, 1.583e-7, max_relative = 2e-3);
        assert_relative_eq!(10.0 * beta.log10(), -68.0, epsilon = 0.05);

        let loc = PolarLocation::new(0.4, 30.0).unwrap();
        let h = los_channel(&cfg, &loc, beta, DistanceModel::Fresnel).unwrap();
        assert_relative_eq!(h.norm(), (513f64).sqrt() * beta.sqrt() / 30.0, max_relative = 1e-12);

        let loc2 = PolarLocation::new(0.4, 60.0).unwrap();
        let h2 = los_channel(&cfg, &loc2, beta, DistanceModel::Fresnel).unwrap();
        assert_relative_eq!(h2.norm().powi(2) / h.norm().powi(2), 0.25, max_relative = 1e-12);

        assert!(los_channel(&cfg, &loc, 0.0, DistanceModel::Fresnel).is_err());
    }

    #[test]
    fn location_validation() {
        assert!(PolarLocation::new(FRAC_PI_2, 1.0).is_err());
        assert!(PolarLocation::new(0.1, 0.0).is_err());
        assert!(PolarLocation::new(f64::NAN, 1.0).is_err());
        let loc = PolarLocation::from_degrees(36.0, 25.0).unwrap();
        assert_relative_eq!(loc.theta, PI / 5.0, max_relative = 1e-15);
    }
}
