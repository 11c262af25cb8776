//! Beam-pattern evaluation `F_B(θ, r) = |b^H(θ, r) f_B|` over observation
//! grids, directly or through the truncated Fourier series of the
//! quantizer.
//!
//! Steering vectors use the Fresnel phase model unless a call asks for the
//! exact model. Rows of a grid share one angle and are evaluated in
//! parallel; each row is reduced serially, so results do not depend on the
//! thread count.

pub mod special;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, DistanceModel, PolarLocation};
use crate::quantization::{
    default_index_set, effective_quantizer, farfield_discrete_beamformer, fourier_coefficient,
    in_support, mrt_discrete_beamformer, BeamTarget, DiscreteBeamformer, PhaseShifter,
};

/// `n` points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridLayout {
    /// Cartesian product of the angle axis with a range axis.
    Ranges { range_axis: Vec<f64> },
    /// Distance ring `cos²θ / r = level`, one point per angle. Level 0 is
    /// the far-field ring (`r = ∞`).
    Ring { level: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservationGrid {
    pub theta_axis: Vec<f64>,
    pub layout: GridLayout,
}

fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} axis has non-finite values")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

fn check_theta_axis(theta: &[f64]) -> Result<()> {
    check_axis(theta, "angle")?;
    if theta.iter().any(|t| t.abs() >= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidGrid("angles must lie in (-pi/2, pi/2)".into()));
    }
    Ok(())
}

impl ObservationGrid {
    pub fn new(theta_axis: Vec<f64>, range_axis: Vec<f64>) -> Result<Self> {
        check_theta_axis(&theta_axis)?;
        check_axis(&range_axis, "range")?;
        if range_axis[0] <= 0.0 {
            return Err(Error::InvalidGrid("ranges must be positive".into()));
        }
        Ok(Self {
            theta_axis,
            layout: GridLayout::Ranges { range_axis },
        })
    }

    pub fn ring(theta_axis: Vec<f64>, level: f64) -> Result<Self> {
        check_theta_axis(&theta_axis)?;
        if !(level.is_finite() && level >= 0.0) {
            return Err(Error::InvalidGrid(format!("ring level must be >= 0, got {level}")));
        }
        Ok(Self {
            theta_axis,
            layout: GridLayout::Ring { level },
        })
    }

    /// Ring through `loc`.
    pub fn ring_through(theta_axis: Vec<f64>, loc: &PolarLocation) -> Result<Self> {
        Self::ring(theta_axis, loc.ring_level())
    }

    pub fn far_field(theta_axis: Vec<f64>) -> Result<Self> {
        Self::ring(theta_axis, 0.0)
    }

    pub fn rows(&self) -> usize {
        self.theta_axis.len()
    }

    pub fn cols(&self) -> usize {
        match &self.layout {
            GridLayout::Ranges { range_axis } => range_axis.len(),
            GridLayout::Ring { .. } => 1,
        }
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(θ, cos²θ/r)` of point `(i, j)`.
    fn point_level(&self, i: usize, j: usize) -> (f64, f64) {
        let theta = self.theta_axis[i];
        let level = match &self.layout {
            GridLayout::Ranges { range_axis } => theta.cos().powi(2) / range_axis[j],
            GridLayout::Ring { level } => *level,
        };
        (theta, level)
    }

    /// Range of point `(i, j)`; infinite on the far-field ring.
    pub fn range_at(&self, i: usize, j: usize) -> f64 {
        match &self.layout {
            GridLayout::Ranges { range_axis } => range_axis[j],
            GridLayout::Ring { level } => {
                if *level == 0.0 {
                    f64::INFINITY
                } else {
                    self.theta_axis[i].cos().powi(2) / level
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Fse,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamPatternMap {
    pub grid: ObservationGrid,
    /// Row-major `|F|`, rows indexed by angle.
    pub values: Vec<f64>,
    pub cfg: ArrayConfig,
    pub target: BeamTarget,
    pub spec: PhaseShifter,
    pub method: Method,
    /// Harmonics kept by the FSE method.
    pub k_set: Option<Vec<i64>>,
}

impl BeamPatternMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.grid.cols();
        &self.values[i * c..(i + 1) * c]
    }

    /// `(i, j, value)` of the largest sample; the first one wins ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let c = self.grid.cols();
        let (idx, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        (idx / c, idx % c, v)
    }

    pub fn max(&self) -> f64 {
        self.argmax().2
    }

    /// Largest absolute difference to another map on the same grid.
    pub fn max_abs_diff(&self, other: &BeamPatternMap) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-antenna offsets `n d` in index order.
fn positions(cfg: &ArrayConfig) -> Vec<f64> {
    cfg.indices().map(|n| n as f64 * cfg.spacing()).collect()
}

/// `Σ_n conj(b_n) w_n` at angle `theta` and ring level `cos²θ/r`, times `√N`.
fn correlate(cfg: &ArrayConfig, pos: &[f64], weights: &[Complex64], theta: f64, level: f64, model: DistanceModel) -> Complex64 {
    let k = cfg.wavenumber();
    let s = theta.sin();
    let mut acc = Complex64::new(0.0, 0.0);
    match model {
        DistanceModel::Fresnel => {
            for (x, w) in pos.iter().zip(weights) {
                let phase = k * (x * s - 0.5 * x * x * level);
                acc += w * Complex64::from_polar(1.0, -phase);
            }
        }
        DistanceModel::Exact => {
            if level == 0.0 {
                return correlate(cfg, pos, weights, theta, level, DistanceModel::Fresnel);
            }
            let r = theta.cos().powi(2) / level;
            for (x, w) in pos.iter().zip(weights) {
                let rn = (r * r + x * x - 2.0 * r * x * s).sqrt();
                acc += w * Complex64::from_polar(1.0, k * (rn - r));
            }
        }
    }
    acc / (pos.len() as f64).sqrt()
}

/// Complex `b^H(θ, r) w` over a grid, row-major.
pub fn correlate_weights(
    cfg: &ArrayConfig,
    weights: &[Complex64],
    grid: &ObservationGrid,
    model: DistanceModel,
) -> Result<Vec<Complex64>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if weights.len() != cfg.num_antennas() {
        return Err(Error::InvalidConfig(format!(
            "weight vector has {} entries for {} antennas",
            weights.len(),
            cfg.num_antennas()
        )));
    }
    let pos = positions(cfg);
    let cols = grid.cols();
    let rows: Vec<Vec<Complex64>> = (0..grid.rows())
        .into_par_iter()
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let (theta, level) = grid.point_level(i, j);
                    correlate(cfg, &pos, weights, theta, level, model)
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// `|b^H(θ, r) w|` over a grid.
pub fn pattern_of_weights(
    cfg: &ArrayConfig,
    weights: &[Complex64],
    grid: &ObservationGrid,
    model: DistanceModel,
) -> Result<Vec<f64>> {
    Ok(correlate_weights(cfg, weights, grid, model)?
        .into_iter()
        .map(|z| z.norm())
        .collect())
}

/// Single-point `|b^H(θ, r) w|`; `range = ∞` selects the far field.
pub fn pattern_at(cfg: &ArrayConfig, weights: &[Complex64], theta: f64, range: f64) -> f64 {
    let level = if range.is_infinite() { 0.0 } else { theta.cos().powi(2) / range };
    correlate(cfg, &positions(cfg), weights, theta, level, DistanceModel::Fresnel).norm()
}

pub fn beamformer_for(cfg: &ArrayConfig, target: BeamTarget, spec: PhaseShifter) -> DiscreteBeamformer {
    match target {
        BeamTarget::Near(loc) => mrt_discrete_beamformer(cfg, &loc, spec),
        BeamTarget::Far { theta } => farfield_discrete_beamformer(cfg, theta, spec),
    }
}

impl From<PolarLocation> for BeamTarget {
    fn from(loc: PolarLocation) -> Self {
        BeamTarget::Near(loc)
    }
}

/// Pattern of the quantized MRT beamformer, `|b^H f_B|`.
pub fn beam_pattern_direct(
    cfg: &ArrayConfig,
    target: impl Into<BeamTarget>,
    spec: PhaseShifter,
    grid: &ObservationGrid,
) -> Result<BeamPatternMap> {
    let target = target.into();
    let fb = beamformer_for(cfg, target, spec);
    let values = pattern_of_weights(cfg, &fb.entries, grid, DistanceModel::Fresnel)?;
    Ok(BeamPatternMap {
        grid: grid.clone(),
        values,
        cfg: *cfg,
        target,
        spec,
        method: Method::Direct,
        k_set: None,
    })
}

fn check_k_set(spec: PhaseShifter, k_set: &[i64]) -> Result<()> {
    match k_set.iter().find(|&&k| !in_support(k, spec)) {
        Some(&k) => Err(Error::NotInSupport(k)),
        None => Ok(()),
    }
}

/// `(1/√N) Σ_{k∈K} a_k e^{jkφ_n}`: the beamformer whose pattern is the
/// truncated series `|Σ_{k∈K} f_k|`.
pub fn fse_weights(ideal_phases: &[f64], spec: PhaseShifter, k_set: &[i64]) -> Result<Vec<Complex64>> {
    check_k_set(spec, k_set)?;
    if k_set.is_empty() {
        return Ok(vec![Complex64::new(0.0, 0.0); ideal_phases.len()]);
    }
    let scale = 1.0 / (ideal_phases.len() as f64).sqrt();
    Ok(ideal_phases
        .iter()
        .map(|&phi| {
            k_set
                .iter()
                .map(|&k| Complex64::from_polar(scale, k as f64 * phi) * fourier_coefficient(k, spec))
                .reduce(|a, b| a + b)
                .expect("k_set is non-empty")
        })
        .collect())
}

/// Truncated Fourier-series pattern `|Σ_{k∈K} f_k|`; `k_set = None` uses
/// the dominant set.
pub fn beam_pattern_fse(
    cfg: &ArrayConfig,
    target: impl Into<BeamTarget>,
    spec: PhaseShifter,
    grid: &ObservationGrid,
    k_set: Option<&[i64]>,
) -> Result<BeamPatternMap> {
    let target = target.into();
    let k_set = k_set.map_or_else(|| default_index_set(spec), <[i64]>::to_vec);
    let fb = beamformer_for(cfg, target, spec);
    let weights = fse_weights(&fb.ideal_phases, spec, &k_set)?;
    let values = pattern_of_weights(cfg, &weights, grid, DistanceModel::Fresnel)?;
    Ok(BeamPatternMap {
        grid: grid.clone(),
        values,
        cfg: *cfg,
        target,
        spec,
        method: Method::Fse,
        k_set: Some(k_set),
    })
}

/// `(1/N) Σ_n |Q_B(φ_n) - Σ_{k∈K} a_k e^{jkφ_n}|`, a bound on the
/// sup-norm gap between the direct and truncated patterns for this target.
pub fn fse_residual_bound(
    cfg: &ArrayConfig,
    target: impl Into<BeamTarget>,
    spec: PhaseShifter,
    k_set: &[i64],
) -> Result<f64> {
    check_k_set(spec, k_set)?;
    let fb = beamformer_for(cfg, target.into(), spec);
    let n = fb.len() as f64;
    Ok(fb
        .ideal_phases
        .iter()
        .map(|&phi| {
            let series: Complex64 = k_set
                .iter()
                .map(|&k| Complex64::from_polar(fourier_coefficient(k, spec), k as f64 * phi))
                .sum();
            (effective_quantizer(phi, spec) - series).norm()
        })
        .sum::<f64>()
        / n)
}

/// Spatial-angle difference `Δ_k = k sinθ_u - sinθ`.
pub fn spatial_angle_difference(k: i64, theta_u: f64, theta: f64) -> f64 {
    k as f64 * theta_u.sin() - theta.sin()
}

/// Ring difference `Φ_k = -k cos²θ_u/r_u + cos²θ/r`, with `target_level`
/// and `level` the two `cos²/r` values.
pub fn ring_difference(k: i64, target_level: f64, level: f64) -> f64 {
    -(k as f64) * target_level + level
}

/// `(1/N) a Σ_n e^{j(2πd/λ)nΔ + j(πd²/λ)n²Φ}`.
pub fn lobe_value(cfg: &ArrayConfig, coefficient: f64, delta: f64, phi: f64) -> Complex64 {
    let lambda = cfg.wavelength();
    let d = cfg.spacing();
    let lin = std::f64::consts::TAU * d / lambda * delta;
    let quad = std::f64::consts::PI * d * d / lambda * phi;
    let sum: Complex64 = cfg
        .indices()
        .map(|n| {
            let n = n as f64;
            Complex64::from_polar(1.0, n * lin + n * n * quad)
        })
        .sum();
    sum * (coefficient / cfg.num_antennas() as f64)
}

fn target_level(target: &BeamTarget) -> f64 {
    match target {
        BeamTarget::Near(loc) => loc.ring_level(),
        BeamTarget::Far { .. } => 0.0,
    }
}

/// `f_k` evaluated at one point.
pub fn lobe_at(cfg: &ArrayConfig, target: &BeamTarget, spec: PhaseShifter, k: i64, theta: f64, range: f64) -> Complex64 {
    let level = if range.is_infinite() { 0.0 } else { theta.cos().powi(2) / range };
    let delta = spatial_angle_difference(k, target.theta(), theta);
    let phi = ring_difference(k, target_level(target), level);
    lobe_value(cfg, fourier_coefficient(k, spec), delta, phi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeComponent {
    pub k: i64,
    pub coefficient: f64,
    pub grid: ObservationGrid,
    /// Row-major `f_k` samples.
    pub values: Vec<Complex64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl LobeComponent {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `(i, j, |f_k|)` of the largest sample.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let c = self.grid.cols();
        let (idx, v) = self
            .values
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        (idx / c, idx % c, v)
    }
}

/// The `k`-th term of the series expansion over a grid. `k` outside the
/// support gives an identically zero component.
pub fn lobe_component(
    cfg: &ArrayConfig,
    target: impl Into<BeamTarget>,
    spec: PhaseShifter,
    k: i64,
    grid: &ObservationGrid,
) -> Result<LobeComponent> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let target = target.into();
    let a = fourier_coefficient(k, spec);
    let t_level = target_level(&target);
    let cols = grid.cols();
    let rows: Vec<Vec<(Complex64, f64, f64)>> = (0..grid.rows())
        .into_par_iter()
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let (theta, level) = grid.point_level(i, j);
                    let delta = spatial_angle_difference(k, target.theta(), theta);
                    let phi = ring_difference(k, t_level, level);
                    (lobe_value(cfg, a, delta, phi), delta, phi)
                })
                .collect()
        })
        .collect();
    let flat: Vec<(Complex64, f64, f64)> = rows.into_iter().flatten().collect();
    Ok(LobeComponent {
        k,
        coefficient: a,
        grid: grid.clone(),
        values: flat.iter().map(|t| t.0).collect(),
        delta: flat.iter().map(|t| t.1).collect(),
        phi: flat.iter().map(|t| t.2).collect(),
    })
}
