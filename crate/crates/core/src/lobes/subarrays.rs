//! Array-of-subarrays view of a quantized beamformer: consecutive antennas
//! whose MRT phases fall in the same quantizer bin share one applied phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, PolarLocation};
use crate::quantization::{mrt_phase, PhaseShifter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Far,
    Near,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Subarray {
    /// Unwrapped bin `floor(C φ / 2π)`.
    pub bin: i64,
    pub first: i64,
    pub last: i64,
}

impl Subarray {
    pub fn size(&self) -> usize {
        (self.last - self.first + 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubarrayPartition {
    pub regime: Regime,
    /// Runs in increasing antenna order; they tile the whole array.
    pub subarrays: Vec<Subarray>,
    /// Far regime: `V_far`.
    pub far_size: Option<usize>,
    /// Near regime: `(ℓ, V_near,ℓ)` for every run whose bin admits the
    /// formula.
    pub near_sizes: Vec<(i64, usize)>,
}

impl SubarrayPartition {
    pub fn sizes(&self) -> Vec<usize> {
        self.subarrays.iter().map(Subarray::size).collect()
    }

    /// Runs not cut by the array edges.
    pub fn interior(&self) -> &[Subarray] {
        let n = self.subarrays.len();
        if n <= 2 {
            &[]
        } else {
            &self.subarrays[1..n - 1]
        }
    }
}

fn levels(spec: PhaseShifter) -> Result<f64> {
    spec.levels().map(|c| c as f64).ok_or(Error::ContinuousPhaseShifter)
}

/// `V_far = ⌈2 / (C |sin θ_u|)⌉`.
pub fn far_subarray_size(spec: PhaseShifter, theta_u: f64) -> Result<usize> {
    let c = levels(spec)?;
    let s = theta_u.sin().abs();
    if s == 0.0 {
        return Err(Error::Broadside);
    }
    Ok((2.0 / (c * s)).ceil() as usize)
}

/// `X_ℓ = sin²θ_u - (2λ cos²θ_u / (r_u C)) ℓ`.
pub fn near_x(cfg: &ArrayConfig, target: &PolarLocation, c: f64, bin: i64) -> f64 {
    target.theta.sin().powi(2) - 2.0 * cfg.wavelength() * target.ring_level() / c * bin as f64
}

/// `4 / (C (√X_ℓ + √X_{ℓ+1}))` before rounding; `None` if either `X` is
/// negative.
pub fn near_subarray_size_raw(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter, bin: i64) -> Result<Option<f64>> {
    let c = levels(spec)?;
    let x0 = near_x(cfg, target, c, bin);
    let x1 = near_x(cfg, target, c, bin + 1);
    if x0 < 0.0 || x1 < 0.0 {
        return Ok(None);
    }
    Ok(Some(4.0 / (c * (x0.sqrt() + x1.sqrt()))))
}

/// `V_near,ℓ = ⌈4 / (C (√X_ℓ + √X_{ℓ+1}))⌉`.
pub fn near_subarray_size(cfg: &ArrayConfig, target: &PolarLocation, spec: PhaseShifter, bin: i64) -> Result<Option<usize>> {
    Ok(near_subarray_size_raw(cfg, target, spec, bin)?.map(|v| v.ceil() as usize))
}

fn runs(cfg: &ArrayConfig, phases: &[f64], c: f64) -> Vec<Subarray> {
    let mut out: Vec<Subarray> = Vec::new();
    for (n, phi) in cfg.indices().zip(phases) {
        let bin = (c * phi / std::f64::consts::TAU).floor() as i64;
        match out.last_mut() {
            Some(run) if run.bin == bin => run.last = n,
            _ => out.push(Subarray { bin, first: n, last: n }),
        }
    }
    out
}

/// Exact run-length partition plus the matching formula sizes.
pub fn subarray_partition(
    cfg: &ArrayConfig,
    target: &PolarLocation,
    spec: PhaseShifter,
    regime: Regime,
) -> Result<SubarrayPartition> {
    let c = levels(spec)?;
    match regime {
        Regime::Far => {
            let far_size = far_subarray_size(spec, target.theta)?;
            let kd = cfg.wavenumber() * cfg.spacing() * target.theta.sin();
            let phases: Vec<f64> = cfg.indices().map(|n| kd * n as f64).collect();
            Ok(SubarrayPartition {
                regime,
                subarrays: runs(cfg, &phases, c),
                far_size: Some(far_size),
                near_sizes: Vec::new(),
            })
        }
        Regime::Near => {
            let phases: Vec<f64> = cfg.indices().map(|n| mrt_phase(cfg, n, target)).collect();
            let subarrays = runs(cfg, &phases, c);
            let near_sizes = subarrays
                .iter()
                .map(|s| Ok(near_subarray_size(cfg, target, spec, s.bin)?.map(|v| (s.bin, v))))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            Ok(SubarrayPartition {
                regime,
                subarrays,
                far_size: None,
                near_sizes,
            })
        }
    }
}

/// A pair of ranges at which the unrounded near size of bin `ℓ` grows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub bin: i64,
    pub range_a: f64,
    pub range_b: f64,
    pub size_a: f64,
    pub size_b: f64,
}

/// Checks that `V_near,ℓ` (unrounded) does not increase with `r_u` along
/// the sorted `ranges`, for each bin.
pub fn near_size_monotonicity(
    cfg: &ArrayConfig,
    theta_u: f64,
    spec: PhaseShifter,
    bins: &[i64],
    ranges: &[f64],
) -> Result<Vec<MonotonicityViolation>> {
    let mut out = Vec::new();
    for &bin in bins {
        let mut prev: Option<(f64, f64)> = None;
        for &r in ranges {
            let target = PolarLocation::new(theta_u, r)?;
            let Some(v) = near_subarray_size_raw(cfg, &target, spec, bin)? else {
                prev = None;
                continue;
            };
            if let Some((r_prev, v_prev)) = prev {
                if v > v_prev {
                    out.push(MonotonicityViolation {
                        bin,
                        range_a: r_prev,
                        range_b: r,
                        size_a: v_prev,
                        size_b: v,
                    });
                }
            }
            prev = Some((r, v));
        }
    }
    Ok(out)
}
