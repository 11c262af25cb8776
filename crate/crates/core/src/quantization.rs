//! Nearest-neighbour phase quantization and the Fourier series of the
//! effective quantizer `Q_B(φ) = e^{j U_B(φ)}`.
//!
//! With `C = 2^B` levels the alphabet is `{(2c+1)π/C : c = 0..C-1}`. The
//! periodic function `Q_B` has Fourier support `T = {1 - pC : p ∈ ℤ}` and
//! real coefficients `a_k = (C/kπ) sin(π/C)` on it.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{steering_phase, ArrayConfig, DistanceModel, PolarLocation};

pub const MAX_BITS: u32 = 16;

/// Default node count for [`fourier_coefficient_numeric`].
pub const DEFAULT_QUAD_POINTS: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PhaseShifter {
    Continuous,
    Discrete { bits: u32 },
}

impl PhaseShifter {
    pub fn discrete(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::InvalidBits(bits));
        }
        Ok(PhaseShifter::Discrete { bits })
    }

    pub fn bits(&self) -> Option<u32> {
        match self {
            PhaseShifter::Continuous => None,
            PhaseShifter::Discrete { bits } => Some(*bits),
        }
    }

    /// `C_B = 2^B`.
    pub fn levels(&self) -> Option<u64> {
        self.bits().map(|b| 1u64 << b)
    }

    pub fn alphabet(&self) -> Result<Vec<f64>> {
        let c = self.levels().ok_or(Error::ContinuousPhaseShifter)?;
        Ok((0..c).map(|l| (2 * l + 1) as f64 * PI / c as f64).collect())
    }

    /// Short label used in file names and CSV columns ("1", "2", ..., "inf").
    pub fn label(&self) -> String {
        match self {
            PhaseShifter::Continuous => "inf".to_string(),
            PhaseShifter::Discrete { bits } => bits.to_string(),
        }
    }
}

impl fmt::Display for PhaseShifter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseShifter::Continuous => write!(f, "continuous"),
            PhaseShifter::Discrete { bits } => write!(f, "{bits}-bit"),
        }
    }
}

/// Bin index `ℓ` with `2ℓπ/C ≤ φ mod 2π < 2(ℓ+1)π/C`.
fn bin_index(phi: f64, levels: u64) -> u64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π, which belongs to bin 0.
    ((wrapped * levels as f64 / TAU).floor() as u64) % levels
}

/// Nearest alphabet phase. Bins are half-open, so a phase exactly on a bin
/// edge maps to the midpoint of the bin above it.
pub fn nn_quantize_phase(phi: f64, spec: PhaseShifter) -> Result<f64> {
    let c = spec.levels().ok_or(Error::ContinuousPhaseShifter)?;
    if !phi.is_finite() {
        return Err(Error::InvalidConfig(format!("phase must be finite, got {phi}")));
    }
    Ok((2 * bin_index(phi, c) + 1) as f64 * PI / c as f64)
}

/// `U_B(φ)`: the identity for continuous phase shifters.
pub fn quantized_phase(phi: f64, spec: PhaseShifter) -> f64 {
    match spec.levels() {
        None => phi,
        Some(c) => (2 * bin_index(phi, c) + 1) as f64 * PI / c as f64,
    }
}

/// `Q_B(φ) = e^{j U_B(φ)}`.
pub fn effective_quantizer(phi: f64, spec: PhaseShifter) -> Complex64 {
    Complex64::from_polar(1.0, quantized_phase(phi, spec))
}

/// Membership in the Fourier support `T`.
pub fn in_support(k: i64, spec: PhaseShifter) -> bool {
    match spec.levels() {
        None => k == 1,
        Some(c) => (1 - k).rem_euclid(c as i64) == 0,
    }
}

/// Closed-form Fourier coefficient `a_k` (always real).
pub fn fourier_coefficient(k: i64, spec: PhaseShifter) -> f64 {
    if !in_support(k, spec) {
        return 0.0;
    }
    match spec.levels() {
        None => 1.0,
        Some(c) => {
            let c = c as f64;
            c / (k as f64 * PI) * (PI / c).sin()
        }
    }
}

/// `(1/2π) ∫₀^{2π} Q_B(φ) e^{-jkφ} dφ` by composite 4-point Gauss-Legendre.
///
/// Panels never straddle a quantizer discontinuity: each bin is split into
/// `quad_points / (4 C)` panels (at least one).
pub fn fourier_coefficient_numeric(k: i64, spec: PhaseShifter, quad_points: usize) -> Complex64 {
    const NODES: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const WEIGHTS: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let bins = spec.levels().unwrap_or(1);
    let panels_per_bin = (quad_points / (4 * bins as usize)).max(1);
    let bin_width = TAU / bins as f64;
    let h = bin_width / panels_per_bin as f64;
    let kf = k as f64;

    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..bins {
        let lo = l as f64 * bin_width;
        let mut bin_acc = Complex64::new(0.0, 0.0);
        for p in 0..panels_per_bin {
            let mid = lo + (p as f64 + 0.5) * h;
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                let phi = mid + 0.5 * h * x;
                let q = match spec {
                    PhaseShifter::Continuous => phi,
                    PhaseShifter::Discrete { .. } => (2 * l + 1) as f64 * PI / bins as f64,
                };
                bin_acc += w * Complex64::from_polar(1.0, q - kf * phi);
            }
        }
        acc += bin_acc * (0.5 * h);
    }
    acc / TAU
}

/// Dominant harmonics `{k ∈ T : |a_k| > ratio·|a_1|}` in increasing order.
///
/// On the support `|a_k| / |a_1| = 1/|k|`, so the set is `T ∩ (-1/ratio, 1/ratio)`.
pub fn dominant_index_set(spec: PhaseShifter, threshold_ratio: f64) -> Result<Vec<i64>> {
    if !(threshold_ratio > 0.0 && threshold_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold ratio must lie in (0, 1], got {threshold_ratio}"
        )));
    }
    if spec == PhaseShifter::Continuous {
        return Ok(vec![1]);
    }
    let kmax = (1.0 / threshold_ratio).ceil() as i64;
    Ok((-kmax..=kmax)
        .filter(|&k| in_support(k, spec) && (k.abs() as f64) * threshold_ratio < 1.0)
        .collect())
}

/// Default truncation, ratio 0.1, i.e. `T ∩ [-9, 9]`.
pub fn default_index_set(spec: PhaseShifter) -> Vec<i64> {
    dominant_index_set(spec, 0.1).expect("0.1 is a valid ratio")
}

/// Coefficients of one quantizer over the window `[-kmax, kmax]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierCoefficientSet {
    pub spec: PhaseShifter,
    pub kmax: i64,
    /// Support members inside the window with their coefficients.
    pub coefficients: Vec<(i64, f64)>,
}

type CacheKey = (PhaseShifter, i64);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<FourierCoefficientSet>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<FourierCoefficientSet>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

impl FourierCoefficientSet {
    pub fn new(spec: PhaseShifter, kmax: i64) -> Self {
        let kmax = kmax.abs();
        let coefficients = (-kmax..=kmax)
            .filter(|&k| in_support(k, spec))
            .map(|k| (k, fourier_coefficient(k, spec)))
            .collect();
        Self {
            spec,
            kmax,
            coefficients,
        }
    }

    /// Shared instance; safe under concurrent readers.
    pub fn cached(spec: PhaseShifter, kmax: i64) -> Arc<Self> {
        let key = (spec, kmax.abs());
        if let Some(set) = cache().read().expect("coefficient cache poisoned").get(&key) {
            return Arc::clone(set);
        }
        let mut guard = cache().write().expect("coefficient cache poisoned");
        Arc::clone(guard.entry(key).or_insert_with(|| Arc::new(Self::new(spec, kmax))))
    }

    pub fn get(&self, k: i64) -> f64 {
        if k.abs() > self.kmax {
            return fourier_coefficient(k, self.spec);
        }
        self.coefficients
            .iter()
            .find(|(j, _)| *j == k)
            .map_or(0.0, |(_, a)| *a)
    }

    pub fn support(&self) -> Vec<i64> {
        self.coefficients.iter().map(|(k, _)| *k).collect()
    }

    /// Energy captured inside the window, `Σ |a_k|²`.
    pub fn captured_energy(&self) -> f64 {
        self.coefficients.iter().map(|(_, a)| a * a).sum()
    }
}

/// `sqrt(1 - Σ_{k∈K} |a_k|²)`: the ℓ2 norm of the harmonics left out of
/// `k_set`. Follows from `|Q_B| ≡ 1`.
pub fn l2_tail_bound(spec: PhaseShifter, k_set: &[i64]) -> f64 {
    let mut ks = k_set.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let kept: f64 = ks.iter().map(|&k| fourier_coefficient(k, spec).powi(2)).sum();
    (1.0 - kept).max(0.0).sqrt()
}

/// Where the beamformer points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BeamTarget {
    Near(PolarLocation),
    Far { theta: f64 },
}

impl BeamTarget {
    pub fn theta(&self) -> f64 {
        match self {
            BeamTarget::Near(loc) => loc.theta,
            BeamTarget::Far { theta } => *theta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteBeamformer {
    /// `(1/√N) e^{j U_B(φ_n)}`, ordered by antenna index.
    pub entries: Vec<Complex64>,
    /// Unquantized MRT phases `φ_n`.
    pub ideal_phases: Vec<f64>,
    /// Applied phases `U_B(φ_n)`.
    pub phases: Vec<f64>,
    pub target: BeamTarget,
    pub spec: PhaseShifter,
}

impl DiscreteBeamformer {
    fn from_phases(ideal_phases: Vec<f64>, target: BeamTarget, spec: PhaseShifter) -> Self {
        let scale = 1.0 / (ideal_phases.len() as f64).sqrt();
        let phases: Vec<f64> = ideal_phases.iter().map(|&p| quantized_phase(p, spec)).collect();
        let entries = phases.iter().map(|&p| Complex64::from_polar(scale, p)).collect();
        Self {
            entries,
            ideal_phases,
            phases,
            target,
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Near-field MRT phase `φ_{u,n} = (2π/λ)(n d sinθ_u - n²d²cos²θ_u / 2r_u)`.
pub fn mrt_phase(cfg: &ArrayConfig, n: i64, target: &PolarLocation) -> f64 {
    steering_phase(cfg, n, target, DistanceModel::Fresnel)
}

pub fn mrt_discrete_beamformer(
    cfg: &ArrayConfig,
    target: &PolarLocation,
    spec: PhaseShifter,
) -> DiscreteBeamformer {
    let ideal = cfg.indices().map(|n| mrt_phase(cfg, n, target)).collect();
    DiscreteBeamformer::from_phases(ideal, BeamTarget::Near(*target), spec)
}

/// Far-field MRT beamformer with phases `(2π/λ) n d sinθ_u` (`nπ sinθ_u` at
/// half-wavelength spacing).
pub fn farfield_discrete_beamformer(
    cfg: &ArrayConfig,
    theta_u: f64,
    spec: PhaseShifter,
) -> DiscreteBeamformer {
    let kd = cfg.wavenumber() * cfg.spacing();
    let s = theta_u.sin();
    let ideal = cfg.indices().map(|n| kd * n as f64 * s).collect();
    DiscreteBeamformer::from_phases(ideal, BeamTarget::Far { theta: theta_u }, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn d(bits: u32) -> PhaseShifter {
        PhaseShifter::discrete(bits).unwrap()
    }

    #[test]
    fn alphabet_and_validation() {
        assert_eq!(d(1).alphabet().unwrap(), vec![PI / 2.0, 3.0 * PI / 2.0]);
        assert_eq!(d(3).alphabet().unwrap().len(), 8);
        assert!(PhaseShifter::discrete(0).is_err());
        assert!(PhaseShifter::discrete(17).is_err());
        assert!(PhaseShifter::Continuous.alphabet().is_err());
        assert_eq!(PhaseShifter::Continuous.label(), "inf");
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(nn_quantize_phase(0.3, d(1)).unwrap(), PI / 2.0);
        assert_eq!(nn_quantize_phase(0.0, d(2)).unwrap(), PI / 4.0);
        assert_eq!(nn_quantize_phase(PI / 2.0, d(2)).unwrap(), 3.0 * PI / 4.0);
        assert_eq!(nn_quantize_phase(-1e-300, d(2)).unwrap(), PI / 4.0);
        assert_eq!(
            nn_quantize_phase(0.3, PhaseShifter::Continuous),
            Err(Error::ContinuousPhaseShifter)
        );
    }

    #[test]
    fn quantizer_matches_argmin_rule_off_ties() {
        for bits in 1..=4 {
            let spec = d(bits);
            let alphabet = spec.alphabet().unwrap();
            for i in 0..2000 {
                let phi = -7.0 + i as f64 * 0.00713;
                let argmin = alphabet
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        let da = (Complex64::from_polar(1.0, phi) - Complex64::from_polar(1.0, *a)).norm();
                        let db = (Complex64::from_polar(1.0, phi) - Complex64::from_polar(1.0, *b)).norm();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                assert_eq!(nn_quantize_phase(phi, spec).unwrap(), argmin, "B={bits} phi={phi}");
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(fourier_coefficient(1, d(1)), 2.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(fourier_coefficient(-1, d(1)), -2.0 / PI, max_relative = 1e-15);
        assert_eq!(fourier_coefficient(2, d(2)), 0.0);
        assert_eq!(fourier_coefficient(0, d(3)), 0.0);
        assert_relative_eq!(fourier_coefficient(-3, d(2)), -0.300_105, max_relative = 1e-5);
        assert_relative_eq!(fourier_coefficient(1, d(3)), 0.974_495, max_relative = 1e-6);
        assert_eq!(fourier_coefficient(1, PhaseShifter::Continuous), 1.0);
        assert_eq!(fourier_coefficient(-1, PhaseShifter::Continuous), 0.0);
    }

    #[test]
    fn numeric_coefficients_match_closed_form() {
        for bits in 1..=4 {
            for k in -20..=20 {
                let num = fourier_coefficient_numeric(k, d(bits), DEFAULT_QUAD_POINTS);
                let closed = fourier_coefficient(k, d(bits));
                assert!((num - closed).norm() < 1e-10, "B={bits} k={k}: {num} vs {closed}");
            }
        }
        let a0 = fourier_coefficient_numeric(0, d(1), DEFAULT_QUAD_POINTS);
        assert!(a0.norm() < 1e-12);
        let cont = fourier_coefficient_numeric(1, PhaseShifter::Continuous, 1024);
        assert!((cont - 1.0).norm() < 1e-12);
    }

    #[test]
    fn dominant_sets() {
        assert_eq!(default_index_set(d(1)), vec![-9, -7, -5, -3, -1, 1, 3, 5, 7, 9]);
        assert_eq!(default_index_set(d(2)), vec![-7, -3, 1, 5, 9]);
        assert_eq!(default_index_set(d(3)), vec![-7, 1, 9]);
        assert_eq!(default_index_set(d(4)), vec![1]);
        assert_eq!(default_index_set(PhaseShifter::Continuous), vec![1]);
        assert_eq!(dominant_index_set(d(1), 0.3).unwrap(), vec![-3, -1, 1, 3]);
        assert!(dominant_index_set(d(1), 0.0).is_err());
    }

    #[test]
    fn parseval_energy() {
        let window = FourierCoefficientSet::new(d(1), 9);
        assert!(window.captured_energy() >= 0.95);
        let wide = FourierCoefficientSet::new(d(1), 20001);
        assert!((wide.captured_energy() - 1.0).abs() < 1e-4);
        assert!(wide.captured_energy() > window.captured_energy());
        assert_relative_eq!(l2_tail_bound(d(1), &window.support()), 0.2011, epsilon = 1e-3);
        assert_eq!(l2_tail_bound(PhaseShifter::Continuous, &[1]), 0.0);
    }

    #[test]
    fn cached_sets_are_shared() {
        let a = FourierCoefficientSet::cached(d(2), 9);
        let b = FourierCoefficientSet::cached(d(2), -9);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.support(), vec![-7, -3, 1, 5, 9]);
        assert_eq!(a.get(13), fourier_coefficient(13, d(2)));
        assert_eq!(a.get(2), 0.0);
    }

    #[test]
    fn coefficient_magnitudes_decrease_on_positive_support() {
        for bits in 1..=4 {
            let ks: Vec<i64> = (1..200).filter(|&k| in_support(k, d(bits))).collect();
            for w in ks.windows(2) {
                assert!(fourier_coefficient(w[0], d(bits)).abs() > fourier_coefficient(w[1], d(bits)).abs());
            }
        }
    }

    #[test]
    fn mrt_examples() {
        let cfg = ArrayConfig::new(513, 60e9).unwrap();
        let user = PolarLocation::new(PI / 5.0, 25.0).unwrap();
        let b = crate::geometry::steering_vector(&cfg, &user, DistanceModel::Fresnel);
        let fc = mrt_discrete_beamformer(&cfg, &user, PhaseShifter::Continuous);
        assert!((b.inner(&fc.entries).norm() - 1.0).abs() < 1e-12);

        let f1 = mrt_discrete_beamformer(&cfg, &user, d(1));
        assert!((b.inner(&f1.entries).norm() - 2.0 / PI).abs() < 0.02);

        let mut last = f64::INFINITY;
        for bits in 1..=12 {
            let fb = mrt_discrete_beamformer(&cfg, &user, d(bits));
            let dist: f64 = fb
                .entries
                .iter()
                .zip(&fc.entries)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(dist < last, "B={bits}");
            last = dist;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn farfield_beamformer_examples() {
        let cfg = ArrayConfig::new(513, 60e9).unwrap();
        let broadside = farfield_discrete_beamformer(&cfg, 0.0, d(2));
        assert!(broadside.phases.iter().all(|&p| p == PI / 4.0));

        let far = farfield_discrete_beamformer(&cfg, PI / 5.0, d(1));
        let near = mrt_discrete_beamformer(&cfg, &PolarLocation::new(PI / 5.0, 1e6).unwrap(), d(1));
        assert_eq!(far.phases, near.phases);
        for (a, b) in far.ideal_phases.iter().zip(cfg.indices()) {
            assert_relative_eq!(*a, PI * b as f64 * (PI / 5.0).sin(), max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn quantizer_idempotent_and_periodic(phi in -100.0f64..100.0, bits in 1u32..=16) {
            let spec = d(bits);
            let q = nn_quantize_phase(phi, spec).unwrap();
            prop_assert_eq!(nn_quantize_phase(q, spec).unwrap(), q);
            let c = spec.levels().unwrap() as f64;
            let shifted = nn_quantize_phase(phi + TAU, spec).unwrap();
            // Adding 2π rounds the last bits, which matters only on a bin edge.
            let x = phi.rem_euclid(TAU) * c / TAU;
            prop_assert!(shifted == q || (x - x.round()).abs() < 1e-9);
        }

        #[test]
        fn quantization_error_bounded(phi in -100.0f64..100.0, bits in 1u32..=16) {
            let spec = d(bits);
            let q = nn_quantize_phase(phi, spec).unwrap();
            let c = spec.levels().unwrap() as f64;
            let err = (q - phi + PI).rem_euclid(TAU) - PI;
            prop_assert!(err.abs() <= PI / c * (1.0 + 1e-9));
            prop_assert!(spec.alphabet().unwrap().contains(&q));
        }

        #[test]
        fn beamformer_entries_are_in_alphabet(theta in -1.5f64..1.5, r in 2.0f64..500.0, bits in 1u32..=4) {
            let cfg = ArrayConfig::new(65, 28e9).unwrap();
            let spec = d(bits);
            let fb = mrt_discrete_beamformer(&cfg, &PolarLocation::new(theta, r).unwrap(), spec);
            let alphabet = spec.alphabet().unwrap();
            let scale = 1.0 / 65f64.sqrt();
            for (z, p) in fb.entries.iter().zip(&fb.phases) {
                prop_assert!(alphabet.contains(p));
                prop_assert!((z.norm() - scale).abs() < 1e-15);
            }
        }
    }
}
