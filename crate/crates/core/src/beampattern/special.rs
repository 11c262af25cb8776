//! Special functions behind the lobe analytics: the Dirichlet sinc, the
//! Fresnel integrals, the collapse sum `L(x)` and the Type-II power ratio.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;

/// `Ξ_N(α) = sin(Nα/2) / (N sin(α/2))`.
///
/// `α` is first reduced to `2πm + t` with `|t| ≤ π`; then
/// `Ξ_N(α) = (-1)^{(N-1)m} Ξ_N(t)` and `Ξ_N(t)` is evaluated by its Taylor
/// series once `|N t|` is small, so the removable singularities on `2πℤ`
/// never divide two rounding residues.
pub fn dirichlet_sinc(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let m = (alpha / TAU).round();
    let t = alpha - TAU * m;
    let sign = if (n as i64 - 1) * (m as i64) % 2 == 0 { 1.0 } else { -1.0 };
    let nt = nf * t;
    let core = if nt.abs() < 1e-4 {
        1.0 - (nf * nf - 1.0) * t * t / 24.0
    } else {
        (nt / 2.0).sin() / (nf * (t / 2.0).sin())
    };
    sign * core
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

const SERIES_LIMIT: f64 = 1.5;
const ASYMPTOTIC_LIMIT: f64 = 6.0;

fn fresnel_series(x: f64) -> (f64, f64) {
    // C = Σ (-1)^n (π/2)^{2n} x^{4n+1} / ((2n)! (4n+1))
    // S = Σ (-1)^n (π/2)^{2n+1} x^{4n+3} / ((2n+1)! (4n+3))
    let z = FRAC_PI_2 * x * x;
    let mut term = x; // z^m x / m!
    let mut c = 0.0;
    let mut s = 0.0;
    for m in 0..60 {
        let add = term / (2 * m + 1) as f64;
        if m % 4 < 2 {
            if m % 2 == 0 { c += add } else { s += add }
        } else if m % 2 == 0 {
            c -= add
        } else {
            s -= add
        }
        term *= z / (m + 1) as f64;
        if term.abs() < 1e-18 {
            break;
        }
    }
    (c, s)
}

fn fresnel_quadrature(x: f64) -> (f64, f64) {
    let (mut c, mut s) = fresnel_series(SERIES_LIMIT);
    let span = x - SERIES_LIMIT;
    let panels = (span / 0.02).ceil().max(1.0) as usize;
    let h = span / panels as f64;
    for p in 0..panels {
        let mid = SERIES_LIMIT + (p as f64 + 0.5) * h;
        for (u, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            let t = mid + 0.5 * h * u;
            let arg = FRAC_PI_2 * t * t;
            c += 0.5 * h * w * arg.cos();
            s += 0.5 * h * w * arg.sin();
        }
    }
    (c, s)
}

fn fresnel_asymptotic(x: f64) -> (f64, f64) {
    // Auxiliary functions f, g with C = 1/2 + f sin(πx²/2) - g cos(πx²/2),
    // S = 1/2 - f cos(πx²/2) - g sin(πx²/2).
    let y = 1.0 / (PI * x * x);
    let y2 = y * y;
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf = 1.0; // (-1)^m (4m-1)!! y^{2m}
    let mut tg = 1.0; // (-1)^m (4m+1)!! y^{2m}
    for m in 0..40 {
        f += tf;
        g += tg;
        let m = m as f64;
        let next_f = -tf * (4.0 * m + 1.0) * (4.0 * m + 3.0) * y2;
        let next_g = -tg * (4.0 * m + 3.0) * (4.0 * m + 5.0) * y2;
        if next_f.abs() > tf.abs() || next_f.abs() < 1e-18 {
            break;
        }
        tf = next_f;
        tg = next_g;
    }
    let f = f / (PI * x);
    let g = g / (PI * PI * x * x * x);
    let arg = FRAC_PI_2 * x * x;
    let (sa, ca) = arg.sin_cos();
    (0.5 + f * sa - g * ca, 0.5 - f * ca - g * sa)
}

/// `(C(x), S(x))` with `C(x) = ∫₀^x cos(πt²/2) dt`, `S(x) = ∫₀^x sin(πt²/2) dt`.
///
/// Power series up to 1.5, composite Gauss-Legendre up to 6, auxiliary
/// asymptotic expansion beyond; absolute error stays below 1e-12.
pub fn fresnel_cs(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (c, s) = if ax <= SERIES_LIMIT {
        fresnel_series(ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        fresnel_quadrature(ax)
    } else {
        fresnel_asymptotic(ax)
    };
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

pub fn fresnel_c(x: f64) -> f64 {
    fresnel_cs(x).0
}

pub fn fresnel_s(x: f64) -> f64 {
    fresnel_cs(x).1
}

/// `|C(β) + jS(β)| / β`, with the limit 1 at `β = 0`.
pub fn fresnel_envelope(beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    let (c, s) = fresnel_cs(beta);
    c.hypot(s) / beta.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollapseValue {
    /// `(1/N) Σ_n e^{jπn²x}`.
    pub exact: Complex64,
    /// `|(C(β) + jS(β)) / β|`.
    pub approx: f64,
    pub beta: f64,
}

/// The collapse sum `L(x)` and its Fresnel-integral approximation with
/// `β = √(2|x|) N/2`.
pub fn collapse_l(cfg: &ArrayConfig, x: f64) -> CollapseValue {
    let n = cfg.num_antennas() as f64;
    let exact = if x == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        cfg.indices()
            .map(|i| Complex64::from_polar(1.0, PI * (i * i) as f64 * x))
            .sum::<Complex64>()
            / n
    };
    let beta = (2.0 * x.abs()).sqrt() * n / 2.0;
    CollapseValue {
        exact,
        approx: fresnel_envelope(beta),
        beta,
    }
}

/// `(β₁, β₂)` for spatial-angle difference `delta` and ring difference `phi`.
///
/// At half-wavelength spacing these are `Δ/√(d|Φ|)` and `(N/2)√(d|Φ|)`.
pub fn power_ratio_arguments(cfg: &ArrayConfig, delta: f64, phi: f64) -> Result<(f64, f64)> {
    if phi == 0.0 || !phi.is_finite() {
        return Err(Error::ZeroRingDifference);
    }
    let lambda = cfg.wavelength();
    let beta1 = delta * (2.0 / (lambda * phi.abs())).sqrt();
    let beta2 = cfg.num_antennas() as f64 / 2.0 * cfg.spacing() * (2.0 * phi.abs() / lambda).sqrt();
    Ok((beta1, beta2))
}

/// Ratio between the lobe power at spatial-angle offset `delta` and at zero
/// offset, on a ring with constant `Φ_{k,0} = phi`, in the Fresnel-integral
/// approximation.
pub fn power_ratio(cfg: &ArrayConfig, delta: f64, phi: f64) -> Result<f64> {
    let (b1, b2) = power_ratio_arguments(cfg, delta, phi)?;
    if delta == 0.0 {
        return Ok(1.0);
    }
    let (cp, sp) = fresnel_cs(b1 + b2);
    let (cm, sm) = fresnel_cs(b1 - b2);
    let (c2, s2) = fresnel_cs(b2);
    Ok(((cp - cm).powi(2) + (sp - sm).powi(2)) / (4.0 * (c2 * c2 + s2 * s2)))
}
