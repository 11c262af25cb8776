//! Numeric half-power searches used to validate the closed-form lobe
//! metrics. They treat the pattern as a black box `|F|(θ, r)`.

use serde::Serialize;

use super::BeamDepth;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizer of a unimodal `f` on `[a, b]`.
fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Local maximizer of `f` within `center ± half_window`: coarse scan on
/// `samples` points, then golden-section refinement around the best one.
pub fn refine_peak(f: &impl Fn(f64) -> f64, center: f64, half_window: f64, samples: usize, tol: f64) -> f64 {
    let samples = samples.max(3);
    let h = 2.0 * half_window / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples).map(|i| center - half_window + h * i as f64).collect();
    let best = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, f(x)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let x0 = xs[best.0];
    golden_max(f, x0 - h, x0 + h, tol)
}

/// Root of `g` on `[lo, hi]` given `g(lo) > 0 ≥ g(hi)` (either order).
fn bisect(g: &impl Fn(f64) -> f64, mut inside: f64, mut outside: f64, tol: f64) -> f64 {
    while (outside - inside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        if g(mid) > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Walk from `start` in steps of `step` while `g > 0`, then bisect the
/// first sign change. `None` if `limit` is passed first.
pub fn first_crossing(g: &impl Fn(f64) -> f64, start: f64, step: f64, limit: f64, tol: f64) -> Option<f64> {
    let mut prev = start;
    loop {
        let next = prev + step;
        if (step > 0.0 && next > limit) || (step < 0.0 && next < limit) {
            return None;
        }
        if g(next) <= 0.0 {
            return Some(bisect(g, prev, next, tol));
        }
        prev = next;
    }
}

/// Half-power crossings along a distance ring, in `u = sin θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RingCrossing {
    pub center_u: f64,
    /// Magnitude at `center_u`, the half-power reference.
    pub reference: f64,
    pub lower_u: f64,
    pub upper_u: f64,
}

impl RingCrossing {
    pub fn width(&self) -> f64 {
        self.upper_u - self.lower_u
    }

    pub fn center_theta(&self) -> f64 {
        self.center_u.asin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RingSearch {
    /// `cos²θ / r` of the ring; 0 is the far-field ring.
    pub level: f64,
    /// Walk step in `u`.
    pub step: f64,
    /// Give up beyond this offset from the centre.
    pub max_offset: f64,
    /// Re-centre on the local maximum before measuring (main and Type-I
    /// lobes); otherwise the seed angle is the reference (Type-II).
    pub refine_peak: bool,
}

fn ring_point(u: f64, level: f64) -> (f64, f64) {
    let range = if level == 0.0 { f64::INFINITY } else { (1.0 - u * u) / level };
    (u.asin(), range)
}

/// Half-power width along a distance ring around `seed_theta`.
pub fn half_power_on_ring(
    pattern: &impl Fn(f64, f64) -> f64,
    seed_theta: f64,
    search: &RingSearch,
) -> Option<RingCrossing> {
    let on_ring = |u: f64| {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let (t, r) = ring_point(u, search.level);
        pattern(t, r)
    };
    let seed_u = seed_theta.sin();
    let center_u = if search.refine_peak {
        refine_peak(&on_ring, seed_u, 10.0 * search.step, 81, 1e-12)
    } else {
        seed_u
    };
    let reference = on_ring(center_u);
    if reference <= 0.0 {
        return None;
    }
    let half = reference * std::f64::consts::FRAC_1_SQRT_2;
    let g = |u: f64| on_ring(u) - half;
    let tol = 1e-10;
    let hi_limit = (center_u + search.max_offset).min(1.0);
    let lo_limit = (center_u - search.max_offset).max(-1.0);
    let upper = first_crossing(&g, center_u, search.step, hi_limit, tol)?;
    let lower = first_crossing(&g, center_u, -search.step, lo_limit, tol)?;
    Some(RingCrossing {
        center_u,
        reference,
        lower_u: lower,
        upper_u: upper,
    })
}

/// Half-power crossings along range at a fixed angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RangeCrossing {
    pub theta: f64,
    pub peak_range: f64,
    pub reference: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl RangeCrossing {
    /// Finite only if both crossings lie inside the searched region.
    pub fn depth(&self) -> BeamDepth {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => BeamDepth::Finite(hi - lo),
            _ => BeamDepth::Unbounded,
        }
    }
}

/// Half-power depth at angle `theta`, searching `[r_min, r_max]` around a
/// peak near `seed_range`. Steps are geometric (0.2 % per step).
pub fn half_power_along_range(
    pattern: &impl Fn(f64, f64) -> f64,
    theta: f64,
    seed_range: f64,
    r_min: f64,
    r_max: f64,
) -> RangeCrossing {
    let along = |lr: f64| pattern(theta, lr.exp());
    let seed = seed_range.ln();
    let peak = refine_peak(&along, seed, 0.05, 101, 1e-12);
    let reference = along(peak);
    let half = reference * std::f64::consts::FRAC_1_SQRT_2;
    let g = |lr: f64| along(lr) - half;
    let step = 0.002;
    let tol = 1e-12;
    RangeCrossing {
        theta,
        peak_range: peak.exp(),
        reference,
        lower: first_crossing(&g, peak, -step, r_min.ln(), tol).map(f64::exp),
        upper: first_crossing(&g, peak, step, r_max.ln(), tol).map(f64::exp),
    }
}
