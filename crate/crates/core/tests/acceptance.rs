//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p nearfield-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nearfield::beampattern::{
    beam_pattern_direct, beam_pattern_fse, fse_residual_bound, lobe_at, lobe_component, linspace, pattern_at,
    ObservationGrid,
};
use nearfield::lobes::subarrays::{far_subarray_size, near_subarray_size, subarray_partition, Regime};
use nearfield::lobes::{
    asymptotic_focus_check, beam_width, farfield_lobes, grating_lobe_angle, main_lobe_depth, main_lobe_metrics,
    numeric_farfield_lobe, numeric_lobe, surrogate_width_by_power_ratio, type1_focus, type2_metrics,
};
use nearfield::multiuser::{dbm_to_watts, monte_carlo, write_trials_csv, MonteCarloConfig, PowerModel, Scenario};
use nearfield::quantization::{
    default_index_set, fourier_coefficient, fourier_coefficient_numeric, l2_tail_bound, mrt_discrete_beamformer,
    BeamTarget, DEFAULT_QUAD_POINTS,
};
use nearfield::{ArrayConfig, PhaseShifter, PolarLocation};

const CARRIER: f64 = 60e9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn d(bits: u32) -> PhaseShifter {
    PhaseShifter::discrete(bits).unwrap()
}

fn xl() -> ArrayConfig {
    ArrayConfig::new(513, CARRIER).unwrap()
}

fn user() -> PolarLocation {
    PolarLocation::new(PI / 5.0, 25.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fourier_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for bits in 1..=4 {
        for k in -20..=20 {
            let closed = fourier_coefficient(k, d(bits));
            let numeric = fourier_coefficient_numeric(k, d(bits), DEFAULT_QUAD_POINTS);
            worst = worst.max((numeric.re - closed).abs()).max(numeric.im.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 1.0, format!("max |closed - quadrature| = {worst:.2e}, {secs:.3} s"))
}

/// 201 × 201 grid over θ ∈ [-1.5, 1.5] rad, r ∈ [1.6, 100] m.
fn standard_grid() -> ObservationGrid {
    ObservationGrid::new(linspace(-1.5, 1.5, 201), linspace(1.6, 100.0, 201)).unwrap()
}

fn fse_fidelity() -> Outcome {
    let start = Instant::now();
    let cfg = xl();
    let grid = standard_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    for bits in [1, 2] {
        let spec = d(bits);
        let k_set = default_index_set(spec);
        let direct = beam_pattern_direct(&cfg, user(), spec, &grid).unwrap();
        let fse = beam_pattern_fse(&cfg, user(), spec, &grid, Some(&k_set)).unwrap();
        let gap = direct.max_abs_diff(&fse);
        let tail = l2_tail_bound(spec, &k_set);
        let rigorous = fse_residual_bound(&cfg, user(), spec, &k_set).unwrap();
        pass &= gap <= tail && gap <= rigorous;
        parts.push(format!("B={bits}: gap {gap:.4} <= tail {tail:.4}, residual bound {rigorous:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    outcome(pass, format!("{}; {secs:.2} s", parts.join("; ")))
}

fn main_lobe_metrics_check() -> Outcome {
    let cfg = xl();
    let b = cfg.field_boundaries(PI / 5.0);
    let closed = main_lobe_metrics(&cfg, &user(), PhaseShifter::Continuous);
    let depth_closed = closed.beam_depth.and_then(|d| d.finite()).unwrap_or(f64::NAN);
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in [PhaseShifter::Continuous, d(1), d(2)] {
        let fb = mrt_discrete_beamformer(&cfg, &user(), spec);
        let pattern = |t: f64, r: f64| pattern_at(&cfg, &fb.entries, t, r);
        let lobe = numeric_lobe(&cfg, &pattern, &user(), b.fresnel_m, b.rayleigh_m);
        let width = lobe.width.unwrap_or(f64::NAN);
        let depth = lobe.depth.finite().unwrap_or(f64::NAN);
        let ok = rel(width, beam_width(&cfg)) < 0.10 && rel(depth, depth_closed) < 0.15;
        pass &= ok;
        parts.push(format!("{spec}: width·N {:.4}, depth {depth:.2} m", width * 513.0));
    }
    let far = PolarLocation::new(PI / 5.0, 1.1 * b.effective_near_field_m).unwrap();
    let unbounded = main_lobe_depth(&cfg, &far).is_unbounded();
    pass &= unbounded;
    outcome(
        pass,
        format!("closed depth {depth_closed:.2} m; {}; unbounded at 1.1·r_DF: {unbounded}", parts.join("; ")),
    )
}

fn main_lobe_height() -> Outcome {
    let cfg = xl();
    let mut pass = true;
    let mut parts = Vec::new();
    for bits in 1..=4 {
        let spec = d(bits);
        let fb = mrt_discrete_beamformer(&cfg, &user(), spec);
        let height = pattern_at(&cfg, &fb.entries, PI / 5.0, 25.0);
        let a1 = fourier_coefficient(1, spec);
        let tail = l2_tail_bound(spec, &default_index_set(spec));
        pass &= (height - a1).abs() <= tail;
        if bits == 1 {
            pass &= (height - 2.0 / PI).abs() <= 0.02;
        }
        parts.push(format!("B={bits}: {height:.5} vs a1 {a1:.5}"));
    }
    outcome(pass, parts.join("; "))
}

fn grating_geography() -> Outcome {
    let cfg = xl();
    let spec = d(1);
    // k = -1 on the standard observation grid, restricted to θ < 0 so the
    // main lobe is excluded.
    let grid = standard_grid();
    let cell = grid.theta_axis[1] - grid.theta_axis[0];
    let map = beam_pattern_direct(&cfg, user(), spec, &grid).unwrap();
    let comp = lobe_component(&cfg, user(), spec, -1, &grid).unwrap();
    let mags = comp.magnitudes();
    let negative_argmax = |values: &[f64]| {
        let cols = grid.cols();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, t) in grid.theta_axis.iter().enumerate() {
            if *t >= 0.0 {
                continue;
            }
            for j in 0..cols {
                let v = values[i * cols + j];
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    };
    let (i, j, v) = negative_argmax(&map.values);
    let theta_m1 = grid.theta_axis[i];
    let ok_m1 = (theta_m1 + PI / 5.0).abs() <= cell;
    let (ic, _, _) = negative_argmax(&mags);
    let ok_comp = (grid.theta_axis[ic] + PI / 5.0).abs() <= cell;

    let focus = type1_focus(3, &user()).unwrap();
    let t3 = linspace(focus.theta - 0.01, focus.theta + 0.01, 41);
    let cell3 = t3[1] - t3[0];
    let g3 = ObservationGrid::new(t3, linspace(8.0, 16.0, 81)).unwrap();
    let c3 = lobe_component(&cfg, user(), spec, 3, &g3).unwrap();
    let (i3, j3, _) = c3.argmax();
    let ok3 = (g3.theta_axis[i3] - focus.theta).abs() <= cell3 && rel(g3.range_at(i3, j3), focus.range) < 0.05;
    outcome(
        ok_m1 && ok_comp && ok3,
        format!(
            "k=-1 composite peak at θ={theta_m1:.4} r={:.1} m |F|={v:.4}, component peak θ={:.4} (cell {cell:.4}); k=3 argmax ({:.4}, {:.2} m) vs focus ({:.4}, {:.2} m)",
            grid.range_at(i, j),
            grid.theta_axis[ic],
            g3.theta_axis[i3],
            g3.range_at(i3, j3),
            focus.theta,
            focus.range
        ),
    )
}

fn type2_surrogate() -> Outcome {
    let cfg = xl();
    let mut pass = true;
    let mut parts = Vec::new();
    for r0 in [25.0, 40.0, 60.0] {
        let report = type2_metrics(&cfg, &user(), d(1), -1, r0).unwrap();
        let closed = report.surrogate_width.unwrap_or(f64::NAN);
        let beta2 = report.beta2.unwrap_or(0.0);
        let oracle = surrogate_width_by_power_ratio(&cfg, &user(), -1, r0).unwrap().unwrap_or(f64::NAN);
        let e = rel(closed, oracle);
        pass &= e < 0.15 && beta2 > 1.31;
        parts.push(format!("r0={r0}: {closed:.5} vs {oracle:.5} ({:.1}%), β2 {beta2:.2}", 100.0 * e));
    }
    outcome(pass, parts.join("; "))
}

fn farfield_lobes_check() -> Outcome {
    let cfg = ArrayConfig::new(65, CARRIER).unwrap();
    let spec = d(1);
    let target = BeamTarget::Far { theta: PI / 5.0 };
    let mut pass = true;
    let mut worst_h = 0.0f64;
    let mut worst_w = 0.0f64;
    let lobes = farfield_lobes(&cfg, PI / 5.0, spec);
    for lobe in &lobes {
        let k = lobe.k;
        let pattern = |t: f64, r: f64| lobe_at(&cfg, &target, spec, k, t, r).norm();
        match numeric_farfield_lobe(&cfg, &pattern, lobe.angle_rad) {
            Some(c) => {
                let eh = rel(c.reference, lobe.beam_height);
                let ew = rel(c.width(), lobe.beam_width);
                worst_h = worst_h.max(eh);
                worst_w = worst_w.max(ew);
                pass &= eh < 0.02 && ew < 0.10;
            }
            None => pass = false,
        }
    }
    outcome(
        pass,
        format!("{} lobes, worst height error {:.2}%, worst width error {:.2}%", lobes.len(), 100.0 * worst_h, 100.0 * worst_w),
    )
}

fn asymptotics() -> Outcome {
    let tm1 = grating_lobe_angle(-1, PI / 5.0);
    let t3 = type1_focus(3, &user()).unwrap().theta;
    let points = [
        (1, PolarLocation::new(PI / 5.0, 50.0).unwrap()),
        (-1, PolarLocation::new(tm1, 60.0).unwrap()),
        (3, PolarLocation::new(t3, 25.0).unwrap()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, off) in points {
        let r = asymptotic_focus_check(CARRIER, &[513, 2049], &user(), d(1), k, &off).unwrap();
        let (a, b) = (r.magnitude_at(513).unwrap(), r.magnitude_at(2049).unwrap());
        pass &= b < a;
        parts.push(format!("k={k}: {a:.4} -> {b:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn subarrays() -> Outcome {
    let cfg = xl();
    let mut pass = true;
    let mut parts = Vec::new();
    for bits in [1, 2] {
        let spec = d(bits);
        let v = far_subarray_size(spec, PI / 5.0).unwrap() as i64;
        let p = subarray_partition(&cfg, &user(), spec, Regime::Far).unwrap();
        let spread = p.sizes().iter().map(|&s| (s as i64 - v).abs()).max().unwrap_or(0);
        let far = PolarLocation::new(PI / 5.0, 1e6).unwrap();
        let near = subarray_partition(&cfg, &far, spec, Regime::Near).unwrap();
        let converged = near
            .subarrays
            .iter()
            .all(|s| near_subarray_size(&cfg, &far, spec, s.bin).unwrap() == Some(v as usize));
        pass &= spread <= 1 && converged;
        parts.push(format!("B={bits}: V_far {v}, max run deviation {spread}, near = far at 1e6 m: {converged}"));
    }
    outcome(pass, parts.join("; "))
}

fn ee_arithmetic() -> Outcome {
    let p = PowerModel::default();
    let delta = p.ps_total_w(10, 513, d(3)).unwrap() - p.ps_total_w(10, 513, d(1)).unwrap();
    outcome(
        (delta - 51.3).abs() < 1e-9 && (delta - 51.2).abs() <= 0.2,
        format!("3-bit minus 1-bit PS power = {delta:.4} W"),
    )
}

fn rate_template(spec: PhaseShifter) -> Scenario {
    let users = vec![user(); 10];
    let mut s = Scenario::new(xl(), users, spec, dbm_to_watts(30.0));
    s.rng_seed = 2024;
    s
}

fn rate_ordering() -> Outcome {
    let start = Instant::now();
    let mc = MonteCarloConfig { trials: 200, ..MonteCarloConfig::default() };
    let power = PowerModel::default();
    let mut rates = Vec::new();
    for spec in [d(1), d(2), d(3), PhaseShifter::Continuous] {
        let power = if spec.bits().is_some() {
            power.clone()
        } else {
            PowerModel { p_ps_override_w: Some(0.0), ..power.clone() }
        };
        rates.push(monte_carlo(&rate_template(spec), &power, &mc).unwrap().mean_sum_rate_bps_hz);
    }
    let secs = start.elapsed().as_secs_f64();
    let gap = rel(rates[2], rates[3]);
    outcome(
        rates[0] < rates[1] && rates[1] < rates[2] && gap < 0.05 && secs < 300.0,
        format!(
            "M=10, 30 dBm: R1 {:.2}, R2 {:.2}, R3 {:.2}, Rinf {:.2} bit/s/Hz, |R3-Rinf|/Rinf {:.2}%; {secs:.1} s",
            rates[0],
            rates[1],
            rates[2],
            rates[3],
            100.0 * gap
        ),
    )
}

fn overlap() -> Outcome {
    let cfg = xl();
    let target = PolarLocation::new(0.0, 25.0).unwrap();
    let grid = ObservationGrid::new(linspace(-0.01, 0.01, 41), linspace(10.0, 60.0, 1001)).unwrap();
    let map = beam_pattern_direct(&cfg, target, d(1), &grid).unwrap();
    let (i, j, v) = map.argmax();
    let r = grid.range_at(i, j);
    outcome(r > target.range, format!("argmax at θ={:.4}, r={r:.2} m, |F|={v:.4}", grid.theta_axis[i]))
}

fn determinism() -> Outcome {
    let cfg = ArrayConfig::new(257, CARRIER).unwrap();
    let mut template = Scenario::new(cfg, vec![user(); 4], d(2), dbm_to_watts(30.0));
    template.rng_seed = 7;
    let csv = |workers| {
        let mc = MonteCarloConfig { trials: 64, workers: Some(workers), ..MonteCarloConfig::default() };
        let s = monte_carlo(&template, &PowerModel::default(), &mc).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&s.rows, &mut buf).unwrap();
        buf
    };
    let (a, b) = (csv(1), csv(8));
    outcome(a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("fourier-coefficient oracle", fourier_oracle),
        ("fse fidelity", fse_fidelity),
        ("main-lobe width and depth", main_lobe_metrics_check),
        ("main-lobe height", main_lobe_height),
        ("grating-lobe geography", grating_geography),
        ("type-ii surrogate width", type2_surrogate),
        ("far-field lobes", farfield_lobes_check),
        ("asymptotic focusing", asymptotics),
        ("subarray sizes", subarrays),
        ("energy-efficiency arithmetic", ee_arithmetic),
        ("rate ordering", rate_ordering),
        ("overlap shift", overlap),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
