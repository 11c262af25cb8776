use std::io::Write;
use std::path::Path;

use anyhow::Context;
use clap::{Args, ValueEnum};
use log::info;
use nearfield::beampattern::{
    beam_pattern_direct, beam_pattern_fse, lobe_at, ObservationGrid, Method as PatternMethod,
};
use nearfield::lobes::subarrays::{subarray_partition, Regime};
use nearfield::lobes::{
    self, classify, farfield_lobes, numeric_lobe, surrogate_width_numeric, LobeReport, LobeType,
    NumericLobe,
};
use nearfield::multiuser::{
    dbm_to_watts, monte_carlo, reference_snr_db, write_trials_csv, DigitalMode, MonteCarloConfig, MonteCarloSummary,
    PowerModel, Scenario, UserDistribution,
};
use nearfield::quantization::{
    default_index_set, fourier_coefficient, fourier_coefficient_numeric, BeamTarget, FourierCoefficientSet,
    DEFAULT_QUAD_POINTS,
};
use nearfield::{PhaseShifter, PolarLocation};
use serde::Serialize;

use crate::args::{parse_list, parse_shifter, usage, ArrayArgs, AxisSpec, GridSpec, ShifterArgs, TargetArgs};
use crate::output::{num, OutputDir};

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Fse,
}

#[derive(Args, Debug, Serialize)]
pub struct BeampatternArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub shifter: ShifterArgs,
    /// theta_min:theta_max:steps,r_min:r_max:steps (degrees, metres;
    /// endpoints included).
    #[arg(long, default_value = "-80:80:321,2:100:197", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    pub method: Method,
    /// FSE harmonics, comma separated; defaults to the dominant set.
    #[arg(long, allow_hyphen_values = true)]
    pub k_set: Option<String>,
}

#[derive(Serialize)]
struct PatternSidecar {
    num_antennas: usize,
    carrier_hz: f64,
    wavelength_m: f64,
    target: PolarLocation,
    spec: PhaseShifter,
    method: PatternMethod,
    k_set: Option<Vec<i64>>,
    theta_points: usize,
    range_points: usize,
    max_magnitude: f64,
    argmax_theta_rad: f64,
    argmax_r_m: f64,
}

pub fn beampattern(args: &BeampatternArgs, out: &Path) -> anyhow::Result<()> {
    let grid_spec = GridSpec::parse(&args.grid)?;
    let grid = grid_spec.grid()?;
    let cfg = args.array.config()?;
    let target = args.target.location()?;
    let spec = args.shifter.spec()?;
    let map = match args.method {
        Method::Direct => beam_pattern_direct(&cfg, target, spec, &grid)?,
        Method::Fse => {
            let k_set = args.k_set.as_deref().map(|s| parse_list::<i64>(s, "harmonic")).transpose()?;
            beam_pattern_fse(&cfg, target, spec, &grid, k_set.as_deref())?
        }
    };
    let (bi, bj, max) = map.argmax();
    let sidecar = PatternSidecar {
        num_antennas: cfg.num_antennas(),
        carrier_hz: cfg.carrier_hz(),
        wavelength_m: cfg.wavelength(),
        target,
        spec,
        method: map.method,
        k_set: map.k_set.clone(),
        theta_points: grid.rows(),
        range_points: grid.cols(),
        max_magnitude: max,
        argmax_theta_rad: grid.theta_axis[bi],
        argmax_r_m: grid.range_at(bi, bj),
    };

    let mut dir = OutputDir::create(out)?;
    dir.write_with("beampattern.csv", |w| write_pattern_csv(w, &grid, &map.values))?;
    dir.write_json("beampattern.json", &sidecar)?;
    dir.finish("beampattern", args, Some(&sidecar))
}

fn write_pattern_csv(w: &mut dyn Write, grid: &ObservationGrid, values: &[f64]) -> anyhow::Result<()> {
    writeln!(w, "theta_rad,r_m,magnitude")?;
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            let v = values[i * grid.cols() + j];
            writeln!(w, "{},{},{}", num(grid.theta_axis[i]), num(grid.range_at(i, j)), num(v))?;
        }
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct LobesArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub shifter: ShifterArgs,
    /// Report a single harmonic instead of the whole dominant set.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i64>,
    /// Ring reference range for Type-II lobes; defaults to r_u.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Also measure every lobe numerically on its own component.
    #[arg(long)]
    pub numeric: bool,
}

#[derive(Serialize)]
struct LobeEntry {
    #[serde(flatten)]
    report: LobeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<NumericEntry>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum NumericEntry {
    Focused(NumericLobe),
    Steered { surrogate_width: Option<f64> },
}

pub fn lobes(args: &LobesArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = args.array.config()?;
    let target = args.target.location()?;
    let spec = args.shifter.spec()?;
    let r0 = args.r0.unwrap_or(target.range);
    let ks = args.k.map_or_else(|| default_index_set(spec), |k| vec![k]);
    let reports = ks
        .into_iter()
        .map(|k| match classify(k, spec)? {
            LobeType::Main => Ok(lobes::main_lobe_metrics(&cfg, &target, spec)),
            LobeType::TypeI => lobes::type1_metrics(&cfg, &target, spec, k),
            LobeType::TypeII => lobes::type2_metrics(&cfg, &target, spec, k, r0),
        })
        .collect::<nearfield::Result<Vec<_>>>()?;
    let bounds = cfg.field_boundaries(target.theta);
    let bt = BeamTarget::Near(target);
    let entries: Vec<LobeEntry> = reports
        .into_iter()
        .map(|report| {
            let numeric = args.numeric.then(|| match report.lobe_type {
                LobeType::Main | LobeType::TypeI => {
                    let k = report.k;
                    let pattern = |t: f64, r: f64| lobe_at(&cfg, &bt, spec, k, t, r).norm();
                    let seed = PolarLocation {
                        theta: report.angle_rad,
                        range: report.focus_range_m.unwrap_or(target.range),
                    };
                    NumericEntry::Focused(numeric_lobe(&cfg, &pattern, &seed, 0.5 * bounds.fresnel_m, bounds.rayleigh_m))
                }
                LobeType::TypeII => NumericEntry::Steered {
                    surrogate_width: surrogate_width_numeric(&cfg, &bt, spec, report.k, report.r0_m.unwrap_or(r0))
                        .map(|c| c.width()),
                },
            });
            LobeEntry { report, numeric }
        })
        .collect();
    let mut dir = OutputDir::create(out)?;
    dir.write_json("lobes.json", &entries)?;
    dir.finish("lobes", args, Some(&bounds))
}

#[derive(Args, Debug, Serialize)]
pub struct FarfieldArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub shifter: ShifterArgs,
    /// Steering angle in degrees.
    #[arg(long, default_value_t = 36.0, allow_negative_numbers = true)]
    pub theta_u_deg: f64,
    /// Pattern angles theta_min:theta_max:steps in degrees.
    #[arg(long, default_value = "-89.5:89.5:1791", allow_hyphen_values = true)]
    pub angles: String,
}

pub fn farfield(args: &FarfieldArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = args.array.config()?;
    let spec = args.shifter.spec()?;
    let theta = args.theta_u_deg.to_radians();
    PolarLocation::new(theta, 1.0)?;
    let angles = AxisSpec::parse(&args.angles)?;
    let grid = ObservationGrid::far_field(angles.values().into_iter().map(f64::to_radians).collect())?;
    let reports = farfield_lobes(&cfg, theta, spec);
    let map = beam_pattern_direct(&cfg, BeamTarget::Far { theta }, spec, &grid)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_json("farfield.json", &reports)?;
    dir.write_with("farfield.csv", |w| {
        writeln!(w, "theta_rad,magnitude")?;
        for (t, v) in grid.theta_axis.iter().zip(&map.values) {
            writeln!(w, "{},{}", num(*t), num(*v))?;
        }
        Ok(())
    })?;
    dir.finish::<_, ()>("farfield", args, None)
}

#[derive(Args, Debug, Serialize)]
pub struct FourierArgs {
    #[command(flatten)]
    pub shifter: ShifterArgs,
    /// List harmonics with |k| <= kmax.
    #[arg(long, default_value_t = 9)]
    pub kmax: i64,
    /// Add a quadrature column next to the closed form.
    #[arg(long)]
    pub quadrature: bool,
}

#[derive(Serialize)]
struct FourierSummary {
    spec: PhaseShifter,
    kmax: i64,
    eta: f64,
    captured_energy: f64,
    dominant_set: Vec<i64>,
    coefficients: Vec<(i64, f64)>,
}

pub fn fourier(args: &FourierArgs, out: &Path) -> anyhow::Result<()> {
    if args.kmax < 0 {
        return Err(usage("--kmax must be non-negative"));
    }
    let spec = args.shifter.spec()?;
    let set = FourierCoefficientSet::new(spec, args.kmax);
    let dominant = default_index_set(spec);
    let mut dir = OutputDir::create(out)?;
    dir.write_with("fourier.csv", |w| {
        write!(w, "k,a_k,abs_a_k,lobe_type,dominant")?;
        if args.quadrature {
            write!(w, ",a_k_quadrature")?;
        }
        writeln!(w)?;
        for &(k, a) in &set.coefficients {
            let kind = match classify(k, spec)? {
                LobeType::Main => "main",
                LobeType::TypeI => "type_i",
                LobeType::TypeII => "type_ii",
            };
            write!(w, "{k},{},{},{kind},{}", num(a), num(a.abs()), dominant.contains(&k))?;
            if args.quadrature {
                write!(w, ",{}", num(fourier_coefficient_numeric(k, spec, DEFAULT_QUAD_POINTS).re))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let summary = FourierSummary {
        spec,
        kmax: set.kmax,
        eta: fourier_coefficient(1, spec).powi(2),
        captured_energy: set.captured_energy(),
        dominant_set: dominant,
        coefficients: set.coefficients.clone(),
    };
    dir.write_json("fourier.json", &summary)?;
    dir.finish::<_, ()>("fourier", args, None)
}

#[derive(Args, Debug, Serialize)]
pub struct EtaArgs {
    /// Largest resolution listed.
    #[arg(long, default_value_t = 8)]
    pub max_bits: u32,
}

pub fn eta(args: &EtaArgs, out: &Path) -> anyhow::Result<()> {
    let specs = (1..=args.max_bits).map(PhaseShifter::discrete).collect::<nearfield::Result<Vec<_>>>()?;
    let mut dir = OutputDir::create(out)?;
    dir.write_with("eta.csv", |w| {
        writeln!(w, "B,a_1,eta")?;
        for spec in &specs {
            let a1 = fourier_coefficient(1, *spec);
            writeln!(w, "{},{},{}", spec.label(), num(a1), num(lobes::eta_power_ratio(*spec)))?;
        }
        Ok(())
    })?;
    dir.finish::<_, ()>("eta", args, None)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Far,
    Near,
}

#[derive(Args, Debug, Serialize)]
pub struct SubarraysArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub shifter: ShifterArgs,
    #[arg(long, value_enum, default_value_t = RegimeArg::Near)]
    pub regime: RegimeArg,
}

pub fn subarrays(args: &SubarraysArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = args.array.config()?;
    let target = args.target.location()?;
    let spec = args.shifter.spec()?;
    let regime = match args.regime {
        RegimeArg::Far => Regime::Far,
        RegimeArg::Near => Regime::Near,
    };
    let p = subarray_partition(&cfg, &target, spec, regime)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_with("subarrays.csv", |w| {
        writeln!(w, "bin,first,last,size,formula_size")?;
        for s in &p.subarrays {
            let formula = match regime {
                Regime::Far => p.far_size,
                Regime::Near => p.near_sizes.iter().find(|(b, _)| *b == s.bin).map(|(_, v)| *v),
            };
            let formula = formula.map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{},{},{},{formula}", s.bin, s.first, s.last, s.size())?;
        }
        Ok(())
    })?;
    dir.write_json("subarrays.json", &p)?;
    dir.finish::<_, ()>("subarrays", args, None)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Mrt,
    Mmse,
    Zf,
}

impl From<ModeArg> for DigitalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mrt => DigitalMode::MrtOnly,
            ModeArg::Mmse => DigitalMode::Mmse,
            ModeArg::Zf => DigitalMode::Zf,
        }
    }
}

/// Flags shared by the Monte Carlo commands.
#[derive(Args, Debug, Serialize)]
pub struct DropArgs {
    /// Independent user drops.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Base seed; trial t draws from a seed derived from (seed, t).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Digital precoder.
    #[arg(long, value_enum, default_value_t = ModeArg::Mmse)]
    pub mode: ModeArg,
    /// Worker threads; defaults to all cores. Outputs do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// User angles are uniform on (theta-min, theta-max), degrees.
    #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
    pub theta_min_deg: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub theta_max_deg: f64,
    /// User ranges are uniform on [range-min, range-max], metres.
    #[arg(long, default_value_t = 20.0)]
    pub range_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub range_max: f64,
    /// Noise power in dBm.
    #[arg(long, default_value_t = -70.0, allow_negative_numbers = true)]
    pub noise_dbm: f64,
    /// Per-shifter power in mW for every resolution; needed for continuous
    /// shifters.
    #[arg(long)]
    pub ps_power_mw: Option<f64>,
}

impl DropArgs {
    fn monte_carlo_config(&self) -> anyhow::Result<MonteCarloConfig> {
        if self.trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(usage("--workers must be at least 1"));
        }
        Ok(MonteCarloConfig {
            trials: self.trials,
            distribution: UserDistribution {
                theta_min: self.theta_min_deg.to_radians(),
                theta_max: self.theta_max_deg.to_radians(),
                range_min_m: self.range_min,
                range_max_m: self.range_max,
            },
            workers: self.workers,
        })
    }

    fn power_model(&self) -> PowerModel {
        PowerModel {
            p_ps_override_w: self.ps_power_mw.map(|mw| mw * 1e-3),
            ..PowerModel::default()
        }
    }

    fn template(&self, array: &ArrayArgs, spec: PhaseShifter, m: usize, pt_dbm: f64) -> anyhow::Result<Scenario> {
        if m == 0 {
            return Err(usage("at least one user is required"));
        }
        let cfg = array.config()?;
        let placeholder = PolarLocation::new(0.0, self.range_min.max(1e-3))?;
        let mut s = Scenario::new(cfg, vec![placeholder; m], spec, dbm_to_watts(pt_dbm));
        s.noise_power_w = dbm_to_watts(self.noise_dbm);
        s.rng_seed = self.seed;
        s.digital_mode = self.mode.into();
        Ok(s)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct MultiuserArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub shifter: ShifterArgs,
    /// Number of users (and RF chains).
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Transmit power in dBm.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub pt_dbm: f64,
    #[command(flatten)]
    pub drops: DropArgs,
}

#[derive(Serialize)]
struct MultiuserResults<'a> {
    summary: &'a MonteCarloSummary,
    total_power_w: f64,
    /// Reference SNR of a user at the nearest drop range.
    reference_snr_db_at_range_min: f64,
}

pub fn multiuser(args: &MultiuserArgs, out: &Path) -> anyhow::Result<()> {
    let spec = args.shifter.spec()?;
    let mc = args.drops.monte_carlo_config()?;
    let power = args.drops.power_model();
    let template = args.drops.template(&args.array, spec, args.m, args.pt_dbm)?;
    let total_power_w = power.total_power_w(args.m, template.cfg.num_antennas(), spec, template.transmit_power_w)?;
    let snr = reference_snr_db(&template, 0)?;
    info!("running {} trials with M={} B={}", mc.trials, args.m, spec);
    let summary = monte_carlo(&template, &power, &mc)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_with("multiuser.csv", |w| Ok(write_trials_csv(&summary.rows, w)?))?;
    let results = MultiuserResults {
        summary: &summary,
        total_power_w,
        reference_snr_db_at_range_min: snr,
    };
    dir.write_json("multiuser.json", &results)?;
    dir.finish("multiuser", args, Some(&results))
}

#[derive(Args, Debug, Serialize)]
pub struct EeArgs {
    #[command(flatten)]
    pub array: ArrayArgs,
    /// Resolutions, comma separated; `inf` adds continuous shifters (needs
    /// --ps-power-mw).
    #[arg(long, default_value = "1,2,3,4")]
    pub bits_list: String,
    /// Transmit-power sweep start:stop:steps in dBm, at M = --m.
    #[arg(long, default_value = "0:40:9", allow_hyphen_values = true)]
    pub pt_dbm: String,
    /// User-count sweep, comma separated, at P_t = --pt-dbm-fixed.
    #[arg(long, default_value = "2,4,6,8,10,12,14,16")]
    pub m_list: String,
    /// User count during the transmit-power sweep.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Transmit power in dBm during the user-count sweep.
    #[arg(long, default_value_t = 35.0, allow_negative_numbers = true)]
    pub pt_dbm_fixed: f64,
    #[command(flatten)]
    pub drops: DropArgs,
}

#[derive(Serialize)]
struct EeRow {
    sweep: &'static str,
    spec: PhaseShifter,
    m: usize,
    pt_dbm: f64,
    total_power_w: f64,
    summary: MonteCarloSummary,
}

#[derive(Serialize)]
struct PsDelta {
    #[serde(rename = "M")]
    m: usize,
    one_bit_w: f64,
    three_bit_w: f64,
    delta_w: f64,
}

#[derive(Serialize)]
struct EeResults {
    /// Phase-shifter power of 3-bit minus 1-bit shifters for each swept `M`.
    ps_power_delta_w: Vec<PsDelta>,
}

pub fn ee(args: &EeArgs, out: &Path) -> anyhow::Result<()> {
    let specs = parse_list::<String>(&args.bits_list, "resolution")?
        .iter()
        .map(|s| parse_shifter(s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let pts = AxisSpec::parse(&args.pt_dbm)?.values();
    let ms = parse_list::<usize>(&args.m_list, "user count")?;
    let mc = args.drops.monte_carlo_config()?;
    let power = args.drops.power_model();
    let n = args.array.config()?.num_antennas();

    let mut points: Vec<(&'static str, PhaseShifter, usize, f64)> = Vec::new();
    for &spec in &specs {
        points.extend(pts.iter().map(|&pt| ("pt", spec, args.m, pt)));
        points.extend(ms.iter().map(|&m| ("m", spec, m, args.pt_dbm_fixed)));
    }
    let mut rows = Vec::with_capacity(points.len());
    for (sweep, spec, m, pt) in points {
        let template = args.drops.template(&args.array, spec, m, pt)?;
        let total_power_w = power.total_power_w(m, n, spec, template.transmit_power_w)?;
        let summary = monte_carlo(&template, &power, &mc).with_context(|| format!("sweep point B={spec} M={m} P_t={pt} dBm"))?;
        rows.push(EeRow { sweep, spec, m, pt_dbm: pt, total_power_w, summary });
    }

    let table = PowerModel::default();
    let ps_power_delta_w = ms
        .iter()
        .map(|&m| {
            let one = table.ps_total_w(m, n, PhaseShifter::discrete(1)?)?;
            let three = table.ps_total_w(m, n, PhaseShifter::discrete(3)?)?;
            Ok(PsDelta { m, one_bit_w: one, three_bit_w: three, delta_w: three - one })
        })
        .collect::<nearfield::Result<Vec<_>>>()?;

    let mut dir = OutputDir::create(out)?;
    dir.write_with("ee.csv", |w| {
        writeln!(
            w,
            "sweep,B,M,N,P_t_dBm,total_power_w,mean_sum_rate_bps_hz,stderr_sum_rate_bps_hz,mean_ee_bit_hz_joule,stderr_ee_bit_hz_joule"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{n},{},{},{},{},{},{}",
                r.sweep,
                r.spec.label(),
                r.m,
                num(r.pt_dbm),
                num(r.total_power_w),
                num(r.summary.mean_sum_rate_bps_hz),
                num(r.summary.stderr_sum_rate_bps_hz),
                num(r.summary.mean_ee_bit_hz_joule),
                num(r.summary.stderr_ee_bit_hz_joule)
            )?;
        }
        Ok(())
    })?;
    dir.write_json("ee.json", &rows)?;
    dir.finish("ee", args, Some(&EeResults { ps_power_delta_w }))
}
