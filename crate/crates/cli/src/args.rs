//! Flag groups shared by several subcommands, and the range-spec parsers.
//! Angles are degrees and powers dBm here; everything past this module is
//! radians and watts.

use std::fmt;

use clap::Args;
use nearfield::{ArrayConfig, PhaseShifter, PolarLocation};
use serde::Serialize;

/// Bad flag values detected after clap has parsed them. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ArrayArgs {
    /// Number of antennas (odd).
    #[arg(long = "n", default_value_t = 513)]
    pub num_antennas: usize,
    /// Carrier frequency in GHz.
    #[arg(long, default_value_t = 60.0)]
    pub freq_ghz: f64,
}

impl ArrayArgs {
    pub fn config(&self) -> anyhow::Result<ArrayConfig> {
        Ok(ArrayConfig::new(self.num_antennas, self.freq_ghz * 1e9)?)
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct TargetArgs {
    /// User angle in degrees.
    #[arg(long, default_value_t = 36.0, allow_negative_numbers = true)]
    pub theta_u_deg: f64,
    /// User range in metres.
    #[arg(long, default_value_t = 25.0)]
    pub r_u: f64,
}

impl TargetArgs {
    pub fn location(&self) -> anyhow::Result<PolarLocation> {
        Ok(PolarLocation::from_degrees(self.theta_u_deg, self.r_u)?)
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ShifterArgs {
    /// Phase-shifter resolution in bits.
    #[arg(long, default_value_t = 1, conflicts_with = "continuous")]
    pub bits: u32,
    /// Ideal continuous phase shifters.
    #[arg(long)]
    pub continuous: bool,
}

impl ShifterArgs {
    pub fn spec(&self) -> anyhow::Result<PhaseShifter> {
        if self.continuous {
            Ok(PhaseShifter::Continuous)
        } else {
            Ok(PhaseShifter::discrete(self.bits)?)
        }
    }
}

/// Inclusive axis `start:stop:steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(usage(format!("axis '{text}' must be start:stop:steps")));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("'{s}' in axis '{text}' is not a number")));
        let start = num(a)?;
        let stop = num(b)?;
        let steps: usize = n
            .parse()
            .map_err(|_| usage(format!("step count '{n}' in axis '{text}' is not a positive integer")))?;
        if !(start.is_finite() && stop.is_finite()) {
            return Err(usage(format!("axis '{text}' has non-finite endpoints")));
        }
        if steps == 0 {
            return Err(usage(format!("axis '{text}' needs at least one step")));
        }
        if steps > 1 && stop <= start {
            return Err(usage(format!("axis '{text}' must have stop > start")));
        }
        if steps == 1 && stop != start {
            return Err(usage(format!("single-step axis '{text}' must have start = stop")));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        nearfield::beampattern::linspace(self.start, self.stop, self.steps)
    }
}

/// `theta_min:theta_max:steps,r_min:r_max:steps`, angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub theta_deg: AxisSpec,
    pub range_m: AxisSpec,
}

impl GridSpec {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let Some((t, r)) = text.split_once(',') else {
            return Err(usage(format!("grid '{text}' must be theta_min:theta_max:steps,r_min:r_max:steps")));
        };
        Ok(Self {
            theta_deg: AxisSpec::parse(t)?,
            range_m: AxisSpec::parse(r)?,
        })
    }

    pub fn grid(&self) -> anyhow::Result<nearfield::beampattern::ObservationGrid> {
        let theta: Vec<f64> = self.theta_deg.values().into_iter().map(f64::to_radians).collect();
        Ok(nearfield::beampattern::ObservationGrid::new(theta, self.range_m.values())?)
    }
}

/// Comma-separated list.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>> {
    let out: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| usage(format!("'{s}' is not a valid {what}"))))
        .collect::<anyhow::Result<_>>()?;
    if out.is_empty() {
        return Err(usage(format!("empty {what} list")));
    }
    Ok(out)
}

/// Resolution list entry: a bit count or `inf` for continuous.
pub fn parse_shifter(text: &str) -> anyhow::Result<PhaseShifter> {
    if text.eq_ignore_ascii_case("inf") {
        return Ok(PhaseShifter::Continuous);
    }
    let bits: u32 = text.parse().map_err(|_| usage(format!("'{text}' is not a bit count or 'inf'")))?;
    Ok(PhaseShifter::discrete(bits)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = AxisSpec::parse("-10:10:5").unwrap();
        assert_eq!(a.values(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(AxisSpec::parse("3:3:1").unwrap().values(), vec![3.0]);
        for bad in ["1:2", "a:2:3", "2:1:3", "1:2:0", "1:2:x", "1:2:1"] {
            assert!(AxisSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_parsing() {
        let g = GridSpec::parse("-60:60:121,2:100:50").unwrap();
        assert_eq!(g.theta_deg.steps, 121);
        assert_eq!(g.grid().unwrap().len(), 121 * 50);
        assert!(GridSpec::parse("-60:60:121").is_err());
        let out_of_field = GridSpec::parse("-90:90:5,2:3:2").unwrap();
        assert!(out_of_field.grid().is_err());
    }

    #[test]
    fn shifter_lists() {
        assert_eq!(parse_shifter("inf").unwrap(), PhaseShifter::Continuous);
        assert_eq!(parse_shifter("3").unwrap(), PhaseShifter::discrete(3).unwrap());
        assert!(parse_shifter("0").is_err());
        assert_eq!(parse_list::<usize>("2, 4,6", "M").unwrap(), vec![2, 4, 6]);
        assert!(parse_list::<usize>("", "M").is_err());
    }
}
