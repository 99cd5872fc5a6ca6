//! Flat `key = value` run configuration.
//!
//! A file is applied on top of a preset, so it only needs the keys it
//! changes. Recognised keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `delta_h`, `v_r`, `num_levels`, `gain`, `connector_len` | curve shape |
//! | `t_offset`, `t_max_raw`, `h_offset`, `h_max_raw` | raw sensor ranges |
//! | `rail_low`, `rail_high`, `sat_margin`, `floor_margin` | op-amp limits |
//! | `saturation_voltage` | mux saturation input (defaults to `v_r`) |
//! | `threshold_tolerance`, `circuit_seed` | comparator perturbation |
//! | `csnr_db_list` | comma-separated dB values, `inf` allowed |
//! | `trials`, `seed`, `sensors` | Monte-Carlo settings |
//! | `input` | `uniform`, `fixed` or `grid` |
//! | `fixed_v_t`, `fixed_v_h` | raw reading for `input = fixed` |
//! | `grid_t`, `grid_h` | lattice size for `input = grid` |
//! | `encoder` | `ideal` or `circuit` |
//! | `out_dir` | directory for default output paths |
//!
//! `#` starts a comment line.

use std::path::PathBuf;
use std::str::FromStr;

use crate::circuit::CircuitConfig;
use crate::error::{Error, Result};
use crate::experiments::{EncoderKind, InputDistribution, SweepSpec};
use crate::mapping::MappingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Ideal curve with connector length equal to the level spacing.
    Paper,
    /// Zero-length connectors, consistent with a circuit saturating at `v_r`.
    Prototype,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "prototype" => Ok(Preset::Prototype),
            other => Err(Error::param(format!(
                "unknown preset '{other}' (expected paper or prototype)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MappingParams,
    pub circuit: CircuitConfig,
    pub csnr_db_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub sensors: u32,
    pub input: InputDistribution,
    pub encoder: EncoderKind,
    pub out_dir: PathBuf,
    saturation_explicit: bool,
    circuit_seed_explicit: bool,
}

const KEYS: &[&str] = &[
    "delta_h",
    "v_r",
    "num_levels",
    "gain",
    "connector_len",
    "t_offset",
    "t_max_raw",
    "h_offset",
    "h_max_raw",
    "rail_low",
    "rail_high",
    "sat_margin",
    "floor_margin",
    "saturation_voltage",
    "threshold_tolerance",
    "circuit_seed",
    "csnr_db_list",
    "trials",
    "seed",
    "sensors",
    "input",
    "fixed_v_t",
    "fixed_v_h",
    "grid_t",
    "grid_h",
    "encoder",
    "out_dir",
];

/// CSNR grid used by default: 0 to 40 dB in 5 dB steps.
pub fn default_csnr_list() -> Vec<f64> {
    (0..=8).map(|k| f64::from(k) * 5.0).collect()
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{s}' is not a finite number")),
    }
}

fn parse_int<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("'{s}' is not a valid nonnegative integer"))
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let params = match preset {
            Preset::Paper => MappingParams::paper(),
            Preset::Prototype => MappingParams::prototype(),
        };
        RunConfig {
            params,
            circuit: CircuitConfig::paper(&params),
            csnr_db_list: default_csnr_list(),
            trials: 10_000,
            seed: 1,
            sensors: 3,
            input: InputDistribution::Uniform,
            encoder: EncoderKind::Ideal,
            out_dir: PathBuf::from("."),
            saturation_explicit: false,
            circuit_seed_explicit: false,
        }
    }

    /// Applies `key = value` lines on top of `self`, then re-validates.
    pub fn apply_str(mut self, text: &str) -> Result<Self> {
        let mut fixed = (None, None);
        let mut grid = (None, None);
        let mut input_kind = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = (idx + 1) as u64;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected key = value, got '{trimmed}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            }
            let bad = |message: String| Error::Parse {
                line,
                message: format!("{key}: {message}"),
            };
            let num = || parse_f64(value).map_err(bad);
            let p = &mut self.params;
            let c = &mut self.circuit;
            match key {
                "delta_h" => p.delta_h = num()?,
                "v_r" => p.v_r = num()?,
                "num_levels" => p.num_levels = parse_int(value).map_err(bad)?,
                "gain" => p.gain = num()?,
                "connector_len" => p.connector_len = num()?,
                "t_offset" => p.t_offset = num()?,
                "t_max_raw" => p.t_max_raw = num()?,
                "h_offset" => p.h_offset = num()?,
                "h_max_raw" => p.h_max_raw = num()?,
                "rail_low" => c.rail_low = num()?,
                "rail_high" => c.rail_high = num()?,
                "sat_margin" => c.sat_margin = num()?,
                "floor_margin" => c.floor_margin = num()?,
                "saturation_voltage" => {
                    c.saturation_voltage = num()?;
                    self.saturation_explicit = true;
                }
                "threshold_tolerance" => c.threshold_tolerance = num()?,
                "circuit_seed" => {
                    c.seed = parse_int(value).map_err(bad)?;
                    self.circuit_seed_explicit = true;
                }
                "csnr_db_list" => {
                    self.csnr_db_list = value
                        .split(',')
                        .map(|v| parse_f64(v.trim()))
                        .collect::<std::result::Result<_, _>>()
                        .map_err(bad)?;
                }
                "trials" => self.trials = parse_int(value).map_err(bad)?,
                "seed" => self.seed = parse_int(value).map_err(bad)?,
                "sensors" => self.sensors = parse_int(value).map_err(bad)?,
                "input" => match value {
                    "uniform" | "fixed" | "grid" => input_kind = Some(value.to_string()),
                    _ => return Err(bad(format!("'{value}' is not uniform, fixed or grid"))),
                },
                "fixed_v_t" => fixed.0 = Some(num()?),
                "fixed_v_h" => fixed.1 = Some(num()?),
                "grid_t" => grid.0 = Some(parse_int(value).map_err(bad)?),
                "grid_h" => grid.1 = Some(parse_int(value).map_err(bad)?),
                "encoder" => {
                    self.encoder = match value {
                        "ideal" => EncoderKind::Ideal,
                        "circuit" => EncoderKind::Circuit,
                        _ => return Err(bad(format!("'{value}' is not ideal or circuit"))),
                    }
                }
                "out_dir" => self.out_dir = PathBuf::from(value),
                _ => unreachable!("key list and match arms out of sync"),
            }
        }

        match input_kind.as_deref() {
            Some("uniform") => self.input = InputDistribution::Uniform,
            Some("fixed") => {
                let (Some(v_t), Some(v_h)) = fixed else {
                    return Err(Error::param("input = fixed needs fixed_v_t and fixed_v_h"));
                };
                self.input = InputDistribution::Fixed { v_t, v_h };
            }
            Some("grid") => {
                self.input = InputDistribution::Grid {
                    t_points: grid.0.unwrap_or(11),
                    h_points: grid.1.unwrap_or(11),
                };
            }
            _ => {}
        }
        self.finish()
    }

    /// Overrides the seed, which also drives the comparator perturbation
    /// unless `circuit_seed` was set.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_derived();
        self
    }

    fn sync_derived(&mut self) {
        if !self.saturation_explicit {
            self.circuit.saturation_voltage = self.params.v_r;
        }
        if !self.circuit_seed_explicit {
            self.circuit.seed = self.seed;
        }
    }

    fn finish(mut self) -> Result<Self> {
        self.sync_derived();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors < 1 {
            return Err(Error::param("sensors must be >= 1"));
        }
        self.sweep_spec().validate()
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            csnr_points: self.csnr_db_list.clone(),
            trials_per_point: self.trials,
            input: self.input,
            params: self.params,
            config: self.circuit,
            encoder: self.encoder,
            seed: self.seed,
        }
    }
}
