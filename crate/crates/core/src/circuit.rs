//! Behavioral model of the staged VCVS circuit.
//!
//! Each level is a multiplexer choosing between ground, a VCVS output and a
//! fixed saturation voltage, with the select lines driven by comparators on
//! the offset-removed humidity voltage. Odd levels use the Type-1 VCVS
//! (`gain * v_t0`), even levels the Type-2 VCVS (`v_r - gain * v_t0`). A
//! summing adder adds all level outputs. Two consecutive levels form a stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mapping::{self, MappingParams, Parity, SensorReading};

/// Non-ideality knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitConfig {
    pub rail_low: f64,
    pub rail_high: f64,
    /// Headroom below `rail_high` at which op-amp outputs clip.
    pub sat_margin: f64,
    /// Lowest op-amp output above `rail_low`. Zero models an output that
    /// swings all the way to the negative rail; a positive value leaves a
    /// residual output at the start of each linear region.
    pub floor_margin: f64,
    /// Multiplexer "full" input passed once a level is saturated.
    pub saturation_voltage: f64,
    /// Bound on the relative perturbation of each comparator reference.
    pub threshold_tolerance: f64,
    pub seed: u64,
}

impl CircuitConfig {
    /// Default knobs (0–5 V rails, 50 mV headroom) with the saturation
    /// voltage matching the mapping's pitch.
    pub fn for_params(params: &MappingParams) -> Self {
        CircuitConfig {
            rail_low: 0.0,
            rail_high: 5.0,
            sat_margin: 0.05,
            floor_margin: 0.0,
            saturation_voltage: params.v_r + params.connector_len,
            threshold_tolerance: 0.0,
            seed: 0,
        }
    }

    /// Ideal circuit: no clipping headroom, exact thresholds, saturation at
    /// `v_r + connector_len`. Reproduces the closed-form encoder exactly.
    pub fn ideal(params: &MappingParams) -> Self {
        CircuitConfig {
            sat_margin: 0.0,
            ..Self::for_params(params)
        }
    }

    /// The simulated/breadboarded circuit: multiplexers saturate at `v_r`.
    pub fn paper(params: &MappingParams) -> Self {
        CircuitConfig {
            saturation_voltage: params.v_r,
            ..Self::for_params(params)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rail_low,
            self.rail_high,
            self.sat_margin,
            self.floor_margin,
            self.saturation_voltage,
            self.threshold_tolerance,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("circuit config values must be finite"));
        }
        if self.rail_low >= self.rail_high {
            return Err(Error::param("rail_low must be below rail_high"));
        }
        if self.sat_margin < 0.0 || self.floor_margin < 0.0 {
            return Err(Error::param("saturation margins must be >= 0"));
        }
        if self.rail_low + self.floor_margin > self.rail_high - self.sat_margin {
            return Err(Error::param("saturation margins leave no output swing"));
        }
        if !(0.0..1.0).contains(&self.threshold_tolerance) {
            return Err(Error::param("threshold_tolerance must be in [0, 1)"));
        }
        Ok(())
    }

    fn clip(&self, v: f64) -> f64 {
        v.clamp(
            self.rail_low + self.floor_margin,
            self.rail_high - self.sat_margin,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Off,
    Linear,
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelState {
    pub level: u32,
    pub region: Region,
    pub output: f64,
}

/// A circuit instance with its comparator references resolved.
#[derive(Debug, Clone)]
pub struct Circuit {
    params: MappingParams,
    config: CircuitConfig,
    /// `upper[n - 1]` is the reference above which level `n` saturates.
    /// The top level has no upper comparator.
    upper: Vec<f64>,
}

impl Circuit {
    pub fn new(params: MappingParams, config: CircuitConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let tol = config.threshold_tolerance;
        let upper = (1..=params.num_levels)
            .map(|n| {
                if n == params.num_levels {
                    return f64::INFINITY;
                }
                let nominal = params.level_upper_bound(n);
                if tol == 0.0 {
                    nominal
                } else {
                    nominal * (1.0 + tol * rng.random_range(-1.0..=1.0))
                }
            })
            .collect();
        Ok(Circuit {
            params,
            config,
            upper,
        })
    }

    pub fn params(&self) -> &MappingParams {
        &self.params
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.config
    }

    /// Comparator references, one per level (`+inf` for the top level).
    pub fn thresholds(&self) -> &[f64] {
        &self.upper
    }

    /// Region of a single level. Level 1 is linear on `[0, upper_1]`, level
    /// `n > 1` on `(upper_{n-1}, upper_n]`.
    pub fn region(&self, level: u32, v_h0: f64) -> Region {
        let idx = (level - 1) as usize;
        if v_h0 > self.upper[idx] {
            return Region::Saturated;
        }
        let off = if level == 1 {
            v_h0 < 0.0
        } else {
            v_h0 <= self.upper[idx - 1]
        };
        if off {
            Region::Off
        } else {
            Region::Linear
        }
    }

    pub fn comparator_bank(&self, v_h0: f64) -> Vec<Region> {
        (1..=self.params.num_levels)
            .map(|n| self.region(n, v_h0))
            .collect()
    }

    pub fn vcvs_type1(&self, v_t0: f64) -> f64 {
        self.config.clip(self.params.gain * v_t0)
    }

    pub fn vcvs_type2(&self, v_t0: f64) -> f64 {
        self.config.clip(self.params.v_r - self.vcvs_type1(v_t0))
    }

    pub fn level_output(&self, region: Region, v_t0: f64, parity: Parity) -> f64 {
        match region {
            Region::Off => 0.0,
            Region::Linear => match parity {
                Parity::Odd => self.vcvs_type1(v_t0),
                Parity::Even => self.vcvs_type2(v_t0),
            },
            Region::Saturated => self.config.saturation_voltage,
        }
    }

    pub fn level_states(&self, v_t0: f64, v_h0: f64) -> Vec<LevelState> {
        (1..=self.params.num_levels)
            .map(|level| {
                let region = self.region(level, v_h0);
                LevelState {
                    level,
                    region,
                    output: self.level_output(region, v_t0, Parity::of(level)),
                }
            })
            .collect()
    }

    /// Adder output for offset-removed inputs, without range checks.
    pub fn output_normalized(&self, v_t0: f64, v_h0: f64) -> f64 {
        (1..=self.params.num_levels)
            .map(|level| {
                let region = self.region(level, v_h0);
                self.level_output(region, v_t0, Parity::of(level))
            })
            .sum()
    }

    /// Full signal chain: offset removal then the sum of all levels.
    pub fn encode(&self, reading: SensorReading) -> Result<f64> {
        let norm = mapping::remove_offset(reading, &self.params)?;
        Ok(self.output_normalized(norm.v_t0, norm.v_h0))
    }

    /// Levels making up `stage` (1-based); the last stage may hold one.
    pub fn stage_levels(&self, stage: u32) -> Result<Vec<u32>> {
        let stages = self.params.num_stages();
        if stage < 1 || stage > stages {
            return Err(Error::param(format!(
                "stage {stage} out of range [1, {stages}]"
            )));
        }
        let first = 2 * stage - 1;
        Ok((first..=(first + 1).min(self.params.num_levels)).collect())
    }

    /// Output of one stage at raw sensor voltages. Inputs are not range
    /// checked; the offset-removal subtractors just pass them through.
    pub fn stage_output(&self, stage: u32, v_t: f64, v_h: f64) -> Result<f64> {
        let v_t0 = v_t - self.params.t_offset;
        let v_h0 = v_h - self.params.h_offset;
        Ok(self
            .stage_levels(stage)?
            .into_iter()
            .map(|level| self.level_output(self.region(level, v_h0), v_t0, Parity::of(level)))
            .sum())
    }

    /// Samples one stage's output on an evenly spaced raw `(v_t, v_h)` grid
    /// covering both sensor ranges.
    pub fn stage_surface(&self, stage: u32, t_grid: usize, h_grid: usize) -> Result<Surface> {
        if t_grid < 2 || h_grid < 2 {
            return Err(Error::param("surface grids need at least 2 points per axis"));
        }
        let levels = self.stage_levels(stage)?;
        let p = &self.params;
        let v_t = linspace(p.t_offset, p.t_max_raw, t_grid);
        let v_h = linspace(p.h_offset, p.h_max_raw, h_grid);
        let values = v_h
            .iter()
            .map(|&h| {
                let v_h0 = h - p.h_offset;
                v_t.iter()
                    .map(|&t| {
                        let v_t0 = t - p.t_offset;
                        levels
                            .iter()
                            .map(|&l| self.level_output(self.region(l, v_h0), v_t0, Parity::of(l)))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Surface {
            stage,
            v_t,
            v_h,
            values,
        })
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive; a single point is `lo`.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
                .collect()
        }
    }
}

/// Stage output sampled on a raw-voltage grid. `values[i][j]` is the output
/// at `(v_t[j], v_h[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub stage: u32,
    pub v_t: Vec<f64>,
    pub v_h: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Surface {
    pub fn rows(&self) -> usize {
        self.v_t.len() * self.v_h.len()
    }

    /// Writes `v_t,v_h,output_volts` rows, humidity-major.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v_t", "v_h", "output_volts"])?;
        for (i, h) in self.v_h.iter().enumerate() {
            for (j, t) in self.v_t.iter().enumerate() {
                w.write_record([
                    format!("{t:.6}"),
                    format!("{h:.6}"),
                    format!("{:.6}", self.values[i][j]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn comparator_bank(
    v_h0: f64,
    params: &MappingParams,
    config: &CircuitConfig,
) -> Result<Vec<Region>> {
    Ok(Circuit::new(*params, *config)?.comparator_bank(v_h0))
}

pub fn vcvs_type1(v_t0: f64, params: &MappingParams, config: &CircuitConfig) -> Result<f64> {
    Ok(Circuit::new(*params, *config)?.vcvs_type1(v_t0))
}

pub fn vcvs_type2(v_t0: f64, params: &MappingParams, config: &CircuitConfig) -> Result<f64> {
    Ok(Circuit::new(*params, *config)?.vcvs_type2(v_t0))
}

pub fn level_output(
    region: Region,
    v_t0: f64,
    parity: Parity,
    params: &MappingParams,
    config: &CircuitConfig,
) -> Result<f64> {
    Ok(Circuit::new(*params, *config)?.level_output(region, v_t0, parity))
}

pub fn circuit_encode(
    reading: SensorReading,
    params: &MappingParams,
    config: &CircuitConfig,
) -> Result<f64> {
    Circuit::new(*params, *config)?.encode(reading)
}

pub fn stage_surface(
    stage: u32,
    t_grid: usize,
    h_grid: usize,
    params: &MappingParams,
    config: &CircuitConfig,
) -> Result<Surface> {
    Circuit::new(*params, *config)?.stage_surface(stage, t_grid, h_grid)
}
