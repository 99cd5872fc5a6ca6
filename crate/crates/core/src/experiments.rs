//! Monte-Carlo SDR-vs-CSNR sweeps and deterministic transfer curves.
//!
//! Every sweep point and every block of trials draws from its own generator,
//! seeded from `(seed, sensor, point, block, stream)`. Blocks run in
//! parallel and are reduced in index order, so results do not depend on the
//! thread count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{self, rng_from_seed};
use crate::circuit::{linspace, Circuit, CircuitConfig};
use crate::error::{Error, Result};
use crate::mapping::{self, MappingParams, NormalizedReading, SensorReading};

/// Trials per independently seeded block.
const BLOCK_TRIALS: usize = 4096;

const STREAM_INPUT: u64 = 1;
const STREAM_NOISE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputDistribution {
    /// Independent uniform draws over both offset-removed ranges.
    Uniform,
    /// One raw sensor reading repeated for every trial.
    Fixed { v_t: f64, v_h: f64 },
    /// Trials cycle through a `t_points × h_points` lattice over both ranges.
    Grid { t_points: usize, h_points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Ideal,
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Strictly increasing; `f64::INFINITY` is allowed as the last point.
    pub csnr_points: Vec<f64>,
    pub trials_per_point: usize,
    pub input: InputDistribution,
    pub params: MappingParams,
    pub config: CircuitConfig,
    pub encoder: EncoderKind,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.encoder == EncoderKind::Circuit {
            self.config.validate()?;
        }
        if self.trials_per_point < 1 {
            return Err(Error::param("trials_per_point must be >= 1"));
        }
        if self.csnr_points.is_empty() {
            return Err(Error::param("CSNR list is empty"));
        }
        if let Some(bad) = self
            .csnr_points
            .iter()
            .find(|c| c.is_nan() || **c == f64::NEG_INFINITY)
        {
            return Err(Error::param(format!("invalid CSNR point {bad}")));
        }
        if self.csnr_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("CSNR points must be strictly increasing"));
        }
        match self.input {
            InputDistribution::Uniform => {}
            InputDistribution::Fixed { v_t, v_h } => {
                SensorReading::new(v_t, v_h).validate(&self.params)?;
            }
            InputDistribution::Grid { t_points, h_points } => {
                if t_points < 1 || h_points < 1 {
                    return Err(Error::param("input grid needs at least one point per axis"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sensor_id: u32,
    pub csnr_db: f64,
    pub sdr_db: f64,
    /// Temperature MSE after scaling the offset-removed range to [0, 1].
    pub mse_t_norm: f64,
    /// Humidity MSE after scaling the offset-removed range to [0, 1].
    pub mse_h_norm: f64,
    /// Fraction of trials whose humidity error exceeded one level spacing.
    pub level_crossing_rate: f64,
    pub trials: usize,
}

/// SDR in dB from the two normalized MSEs, weighted equally. Both zero gives
/// `+inf`.
pub fn compute_sdr(mse_t_norm: f64, mse_h_norm: f64) -> Result<f64> {
    if !(mse_t_norm >= 0.0 && mse_h_norm >= 0.0) {
        return Err(Error::param(format!(
            "MSEs must be nonnegative, got ({mse_t_norm}, {mse_h_norm})"
        )));
    }
    let mean = (mse_t_norm + mse_h_norm) / 2.0;
    if mean == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mean.log10())
}

/// SplitMix64 finalizer folded over `parts`.
pub(crate) fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

enum Encoder {
    Ideal(MappingParams),
    Circuit(Circuit),
}

impl Encoder {
    fn new(kind: EncoderKind, params: &MappingParams, config: &CircuitConfig) -> Result<Self> {
        Ok(match kind {
            EncoderKind::Ideal => Encoder::Ideal(*params),
            EncoderKind::Circuit => Encoder::Circuit(Circuit::new(*params, *config)?),
        })
    }

    /// Inputs must already be in range.
    fn encode(&self, norm: NormalizedReading) -> f64 {
        match self {
            Encoder::Ideal(p) => {
                mapping::encode_on_level(norm.v_t0, mapping::level_for(norm.v_h0, p), p).s
            }
            Encoder::Circuit(c) => c.output_normalized(norm.v_t0, norm.v_h0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    v_t0: f64,
    v_h0: f64,
    s: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ErrorSums {
    sq_t: f64,
    sq_h: f64,
    crossings: usize,
}

fn draw_input<R: Rng>(
    input: InputDistribution,
    params: &MappingParams,
    index: usize,
    rng: &mut R,
) -> NormalizedReading {
    match input {
        InputDistribution::Uniform => NormalizedReading::new(
            rng.random_range(0.0..=params.t_span()),
            rng.random_range(0.0..=params.h_span()),
        ),
        InputDistribution::Fixed { v_t, v_h } => {
            NormalizedReading::new(v_t - params.t_offset, v_h - params.h_offset)
        }
        InputDistribution::Grid { t_points, h_points } => {
            let cell = index % (t_points * h_points);
            let (i, j) = (cell / t_points, cell % t_points);
            let frac = |k: usize, n: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            NormalizedReading::new(
                params.t_span() * frac(j, t_points),
                params.h_span() * frac(i, h_points),
            )
        }
    }
}

fn block_ranges(trials: usize) -> Vec<std::ops::Range<usize>> {
    (0..trials)
        .step_by(BLOCK_TRIALS)
        .map(|start| start..(start + BLOCK_TRIALS).min(trials))
        .collect()
}

fn run_point(
    spec: &SweepSpec,
    encoder: &Encoder,
    sensor_id: u32,
    point: usize,
) -> Result<SweepRecord> {
    let params = &spec.params;
    let csnr_db = spec.csnr_points[point];
    let point_seed = derive_seed(spec.seed, &[u64::from(sensor_id), point as u64]);
    let blocks = block_ranges(spec.trials_per_point);

    let trials: Vec<Vec<Trial>> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, range)| {
            let mut rng = rng_from_seed(derive_seed(point_seed, &[b as u64, STREAM_INPUT]));
            range
                .clone()
                .map(|i| {
                    let norm = draw_input(spec.input, params, i, &mut rng);
                    Trial {
                        v_t0: norm.v_t0,
                        v_h0: norm.v_h0,
                        s: encoder.encode(norm),
                    }
                })
                .collect()
        })
        .collect();

    let sigma = if csnr_db == f64::INFINITY {
        0.0
    } else {
        let sent: Vec<f64> = trials.iter().flatten().map(|t| t.s).collect();
        let power = channel::measure_signal_power(&sent)?;
        if power == 0.0 {
            return Err(Error::param(
                "transmitted ensemble has zero power; CSNR is undefined",
            ));
        }
        channel::noise_sigma(csnr_db, power)?
    };

    let sums: Vec<Result<ErrorSums>> = trials
        .par_iter()
        .enumerate()
        .map(|(b, block)| {
            let mut rng = rng_from_seed(derive_seed(point_seed, &[b as u64, STREAM_NOISE]));
            let mut acc = ErrorSums::default();
            for t in block {
                let received = channel::transmit(t.s, sigma, &mut rng);
                let d = mapping::decode(received, params)?;
                let et = (d.v_t0_hat - t.v_t0) / params.t_span();
                let eh = (d.v_h0_hat - t.v_h0) / params.h_span();
                acc.sq_t += et * et;
                acc.sq_h += eh * eh;
                if (d.v_h0_hat - t.v_h0).abs() > params.delta_h {
                    acc.crossings += 1;
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = ErrorSums::default();
    for s in sums {
        let s = s?;
        total.sq_t += s.sq_t;
        total.sq_h += s.sq_h;
        total.crossings += s.crossings;
    }
    let n = spec.trials_per_point as f64;
    let mse_t_norm = total.sq_t / n;
    let mse_h_norm = total.sq_h / n;
    Ok(SweepRecord {
        sensor_id,
        csnr_db,
        sdr_db: compute_sdr(mse_t_norm, mse_h_norm)?,
        mse_t_norm,
        mse_h_norm,
        level_crossing_rate: total.crossings as f64 / n,
        trials: spec.trials_per_point,
    })
}

fn run_sensor(spec: &SweepSpec, encoder: &Encoder, sensor_id: u32) -> Result<Vec<SweepRecord>> {
    (0..spec.csnr_points.len())
        .map(|point| run_point(spec, encoder, sensor_id, point))
        .collect()
}

/// SDR-vs-CSNR curve for a single sensor (`sensor_id` 0).
pub fn run_sdr_vs_csnr(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let encoder = Encoder::new(spec.encoder, &spec.params, &spec.config)?;
    run_sensor(spec, &encoder, 0)
}

/// Several sensors sharing the medium through FDMA, modeled as independent
/// channels with distinct seeds. Records are ordered by
/// `(sensor_id, csnr_db)`.
pub fn run_fdma_sweep(spec: &SweepSpec, sensors: u32) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    if sensors < 1 {
        return Err(Error::param("need at least one sensor"));
    }
    let encoder = Encoder::new(spec.encoder, &spec.params, &spec.config)?;
    let per_sensor: Vec<Result<Vec<SweepRecord>>> = (0..sensors)
        .into_par_iter()
        .map(|id| run_sensor(spec, &encoder, id))
        .collect();
    let mut out = Vec::new();
    for records in per_sensor {
        out.extend(records?);
    }
    Ok(out)
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sensor_id", "csnr_db", "sdr_db", "mse_t_norm", "mse_h_norm", "trials"])?;
    for r in records {
        w.write_record([
            r.sensor_id.to_string(),
            format!("{:.6}", r.csnr_db),
            format!("{:.6}", r.sdr_db),
            format!("{:.9e}", r.mse_t_norm),
            format!("{:.9e}", r.mse_h_norm),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One point of a transfer curve, all voltages raw (offsets included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPoint {
    /// The swept input: `v_t` or `v_h` depending on the sweep.
    pub input: f64,
    pub s: f64,
    pub v_t_hat: f64,
    pub v_h_hat: f64,
}

fn transfer_point(
    encoder: &Encoder,
    params: &MappingParams,
    reading: SensorReading,
    input: f64,
) -> Result<TransferPoint> {
    let norm = mapping::remove_offset(reading, params)?;
    let s = encoder.encode(norm);
    let decoded = mapping::decode(s, params)?;
    let (v_t_hat, v_h_hat) = mapping::restore_offset(&decoded, params);
    Ok(TransferPoint {
        input,
        s,
        v_t_hat,
        v_h_hat,
    })
}

/// Sweeps temperature across its range at fixed raw humidity `v_h`.
pub fn sweep_vt_fixed_vh(
    v_h: f64,
    t_grid: usize,
    params: &MappingParams,
    config: &CircuitConfig,
    encoder: EncoderKind,
) -> Result<Vec<TransferPoint>> {
    params.validate()?;
    if t_grid < 1 {
        return Err(Error::param("t_grid must be >= 1"));
    }
    SensorReading::new(params.t_offset, v_h).validate(params)?;
    let enc = Encoder::new(encoder, params, config)?;
    linspace(params.t_offset, params.t_max_raw, t_grid)
        .into_iter()
        .map(|v_t| transfer_point(&enc, params, SensorReading::new(v_t, v_h), v_t))
        .collect()
}

/// Sweeps humidity across its range at fixed raw temperature `v_t`.
pub fn sweep_vh_fixed_vt(
    v_t: f64,
    h_grid: usize,
    params: &MappingParams,
    config: &CircuitConfig,
    encoder: EncoderKind,
) -> Result<Vec<TransferPoint>> {
    params.validate()?;
    if h_grid < 1 {
        return Err(Error::param("h_grid must be >= 1"));
    }
    SensorReading::new(v_t, params.h_offset).validate(params)?;
    let enc = Encoder::new(encoder, params, config)?;
    linspace(params.h_offset, params.h_max_raw, h_grid)
        .into_iter()
        .map(|v_h| transfer_point(&enc, params, SensorReading::new(v_t, v_h), v_h))
        .collect()
}

/// `input_column` is `"v_t"` or `"v_h"`.
pub fn write_transfer_csv<W: Write>(
    points: &[TransferPoint],
    input_column: &str,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([input_column, "s_volts", "v_t_hat", "v_h_hat"])?;
    for p in points {
        w.write_record([
            format!("{:.6}", p.input),
            format!("{:.6}", p.s),
            format!("{:.6}", p.v_t_hat),
            format!("{:.6}", p.v_h_hat),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Number of maximal runs of equal consecutive values.
pub fn count_plateaus(values: impl IntoIterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = None;
    for v in values {
        if last != Some(v) {
            count += 1;
            last = Some(v);
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(csnr: Vec<f64>, trials: usize) -> SweepSpec {
        let params = MappingParams::paper();
        SweepSpec {
            csnr_points: csnr,
            trials_per_point: trials,
            input: InputDistribution::Uniform,
            params,
            config: CircuitConfig::ideal(&params),
            encoder: EncoderKind::Ideal,
            seed: 42,
        }
    }

    #[test]
    fn sdr_examples() {
        assert!((compute_sdr(0.01, 0.01).unwrap() - 20.0).abs() < 1e-12);
        assert!((compute_sdr(0.01, 0.03).unwrap() - 16.989_700_043).abs() < 1e-8);
        assert_eq!(compute_sdr(0.0, 0.0).unwrap(), f64::INFINITY);
        assert!(compute_sdr(-0.1, 0.0).is_err());
        assert!(compute_sdr(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn seed_derivation_separates_parts() {
        let a = derive_seed(1, &[0, 1]);
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1]));
    }

    #[test]
    fn spec_validation() {
        assert!(spec(vec![], 10).validate().is_err());
        assert!(spec(vec![0.0, 10.0], 0).validate().is_err());
        assert!(spec(vec![10.0, 0.0], 10).validate().is_err());
        assert!(spec(vec![0.0, 0.0], 10).validate().is_err());
        assert!(spec(vec![f64::NAN], 10).validate().is_err());
        spec(vec![0.0, 10.0, f64::INFINITY], 10).validate().unwrap();

        let mut s = spec(vec![0.0], 10);
        s.input = InputDistribution::Fixed { v_t: 9.0, v_h: 1.0 };
        assert!(matches!(s.validate(), Err(Error::Range { field: "v_t", .. })));
    }

    #[test]
    fn noiseless_floor_small() {
        let recs = run_sdr_vs_csnr(&spec(vec![f64::INFINITY], 20_000)).unwrap();
        let r = recs[0];
        assert!(r.mse_t_norm <= 1e-12);
        let floor = (0.3f64 / 3.0).powi(2) / 12.0;
        assert!((r.mse_h_norm / floor - 1.0).abs() < 0.05, "{}", r.mse_h_norm);
        assert_eq!(r.level_crossing_rate, 0.0);
    }

    #[test]
    fn deterministic_and_ordered() {
        let s = spec(vec![0.0, 10.0, 20.0], 5000);
        let a = run_fdma_sweep(&s, 3).unwrap();
        let b = run_fdma_sweep(&s, 3).unwrap();
        assert_eq!(a, b);
        let keys: Vec<_> = a.iter().map(|r| (r.sensor_id, r.csnr_db)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(keys, sorted);
        assert_ne!(a[0].sdr_db, a[3].sdr_db, "sensors must use distinct seeds");
    }

    #[test]
    fn fixed_input_zero_power_is_rejected() {
        let mut s = spec(vec![10.0], 10);
        s.input = InputDistribution::Fixed { v_t: 1.375, v_h: 0.8 };
        assert!(matches!(run_sdr_vs_csnr(&s), Err(Error::Param(_))));
    }

    #[test]
    fn fixed_input_noiseless_is_exact_quantization() {
        let mut s = spec(vec![f64::INFINITY], 100);
        s.input = InputDistribution::Fixed { v_t: 2.375, v_h: 1.7 };
        let r = run_sdr_vs_csnr(&s).unwrap()[0];
        assert!(r.mse_t_norm < 1e-20);
        assert!(r.mse_h_norm < 1e-20);
    }

    #[test]
    fn grid_input_cycles_lattice() {
        let p = MappingParams::paper();
        let mut rng = rng_from_seed(0);
        let g = InputDistribution::Grid { t_points: 3, h_points: 2 };
        let a = draw_input(g, &p, 0, &mut rng);
        let b = draw_input(g, &p, 5, &mut rng);
        let c = draw_input(g, &p, 6, &mut rng);
        assert_eq!((a.v_t0, a.v_h0), (0.0, 0.0));
        assert_eq!(b.v_t0, p.t_span());
        assert_eq!(b.v_h0, p.h_span());
        assert_eq!(a, c);
    }

    #[test]
    fn circuit_encoder_sweep_runs() {
        let mut s = spec(vec![20.0, f64::INFINITY], 3000);
        s.encoder = EncoderKind::Circuit;
        let recs = run_sdr_vs_csnr(&s).unwrap();
        assert!(recs[1].mse_t_norm <= 1e-12);
    }

    #[test]
    fn transfer_single_point() {
        let p = MappingParams::paper();
        let c = CircuitConfig::ideal(&p);
        let pts = sweep_vt_fixed_vh(1.83, 1, &p, &c, EncoderKind::Ideal).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].input, p.t_offset);
        assert!(sweep_vt_fixed_vh(5.0, 10, &p, &c, EncoderKind::Ideal).is_err());
        assert!(sweep_vh_fixed_vt(0.0, 10, &p, &c, EncoderKind::Ideal).is_err());
    }

    #[test]
    fn transfer_level_center_spans_one_line() {
        let p = MappingParams::paper();
        let c = CircuitConfig::ideal(&p);
        // Raw 1.4 V humidity is the centre of level 3 (odd).
        let pts = sweep_vt_fixed_vh(1.4, 11, &p, &c, EncoderKind::Ideal).unwrap();
        let base = 2.0 * p.pitch();
        assert!((pts[0].s - base).abs() < 1e-12);
        assert!((pts[10].s - (base + p.v_r)).abs() < 1e-12);
    }

    #[test]
    fn transfer_within_one_level_is_flat() {
        let p = MappingParams::paper();
        let c = CircuitConfig::ideal(&p);
        let pts = sweep_vh_fixed_vt(2.0, 301, &p, &c, EncoderKind::Ideal).unwrap();
        // Raw 1.30..1.50 V lies inside level 3's region (0.45, 0.75].
        let inside: Vec<_> = pts
            .iter()
            .filter(|q| q.input > 1.26 && q.input < 1.54)
            .map(|q| q.s)
            .collect();
        assert!(inside.len() > 10);
        assert!(inside.iter().all(|&s| s == inside[0]));
    }

    #[test]
    fn plateau_counter() {
        assert_eq!(count_plateaus([1.0, 1.0, 2.0, 2.0, 1.0]), 3);
        assert_eq!(count_plateaus(std::iter::empty()), 0);
    }

    #[test]
    fn sweep_csv_header() {
        let recs = run_sdr_vs_csnr(&spec(vec![10.0], 100)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sensor_id,csnr_db,sdr_db,mse_t_norm,mse_h_norm,trials\n"));
        assert!(text.lines().nth(1).unwrap().starts_with("0,10.000000,"));
    }
}
