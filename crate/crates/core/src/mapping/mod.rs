//! Ideal rectangular (parallel-line) Shannon mapping.
//!
//! A 2-D sensor point `(temperature, humidity)` is projected onto a curve of
//! `L` horizontal lines joined end to end by vertical connectors. Odd lines
//! are walked left to right, even lines right to left, and the transmitted
//! value is the arc length from the origin to the projected point:
//!
//! ```text
//! odd n:  s = (n - 1) * (v_r + connector_len) + gain * v_t0
//! even n: s = (n - 1) * (v_r + connector_len) + v_r - gain * v_t0
//! ```

mod params;
mod projection;

pub use params::MappingParams;
pub use projection::{encode_bruteforce, project_onto_curve, ProjectionOptions, Scan};

use crate::error::{Error, Result};

/// Raw sensor voltages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub v_t: f64,
    pub v_h: f64,
}

/// Sensor voltages with their offsets removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedReading {
    pub v_t0: f64,
    pub v_h0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(level: u32) -> Self {
        if level % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedValue {
    /// Accumulated arc length in output volts.
    pub s: f64,
    pub level: u32,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedReading {
    pub v_t0_hat: f64,
    /// Always exactly the centre of `level_hat`.
    pub v_h0_hat: f64,
    pub level_hat: u32,
    /// The received arc length fell on a vertical connector and was snapped
    /// to the nearer line.
    pub on_connector: bool,
}

fn check_range(field: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    // Written so that NaN fails too.
    if value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::Range {
            field,
            value,
            min,
            max,
        })
    }
}

impl SensorReading {
    pub fn new(v_t: f64, v_h: f64) -> Self {
        SensorReading { v_t, v_h }
    }

    pub fn validate(&self, params: &MappingParams) -> Result<()> {
        check_range("v_t", self.v_t, params.t_offset, params.t_max_raw)?;
        check_range("v_h", self.v_h, params.h_offset, params.h_max_raw)
    }
}

impl NormalizedReading {
    pub fn new(v_t0: f64, v_h0: f64) -> Self {
        NormalizedReading { v_t0, v_h0 }
    }

    pub fn validate(&self, params: &MappingParams) -> Result<()> {
        check_range("v_t0", self.v_t0, 0.0, params.t_span())?;
        check_range("v_h0", self.v_h0, 0.0, params.h_span())
    }
}

pub fn remove_offset(reading: SensorReading, params: &MappingParams) -> Result<NormalizedReading> {
    reading.validate(params)?;
    Ok(NormalizedReading {
        v_t0: reading.v_t - params.t_offset,
        v_h0: reading.v_h - params.h_offset,
    })
}

/// Adds the sensor offsets back to a decoded reading, giving raw volts
/// `(v_t_hat, v_h_hat)`.
pub fn restore_offset(decoded: &DecodedReading, params: &MappingParams) -> (f64, f64) {
    (
        decoded.v_t0_hat + params.t_offset,
        decoded.v_h0_hat + params.h_offset,
    )
}

/// Index of the line whose centre is nearest to `v_h0`, ties going to the
/// lower line.
pub fn quantize_level(v_h0: f64, params: &MappingParams) -> Result<u32> {
    check_range("v_h0", v_h0, 0.0, params.h_span())?;
    Ok(level_for(v_h0, params))
}

/// Same as [`quantize_level`] without the range check. Values above the
/// top line's region stay on the top line.
pub(crate) fn level_for(v_h0: f64, params: &MappingParams) -> u32 {
    let top = params.num_levels;
    // Estimate, then settle against the exact half-open boundaries.
    let guess = (v_h0 / params.delta_h + 0.5).ceil();
    let mut level = if guess.is_finite() && guess >= 1.0 {
        (guess as u64).min(u64::from(top)) as u32
    } else {
        1
    };
    while level > 1 && v_h0 <= params.level_upper_bound(level - 1) {
        level -= 1;
    }
    while level < top && v_h0 > params.level_upper_bound(level) {
        level += 1;
    }
    level
}

/// Closed-form encoder.
pub fn encode(norm: NormalizedReading, params: &MappingParams) -> Result<EncodedValue> {
    norm.validate(params)?;
    let level = level_for(norm.v_h0, params);
    Ok(encode_on_level(norm.v_t0, level, params))
}

pub(crate) fn encode_on_level(v_t0: f64, level: u32, params: &MappingParams) -> EncodedValue {
    let x = (params.gain * v_t0).clamp(0.0, params.v_r);
    let base = f64::from(level - 1) * params.pitch();
    let parity = Parity::of(level);
    let s = match parity {
        Parity::Odd => base + x,
        Parity::Even => base + (params.v_r - x),
    };
    EncodedValue { s, level, parity }
}

/// Offset removal followed by [`encode`].
pub fn encode_reading(reading: SensorReading, params: &MappingParams) -> Result<EncodedValue> {
    encode(remove_offset(reading, params)?, params)
}

pub fn s_max(params: &MappingParams) -> f64 {
    params.s_max()
}

/// Nearest-point decoder on the arc-length axis.
///
/// Values outside `[0, s_max]` are clamped first. A remainder that lands on
/// a connector snaps to whichever line is nearer along the curve, and the
/// temperature estimate is the connector's horizontal position.
pub fn decode(s: f64, params: &MappingParams) -> Result<DecodedReading> {
    if !s.is_finite() {
        return Err(Error::Input(format!("received value must be finite, got {s}")));
    }
    let s = s.clamp(0.0, params.s_max());
    let pitch = params.pitch();
    let last = u64::from(params.num_levels - 1);

    let mut m = ((s / pitch).floor().max(0.0) as u64).min(last);
    while m > 0 && s < m as f64 * pitch {
        m -= 1;
    }
    while m < last && s >= (m + 1) as f64 * pitch {
        m += 1;
    }
    let mut r = (s - m as f64 * pitch).max(0.0);
    if m == last {
        r = r.min(params.v_r);
    }

    // Line index that this pitch starts with.
    let line = (m + 1) as u32;
    if r <= params.v_r {
        let x = match Parity::of(line) {
            Parity::Odd => r,
            Parity::Even => params.v_r - r,
        };
        let v_t0_hat = (x / params.gain).clamp(0.0, params.t_span());
        return Ok(DecodedReading {
            v_t0_hat,
            v_h0_hat: params.level_center(line),
            level_hat: line,
            on_connector: false,
        });
    }

    let level_hat = if r <= params.v_r + params.connector_len / 2.0 {
        line
    } else {
        (line + 1).min(params.num_levels)
    };
    // The connector leaves an odd line at its right end, an even line at
    // its left end.
    let v_t0_hat = match Parity::of(line) {
        Parity::Odd => params.t_span(),
        Parity::Even => 0.0,
    };
    Ok(DecodedReading {
        v_t0_hat,
        v_h0_hat: params.level_center(level_hat),
        level_hat,
        on_connector: true,
    })
}
