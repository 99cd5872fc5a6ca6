use crate::error::{Error, Result};

/// Relative slack for the two derived-equality invariants. Both involve
/// decimal voltages (0.2 × 2.25, 10 × 0.3) that are not exact in binary.
const INVARIANT_RTOL: f64 = 1e-9;

/// Level boundaries are snapped to this voltage resolution (1 pV) so that a
/// decimal reference such as 0.45 V is the nearest double to 0.45 rather
/// than `1.5 * 0.3 = 0.44999999999999996`.
const BOUNDARY_RESOLUTION: f64 = 1e12;

/// Complete parameterization of the rectangular curve.
///
/// The temperature axis is horizontal (one full line spans the offset-removed
/// temperature range), the humidity axis is vertical with lines spaced
/// `delta_h` apart. All voltages are in volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingParams {
    /// Vertical spacing between adjacent lines.
    pub delta_h: f64,
    /// Output-domain length of one horizontal line.
    pub v_r: f64,
    pub num_levels: u32,
    /// Type-1 VCVS gain from offset-removed temperature to output volts.
    pub gain: f64,
    /// Output-domain length of each vertical connector. The per-level
    /// pitch is `v_r + connector_len`.
    pub connector_len: f64,
    pub t_offset: f64,
    pub t_max_raw: f64,
    pub h_offset: f64,
    pub h_max_raw: f64,
}

impl MappingParams {
    /// Sensor ranges of the AD22100/HIH4000 pair, 0.3 V level spacing,
    /// 11 levels, 1:5 divider and connector length equal to the spacing.
    pub fn paper() -> Self {
        MappingParams {
            delta_h: 0.3,
            v_r: 0.45,
            num_levels: 11,
            gain: 0.2,
            connector_len: 0.3,
            t_offset: 1.375,
            t_max_raw: 3.625,
            h_offset: 0.8,
            h_max_raw: 3.8,
        }
    }

    /// Same as [`MappingParams::paper`] but with zero-length connectors,
    /// matching a circuit whose multiplexers saturate at `v_r`.
    pub fn prototype() -> Self {
        MappingParams {
            connector_len: 0.0,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("delta_h", self.delta_h),
            ("v_r", self.v_r),
            ("gain", self.gain),
            ("connector_len", self.connector_len),
            ("t_offset", self.t_offset),
            ("t_max_raw", self.t_max_raw),
            ("h_offset", self.h_offset),
            ("h_max_raw", self.h_max_raw),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::param(format!("{name} must be finite, got {v}")));
        }
        if self.delta_h <= 0.0 {
            return Err(Error::param(format!("delta_h must be > 0, got {}", self.delta_h)));
        }
        if self.v_r <= 0.0 {
            return Err(Error::param(format!("v_r must be > 0, got {}", self.v_r)));
        }
        if self.num_levels < 1 {
            return Err(Error::param("num_levels must be >= 1"));
        }
        if self.gain <= 0.0 {
            return Err(Error::param(format!("gain must be > 0, got {}", self.gain)));
        }
        if self.connector_len < 0.0 {
            return Err(Error::param(format!(
                "connector_len must be >= 0, got {}",
                self.connector_len
            )));
        }
        if self.t_max_raw <= self.t_offset {
            return Err(Error::param("t_max_raw must exceed t_offset"));
        }
        if self.h_max_raw <= self.h_offset {
            return Err(Error::param("h_max_raw must exceed h_offset"));
        }
        let swing = self.gain * self.t_span();
        if (swing - self.v_r).abs() > INVARIANT_RTOL * self.v_r {
            return Err(Error::param(format!(
                "gain * (t_max_raw - t_offset) = {swing} must equal v_r = {}",
                self.v_r
            )));
        }
        let top = f64::from(self.num_levels - 1) * self.delta_h;
        if top > self.h_span() * (1.0 + INVARIANT_RTOL) {
            return Err(Error::param(format!(
                "(num_levels - 1) * delta_h = {top} exceeds the humidity span {}",
                self.h_span()
            )));
        }
        Ok(())
    }

    /// Width of the offset-removed temperature range.
    pub fn t_span(&self) -> f64 {
        self.t_max_raw - self.t_offset
    }

    /// Width of the offset-removed humidity range.
    pub fn h_span(&self) -> f64 {
        self.h_max_raw - self.h_offset
    }

    /// Arc length consumed by one line plus its connector.
    pub fn pitch(&self) -> f64 {
        self.v_r + self.connector_len
    }

    /// Arc length at the far end of the top line.
    pub fn s_max(&self) -> f64 {
        f64::from(self.num_levels - 1) * self.pitch() + self.v_r
    }

    /// Offset-removed humidity of the centre of `level` (1-based).
    pub fn level_center(&self, level: u32) -> f64 {
        f64::from(level - 1) * self.delta_h
    }

    /// Upper edge of `level`'s humidity region, `(level - 0.5) * delta_h`.
    /// Regions are half-open `(lower, upper]`, so a value exactly on this
    /// edge still belongs to `level`.
    pub fn level_upper_bound(&self, level: u32) -> f64 {
        let edge = f64::from(2 * level - 1) * self.delta_h / 2.0;
        (edge * BOUNDARY_RESOLUTION).round() / BOUNDARY_RESOLUTION
    }

    /// Number of two-level stages, counting a trailing single level as a
    /// half stage.
    pub fn num_stages(&self) -> u32 {
        self.num_levels.div_ceil(2)
    }
}
