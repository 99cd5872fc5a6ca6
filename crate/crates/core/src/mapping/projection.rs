//! Nearest-point projection onto a sampled copy of the curve.
//!
//! This is the geometric reference for [`super::encode`]: the curve is built
//! as an explicit polyline in the `(v_t0, v_h0)` plane, arc lengths are
//! accumulated by walking its segments, and the encoded value is the arc
//! length of the closest sample. Nothing here uses the closed form.

use super::{EncodedValue, MappingParams, NormalizedReading, Parity};
use crate::error::{Error, Result};

/// Squared distances closer than this are treated as ties, resolved towards
/// the smaller arc length.
const TIE_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    /// Visit every sample of every segment.
    Exhaustive,
    /// Visit only the samples bracketing the query point on each segment.
    /// All segments are still considered.
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionOptions {
    /// Also sample the vertical connectors between lines.
    pub include_connectors: bool,
    pub scan: Scan,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            include_connectors: false,
            scan: Scan::Windowed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Orientation {
    /// Horizontal line at height `y`, walked from `x_start` to `x_end`.
    Horizontal { y: f64, x_start: f64, x_end: f64 },
    /// Vertical connector at `x`, walked upwards from `y_start` to `y_end`.
    Vertical { x: f64, y_start: f64, y_end: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    orientation: Orientation,
    /// Output volts per plane volt along this segment.
    scale: f64,
    arc_start: f64,
    /// Line the segment belongs to; connectors report the line below.
    level: u32,
}

fn build_curve(params: &MappingParams) -> Vec<Segment> {
    let span = params.t_span();
    let line_scale = params.v_r / span;
    let connector_scale = params.connector_len / params.delta_h;
    let mut segments = Vec::with_capacity(2 * params.num_levels as usize);
    let mut arc = 0.0;
    let mut x = 0.0;
    for level in 1..=params.num_levels {
        let y = f64::from(level - 1) * params.delta_h;
        let x_end = if x == 0.0 { span } else { 0.0 };
        segments.push(Segment {
            orientation: Orientation::Horizontal { y, x_start: x, x_end },
            scale: line_scale,
            arc_start: arc,
            level,
        });
        arc += line_scale * span;
        x = x_end;
        if level < params.num_levels {
            segments.push(Segment {
                orientation: Orientation::Vertical {
                    x,
                    y_start: y,
                    y_end: y + params.delta_h,
                },
                scale: connector_scale,
                arc_start: arc,
                level,
            });
            arc += connector_scale * params.delta_h;
        }
    }
    segments
}

/// Sample positions `0, step, 2*step, ...` measured from `lo`, plus `hi`.
fn lattice_count(lo: f64, hi: f64, step: f64) -> u64 {
    ((hi - lo) / step).floor() as u64
}

fn lattice_point(lo: f64, hi: f64, step: f64, k: u64) -> f64 {
    (lo + k as f64 * step).min(hi)
}

struct Best {
    d2: f64,
    arc: f64,
    level: u32,
}

impl Best {
    fn offer(&mut self, d2: f64, arc: f64, level: u32) {
        let better = d2 < self.d2 - TIE_BAND
            || ((d2 - self.d2).abs() <= TIE_BAND && arc < self.arc);
        if better {
            self.d2 = d2;
            self.arc = arc;
            self.level = level;
        }
    }
}

/// Projects `norm` onto the sampled curve and returns the arc length of the
/// nearest sample.
pub fn project_onto_curve(
    norm: NormalizedReading,
    params: &MappingParams,
    grid_step: f64,
    options: ProjectionOptions,
) -> Result<EncodedValue> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::param(format!("grid_step must be > 0, got {grid_step}")));
    }
    params.validate()?;
    norm.validate(params)?;

    let (px, py) = (norm.v_t0, norm.v_h0);
    let mut best = Best {
        d2: f64::INFINITY,
        arc: f64::INFINITY,
        level: 1,
    };

    for seg in build_curve(params) {
        match seg.orientation {
            Orientation::Horizontal { y, x_start, x_end } => {
                // Samples sit on the absolute lattice k * grid_step so every
                // line shares the same abscissae.
                let span = x_start.max(x_end);
                let last = lattice_count(0.0, span, grid_step) + 1;
                let dy2 = (py - y) * (py - y);
                let mut visit = |x: f64| {
                    let dx = px - x;
                    let arc = seg.arc_start + seg.scale * (x - x_start).abs();
                    best.offer(dx * dx + dy2, arc, seg.level);
                };
                match options.scan {
                    Scan::Exhaustive => {
                        for k in 0..=last {
                            visit(lattice_point(0.0, span, grid_step, k));
                        }
                    }
                    Scan::Windowed => {
                        let k0 = ((px / grid_step).floor().max(0.0) as u64).min(last);
                        for k in [k0.saturating_sub(1), k0, k0 + 1, last] {
                            visit(lattice_point(0.0, span, grid_step, k.min(last)));
                        }
                    }
                }
            }
            Orientation::Vertical { x, y_start, y_end } => {
                if !options.include_connectors {
                    continue;
                }
                let last = lattice_count(y_start, y_end, grid_step) + 1;
                let dx2 = (px - x) * (px - x);
                let below = seg.level;
                let mid = (y_start + y_end) / 2.0;
                let mut visit = |y: f64| {
                    let dy = py - y;
                    let arc = seg.arc_start + seg.scale * (y - y_start);
                    let level = if y <= mid { below } else { below + 1 };
                    best.offer(dx2 + dy * dy, arc, level);
                };
                match options.scan {
                    Scan::Exhaustive => {
                        for k in 0..=last {
                            visit(lattice_point(y_start, y_end, grid_step, k));
                        }
                    }
                    Scan::Windowed => {
                        let rel = ((py - y_start) / grid_step).floor().max(0.0) as u64;
                        let k0 = rel.min(last);
                        for k in [k0.saturating_sub(1), k0, k0 + 1, 0, last] {
                            visit(lattice_point(y_start, y_end, grid_step, k.min(last)));
                        }
                    }
                }
            }
        }
    }

    Ok(EncodedValue {
        s: best.arc,
        level: best.level,
        parity: Parity::of(best.level),
    })
}

/// Projection oracle over the horizontal lines only, with the windowed scan.
pub fn encode_bruteforce(
    norm: NormalizedReading,
    params: &MappingParams,
    grid_step: f64,
) -> Result<EncodedValue> {
    project_onto_curve(norm, params, grid_step, ProjectionOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::encode;

    #[test]
    fn origin() {
        let p = MappingParams::paper();
        let e = encode_bruteforce(NormalizedReading::new(0.0, 0.0), &p, 1e-4).unwrap();
        assert_eq!(e.s, 0.0);
        assert_eq!(e.level, 1);
    }

    #[test]
    fn level_four_point() {
        let p = MappingParams::paper();
        let step = 1e-4;
        let e = encode_bruteforce(NormalizedReading::new(1.0, 0.9), &p, step).unwrap();
        assert_eq!(e.level, 4);
        assert!((e.s - 2.50).abs() <= p.gain * step + 1e-9, "s = {}", e.s);
    }

    #[test]
    fn tie_goes_to_smaller_arc() {
        let p = MappingParams::paper();
        for (v_h0, level) in [(0.45, 2), (0.15, 1), (0.75, 3)] {
            let e = encode_bruteforce(NormalizedReading::new(1.0, v_h0), &p, 1e-4).unwrap();
            assert_eq!(e.level, level, "v_h0 = {v_h0}");
            assert_eq!(e.level, crate::mapping::quantize_level(v_h0, &p).unwrap());
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = MappingParams::paper();
        let n = NormalizedReading::new(0.0, 0.0);
        assert!(matches!(encode_bruteforce(n, &p, 0.0), Err(Error::Param(_))));
        assert!(encode_bruteforce(n, &p, -1e-3).is_err());
        assert!(encode_bruteforce(n, &p, f64::NAN).is_err());
    }

    #[test]
    fn windowed_matches_exhaustive() {
        let p = MappingParams::paper();
        let step = 1e-3;
        let mut k = 0u32;
        for i in 0..=30 {
            for j in 0..=20 {
                let n = NormalizedReading::new(
                    p.t_span() * f64::from(j) / 20.0 * 0.999 + 1e-4 * f64::from(k % 7),
                    (p.h_span() * f64::from(i) / 30.0).min(p.h_span()),
                );
                k += 1;
                for include_connectors in [false, true] {
                    let w = project_onto_curve(
                        n,
                        &p,
                        step,
                        ProjectionOptions { include_connectors, scan: Scan::Windowed },
                    )
                    .unwrap();
                    let x = project_onto_curve(
                        n,
                        &p,
                        step,
                        ProjectionOptions { include_connectors, scan: Scan::Exhaustive },
                    )
                    .unwrap();
                    assert_eq!(w, x, "{n:?} connectors={include_connectors}");
                }
            }
        }
    }

    #[test]
    fn connectors_only_matter_near_the_edges() {
        let p = MappingParams::paper();
        let step = 1e-3;
        let with = ProjectionOptions {
            include_connectors: true,
            scan: Scan::Windowed,
        };
        // Well inside the horizontal range nothing changes.
        let n = NormalizedReading::new(1.1, 0.6);
        assert_eq!(
            project_onto_curve(n, &p, step, with).unwrap(),
            encode_bruteforce(n, &p, step).unwrap()
        );
        // At the right edge, midway between lines 1 and 2, the connector
        // is closer than either line.
        let n = NormalizedReading::new(2.25, 0.14);
        let e = project_onto_curve(n, &p, step, with).unwrap();
        let closed = encode(n, &p).unwrap();
        assert_eq!(e.level, 1);
        assert!(e.s > closed.s);
        assert!((e.s - (p.v_r + 0.14 * p.connector_len / p.delta_h)).abs() < 1e-3);
    }
}
