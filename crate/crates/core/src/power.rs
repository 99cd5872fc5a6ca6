//! Bill-of-materials power and cost roll-up.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::mapping::MappingParams;

/// Low-power op-amp, ~8 µW.
pub const OPAMP_POWER_W: f64 = 8e-6;
/// Low-power comparator, ~12.7 nW.
pub const COMPARATOR_POWER_W: f64 = 12.7e-9;
/// ADG704-class analog multiplexer, ~10 nW.
pub const MUX_POWER_W: f64 = 10e-9;

/// Op-amps beyond one per level. Fitted so that 11 levels give 16.
pub const OPAMP_OVERHEAD: u64 = 5;
/// Comparators beyond one per level. Fitted so that 11 levels give 17.
pub const COMPARATOR_OVERHEAD: u64 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub name: String,
    pub count: u64,
    /// Watts per unit.
    pub unit_power: f64,
    /// Currency units per unit.
    pub unit_cost: f64,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>, count: u64, unit_power: f64, unit_cost: f64) -> Self {
        ComponentSpec {
            name: name.into(),
            count,
            unit_power,
            unit_cost,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.unit_power >= 0.0 && self.unit_power.is_finite()) {
            return Err(Error::param(format!(
                "{}: unit power must be a nonnegative number, got {}",
                self.name, self.unit_power
            )));
        }
        if !(self.unit_cost >= 0.0 && self.unit_cost.is_finite()) {
            return Err(Error::param(format!(
                "{}: unit cost must be a nonnegative number, got {}",
                self.name, self.unit_cost
            )));
        }
        Ok(())
    }

    pub fn power(&self) -> f64 {
        self.count as f64 * self.unit_power
    }

    pub fn cost(&self) -> f64 {
        self.count as f64 * self.unit_cost
    }
}

pub fn estimate_power(bom: &[ComponentSpec]) -> Result<f64> {
    bom.iter().try_fold(0.0, |acc, c| {
        c.validate()?;
        Ok(acc + c.power())
    })
}

pub fn estimate_cost(bom: &[ComponentSpec]) -> Result<f64> {
    bom.iter().try_fold(0.0, |acc, c| {
        c.validate()?;
        Ok(acc + c.cost())
    })
}

/// Component counts for an `L`-level encoder: one multiplexer per level,
/// comparators `L + 6` and op-amps `L + 5`.
///
/// The reference tally only pins `L = 11` (16 op-amps, 17 comparators);
/// the fixed overheads are fitted to that single point, so counts for other
/// `L` are an extrapolation. Unit costs are unknown and left at zero.
pub fn derive_bom(params: &MappingParams) -> Vec<ComponentSpec> {
    bom_for_levels(u64::from(params.num_levels))
}

pub fn bom_for_levels(levels: u64) -> Vec<ComponentSpec> {
    vec![
        ComponentSpec::new("opamp", levels + OPAMP_OVERHEAD, OPAMP_POWER_W, 0.0),
        ComponentSpec::new("comparator", levels + COMPARATOR_OVERHEAD, COMPARATOR_POWER_W, 0.0),
        ComponentSpec::new("mux", levels, MUX_POWER_W, 0.0),
    ]
}

/// The 11-level low-power tally.
pub fn paper_bom() -> Vec<ComponentSpec> {
    bom_for_levels(11)
}

/// Whole-board figures of the COTS prototype, which are only known as
/// totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardBudget {
    pub supply_current_a: f64,
    pub supply_voltage_v: f64,
    pub board_cost: f64,
}

impl BoardBudget {
    pub fn prototype() -> Self {
        BoardBudget {
            supply_current_a: 3e-3,
            supply_voltage_v: 5.0,
            board_cost: 25.0,
        }
    }

    pub fn power(&self) -> f64 {
        self.supply_current_a * self.supply_voltage_v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BomLine {
    pub name: String,
    pub count: u64,
    pub power: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BomReport {
    pub total_power: f64,
    pub total_cost: f64,
    pub lines: Vec<BomLine>,
}

impl BomReport {
    pub fn from_bom(bom: &[ComponentSpec]) -> Result<Self> {
        let lines = bom
            .iter()
            .map(|c| {
                c.validate()?;
                Ok(BomLine {
                    name: c.name.clone(),
                    count: c.count,
                    power: c.power(),
                    cost: c.cost(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BomReport {
            total_power: lines.iter().fold(0.0, |acc, l| acc + l.power),
            total_cost: lines.iter().fold(0.0, |acc, l| acc + l.cost),
            lines,
        })
    }

    /// Human-readable table with aligned columns.
    pub fn to_text(&self) -> String {
        let width = self
            .lines
            .iter()
            .map(|l| l.name.len())
            .chain(["component".len(), "total".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>14}  {:>12}",
            "component", "count", "power_w", "cost"
        );
        for l in &self.lines {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>14.6e}  {:>12.4}",
                l.name, l.count, l.power, l.cost
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>14.6e}  {:>12.4}",
            "total", "", self.total_power, self.total_cost
        );
        let _ = writeln!(out, "total power: {:.4} uW", self.total_power * 1e6);
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "count", "power_w", "cost"])?;
        for l in &self.lines {
            w.write_record([
                l.name.clone(),
                l.count.to_string(),
                format!("{:e}", l.power),
                format!("{}", l.cost),
            ])?;
        }
        w.write_record([
            "total".to_string(),
            String::new(),
            format!("{:e}", self.total_power),
            format!("{}", self.total_cost),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Parses a BOM: one component per line as `name, count, unit_power_w,
/// unit_cost`. Blank lines and lines starting with `#` are skipped.
pub fn parse_bom<R: Read>(mut input: R) -> Result<Vec<ComponentSpec>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut bom = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = (idx + 1) as u64;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let [name, count, unit_power, unit_cost] = fields[..] else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        if name.is_empty() {
            return Err(err("empty component name".into()));
        }
        let count: u64 = count
            .parse()
            .map_err(|_| err(format!("count must be a nonnegative integer, got '{count}'")))?;
        let number = |field: &str, what: &str| -> Result<f64> {
            match field.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
                _ => Err(err(format!("{what} must be a nonnegative number, got '{field}'"))),
            }
        };
        let unit_power = number(unit_power, "unit_power_w")?;
        let unit_cost = number(unit_cost, "unit_cost")?;
        bom.push(ComponentSpec::new(name, count, unit_power, unit_cost));
    }
    Ok(bom)
}

/// Serializes a BOM in the format read by [`parse_bom`].
pub fn format_bom(bom: &[ComponentSpec]) -> String {
    let mut out = String::from("# name, count, unit_power_w, unit_cost\n");
    for c in bom {
        let _ = writeln!(out, "{}, {}, {:e}, {}", c.name, c.count, c.unit_power, c.unit_cost);
    }
    out
}
