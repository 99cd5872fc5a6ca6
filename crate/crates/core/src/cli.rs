//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 validation error, 3 I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::circuit::Circuit;
use crate::config::{Preset, RunConfig};
use crate::error::{Error, Result};
use crate::experiments;
use crate::mapping::{self, SensorReading};
use crate::power::{self, BoardBudget, BomReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ajscc", version, about = "Rectangular analog joint source-channel coding lab")]
pub struct Cli {
    /// Flat key=value configuration applied on top of the preset.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base parameter set: paper or prototype.
    #[arg(long, global = true, default_value = "paper")]
    pub preset: String,

    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file for commands that write one.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode one raw sensor reading.
    Encode {
        #[arg(allow_negative_numbers = true)]
        v_t: f64,
        #[arg(allow_negative_numbers = true)]
        v_h: f64,
    },
    /// Decode one received value back to raw sensor volts.
    Decode {
        #[arg(allow_negative_numbers = true)]
        s: f64,
    },
    /// Sample one circuit stage's output surface to CSV.
    Surface(SurfaceArgs),
    /// Run the SDR-vs-CSNR sweep and write sdr_vs_csnr.csv.
    Sweep,
    /// Transfer curve at fixed humidity or fixed temperature.
    Transfer(TransferArgs),
    /// Power and cost roll-up of a BOM file (the 11-level tally if omitted).
    Power {
        bom: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 2)]
    pub stage: u32,
    #[arg(long, default_value_t = 51)]
    pub t_grid: usize,
    #[arg(long, default_value_t = 51)]
    pub h_grid: usize,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Sweep temperature with raw humidity held at this voltage.
    #[arg(long, conflicts_with = "fixed_vt", required_unless_present = "fixed_vt")]
    pub fixed_vh: Option<f64>,
    /// Sweep humidity with raw temperature held at this voltage.
    #[arg(long)]
    pub fixed_vt: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_INTERNAL
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let preset: Preset = cli.preset.parse()?;
    let mut config = RunConfig::preset(preset);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        config = config.apply_str(&text)?;
    }
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    Ok(config)
}

/// Writes through a temporary file in the destination directory and
/// renames it into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn output_path(cli: &Cli, config: &RunConfig, default_name: &str) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| config.out_dir.join(default_name))
}

pub fn run<W: Write, E: Write>(cli: &Cli, out: &mut W, err: &mut E) -> Result<()> {
    let config = load_config(cli)?;
    let params = &config.params;
    match &cli.command {
        Command::Encode { v_t, v_h } => {
            let e = mapping::encode_reading(SensorReading::new(*v_t, *v_h), params)?;
            writeln!(out, "s={:.6}", e.s)?;
            writeln!(out, "level={}", e.level)?;
            writeln!(out, "parity={}", e.parity)?;
        }
        Command::Decode { s } => {
            let s_max = params.s_max();
            if s.is_finite() && !(0.0..=s_max).contains(s) {
                writeln!(err, "warning: s={s} outside [0, {s_max:.6}], clamped")?;
            }
            let d = mapping::decode(*s, params)?;
            let (v_t_hat, v_h_hat) = mapping::restore_offset(&d, params);
            writeln!(out, "v_t_hat={v_t_hat:.6}")?;
            writeln!(out, "v_h_hat={v_h_hat:.6}")?;
            writeln!(out, "level={}", d.level_hat)?;
            writeln!(out, "on_connector={}", d.on_connector)?;
        }
        Command::Surface(args) => {
            let circuit = Circuit::new(*params, config.circuit)?;
            let surface = circuit.stage_surface(args.stage, args.t_grid, args.h_grid)?;
            let path = output_path(cli, &config, &format!("stage{}_surface.csv", args.stage));
            write_atomic(&path, |f| surface.write_csv(f))?;
            writeln!(out, "rows={}", surface.rows())?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Sweep => {
            let records = experiments::run_fdma_sweep(&config.sweep_spec(), config.sensors)?;
            let path = output_path(cli, &config, "sdr_vs_csnr.csv");
            write_atomic(&path, |f| experiments::write_sweep_csv(&records, f))?;
            for r in &records {
                writeln!(
                    out,
                    "sensor {} csnr {:>8.2} dB  sdr {:>8.3} dB",
                    r.sensor_id, r.csnr_db, r.sdr_db
                )?;
            }
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Transfer(args) => {
            let (points, column, name) = match (args.fixed_vh, args.fixed_vt) {
                (Some(v_h), _) => (
                    experiments::sweep_vt_fixed_vh(
                        v_h,
                        args.points,
                        params,
                        &config.circuit,
                        config.encoder,
                    )?,
                    "v_t",
                    "transfer_vt.csv",
                ),
                (None, Some(v_t)) => (
                    experiments::sweep_vh_fixed_vt(
                        v_t,
                        args.points,
                        params,
                        &config.circuit,
                        config.encoder,
                    )?,
                    "v_h",
                    "transfer_vh.csv",
                ),
                (None, None) => return Err(Error::param("need --fixed-vh or --fixed-vt")),
            };
            let path = output_path(cli, &config, name);
            write_atomic(&path, |f| experiments::write_transfer_csv(&points, column, f))?;
            writeln!(out, "rows={}", points.len())?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Power { bom } => {
            let bom = match bom {
                Some(path) => power::parse_bom(fs::File::open(path)?)?,
                None => power::derive_bom(params),
            };
            let report = BomReport::from_bom(&bom)?;
            write!(out, "{}", report.to_text())?;
            writeln!(out, "total power: {:.6e} W", report.total_power)?;
            writeln!(out, "total cost: {}", report.total_cost)?;
            let board = BoardBudget::prototype();
            writeln!(
                out,
                "COTS board reference: {:.1} mW, cost {}",
                board.power() * 1e3,
                board.board_cost
            )?;
            if let Some(path) = &cli.out {
                write_atomic(path, |f| report.write_csv(f))?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run(&cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
