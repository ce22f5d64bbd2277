//! Command-line surface. Flags override the configuration file.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser};
use topomode::{Frame, ModeIndex};

use crate::commands::{self, Subcommand};
use crate::config::{Control, RunConfig};
use crate::error::CliError;
use crate::output::{self, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "topomode", version, about = "Driven two-mode condensate simulator")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the CSV/JSON/SVG artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Also write a JSON result record.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write an SVG plot when the subcommand produces a curve.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Integrate the amplitude equations and write the trajectory.
    Simulate {
        #[command(flatten)]
        pump: PumpArgs,
        #[command(flatten)]
        integration: IntegrationArgs,
    },
    /// Order parameter for one parameter set.
    Eta {
        #[command(flatten)]
        pump: PumpArgs,
        #[command(flatten)]
        integration: IntegrationArgs,
        #[command(flatten)]
        averaging: AveragingArgs,
    },
    /// Order parameter over a grid of pumping amplitudes.
    Sweep {
        /// Interaction ratio.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        /// Dimensionless detuning.
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Explicit grid, comma separated.
        #[arg(long, value_delimiter = ',')]
        b_grid: Option<Vec<f64>>,
        /// `start,stop,steps`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b_range: Option<Vec<f64>>,
        #[command(flatten)]
        averaging: AveragingArgs,
    },
    /// Bisect the locked/unlocked transition.
    Critical {
        /// Interaction ratio.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        /// Dimensionless detuning.
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// `lo,hi` in the control parameter.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bracket: Option<Vec<f64>>,
        /// Final bracket width.
        #[arg(long)]
        tol: Option<f64>,
        /// Control parameter to bisect in.
        #[arg(long, value_enum)]
        control: Option<Control>,
        /// Drive detuning in Hz, used with `--control gradient`.
        #[arg(long, allow_hyphen_values = true)]
        detuning_hz: Option<f64>,
        /// Smallest eta step counted as a jump.
        #[arg(long)]
        jump_threshold: Option<f64>,
        #[command(flatten)]
        averaging: AveragingArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
    },
    /// Variational widths and energies of the four modes.
    Modes {
        #[command(flatten)]
        physical: PhysicalArgs,
    },
    /// Order parameter along a grid of quadrupole field gradients.
    Quadrupole {
        /// Drive detuning in Hz.
        #[arg(long, allow_hyphen_values = true)]
        detuning_hz: Option<f64>,
        /// Explicit gradients in G/cm, comma separated.
        #[arg(long, value_delimiter = ',')]
        gradients: Option<Vec<f64>>,
        /// `start,stop,steps` in G/cm.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gradient_range: Option<Vec<f64>>,
        #[command(flatten)]
        averaging: AveragingArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FrameArg {
    Rotating,
    Lab,
}

#[derive(Debug, Args)]
pub struct PumpArgs {
    /// Interaction ratio.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Pumping amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Dimensionless detuning.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IntegrationArgs {
    /// Final time t'.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Local error tolerance per unit time.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Frame used for integration.
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    /// Output spacing in t'.
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// Drop the nonlinear terms.
    #[arg(long)]
    pub linear: bool,
    /// Initial state `re(c0),im(c0),re(cp),im(cp)`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct AveragingArgs {
    /// Cap on the averaging horizon.
    #[arg(long)]
    pub max_horizon: Option<f64>,
    /// Convergence threshold of the running average.
    #[arg(long)]
    pub avg_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PhysicalArgs {
    /// Radial trap frequency in Hz.
    #[arg(long)]
    pub radial_hz: Option<f64>,
    /// Axial trap frequency in Hz.
    #[arg(long)]
    pub axial_hz: Option<f64>,
    /// Atom number.
    #[arg(long)]
    pub atoms: Option<u64>,
    /// Scattering length in meters.
    #[arg(long)]
    pub scattering_length: Option<f64>,
    /// Atomic mass in kg.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Use the CODATA mass of rubidium-87.
    #[arg(long)]
    pub codata_mass: bool,
    /// Product g_F m_F of the trapped state.
    #[arg(long, allow_hyphen_values = true)]
    pub gf_mf: Option<f64>,
    /// Excited mode: 010, 001 or 100.
    #[arg(long, value_parser = parse_mode)]
    pub excited_mode: Option<ModeIndex>,
}

fn parse_mode(s: &str) -> Result<ModeIndex, String> {
    s.parse().map_err(|e: topomode::Error| e.to_string())
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl PumpArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.dynamics.a, self.a);
        set(&mut cfg.dynamics.b, self.b);
        set(&mut cfg.dynamics.delta, self.delta);
    }
}

impl IntegrationArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let d = &mut cfg.dynamics;
        set(&mut d.horizon, self.horizon);
        set(&mut d.tol, self.tol);
        if let Some(f) = self.frame {
            d.frame = match f {
                FrameArg::Rotating => Frame::Rotating,
                FrameArg::Lab => Frame::Lab,
            };
        }
        if self.sample_interval.is_some() {
            d.sample_interval = self.sample_interval;
        }
        d.linear |= self.linear;
        if let Some(v) = &self.init {
            expect_len("init", v, 4)?;
            d.init = [v[0], v[1], v[2], v[3]];
        }
        Ok(())
    }
}

impl AveragingArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.averaging.max_horizon, self.max_horizon);
        set(&mut cfg.averaging.tolerance, self.avg_tolerance);
    }
}

impl PhysicalArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.trap.radial_hz, self.radial_hz);
        set(&mut cfg.trap.axial_hz, self.axial_hz);
        set(&mut cfg.atom.atom_number, self.atoms);
        set(&mut cfg.atom.scattering_length_m, self.scattering_length);
        set(&mut cfg.atom.mass_kg, self.mass);
        cfg.atom.codata_mass |= self.codata_mass;
        set(&mut cfg.atom.gf_mf, self.gf_mf);
        set(&mut cfg.atom.excited_mode, self.excited_mode);
    }
}

fn expect_len(flag: &str, v: &[f64], n: usize) -> Result<(), CliError> {
    if v.len() == n {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "--{flag} takes {n} comma-separated values, got {}",
            v.len()
        )))
    }
}

fn range(flag: &str, v: &[f64]) -> Result<(f64, f64, usize), CliError> {
    expect_len(flag, v, 3)?;
    let steps = v[2];
    if !(steps >= 1.0 && steps.fract() == 0.0) {
        return Err(CliError::Validation(format!(
            "range step count must be a positive integer, got {steps}"
        )));
    }
    Ok((v[0], v[1], steps as usize))
}

impl Cli {
    /// Subcommand and effective configuration: file values, then flags.
    pub fn resolve(&self) -> Result<(Subcommand, RunConfig), CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        cfg.output.json |= self.json;
        cfg.output.svg |= self.svg;
        if self.workers.is_some() {
            cfg.sweep.workers = self.workers;
        }

        let sub = match &self.command {
            Command::Simulate { pump, integration } => {
                pump.apply(&mut cfg);
                integration.apply(&mut cfg)?;
                Subcommand::Simulate
            }
            Command::Eta {
                pump,
                integration,
                averaging,
            } => {
                pump.apply(&mut cfg);
                integration.apply(&mut cfg)?;
                averaging.apply(&mut cfg);
                Subcommand::Eta
            }
            Command::Sweep {
                a,
                delta,
                b_grid,
                b_range,
                averaging,
            } => {
                set(&mut cfg.dynamics.a, *a);
                set(&mut cfg.dynamics.delta, *delta);
                if let Some(r) = b_range {
                    (cfg.sweep.b_start, cfg.sweep.b_stop, cfg.sweep.b_steps) = range("b-range", r)?;
                    cfg.sweep.b_grid = None;
                }
                if b_grid.is_some() {
                    cfg.sweep.b_grid = b_grid.clone();
                }
                averaging.apply(&mut cfg);
                Subcommand::Sweep
            }
            Command::Critical {
                a,
                delta,
                bracket,
                tol,
                control,
                detuning_hz,
                jump_threshold,
                averaging,
                physical,
            } => {
                set(&mut cfg.dynamics.a, *a);
                set(&mut cfg.dynamics.delta, *delta);
                if let Some(b) = bracket {
                    expect_len("bracket", b, 2)?;
                    cfg.sweep.bracket = [b[0], b[1]];
                }
                set(&mut cfg.sweep.tol, *tol);
                set(&mut cfg.sweep.control, *control);
                set(&mut cfg.sweep.detuning_hz, *detuning_hz);
                set(&mut cfg.sweep.jump_threshold, *jump_threshold);
                averaging.apply(&mut cfg);
                physical.apply(&mut cfg);
                Subcommand::Critical
            }
            Command::Modes { physical } => {
                physical.apply(&mut cfg);
                Subcommand::Modes
            }
            Command::Quadrupole {
                detuning_hz,
                gradients,
                gradient_range,
                averaging,
                physical,
            } => {
                set(&mut cfg.sweep.detuning_hz, *detuning_hz);
                if let Some(r) = gradient_range {
                    (
                        cfg.sweep.gradient_start,
                        cfg.sweep.gradient_stop,
                        cfg.sweep.gradient_steps,
                    ) = range("gradient-range", r)?;
                    cfg.sweep.gradients = None;
                }
                if gradients.is_some() {
                    cfg.sweep.gradients = gradients.clone();
                }
                averaging.apply(&mut cfg);
                physical.apply(&mut cfg);
                Subcommand::Quadrupole
            }
        };
        Ok((sub, cfg))
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct Completed {
    pub subcommand: Subcommand,
    pub artifacts: Artifacts,
    pub summary: String,
    pub failed_rows: usize,
}

/// Compute and write artifacts for an already resolved configuration.
pub fn run(sub: Subcommand, cfg: &RunConfig) -> Result<Completed, CliError> {
    cfg.validate()?;
    let report = match cfg.sweep.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start {n} workers: {e}")))?
            .install(|| commands::execute(sub, cfg))?,
        None => commands::execute(sub, cfg)?,
    };
    let artifacts = output::write_artifacts(sub, cfg, &report)?;
    Ok(Completed {
        subcommand: sub,
        artifacts,
        summary: report.summary,
        failed_rows: report.failed_rows,
    })
}

/// Parse arguments, run, print a one-line summary and return the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = cli.resolve().and_then(|(sub, cfg)| run(sub, &cfg));
    match outcome {
        Ok(done) => {
            println!(
                "{} {} {} -> {}",
                done.subcommand,
                done.artifacts.run_id,
                done.summary,
                done.artifacts.csv.display()
            );
            if done.failed_rows > 0 {
                eprintln!("error: {} grid points failed; see the status column", done.failed_rows);
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
