//! Run configuration: a TOML file with one table per concern, overridden by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use topomode::dynamics::{IntegrationOptions, Sampling};
use topomode::order::{AveragingConfig, CriticalConfig};
use topomode::{units, AtomSpecies, DimensionlessParams, Frame, ModeAmplitudes, ModeIndex, PhysicalSetup, TrapConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dynamics: DynamicsSection,
    pub averaging: AveragingConfig,
    pub trap: TrapSection,
    pub atom: AtomSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub horizon: f64,
    pub tol: f64,
    pub frame: Frame,
    /// Output spacing in `t'`; adaptive per-period spacing when absent.
    pub sample_interval: Option<f64>,
    /// Drop the nonlinear terms.
    pub linear: bool,
    /// Initial `[Re c0, Im c0, Re cp, Im cp]`.
    pub init: [f64; 4],
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            delta: 0.0,
            horizon: 100.0,
            tol: topomode::dynamics::DEFAULT_TOL,
            frame: Frame::Rotating,
            sample_interval: None,
            linear: false,
            init: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl DynamicsSection {
    pub fn params(&self) -> Result<DimensionlessParams, CliError> {
        Ok(DimensionlessParams::new(self.a, self.b, self.delta)?)
    }

    pub fn initial_state(&self) -> ModeAmplitudes {
        let [c0r, c0i, cpr, cpi] = self.init;
        ModeAmplitudes::new(Complex64::new(c0r, c0i), Complex64::new(cpr, cpi))
    }

    pub fn integration(&self) -> IntegrationOptions {
        IntegrationOptions {
            tol: self.tol,
            frame: self.frame,
            sampling: match self.sample_interval {
                Some(dt) => Sampling::Interval(dt),
                None => IntegrationOptions::default().sampling,
            },
            linear: self.linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub radial_hz: f64,
    pub axial_hz: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self {
            radial_hz: 120.0,
            axial_hz: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub mass_kg: f64,
    /// Use the CODATA ⁸⁷Rb mass instead of `mass_kg`.
    pub codata_mass: bool,
    pub scattering_length_m: f64,
    pub atom_number: u64,
    pub gf_mf: f64,
    pub excited_mode: ModeIndex,
}

impl Default for AtomSection {
    fn default() -> Self {
        let species = AtomSpecies::rb87_reference();
        Self {
            mass_kg: species.mass_kg,
            codata_mass: false,
            scattering_length_m: species.scattering_length_m,
            atom_number: species.atom_number,
            gf_mf: 1.0,
            excited_mode: ModeIndex::Breathing,
        }
    }
}

/// Control parameter bisected by the `critical` subcommand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    /// Dimensionless pumping amplitude.
    #[default]
    B,
    /// Quadrupole field gradient in G/cm.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub b_start: f64,
    pub b_stop: f64,
    pub b_steps: usize,
    /// Explicit pumping grid; replaces the start/stop/steps range.
    pub b_grid: Option<Vec<f64>>,
    pub gradient_start: f64,
    pub gradient_stop: f64,
    pub gradient_steps: usize,
    /// Explicit gradient grid in G/cm.
    pub gradients: Option<Vec<f64>>,
    pub detuning_hz: f64,
    pub control: Control,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub jump_threshold: f64,
    pub zero_tolerance: f64,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let critical = CriticalConfig::default();
        Self {
            b_start: 0.0,
            b_stop: 1.0,
            b_steps: 21,
            b_grid: None,
            gradient_start: 0.0,
            gradient_stop: 0.3,
            gradient_steps: 31,
            gradients: None,
            detuning_hz: 0.0,
            control: Control::B,
            bracket: [0.4, 0.6],
            tol: 5e-4,
            jump_threshold: critical.jump_threshold,
            zero_tolerance: critical.zero_tolerance,
            workers: None,
        }
    }
}

fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl SweepSection {
    pub fn b_values(&self) -> Vec<f64> {
        self.b_grid
            .clone()
            .unwrap_or_else(|| linspace(self.b_start, self.b_stop, self.b_steps))
    }

    pub fn gradient_values(&self) -> Vec<f64> {
        self.gradients
            .clone()
            .unwrap_or_else(|| linspace(self.gradient_start, self.gradient_stop, self.gradient_steps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub json: bool,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            json: false,
            svg: false,
        }
    }
}

fn grid_is_valid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Validation(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Validation(format!("{name} grid contains non-finite values")));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Validation(format!("{name} grid must be sorted ascending")));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Checks that do not need the numerical core.
    pub fn validate(&self) -> Result<(), CliError> {
        self.averaging.validate()?;
        self.dynamics.params()?;
        grid_is_valid("b", &self.sweep.b_values())?;
        grid_is_valid("gradient", &self.sweep.gradient_values())?;
        let [lo, hi] = self.sweep.bracket;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::Validation(format!(
                "bracket must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if self.sweep.tol.is_nan() || self.sweep.tol <= 0.0 {
            return Err(CliError::Validation(format!(
                "bisection tol must be positive, got {}",
                self.sweep.tol
            )));
        }
        if !self.sweep.detuning_hz.is_finite() {
            return Err(CliError::Validation("detuning_hz must be finite".into()));
        }
        if self.sweep.workers == Some(0) {
            return Err(CliError::Validation("workers must be at least 1".into()));
        }
        self.physical_setup().validate()?;
        Ok(())
    }

    pub fn physical_setup(&self) -> PhysicalSetup {
        let mass_kg = if self.atom.codata_mass {
            units::RB87_MASS_CODATA
        } else {
            self.atom.mass_kg
        };
        PhysicalSetup {
            species: AtomSpecies {
                mass_kg,
                scattering_length_m: self.atom.scattering_length_m,
                atom_number: self.atom.atom_number,
            },
            trap: TrapConfig::from_hz(self.trap.radial_hz, self.trap.axial_hz),
            gf_mf: self.atom.gf_mf,
            excited_mode: self.atom.excited_mode,
        }
    }

    pub fn critical(&self) -> CriticalConfig {
        CriticalConfig {
            jump_threshold: self.sweep.jump_threshold,
            zero_tolerance: self.sweep.zero_tolerance,
            averaging: self.averaging,
        }
    }

    /// First 16 hex digits of the SHA-256 of the subcommand and the
    /// result-relevant part of the configuration.
    pub fn run_id(&self, subcommand: &str) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        canonical.sweep.workers = None;
        let mut hasher = Sha256::new();
        hasher.update(subcommand.as_bytes());
        hasher.update(b"\n");
        hasher.update(canonical.to_toml().as_bytes());
        hex::encode(hasher.finalize())[..16].to_string()
    }
}
