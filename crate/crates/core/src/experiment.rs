//! Laboratory setup → dimensionless drive parameters, and the order
//! parameter as a function of the quadrupole field gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DimensionlessParams, ModeAmplitudes};
use crate::error::{ensure, Error, Result};
use crate::order::{self, AveragingConfig, CriticalConfig, CriticalPoint, EtaEstimate};
use crate::quadrature::DoublingOptions;
use crate::units::{self, BOHR_MAGNETON, HBAR};
use crate::variational::{self, ModeCache, ModeIndex, VariationalMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub mass_kg: f64,
    pub scattering_length_m: f64,
    pub atom_number: u64,
}

impl AtomSpecies {
    /// ⁸⁷Rb with the mass, scattering length and atom number of the
    /// reference experiment.
    pub fn rb87_reference() -> Self {
        Self {
            mass_kg: units::RB87_MASS_NOMINAL,
            scattering_length_m: 6e-9,
            atom_number: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.mass_kg > 0.0 && self.mass_kg.is_finite(), || {
            format!("atomic mass must be positive, got {}", self.mass_kg)
        })?;
        ensure(
            self.scattering_length_m > 0.0 && self.scattering_length_m.is_finite(),
            || format!("scattering length must be positive, got {}", self.scattering_length_m),
        )?;
        ensure(self.atom_number >= 2, || {
            format!("need at least 2 atoms, got {}", self.atom_number)
        })
    }

    /// `A_s = 4π (N − 1) ħ² a_s / m` in J m³.
    pub fn interaction_strength(&self) -> f64 {
        4.0 * std::f64::consts::PI * (self.atom_number - 1) as f64 * HBAR * HBAR * self.scattering_length_m
            / self.mass_kg
    }

    /// `g = 4π (N − 1) a_s / l_r`.
    pub fn dimensionless_coupling(&self, oscillator_length: f64) -> f64 {
        4.0 * std::f64::consts::PI * (self.atom_number - 1) as f64 * self.scattering_length_m / oscillator_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Radial angular frequency (rad/s).
    pub omega_r: f64,
    /// Axial angular frequency (rad/s).
    pub omega_z: f64,
}

impl TrapConfig {
    pub fn from_hz(radial_hz: f64, axial_hz: f64) -> Self {
        Self {
            omega_r: units::hz_to_rad_per_s(radial_hz),
            omega_z: units::hz_to_rad_per_s(axial_hz),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.omega_r > 0.0 && self.omega_z > 0.0 && self.omega_r.is_finite() && self.omega_z.is_finite(),
            || format!("trap frequencies must be positive, got {self:?}"),
        )
    }

    pub fn anisotropy(&self) -> f64 {
        self.omega_z / self.omega_r
    }

    /// `l_r = sqrt(ħ / (m ω_r))` in meters.
    pub fn oscillator_length(&self, mass_kg: f64) -> f64 {
        (HBAR / (mass_kg * self.omega_r)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    pub species: AtomSpecies,
    pub trap: TrapConfig,
    /// Product `g_F m_F` of the trapped hyperfine state.
    pub gf_mf: f64,
    pub excited_mode: ModeIndex,
}

impl PhysicalSetup {
    /// ⁸⁷Rb, N = 10⁴, a_s = 6 nm in a (120 Hz, 24 Hz) trap, pumping the
    /// radial breathing mode.
    pub fn rb87_reference() -> Self {
        Self {
            species: AtomSpecies::rb87_reference(),
            trap: TrapConfig::from_hz(120.0, 24.0),
            gf_mf: 1.0,
            excited_mode: ModeIndex::Breathing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.trap.validate()?;
        ensure(self.gf_mf.is_finite() && self.gf_mf != 0.0, || {
            format!("g_F m_F must be finite and nonzero, got {}", self.gf_mf)
        })?;
        ensure(self.excited_mode != ModeIndex::Ground, || {
            "excited mode must differ from the ground mode".into()
        })
    }

    pub fn oscillator_length(&self) -> f64 {
        self.trap.oscillator_length(self.species.mass_kg)
    }

    pub fn coupling(&self) -> f64 {
        self.species.dimensionless_coupling(self.oscillator_length())
    }

    pub fn anisotropy(&self) -> f64 {
        self.trap.anisotropy()
    }

    fn mode(&self, index: ModeIndex, cache: Option<&ModeCache>) -> Result<VariationalMode> {
        let (g, lambda) = (self.coupling(), self.anisotropy());
        match cache {
            Some(c) => c.get_or_minimize(index, g, lambda),
            None => variational::minimize_variational(index, g, lambda),
        }
    }
}

/// Transition frequency `(E_p − E_0) ω_r` in rad/s.
pub fn transition_frequency(setup: &PhysicalSetup, p: ModeIndex) -> Result<f64> {
    setup.validate()?;
    ensure(p != ModeIndex::Ground, || {
        "transition frequency needs an excited mode".into()
    })?;
    let ground = setup.mode(ModeIndex::Ground, None)?;
    let excited = setup.mode(p, None)?;
    Ok((excited.eigenvalue - ground.eigenvalue) * setup.trap.omega_r)
}

/// `α_jk` in rad/s.
pub fn alpha(j: ModeIndex, k: ModeIndex, setup: &PhysicalSetup) -> Result<f64> {
    setup.validate()?;
    let mj = setup.mode(j, None)?;
    let mk = setup.mode(k, None)?;
    Ok(variational::interaction_amplitude(&mj, &mk, setup.coupling()) * setup.trap.omega_r)
}

/// Quadrupole coupling `β` in rad/s for a field gradient in G/cm. The sign
/// follows the overlap integral.
pub fn quad_beta(setup: &PhysicalSetup, gradient_gauss_per_cm: f64, p: ModeIndex) -> Result<f64> {
    setup.validate()?;
    ensure(
        gradient_gauss_per_cm >= 0.0 && gradient_gauss_per_cm.is_finite(),
        || format!("field gradient must be >= 0, got {gradient_gauss_per_cm}"),
    )?;
    let ground = setup.mode(ModeIndex::Ground, None)?;
    let excited = setup.mode(p, None)?;
    let integral = variational::quadrupole_coupling(&ground, &excited, &DoublingOptions::default())?;
    Ok(beta_per_gradient(setup, integral) * gradient_gauss_per_cm)
}

fn beta_per_gradient(setup: &PhysicalSetup, integral: f64) -> f64 {
    setup.gf_mf * BOHR_MAGNETON * units::gauss_per_cm_to_tesla_per_m(1.0) * setup.oscillator_length() * integral / HBAR
}

/// Everything about a setup that does not depend on the drive: minimized
/// modes, interaction amplitudes and the coupling per unit gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvedSetup {
    pub setup: PhysicalSetup,
    pub ground: VariationalMode,
    pub excited: VariationalMode,
    /// `α_{0p}` (rad/s)
    pub alpha_0p: f64,
    /// `α_{p0}` (rad/s), the time scale of the dimensionless dynamics.
    pub alpha_p0: f64,
    /// `∫ φ_0 sqrt(r² + 4z²) φ_p` in units of `l_r`.
    pub coupling_integral: f64,
    /// `β` per G/cm (rad/s).
    pub beta_per_gradient: f64,
    /// `ω_{p,0}` (rad/s)
    pub transition_frequency: f64,
    /// `∫ φ_0 φ_p`, nonzero because the widths are optimized separately.
    pub mode_overlap: f64,
}

impl SolvedSetup {
    pub fn solve(setup: &PhysicalSetup) -> Result<Self> {
        Self::solve_with_cache(setup, None)
    }

    pub fn solve_with_cache(setup: &PhysicalSetup, cache: Option<&ModeCache>) -> Result<Self> {
        setup.validate()?;
        let g = setup.coupling();
        let ground = setup.mode(ModeIndex::Ground, cache)?;
        let excited = setup.mode(setup.excited_mode, cache)?;
        let omega_r = setup.trap.omega_r;
        let alpha_0p = variational::interaction_amplitude(&ground, &excited, g) * omega_r;
        let alpha_p0 = variational::interaction_amplitude(&excited, &ground, g) * omega_r;
        ensure(alpha_p0 > 0.0, || {
            format!("alpha_p0 must be positive to set the time scale, got {alpha_p0}")
        })?;
        let coupling_integral = variational::quadrupole_coupling(&ground, &excited, &DoublingOptions::default())?;
        Ok(Self {
            setup: *setup,
            ground,
            excited,
            alpha_0p,
            alpha_p0,
            coupling_integral,
            beta_per_gradient: beta_per_gradient(setup, coupling_integral),
            transition_frequency: (excited.eigenvalue - ground.eigenvalue) * omega_r,
            mode_overlap: variational::mode_overlap(&ground, &excited),
        })
    }

    pub fn interaction_ratio(&self) -> f64 {
        self.alpha_0p / self.alpha_p0
    }

    /// `(a, b, δ)` for a drive. `b` uses `|β|`: the sign of the coupling is a
    /// phase convention of the excited mode and does not affect populations.
    pub fn params(&self, gradient_gauss_per_cm: f64, detuning_hz: f64) -> Result<DimensionlessParams> {
        ensure(
            gradient_gauss_per_cm >= 0.0 && gradient_gauss_per_cm.is_finite(),
            || format!("field gradient must be >= 0, got {gradient_gauss_per_cm}"),
        )?;
        ensure(detuning_hz.is_finite(), || format!("non-finite detuning {detuning_hz}"))?;
        DimensionlessParams::new(
            self.interaction_ratio(),
            (self.beta_per_gradient * gradient_gauss_per_cm).abs() / self.alpha_p0,
            units::hz_to_rad_per_s(detuning_hz) / self.alpha_p0,
        )
    }

    pub fn seconds(&self, t_dimensionless: f64) -> f64 {
        t_dimensionless / self.alpha_p0
    }

    pub fn dimensionless_time(&self, seconds: f64) -> f64 {
        seconds * self.alpha_p0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenExperiment {
    pub setup: PhysicalSetup,
    /// Quadrupole gradient `A` (G/cm).
    pub gradient_gauss_per_cm: f64,
    /// `Δω / 2π` (Hz).
    pub detuning_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedParams {
    pub params: DimensionlessParams,
    /// Converts `t'` to seconds: `t = t' / alpha_p0`.
    pub alpha_p0: f64,
}

pub fn dimensionless_params(exp: &DrivenExperiment) -> Result<MappedParams> {
    let solved = SolvedSetup::solve(&exp.setup)?;
    Ok(MappedParams {
        params: solved.params(exp.gradient_gauss_per_cm, exp.detuning_hz)?,
        alpha_p0: solved.alpha_p0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPoint {
    pub gradient: f64,
    pub params: DimensionlessParams,
    pub outcome: Result<EtaEstimate>,
}

/// Order parameter along a grid of field gradients; points run in parallel
/// and come back in grid order.
pub fn eta_vs_gradient(
    solved: &SolvedSetup,
    detuning_hz: f64,
    gradients: &[f64],
    cfg: &AveragingConfig,
) -> Result<Vec<GradientPoint>> {
    cfg.validate()?;
    ensure(gradients.windows(2).all(|w| w[0] <= w[1]), || {
        "gradient grid must be sorted ascending".into()
    })?;
    let params: Vec<DimensionlessParams> = gradients
        .iter()
        .map(|&a| solved.params(a, detuning_hz))
        .collect::<Result<_>>()?;
    let init = ModeAmplitudes::ground();
    Ok(gradients
        .par_iter()
        .zip(params.par_iter())
        .map(|(&gradient, p)| GradientPoint {
            gradient,
            params: *p,
            outcome: order::eta(p, &init, cfg),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalGradient {
    /// Transition located in the gradient (G/cm).
    pub point: CriticalPoint,
    /// Dimensionless parameters at the critical gradient.
    pub params: DimensionlessParams,
}

/// Bisect the locked/unlocked transition in the field gradient.
pub fn find_critical_gradient(
    solved: &SolvedSetup,
    detuning_hz: f64,
    bracket: (f64, f64),
    tol: f64,
    cfg: &CriticalConfig,
) -> Result<CriticalGradient> {
    cfg.averaging.validate()?;
    if bracket.0 < 0.0 {
        return Err(Error::InvalidBracket {
            lo: bracket.0,
            hi: bracket.1,
            reason: "field gradient must be >= 0".into(),
        });
    }
    let init = ModeAmplitudes::ground();
    let point = order::locate_transition(
        |a| order::classify_with_eta(&solved.params(a, detuning_hz)?, &init, &cfg.averaging),
        bracket,
        tol,
        cfg,
    )?;
    Ok(CriticalGradient {
        point,
        params: solved.params(point.critical, detuning_hz)?,
    })
}
