//! Gaussian-ansatz coherent modes of an axially symmetric harmonic trap.
//!
//! Lengths are in units of the radial oscillator length `l_r`, energies in
//! `ħ ω_r`. The trap anisotropy is `lambda = ω_z / ω_r` and the interaction
//! enters through `g = 4π (N - 1) a_s / l_r`, so that the energy functional
//! reads
//!
//! ```text
//! E[φ] = ∫ ½|∇φ|² + ½(r² + λ² z²)|φ|² + (g/2)|φ|⁴ d³r
//! ```
//!
//! Each ansatz is a fixed polynomial times `exp(-(u r² + v z²)/2)`; the widths
//! `(u, v)` are chosen per mode by minimizing `E`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::RwLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::moments::Poly;
use crate::quadrature::{self, DoublingOptions};

const PI: f64 = std::f64::consts::PI;

/// Gradient threshold for an accepted minimum, in `(u, v)` coordinates.
pub const GRADIENT_TOL: f64 = 1e-8;

/// The four ansatz modes, labelled by `(n, m, k)`: radial, azimuthal and
/// axial quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeIndex {
    /// `(0,0,0)`
    #[serde(rename = "000")]
    Ground,
    /// `(0,1,0)`, carries `e^{iφ}`.
    #[serde(rename = "010")]
    Vortex,
    /// `(0,0,1)`, odd in `z`.
    #[serde(rename = "001")]
    Axial,
    /// `(1,0,0)`, radial node at `r = 1/sqrt(u)`.
    #[serde(rename = "100")]
    Breathing,
}

impl ModeIndex {
    pub const ALL: [ModeIndex; 4] = [
        ModeIndex::Ground,
        ModeIndex::Vortex,
        ModeIndex::Axial,
        ModeIndex::Breathing,
    ];

    pub fn quantum_numbers(self) -> (u8, u8, u8) {
        match self {
            ModeIndex::Ground => (0, 0, 0),
            ModeIndex::Vortex => (0, 1, 0),
            ModeIndex::Axial => (0, 0, 1),
            ModeIndex::Breathing => (1, 0, 0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModeIndex::Ground => "000",
            ModeIndex::Vortex => "010",
            ModeIndex::Axial => "001",
            ModeIndex::Breathing => "100",
        }
    }

    pub fn azimuthal(self) -> i32 {
        self.quantum_numbers().1 as i32
    }

    /// Normalization constant of the ansatz in units of `l_r^{-3/2}`.
    pub fn normalization(self, u: f64, v: f64) -> f64 {
        match self {
            ModeIndex::Ground | ModeIndex::Breathing => (u * u * v / PI.powi(3)).powf(0.25),
            ModeIndex::Vortex => u * (v / PI.powi(3)).powf(0.25),
            ModeIndex::Axial => (4.0 * u * u * v.powi(3) / PI.powi(3)).powf(0.25),
        }
    }

    /// Polynomial prefactor of the ansatz, without normalization.
    fn polynomial(self, u: f64) -> Poly {
        match self {
            ModeIndex::Ground => Poly::constant(1.0),
            ModeIndex::Vortex => Poly::monomial(1, 0, 1.0),
            ModeIndex::Axial => Poly::monomial(0, 1, 1.0),
            ModeIndex::Breathing => Poly::constant(1.0).add(&Poly::monomial(2, 0, -u)),
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModeIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.to_ascii_lowercase().as_str() {
            "000" | "ground" => Ok(ModeIndex::Ground),
            "010" | "vortex" => Ok(ModeIndex::Vortex),
            "001" | "axial" => Ok(ModeIndex::Axial),
            "100" | "breathing" | "radial" => Ok(ModeIndex::Breathing),
            _ => Err(Error::InvalidInput(format!("unknown mode index {s:?}"))),
        }
    }
}

fn check_widths(u: f64, v: f64) -> Result<()> {
    if u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { u, v })
    }
}

/// Real profile `f(r, z)`; the full wavefunction is `f e^{i m φ}`.
pub fn profile(index: ModeIndex, u: f64, v: f64, r: f64, z: f64) -> f64 {
    let norm = index.normalization(u, v);
    let gauss = (-(u * r * r + v * z * z) / 2.0).exp();
    let poly = match index {
        ModeIndex::Ground => 1.0,
        ModeIndex::Vortex => r,
        ModeIndex::Axial => z,
        ModeIndex::Breathing => 1.0 - u * r * r,
    };
    norm * poly * gauss
}

/// Kinetic, trap and interaction contributions to the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    /// `(g/2) ∫|φ|⁴`
    pub interaction: f64,
}

impl EnergyParts {
    pub fn variational(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }

    /// Expectation of the nonlinear Hamiltonian, where the interaction
    /// counts twice.
    pub fn eigenvalue(&self) -> f64 {
        self.kinetic + self.potential + 2.0 * self.interaction
    }
}

/// Scaling coefficients of the energy of one ansatz:
///
/// `E(u, v) = kr·u + pr/u + kz·v + pz·λ²/v + (g/2)·q·u·sqrt(v)`.
///
/// They follow from the Gaussian moments at `u = v = 1` because each ansatz
/// is self-similar in `(sqrt(u) r, sqrt(v) z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCoefficients {
    pub kr: f64,
    pub pr: f64,
    pub kz: f64,
    pub pz: f64,
    pub q: f64,
}

impl EnergyCoefficients {
    pub fn for_mode(index: ModeIndex) -> Self {
        let m = moment_terms(index, 1.0, 1.0);
        Self {
            kr: m.kinetic_r + m.centrifugal,
            pr: m.potential_r,
            kz: m.kinetic_z,
            pz: m.potential_z,
            q: m.quartic,
        }
    }

    pub fn parts(&self, u: f64, v: f64, g: f64, lambda: f64) -> EnergyParts {
        EnergyParts {
            kinetic: self.kr * u + self.kz * v,
            potential: self.pr / u + self.pz * lambda * lambda / v,
            interaction: 0.5 * g * self.q * u * v.sqrt(),
        }
    }

    /// Energy, gradient and Hessian in `(ln u, ln v)`.
    fn log_space(&self, x: f64, y: f64, g: f64, lambda: f64) -> (f64, [f64; 2], [[f64; 3]; 1]) {
        let (eu, ev) = (x.exp(), y.exp());
        let a_plus = self.kr * eu;
        let a_minus = self.pr / eu;
        let b_plus = self.kz * ev;
        let b_minus = self.pz * lambda * lambda / ev;
        let inter = 0.5 * g * self.q * (x + 0.5 * y).exp();
        let e = a_plus + a_minus + b_plus + b_minus + inter;
        let grad = [a_plus - a_minus + inter, b_plus - b_minus + 0.5 * inter];
        let hess = [[a_plus + a_minus + inter, 0.5 * inter, b_plus + b_minus + 0.25 * inter]];
        (e, grad, hess)
    }
}

/// Separate moment contributions, unit prefactors (no `λ²`, no `g`).
struct MomentTerms {
    kinetic_r: f64,
    kinetic_z: f64,
    centrifugal: f64,
    potential_r: f64,
    potential_z: f64,
    quartic: f64,
}

fn moment_terms(index: ModeIndex, u: f64, v: f64) -> MomentTerms {
    let n2 = index.normalization(u, v).powi(2);
    let p = index.polynomial(u);
    // ∂_r (P e^{-u r²/2}) = (∂_r P - u r P) e^{...}
    let dr = p.d_dr().add(&p.mul(&Poly::monomial(1, 0, -u)));
    let dz = p.d_dz().add(&p.mul(&Poly::monomial(0, 1, -v)));
    let p2 = p.mul(&p);
    let m = index.azimuthal() as f64;
    let centrifugal = if m == 0.0 {
        0.0
    } else {
        0.5 * m * m * n2 * p2.div_r2().gaussian_integral(u, v)
    };
    MomentTerms {
        kinetic_r: 0.5 * n2 * dr.mul(&dr).gaussian_integral(u, v),
        kinetic_z: 0.5 * n2 * dz.mul(&dz).gaussian_integral(u, v),
        centrifugal,
        potential_r: 0.5 * n2 * p2.mul(&Poly::monomial(2, 0, 1.0)).gaussian_integral(u, v),
        potential_z: 0.5 * n2 * p2.mul(&Poly::monomial(0, 2, 1.0)).gaussian_integral(u, v),
        quartic: n2 * n2 * p2.mul(&p2).gaussian_integral(2.0 * u, 2.0 * v),
    }
}

/// Energy parts evaluated directly from the Gaussian moments at `(u, v)`,
/// without the scaling form.
pub fn moment_energy_parts(index: ModeIndex, u: f64, v: f64, g: f64, lambda: f64) -> Result<EnergyParts> {
    check_widths(u, v)?;
    let m = moment_terms(index, u, v);
    Ok(EnergyParts {
        kinetic: m.kinetic_r + m.kinetic_z + m.centrifugal,
        potential: m.potential_r + lambda * lambda * m.potential_z,
        interaction: 0.5 * g * m.quartic,
    })
}

/// `∫|φ|² d³r` from the Gaussian moments.
pub fn norm_squared(index: ModeIndex, u: f64, v: f64) -> f64 {
    let n2 = index.normalization(u, v).powi(2);
    let p = index.polynomial(u);
    n2 * p.mul(&p).gaussian_integral(u, v)
}

pub fn energy_parts(index: ModeIndex, u: f64, v: f64, g: f64, lambda: f64) -> Result<EnergyParts> {
    check_widths(u, v)?;
    ensure(g >= 0.0 && g.is_finite(), || {
        format!("g must be finite and >= 0, got {g}")
    })?;
    Ok(EnergyCoefficients::for_mode(index).parts(u, v, g, lambda))
}

/// Energy functional evaluated on the ansatz, in units of `ħ ω_r`.
pub fn variational_energy(index: ModeIndex, u: f64, v: f64, g: f64, lambda: f64) -> Result<f64> {
    energy_parts(index, u, v, g, lambda).map(|p| p.variational())
}

/// A mode with optimized widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalMode {
    pub index: ModeIndex,
    pub u: f64,
    pub v: f64,
    pub g: f64,
    pub lambda: f64,
    pub normalization: f64,
    pub variational_energy: f64,
    pub eigenvalue: f64,
    /// Euclidean norm of `(∂E/∂u, ∂E/∂v)` at the reported widths.
    pub gradient_norm: f64,
}

impl VariationalMode {
    pub fn parts(&self) -> EnergyParts {
        EnergyCoefficients::for_mode(self.index).parts(self.u, self.v, self.g, self.lambda)
    }

    /// Hessian of the energy in `(u, v)`.
    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let c = EnergyCoefficients::for_mode(self.index);
        let (u, v, g, l2) = (self.u, self.v, self.g, self.lambda * self.lambda);
        let huu = 2.0 * c.pr / u.powi(3);
        let hvv = 2.0 * c.pz * l2 / v.powi(3) - 0.125 * g * c.q * u / v.powf(1.5);
        let huv = 0.25 * g * c.q / v.sqrt();
        [[huu, huv], [huv, hvv]]
    }

    pub fn profile(&self, r: f64, z: f64) -> f64 {
        profile(self.index, self.u, self.v, r, z)
    }
}

/// Cylindrical point `(r, φ, z)`, lengths in `l_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

/// Value of the ansatz at a point.
pub fn wavefunction(mode: &VariationalMode, point: CylPoint) -> Complex64 {
    let f = mode.profile(point.r, point.z);
    let m = mode.index.azimuthal();
    if m == 0 {
        Complex64::new(f, 0.0)
    } else {
        Complex64::from_polar(f, m as f64 * point.phi)
    }
}

/// Nonlinear eigenvalue of a minimized mode: `E_kin + E_pot + 2 E_int`.
pub fn eigenvalue(mode: &VariationalMode, g: f64, lambda: f64) -> f64 {
    EnergyCoefficients::for_mode(mode.index)
        .parts(mode.u, mode.v, g, lambda)
        .eigenvalue()
}

fn solve_2x2(h: [[f64; 3]; 1], rhs: [f64; 2]) -> Option<[f64; 2]> {
    let [hxx, hxy, hyy] = h[0];
    let det = hxx * hyy - hxy * hxy;
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    Some([(hyy * rhs[0] - hxy * rhs[1]) / det, (hxx * rhs[1] - hxy * rhs[0]) / det])
}

/// BFGS from one start in `(ln u, ln v)`, finished by Newton steps.
fn minimize_from(c: &EnergyCoefficients, start: (f64, f64), g: f64, lambda: f64) -> Option<(f64, f64)> {
    let (mut x, mut y) = (start.0.ln(), start.1.ln());
    let (mut e, mut grad, _) = c.log_space(x, y, g, lambda);
    // Inverse Hessian approximation.
    let mut inv = [[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..500 {
        if grad[0].hypot(grad[1]) < 1e-12 {
            break;
        }
        let dir = [
            -(inv[0][0] * grad[0] + inv[0][1] * grad[1]),
            -(inv[1][0] * grad[0] + inv[1][1] * grad[1]),
        ];
        let slope = dir[0] * grad[0] + dir[1] * grad[1];
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            inv = [[1.0, 0.0], [0.0, 1.0]];
            ([-grad[0], -grad[1]], -(grad[0] * grad[0] + grad[1] * grad[1]))
        };
        let mut step = 1.0;
        let (xn, yn, en, gn) = loop {
            let (xn, yn) = (x + step * dir[0], y + step * dir[1]);
            let (en, gn, _) = c.log_space(xn, yn, g, lambda);
            if en.is_finite() && en <= e + 1e-4 * step * slope {
                break (xn, yn, en, gn);
            }
            step *= 0.5;
            if step < 1e-12 {
                break (x, y, e, grad);
            }
        };
        let s = [xn - x, yn - y];
        let yk = [gn[0] - grad[0], gn[1] - grad[1]];
        let sy = s[0] * yk[0] + s[1] * yk[1];
        x = xn;
        y = yn;
        e = en;
        grad = gn;
        if s[0] == 0.0 && s[1] == 0.0 {
            break;
        }
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = [
                inv[0][0] * yk[0] + inv[0][1] * yk[1],
                inv[1][0] * yk[0] + inv[1][1] * yk[1],
            ];
            let yhy = yk[0] * hy[0] + yk[1] * hy[1];
            for i in 0..2 {
                for j in 0..2 {
                    inv[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    }
    for _ in 0..20 {
        let (_, grad, hess) = c.log_space(x, y, g, lambda);
        let Some(d) = solve_2x2(hess, grad) else { break };
        x -= d[0];
        y -= d[1];
        if d[0].hypot(d[1]) < 1e-15 {
            break;
        }
    }
    let (u, v) = (x.exp(), y.exp());
    (u.is_finite() && v.is_finite() && u > 0.0 && v > 0.0).then_some((u, v))
}

fn gradient_uv(c: &EnergyCoefficients, u: f64, v: f64, g: f64, lambda: f64) -> [f64; 2] {
    [
        c.kr - c.pr / (u * u) + 0.5 * g * c.q * v.sqrt(),
        c.kz - c.pz * lambda * lambda / (v * v) + 0.25 * g * c.q * u / v.sqrt(),
    ]
}

/// Minimize the energy functional over `(u, v)` from a 3×3 grid of starts.
pub fn minimize_variational(index: ModeIndex, g: f64, lambda: f64) -> Result<VariationalMode> {
    ensure(g >= 0.0 && g.is_finite(), || {
        format!("g must be finite and >= 0, got {g}")
    })?;
    ensure(lambda > 0.0 && lambda.is_finite(), || {
        format!("lambda must be positive, got {lambda}")
    })?;
    let c = EnergyCoefficients::for_mode(index);
    const STARTS: [f64; 3] = [0.25, 1.0, 4.0];
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &u0 in &STARTS {
        for &v0 in &STARTS {
            let Some((u, v)) = minimize_from(&c, (u0, v0), g, lambda) else {
                continue;
            };
            let grad = gradient_uv(&c, u, v, g, lambda);
            let gnorm = grad[0].hypot(grad[1]);
            if gnorm >= GRADIENT_TOL {
                continue;
            }
            let e = c.parts(u, v, g, lambda).variational();
            if best.is_none_or(|(_, _, eb, _)| e < eb) {
                best = Some((u, v, e, gnorm));
            }
        }
    }
    let (u, v, energy, gradient_norm) = best.ok_or(Error::MinimizationFailure(index))?;
    let parts = c.parts(u, v, g, lambda);
    Ok(VariationalMode {
        index,
        u,
        v,
        g,
        lambda,
        normalization: index.normalization(u, v),
        variational_energy: energy,
        eigenvalue: parts.eigenvalue(),
        gradient_norm,
    })
}

/// `∫ |φ_j|² |φ_k|² d³r` in closed form.
pub fn density_overlap(j: &VariationalMode, k: &VariationalMode) -> f64 {
    let pj = j.index.polynomial(j.u);
    let pk = k.index.polynomial(k.u);
    let dens = pj.mul(&pj).mul(&pk.mul(&pk));
    (j.normalization * k.normalization).powi(2) * dens.gaussian_integral(j.u + k.u, j.v + k.v)
}

/// Transition amplitude `α_jk` in units of `ω_r`:
/// `g ∫|φ_j|² (2|φ_k|² − |φ_j|²)`.
pub fn interaction_amplitude(j: &VariationalMode, k: &VariationalMode, g: f64) -> f64 {
    g * (2.0 * density_overlap(j, k) - density_overlap(j, j))
}

/// `∫ φ_j* φ_k d³r` in closed form. Zero between different azimuthal numbers.
pub fn mode_overlap(j: &VariationalMode, k: &VariationalMode) -> f64 {
    if j.index.azimuthal() != k.index.azimuthal() {
        return 0.0;
    }
    let prod = j.index.polynomial(j.u).mul(&k.index.polynomial(k.u));
    j.normalization * k.normalization * prod.gaussian_integral(0.5 * (j.u + k.u), 0.5 * (j.v + k.v))
}

/// Truncated integration box for a pair of modes: `10/sqrt(width)` per axis.
pub fn integration_box(modes: &[&VariationalMode]) -> ((f64, f64), (f64, f64)) {
    let u_min = modes.iter().map(|m| m.u).fold(f64::INFINITY, f64::min);
    let v_min = modes.iter().map(|m| m.v).fold(f64::INFINITY, f64::min);
    let r_max = 10.0 / u_min.sqrt();
    let z_max = 10.0 / v_min.sqrt();
    ((0.0, r_max), (-z_max, z_max))
}

/// Quadrupole coupling matrix element `∫ φ_0* sqrt(r² + 4z²) φ_p d³r`
/// (lengths in `l_r`). The azimuthal integral is done analytically.
pub fn quadrupole_coupling(ground: &VariationalMode, excited: &VariationalMode, opts: &DoublingOptions) -> Result<f64> {
    if ground.index.azimuthal() != excited.index.azimuthal() {
        return Ok(0.0);
    }
    let (r_range, z_range) = integration_box(&[ground, excited]);
    let res = quadrature::integrate_2d(
        |r, z| 2.0 * PI * r * ground.profile(r, z) * (r * r + 4.0 * z * z).sqrt() * excited.profile(r, z),
        r_range,
        z_range,
        opts,
    )?;
    Ok(res.value)
}

type CacheKey = (ModeIndex, u64, u64);

/// Memo of minimized modes keyed by `(index, g, λ)`, safe for concurrent use.
#[derive(Debug, Default)]
pub struct ModeCache {
    entries: RwLock<HashMap<CacheKey, VariationalMode>>,
}

impl ModeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("mode cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_minimize(&self, index: ModeIndex, g: f64, lambda: f64) -> Result<VariationalMode> {
        let key = (index, g.to_bits(), lambda.to_bits());
        if let Some(mode) = self.entries.read().expect("mode cache poisoned").get(&key) {
            return Ok(*mode);
        }
        let mode = minimize_variational(index, g, lambda)?;
        self.entries
            .write()
            .expect("mode cache poisoned")
            .entry(key)
            .or_insert(mode);
        Ok(mode)
    }

    /// Load a cache written by [`ModeCache::save`]. A missing file yields an
    /// empty cache.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let cache = Self::new();
        let text = match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e),
        };
        let modes: Vec<VariationalMode> =
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        {
            let mut map = cache.entries.write().expect("mode cache poisoned");
            for m in modes {
                map.insert((m.index, m.g.to_bits(), m.lambda.to_bits()), m);
            }
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut modes: Vec<VariationalMode> = self
            .entries
            .read()
            .expect("mode cache poisoned")
            .values()
            .copied()
            .collect();
        modes.sort_by(|a, b| {
            (a.index, a.g.to_bits(), a.lambda.to_bits()).cmp(&(b.index, b.g.to_bits(), b.lambda.to_bits()))
        });
        let text = serde_json::to_string_pretty(&modes)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        fs::write(path, text)
    }
}
