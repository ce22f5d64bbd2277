//! Brute-force quadrature of mode integrals, used to check the Gaussian
//! moment closed forms. Profiles and their gradients are written out by
//! hand here and do not go through the polynomial algebra.

use std::f64::consts::PI;

use crate::error::Result;
use crate::quadrature::{integrate_2d, DoublingOptions};
use crate::variational::{integration_box, EnergyParts, ModeIndex, VariationalMode};

pub fn options() -> DoublingOptions {
    DoublingOptions {
        order: 20,
        initial_panels: 2,
        rel_tol: 1e-12,
        max_levels: 8,
    }
}

/// Profile `f(r, z)` and `(∂f/∂r, ∂f/∂z)`.
pub fn profile_and_gradient(index: ModeIndex, u: f64, v: f64, r: f64, z: f64) -> (f64, f64, f64) {
    let e = (-(u * r * r + v * z * z) / 2.0).exp();
    let n = index.normalization(u, v);
    match index {
        ModeIndex::Ground => {
            let f = n * e;
            (f, -u * r * f, -v * z * f)
        }
        ModeIndex::Vortex => {
            let f = n * r * e;
            (f, n * (1.0 - u * r * r) * e, -v * z * f)
        }
        ModeIndex::Axial => {
            let f = n * z * e;
            (f, -u * r * f, n * (1.0 - v * z * z) * e)
        }
        ModeIndex::Breathing => {
            let f = n * (1.0 - u * r * r) * e;
            (f, n * u * r * (u * r * r - 3.0) * e, -v * z * f)
        }
    }
}

fn cyl<F: Fn(f64, f64) -> f64>(f: F, modes: &[&VariationalMode]) -> Result<f64> {
    let (rr, zr) = integration_box(modes);
    integrate_2d(|r, z| 2.0 * PI * r * f(r, z), rr, zr, &options()).map(|q| q.value)
}

pub fn norm_squared(mode: &VariationalMode) -> Result<f64> {
    cyl(|r, z| mode.profile(r, z).powi(2), &[mode])
}

/// Energy functional pieces by quadrature, for arbitrary `(g, λ)`.
pub fn energy_parts(mode: &VariationalMode, g: f64, lambda: f64) -> Result<EnergyParts> {
    let (idx, u, v) = (mode.index, mode.u, mode.v);
    let m2 = (idx.azimuthal() * idx.azimuthal()) as f64;
    let kinetic = cyl(
        |r, z| {
            let (f, fr, fz) = profile_and_gradient(idx, u, v, r, z);
            0.5 * (fr * fr + fz * fz + m2 * (f / r).powi(2))
        },
        &[mode],
    )?;
    let potential = cyl(
        |r, z| {
            let f = mode.profile(r, z);
            0.5 * (r * r + lambda * lambda * z * z) * f * f
        },
        &[mode],
    )?;
    let quartic = cyl(|r, z| mode.profile(r, z).powi(4), &[mode])?;
    Ok(EnergyParts {
        kinetic,
        potential,
        interaction: 0.5 * g * quartic,
    })
}

/// `∫ |φ_j|² |φ_k|²` by quadrature.
pub fn density_overlap(j: &VariationalMode, k: &VariationalMode) -> Result<f64> {
    cyl(|r, z| (j.profile(r, z) * k.profile(r, z)).powi(2), &[j, k])
}

/// `∫ φ_j* φ_k` by quadrature, including the azimuthal integral done
/// numerically.
pub fn overlap(j: &VariationalMode, k: &VariationalMode) -> Result<f64> {
    let dm = (k.index.azimuthal() - j.index.azimuthal()) as f64;
    let n_phi = 64;
    let azimuthal: f64 = (0..n_phi)
        .map(|i| (dm * 2.0 * PI * i as f64 / n_phi as f64).cos())
        .sum::<f64>()
        * 2.0
        * PI
        / n_phi as f64;
    let (rr, zr) = integration_box(&[j, k]);
    integrate_2d(|r, z| r * j.profile(r, z) * k.profile(r, z), rr, zr, &options()).map(|q| q.value * azimuthal)
}
