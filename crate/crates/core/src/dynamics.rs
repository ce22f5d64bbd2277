//! Coupled amplitude equations for the ground mode and one resonantly
//! pumped excited mode, in dimensionless time `t' = alpha_p0 * t`.
//!
//! Lab-frame form:
//!
//! ```text
//! dc0/dt' = -i a n_p c0 - (i/2) b e^{+i delta t'} cp
//! dcp/dt' = -i n_0 cp   - (i/2) b e^{-i delta t'} c0
//! ```
//!
//! The default integration runs in the rotating frame `ĉp = cp e^{i delta t'}`,
//! where the system is autonomous, and maps back to the lab frame when
//! sampling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::ode::{self, Dopri5Options, OdeSystem};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Allowed deviation of `|c0|^2 + |cp|^2` from one for caller-supplied states.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 200;

/// Complex amplitudes of the ground and excited mode at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub c0: Complex64,
    pub cp: Complex64,
}

impl ModeAmplitudes {
    pub const fn new(c0: Complex64, cp: Complex64) -> Self {
        Self { c0, cp }
    }

    /// All atoms in the ground mode.
    pub const fn ground() -> Self {
        Self::new(Complex64::new(1.0, 0.0), ZERO)
    }

    pub fn n0(&self) -> f64 {
        self.c0.norm_sqr()
    }

    pub fn np(&self) -> f64 {
        self.cp.norm_sqr()
    }

    pub fn total(&self) -> f64 {
        self.n0() + self.np()
    }

    pub fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.cp.is_finite()
    }

    /// Multiply both amplitudes by `e^{i chi}`.
    pub fn with_global_phase(&self, chi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, chi);
        Self::new(self.c0 * phase, self.cp * phase)
    }

    fn check_normalized(&self) -> Result<()> {
        ensure(self.is_finite(), || format!("non-finite amplitudes {self:?}"))?;
        let drift = (self.total() - 1.0).abs();
        ensure(drift <= NORMALIZATION_SLACK, || {
            format!("amplitudes not normalized: |c0|^2 + |cp|^2 - 1 = {drift:e}")
        })
    }
}

impl Default for ModeAmplitudes {
    fn default() -> Self {
        Self::ground()
    }
}

/// Interaction ratio `a`, pumping amplitude `b` and detuning `delta`, all in
/// units of `alpha_p0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl DimensionlessParams {
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        let p = Self { a, b, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.a.is_finite() && self.b.is_finite() && self.delta.is_finite(),
            || format!("non-finite parameters {self:?}"),
        )?;
        ensure(self.a >= 0.0, || format!("a must be >= 0, got {}", self.a))?;
        ensure(self.b >= 0.0, || format!("b must be >= 0, got {}", self.b))
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    /// Upper bound on the instantaneous oscillation frequency of the
    /// populations, used to size the sampling grid.
    pub fn fastest_frequency(&self, linear: bool) -> f64 {
        let detuning = if linear {
            self.delta.abs()
        } else {
            (1.0 - self.delta).abs().max((self.a + self.delta).abs())
        };
        self.b.hypot(detuning)
    }
}

/// Reference frame used for the numerical integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Autonomous form in `ĉp = cp e^{i delta t'}`.
    #[default]
    Rotating,
    /// Explicitly time-dependent drive factor.
    Lab,
}

/// Where to place trajectory samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Uniform grid with this many samples per estimated oscillation period.
    PerPeriod(usize),
    /// Uniform grid with the given spacing in `t'`.
    Interval(f64),
    /// One sample at the end of every accepted integrator step.
    Steps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub tol: f64,
    pub frame: Frame,
    pub sampling: Sampling,
    /// Drop both nonlinear terms, leaving the linear Rabi problem.
    pub linear: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            frame: Frame::Rotating,
            sampling: Sampling::PerPeriod(DEFAULT_SAMPLES_PER_PERIOD),
            linear: false,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        ensure((1e-12..=1e-4).contains(&self.tol), || {
            format!("tol must lie in [1e-12, 1e-4], got {:e}", self.tol)
        })?;
        match self.sampling {
            Sampling::PerPeriod(n) => ensure(n >= 2, || "need at least 2 samples per period".into()),
            Sampling::Interval(dt) => ensure(dt.is_finite() && dt > 0.0, || {
                format!("sampling interval must be positive, got {dt}")
            }),
            Sampling::Steps => Ok(()),
        }
    }

    fn dopri(&self) -> Dopri5Options {
        Dopri5Options::with_tol(self.tol)
    }
}

/// Time-ordered samples of the lab-frame amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModeAmplitudes>,
    pub params: DimensionlessParams,
    pub init: ModeAmplitudes,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn final_state(&self) -> ModeAmplitudes {
        *self.states.last().unwrap_or(&self.init)
    }

    /// Largest `| |c0|^2 + |cp|^2 - 1 |` over all samples.
    pub fn max_normalization_error(&self) -> f64 {
        self.states.iter().map(|s| (s.total() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn populations(&self) -> Populations {
        populations(self)
    }
}

/// Fractional mode populations along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub times: Vec<f64>,
    pub n0: Vec<f64>,
    pub np: Vec<f64>,
}

impl Populations {
    /// `n0 - n_p` at every sample.
    pub fn difference(&self) -> Vec<f64> {
        self.n0.iter().zip(&self.np).map(|(a, b)| a - b).collect()
    }

    pub fn min_n0(&self) -> f64 {
        self.n0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_np(&self) -> f64 {
        self.np.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Lab-frame time derivative of the amplitudes.
pub fn derivative(state: &ModeAmplitudes, params: &DimensionlessParams, t: f64) -> Result<ModeAmplitudes> {
    params.validate()?;
    ensure(t.is_finite(), || format!("non-finite time {t}"))?;
    state.check_normalized()?;
    Ok(lab_rhs(state, params, t, false))
}

fn lab_rhs(s: &ModeAmplitudes, p: &DimensionlessParams, t: f64, linear: bool) -> ModeAmplitudes {
    let drive = Complex64::from_polar(1.0, p.delta * t);
    let (self0, selfp) = if linear {
        (ZERO, ZERO)
    } else {
        (-I * (p.a * s.np()) * s.c0, -I * s.n0() * s.cp)
    };
    ModeAmplitudes::new(
        self0 - 0.5 * I * p.b * drive * s.cp,
        selfp - 0.5 * I * p.b * drive.conj() * s.c0,
    )
}

/// Amplitudes plus the running integral of `n0 - n_p`.
struct TwoModeSystem {
    params: DimensionlessParams,
    frame: Frame,
    linear: bool,
}

impl OdeSystem<3> for TwoModeSystem {
    fn rhs(&self, t: f64, y: &[Complex64; 3], dy: &mut [Complex64; 3]) {
        let p = &self.params;
        let state = ModeAmplitudes::new(y[0], y[1]);
        match self.frame {
            Frame::Lab => {
                let d = lab_rhs(&state, p, t, self.linear);
                dy[0] = d.c0;
                dy[1] = d.cp;
            }
            Frame::Rotating => {
                let (n0, np) = (state.n0(), state.np());
                let (self0, detune) = if self.linear {
                    (0.0, -p.delta)
                } else {
                    (p.a * np, n0 - p.delta)
                };
                dy[0] = -I * self0 * y[0] - 0.5 * I * p.b * y[1];
                dy[1] = -I * detune * y[1] - 0.5 * I * p.b * y[0];
            }
        }
        dy[2] = Complex64::new(state.n0() - state.np(), 0.0);
    }
}

impl TwoModeSystem {
    fn to_internal(&self, s: &ModeAmplitudes, t: f64, integral: f64) -> [Complex64; 3] {
        let cp = match self.frame {
            Frame::Rotating => s.cp * Complex64::from_polar(1.0, self.params.delta * t),
            Frame::Lab => s.cp,
        };
        [s.c0, cp, Complex64::new(integral, 0.0)]
    }

    fn to_lab(&self, y: &[Complex64; 3], t: f64) -> ModeAmplitudes {
        let cp = match self.frame {
            Frame::Rotating => y[1] * Complex64::from_polar(1.0, -self.params.delta * t),
            Frame::Lab => y[1],
        };
        ModeAmplitudes::new(y[0], cp)
    }
}

/// Integrate from `init` at `t' = 0` to `horizon` with default options.
pub fn integrate(params: &DimensionlessParams, init: &ModeAmplitudes, horizon: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(params, init, horizon, &IntegrationOptions::with_tol(tol))
}

pub fn integrate_with(
    params: &DimensionlessParams,
    init: &ModeAmplitudes,
    horizon: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    params.validate()?;
    opts.validate()?;
    init.check_normalized()?;
    ensure(horizon.is_finite() && horizon > 0.0, || {
        format!("horizon must be positive, got {horizon}")
    })?;

    let sys = TwoModeSystem {
        params: *params,
        frame: opts.frame,
        linear: opts.linear,
    };
    let interval = match opts.sampling {
        Sampling::PerPeriod(n) => {
            let omega = params.fastest_frequency(opts.linear);
            let period = if omega > 1e-3 {
                2.0 * PI / omega
            } else {
                2.0 * PI / 1e-3
            };
            Some((period / n as f64).min(horizon))
        }
        Sampling::Interval(dt) => Some(dt.min(horizon)),
        Sampling::Steps => None,
    };

    let mut times = vec![0.0];
    let mut states = vec![*init];
    let mut next = 1usize;
    let y0 = sys.to_internal(init, 0.0, 0.0);
    let (y_end, _) = ode::integrate(&sys, 0.0, y0, horizon, &opts.dopri(), |step| {
        let t_new = step.t_new();
        match interval {
            Some(dt) => loop {
                let t = next as f64 * dt;
                if t > t_new || t >= horizon {
                    break;
                }
                times.push(t);
                states.push(sys.to_lab(&step.eval(t), t));
                next += 1;
            },
            None => {
                if t_new < horizon {
                    times.push(t_new);
                    states.push(sys.to_lab(&step.eval(t_new), t_new));
                }
            }
        }
    })?;
    times.push(horizon);
    states.push(sys.to_lab(&y_end, horizon));

    Ok(Trajectory {
        times,
        states,
        params: *params,
        init: *init,
    })
}

/// Evolve a lab-frame state from `t_start` to `t_end` (either direction).
pub fn propagate(
    params: &DimensionlessParams,
    state: &ModeAmplitudes,
    t_start: f64,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<ModeAmplitudes> {
    params.validate()?;
    opts.validate()?;
    state.check_normalized()?;
    ensure(t_start.is_finite() && t_end.is_finite(), || {
        "non-finite time bounds".to_string()
    })?;
    propagate_unchecked(params, state, t_start, t_end, opts).map(|(s, _)| s)
}

/// Final state and `∫ (n0 - n_p) dt'` over `[t_start, t_end]`.
pub(crate) fn propagate_unchecked(
    params: &DimensionlessParams,
    state: &ModeAmplitudes,
    t_start: f64,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<(ModeAmplitudes, f64)> {
    let sys = TwoModeSystem {
        params: *params,
        frame: opts.frame,
        linear: opts.linear,
    };
    let y0 = sys.to_internal(state, t_start, 0.0);
    let (y, _) = ode::integrate(&sys, t_start, y0, t_end, &opts.dopri(), |_| {})?;
    Ok((sys.to_lab(&y, t_end), y[2].re))
}

pub(crate) fn check_run_inputs(
    params: &DimensionlessParams,
    init: &ModeAmplitudes,
    opts: &IntegrationOptions,
) -> Result<()> {
    params.validate()?;
    opts.validate()?;
    init.check_normalized()
}

/// Pointwise squared moduli of the trajectory states.
pub fn populations(traj: &Trajectory) -> Populations {
    Populations {
        times: traj.times.clone(),
        n0: traj.states.iter().map(ModeAmplitudes::n0).collect(),
        np: traj.states.iter().map(ModeAmplitudes::np).collect(),
    }
}

/// Excited-mode population of the linear two-level problem started in the
/// ground mode: `(b/Ω)^2 sin^2(Ω t'/2)` with `Ω = sqrt(b^2 + delta^2)`.
pub fn rabi_reference(b: f64, delta: f64, t: f64) -> Result<f64> {
    ensure(b.is_finite() && delta.is_finite() && t.is_finite(), || {
        "non-finite Rabi arguments".to_string()
    })?;
    let omega = b.hypot(delta);
    if omega == 0.0 {
        return Err(Error::InvalidInput("Rabi frequency undefined for b = delta = 0".into()));
    }
    let s = (0.5 * omega * t).sin();
    Ok((b / omega).powi(2) * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn derivative_from_ground_is_pure_pump() {
        let p = DimensionlessParams::new(1.0, 0.4, 0.0).unwrap();
        let d = derivative(&ModeAmplitudes::ground(), &p, 0.0).unwrap();
        assert_eq!(d.c0, c(0.0, 0.0));
        assert!((d.cp - c(0.0, -0.2)).norm() < 1e-15);
    }

    #[test]
    fn derivative_of_undriven_excited_mode_vanishes() {
        let p = DimensionlessParams::new(0.7, 0.0, 0.3).unwrap();
        let s = ModeAmplitudes::new(c(0.0, 0.0), c(1.0, 0.0));
        let d = derivative(&s, &p, 2.5).unwrap();
        assert_eq!(d.c0.norm(), 0.0);
        assert_eq!(d.cp.norm(), 0.0);
    }

    #[test]
    fn derivative_balanced_state() {
        // Hand substitution: n0 = n_p = 1/2, a = 1, b = 0.5.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = DimensionlessParams::new(1.0, 0.5, 0.0).unwrap();
        let d = derivative(&ModeAmplitudes::new(c(h, 0.0), c(h, 0.0)), &p, 0.0).unwrap();
        let expected = c(0.0, -(0.5 * h + 0.25 * h));
        assert!((d.c0 - expected).norm() < 1e-15);
        assert!((d.cp - expected).norm() < 1e-15);
    }

    #[test]
    fn derivative_rejects_bad_input() {
        let p = DimensionlessParams {
            a: 1.0,
            b: 0.1,
            delta: 0.0,
        };
        let unnormalized = ModeAmplitudes::new(c(1.0, 0.0), c(0.1, 0.0));
        assert!(derivative(&unnormalized, &p, 0.0).is_err());
        let nan = ModeAmplitudes::new(c(f64::NAN, 0.0), c(0.0, 0.0));
        assert!(derivative(&nan, &p, 0.0).is_err());
        assert!(DimensionlessParams::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(DimensionlessParams::new(-1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn trajectory_shape_invariants() {
        let p = DimensionlessParams::new(1.0, 0.6, 0.2).unwrap();
        let init = ModeAmplitudes::ground();
        let traj = integrate(&p, &init, 20.0, 1e-10).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.states[0], init);
        assert_eq!(traj.horizon(), 20.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times.len(), traj.states.len());
    }

    #[test]
    fn no_pump_means_no_transfer() {
        let p = DimensionlessParams::new(1.0, 0.0, 0.0).unwrap();
        let traj = integrate(&p, &ModeAmplitudes::ground(), 10.0, 1e-10).unwrap();
        assert!(traj.populations().n0.iter().all(|&n| (n - 1.0).abs() < 1e-14));
    }

    #[test]
    fn step_sampling_follows_accepted_steps() {
        let p = DimensionlessParams::new(1.0, 0.3, 0.0).unwrap();
        let opts = IntegrationOptions {
            sampling: Sampling::Steps,
            ..IntegrationOptions::default()
        };
        let traj = integrate_with(&p, &ModeAmplitudes::ground(), 30.0, &opts).unwrap();
        assert!(traj.len() > 5);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn populations_ignore_phase() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let traj = Trajectory {
            times: vec![0.0],
            states: vec![ModeAmplitudes::new(c(h, 0.0), c(0.0, h))],
            params: DimensionlessParams {
                a: 1.0,
                b: 0.0,
                delta: 0.0,
            },
            init: ModeAmplitudes::ground(),
        };
        let pops = populations(&traj);
        assert!((pops.n0[0] - 0.5).abs() < 1e-15);
        assert!((pops.np[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rabi_reference_values() {
        // Omega = 0.5, t' = pi / Omega hits the peak b^2 / Omega^2.
        let peak = rabi_reference(0.3, 0.4, 2.0 * PI).unwrap();
        assert!((peak - 0.36).abs() < 1e-14);
        let b = 0.37;
        assert!(rabi_reference(b, 0.0, 2.0 * PI / b).unwrap() < 1e-28);
        assert!(rabi_reference(0.0, 0.0, 1.0).is_err());
        assert!(rabi_reference(1e-9, 0.5, 3.0).unwrap() < 1e-17);
    }

    #[test]
    fn integrate_validates_arguments() {
        let p = DimensionlessParams::new(1.0, 0.4, 0.0).unwrap();
        let g = ModeAmplitudes::ground();
        assert!(integrate(&p, &g, 0.0, 1e-10).is_err());
        assert!(integrate(&p, &g, 10.0, 1e-3).is_err());
        assert!(integrate(&p, &g, 10.0, 1e-13).is_err());
        let bad = ModeAmplitudes::new(c(0.5, 0.0), c(0.0, 0.0));
        assert!(integrate(&p, &bad, 10.0, 1e-10).is_err());
    }
}
