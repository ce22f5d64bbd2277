//! Dormand–Prince 5(4) integrator with PI step-size control and
//! fourth-order continuous (dense) output.
//!
//! The state is a fixed-size array of complex numbers. The local error norm
//! is taken over complex moduli, so it is invariant under a global phase
//! rotation of the state.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[Complex64; N], dy: &mut [Complex64; N]);
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Largest permitted |h|.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t_old: f64,
    pub h: f64,
    rcont: [[Complex64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    /// Evaluate the interpolant at `t`, which should lie inside the step.
    pub fn eval(&self, t: f64) -> [Complex64; N] {
        let theta = (t - self.t_old) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        std::array::from_fn(|i| r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type State<const N: usize> = [Complex64; N];

fn combine<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    std::array::from_fn(|i| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        y[i] + acc * h
    })
}

fn error_norm<const N: usize>(err: &State<N>, y0: &State<N>, y1: &State<N>, opts: &Dopri5Options) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
            (err[i].norm() / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: &State<N>,
    f0: &State<N>,
    dir: f64,
    opts: &Dopri5Options,
) -> f64 {
    let zero = [Complex64::new(0.0, 0.0); N];
    let d0 = error_norm(y0, &zero, y0, opts);
    let d1 = error_norm(f0, &zero, y0, opts);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opts.h_max);
    let y1 = combine(y0, dir * h0, &[(1.0, f0)]);
    let mut f1 = zero;
    sys.rhs(t0 + dir * h0, &y1, &mut f1);
    let diff: State<N> = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = error_norm(&diff, &zero, y0, opts) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Integrate from `t0` to `t_end` (either direction), calling `observer` with
/// the dense interpolant of every accepted step. Returns the final state.
pub fn integrate<const N: usize, S, F>(
    sys: &S,
    t0: f64,
    y0: State<N>,
    t_end: f64,
    opts: &Dopri5Options,
    mut observer: F,
) -> Result<(State<N>, Stats)>
where
    S: OdeSystem<N>,
    F: FnMut(&DenseStep<N>),
{
    let mut stats = Stats::default();
    if t_end == t0 {
        return Ok((y0, stats));
    }
    let dir = (t_end - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [Complex64::new(0.0, 0.0); N];
    sys.rhs(t, &y, &mut k1);
    stats.evaluations += 1;

    let mut h = match opts.h_init {
        Some(h) => h.abs().min(opts.h_max),
        None => initial_step(sys, t, &y, &k1, dir, opts),
    };
    stats.evaluations += 1;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let expo1 = 0.2 - BETA * 0.75;

    let mut k2 = k1;
    let mut k3 = k1;
    let mut k4 = k1;
    let mut k5 = k1;
    let mut k6 = k1;
    let mut k7 = k1;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps {
                max_steps: opts.max_steps,
                target: t_end,
            });
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, step: h });
        }
        let hs = dir * h;

        let y2 = combine(&y, hs, &[(A21, &k1)]);
        sys.rhs(t + C2 * hs, &y2, &mut k2);
        let y3 = combine(&y, hs, &[(A31, &k1), (A32, &k2)]);
        sys.rhs(t + C3 * hs, &y3, &mut k3);
        let y4 = combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        sys.rhs(t + C4 * hs, &y4, &mut k4);
        let y5 = combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        sys.rhs(t + C5 * hs, &y5, &mut k5);
        let y6 = combine(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t_end } else { t + hs };
        sys.rhs(t + hs, &y6, &mut k6);
        let y_new = combine(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        sys.rhs(t_new, &y_new, &mut k7);
        stats.evaluations += 6;

        let err_vec: State<N> =
            std::array::from_fn(|i| (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs);
        let err = error_norm(&err_vec, &y, &y_new, opts);

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(opts.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);

            let rcont2: State<N> = std::array::from_fn(|i| y_new[i] - y[i]);
            let rcont3: State<N> = std::array::from_fn(|i| k1[i] * hs - rcont2[i]);
            let rcont4: State<N> = std::array::from_fn(|i| rcont2[i] - k7[i] * hs - rcont3[i]);
            let rcont5: State<N> = std::array::from_fn(|i| {
                (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * hs
            });
            let step = DenseStep {
                t_old: t,
                h: hs,
                rcont: [y, rcont2, rcont3, rcont4, rcont5],
            };
            observer(&step);

            stats.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            last_rejected = false;
            if last {
                return Ok((y, stats));
            }
            h = h_new;
        } else {
            let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;
    impl OdeSystem<1> for Rotation {
        fn rhs(&self, _t: f64, y: &[Complex64; 1], dy: &mut [Complex64; 1]) {
            dy[0] = Complex64::new(0.0, -1.0) * y[0];
        }
    }

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, t: f64, y: &[Complex64; 1], dy: &mut [Complex64; 1]) {
            dy[0] = -y[0] * t;
        }
    }

    #[test]
    fn rotation_matches_exponential() {
        let y0 = [Complex64::new(1.0, 0.0)];
        let (y, stats) = integrate(&Rotation, 0.0, y0, 30.0, &Dopri5Options::with_tol(1e-11), |_| {}).unwrap();
        let exact = Complex64::from_polar(1.0, -30.0);
        assert!((y[0] - exact).norm() < 1e-8, "{:?} vs {exact}", y[0]);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn backward_integration_is_supported() {
        let y0 = [Complex64::new(1.0, 0.0)];
        let opts = Dopri5Options::with_tol(1e-12);
        let (y, _) = integrate(&Decay, 0.0, y0, 2.0, &opts, |_| {}).unwrap();
        assert!((y[0].re - (-2.0f64).exp()).abs() < 1e-10);
        let (back, _) = integrate(&Decay, 2.0, y, 0.0, &opts, |_| {}).unwrap();
        assert!((back[0].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_output_interpolates_inside_steps() {
        let y0 = [Complex64::new(1.0, 0.0)];
        let mut worst: f64 = 0.0;
        integrate(&Rotation, 0.0, y0, 10.0, &Dopri5Options::with_tol(1e-10), |step| {
            for j in 0..=8 {
                let t = step.t_old + step.h * j as f64 / 8.0;
                let exact = Complex64::from_polar(1.0, -t);
                worst = worst.max((step.eval(t)[0] - exact).norm());
            }
        })
        .unwrap();
        assert!(worst < 1e-8, "dense output error {worst:e}");
    }

    #[test]
    fn zero_length_interval_returns_input() {
        let y0 = [Complex64::new(0.3, 0.4)];
        let (y, stats) = integrate(&Rotation, 1.0, y0, 1.0, &Dopri5Options::default(), |_| {}).unwrap();
        assert_eq!(y, y0);
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = Dopri5Options {
            max_steps: 3,
            ..Dopri5Options::with_tol(1e-12)
        };
        let err = integrate(&Rotation, 0.0, [Complex64::new(1.0, 0.0)], 100.0, &opts, |_| {}).unwrap_err();
        assert!(matches!(err, Error::TooManySteps { .. }));
    }
}
