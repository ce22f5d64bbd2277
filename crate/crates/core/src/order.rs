//! Time-averaged population imbalance (order parameter), regime
//! classification and location of critical pumping amplitudes.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    self, check_run_inputs, DimensionlessParams, Frame, IntegrationOptions, ModeAmplitudes, Sampling, Trajectory,
};
use crate::error::{ensure, Error, Result};

/// Controls how the order parameter is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AveragingConfig {
    /// Convergence threshold of the doubling-horizon fallback.
    pub tolerance: f64,
    /// First horizon tried when looking for a period.
    pub initial_horizon: f64,
    /// Cap on the averaging horizon.
    pub max_horizon: f64,
    pub integration_tol: f64,
    pub samples_per_period: usize,
    pub frame: Frame,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            initial_horizon: 100.0,
            max_horizon: 2000.0,
            integration_tol: dynamics::DEFAULT_TOL,
            samples_per_period: dynamics::DEFAULT_SAMPLES_PER_PERIOD,
            frame: Frame::Rotating,
        }
    }
}

impl AveragingConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.max_horizon >= 50.0, || {
            format!("max_horizon must be >= 50, got {}", self.max_horizon)
        })?;
        ensure((1e-6..=1e-2).contains(&self.tolerance), || {
            format!("averaging tolerance must lie in [1e-6, 1e-2], got {:e}", self.tolerance)
        })?;
        ensure(self.initial_horizon > 0.0, || {
            format!("initial_horizon must be positive, got {}", self.initial_horizon)
        })
    }

    fn integration(&self) -> IntegrationOptions {
        IntegrationOptions {
            tol: self.integration_tol,
            frame: self.frame,
            sampling: Sampling::PerPeriod(self.samples_per_period),
            linear: false,
        }
    }
}

/// How an [`EtaEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMethod {
    /// No pump: populations are constants of motion.
    Stationary,
    /// Integer number of detected periods.
    Periodic,
    /// Doubling-horizon running average.
    Cesaro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub eta: f64,
    pub mean_n0: f64,
    pub mean_np: f64,
    pub averaging_horizon: f64,
    pub converged: bool,
    pub period_estimate: Option<f64>,
    pub method: AveragingMethod,
}

impl EtaEstimate {
    fn from_eta(eta: f64, horizon: f64, converged: bool, period: Option<f64>, method: AveragingMethod) -> Self {
        let eta = eta.clamp(-1.0, 1.0);
        Self {
            eta,
            mean_n0: 0.5 * (1.0 + eta),
            mean_np: 0.5 * (1.0 - eta),
            averaging_horizon: horizon,
            converged,
            period_estimate: period,
            method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    Locked,
    Unlocked,
    NearCritical,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeLabel::Locked => "locked",
            RegimeLabel::Unlocked => "unlocked",
            RegimeLabel::NearCritical => "near_critical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Jump,
    SmoothZero,
}

impl fmt::Display for CriticalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriticalKind::Jump => "jump",
            CriticalKind::SmoothZero => "smooth_zero",
        })
    }
}

/// A located transition in some scalar control parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub critical: f64,
    pub bracket: (f64, f64),
    pub bracket_width: f64,
    pub kind: CriticalKind,
    pub eta_below: f64,
    pub eta_above: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalConfig {
    pub jump_threshold: f64,
    /// `eta` at or below this counts as zero for smooth transitions.
    pub zero_tolerance: f64,
    pub averaging: AveragingConfig,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            jump_threshold: 0.1,
            zero_tolerance: 1e-2,
            averaging: AveragingConfig::default(),
        }
    }
}

/// One grid point of a sweep. Failed points keep their error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub b: f64,
    pub outcome: Result<EtaEstimate>,
}

/// Period of `n0 - n_p` from the spacing of its minima.
///
/// Minima are refined by a three-point parabola and only those returning to
/// the same point of the orbit (same depth, same sign of the relative phase
/// quadrature) are used, so a second minimum within one period does not
/// halve the estimate.
pub fn detect_period(traj: &Trajectory) -> Option<f64> {
    let t = &traj.times;
    if t.len() < 3 {
        return None;
    }
    let s: Vec<f64> = traj.states.iter().map(|st| st.n0() - st.np()).collect();
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let amplitude = hi - lo;
    if amplitude < 1e-9 {
        return None;
    }

    let delta = traj.params.delta;
    let mut minima: Vec<(f64, f64, bool)> = Vec::new();
    for i in 1..s.len() - 1 {
        if !(s[i] < s[i - 1] && s[i] <= s[i + 1]) {
            continue;
        }
        // Reject wiggles that are pure integration noise.
        if s[i - 1] - s[i] < 1e-13 * amplitude && s[i + 1] - s[i] < 1e-13 * amplitude {
            continue;
        }
        let (tm, sm) = parabola_vertex((t[i - 1], s[i - 1]), (t[i], s[i]), (t[i + 1], s[i + 1]));
        let st = &traj.states[i];
        let rotated = st.cp * num_complex::Complex64::from_polar(1.0, delta * t[i]);
        let in_phase = (st.c0.conj() * rotated).re >= 0.0;
        minima.push((tm, sm, in_phase));
    }
    let (t_first, s_first, phase_first) = *minima.first()?;
    let matches: Vec<f64> = minima
        .iter()
        .filter(|(_, sm, ph)| (sm - s_first).abs() <= 1e-4 * amplitude && *ph == phase_first)
        .map(|(tm, _, _)| *tm)
        .collect();
    if matches.len() < 2 {
        return None;
    }
    let span = matches[matches.len() - 1] - t_first;
    Some(span / (matches.len() - 1) as f64)
}

fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv <= 0.0 || !curv.is_finite() {
        return p1;
    }
    // y = y1 + d (x - x1) + curv (x - x1)^2 with d the slope at x1.
    let slope = d01 + curv * (x1 - x0);
    let dx = (-slope / (2.0 * curv)).clamp(x0 - x1, x2 - x1);
    (x1 + dx, y1 + slope * dx + curv * dx * dx)
}

struct Observation {
    traj: Trajectory,
    period: Option<f64>,
}

impl Observation {
    fn min_n0(&self) -> f64 {
        self.traj
            .states
            .iter()
            .map(ModeAmplitudes::n0)
            .fold(f64::INFINITY, f64::min)
    }

    fn max_np(&self) -> f64 {
        self.traj
            .states
            .iter()
            .map(ModeAmplitudes::np)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrate over doubling horizons until a period shows up or the cap is hit.
fn observe(params: &DimensionlessParams, init: &ModeAmplitudes, cfg: &AveragingConfig) -> Result<Observation> {
    let opts = cfg.integration();
    let mut horizon = cfg.initial_horizon.min(cfg.max_horizon);
    loop {
        let traj = dynamics::integrate_with(params, init, horizon, &opts)?;
        let period = detect_period(&traj).filter(|p| *p <= horizon);
        if period.is_some() || horizon >= cfg.max_horizon {
            return Ok(Observation { traj, period });
        }
        horizon = (2.0 * horizon).min(cfg.max_horizon);
    }
}

fn average_from_observation(
    params: &DimensionlessParams,
    init: &ModeAmplitudes,
    cfg: &AveragingConfig,
    obs: &Observation,
) -> Result<EtaEstimate> {
    let opts = cfg.integration();
    if let Some(period) = obs.period {
        let cycles = (obs.traj.horizon() / period).floor().max(1.0);
        let horizon = cycles * period;
        let (_, integral) = dynamics::propagate_unchecked(params, init, 0.0, horizon, &opts)?;
        return Ok(EtaEstimate::from_eta(
            integral / horizon,
            horizon,
            true,
            Some(period),
            AveragingMethod::Periodic,
        ));
    }

    // Cesàro fallback over T, 2T, 4T, ...
    let mut t = 0.0;
    let mut state = *init;
    let mut integral = 0.0;
    let mut horizon = cfg.initial_horizon.min(cfg.max_horizon);
    let mut previous: Option<f64> = None;
    loop {
        let (next, piece) = dynamics::propagate_unchecked(params, &state, t, horizon, &opts)?;
        integral += piece;
        state = next;
        t = horizon;
        let average = integral / horizon;
        let converged = previous.is_some_and(|p| (average - p).abs() < cfg.tolerance);
        if converged || horizon >= cfg.max_horizon {
            return Ok(EtaEstimate::from_eta(
                average,
                horizon,
                converged,
                None,
                AveragingMethod::Cesaro,
            ));
        }
        previous = Some(average);
        horizon = (2.0 * horizon).min(cfg.max_horizon);
    }
}

fn stationary(init: &ModeAmplitudes) -> EtaEstimate {
    EtaEstimate::from_eta(init.n0() - init.np(), 0.0, true, None, AveragingMethod::Stationary)
}

/// Order parameter: time average of `n0 - n_p`.
pub fn eta(params: &DimensionlessParams, init: &ModeAmplitudes, cfg: &AveragingConfig) -> Result<EtaEstimate> {
    cfg.validate()?;
    check_run_inputs(params, init, &cfg.integration())?;
    if params.b == 0.0 {
        return Ok(stationary(init));
    }
    let obs = observe(params, init, cfg)?;
    average_from_observation(params, init, cfg, &obs)
}

fn label_from(obs: &Observation) -> RegimeLabel {
    if obs.max_np() > 0.5 {
        RegimeLabel::Unlocked
    } else if obs.period.is_some() && obs.min_n0() > 0.5 {
        RegimeLabel::Locked
    } else {
        RegimeLabel::NearCritical
    }
}

fn check_ground_init(init: &ModeAmplitudes) -> Result<()> {
    ensure((init.n0() - 1.0).abs() <= dynamics::NORMALIZATION_SLACK, || {
        "regime classification is defined for an initial state fully in the ground mode".into()
    })
}

/// Locked if `n0` stays above one half, unlocked if `n_p` ever exceeds one
/// half, near-critical if neither resolves within the horizon cap.
pub fn classify_regime(
    params: &DimensionlessParams,
    init: &ModeAmplitudes,
    cfg: &AveragingConfig,
) -> Result<RegimeLabel> {
    classify_with_eta(params, init, cfg).map(|(label, _)| label)
}

/// Regime label and order parameter from one shared integration.
pub fn classify_with_eta(
    params: &DimensionlessParams,
    init: &ModeAmplitudes,
    cfg: &AveragingConfig,
) -> Result<(RegimeLabel, EtaEstimate)> {
    cfg.validate()?;
    check_run_inputs(params, init, &cfg.integration())?;
    check_ground_init(init)?;
    if params.b == 0.0 {
        return Ok((RegimeLabel::Locked, stationary(init)));
    }
    let obs = observe(params, init, cfg)?;
    let estimate = average_from_observation(params, init, cfg, &obs)?;
    Ok((label_from(&obs), estimate))
}

/// Order parameter at every grid point; points are evaluated in parallel
/// and returned in grid order.
pub fn sweep_eta(a: f64, delta: f64, b_grid: &[f64], cfg: &AveragingConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    ensure(b_grid.windows(2).all(|w| w[0] <= w[1]), || {
        "b grid must be sorted ascending".into()
    })?;
    for &b in b_grid {
        DimensionlessParams::new(a, b, delta)?;
    }
    let init = ModeAmplitudes::ground();
    Ok(b_grid
        .par_iter()
        .map(|&b| SweepPoint {
            b,
            outcome: eta(&DimensionlessParams { a, b, delta }, &init, cfg),
        })
        .collect())
}

/// Bisect a transition of `evaluate` inside `bracket`.
///
/// The regime classifier drives the bisection when the two ends classify
/// differently; otherwise a jump in `eta` larger than the threshold is
/// tracked instead.
pub fn locate_transition<F>(
    mut evaluate: F,
    bracket: (f64, f64),
    tol: f64,
    cfg: &CriticalConfig,
) -> Result<CriticalPoint>
where
    F: FnMut(f64) -> Result<(RegimeLabel, EtaEstimate)>,
{
    let (lo0, hi0) = bracket;
    ensure(lo0.is_finite() && hi0.is_finite() && lo0 < hi0, || {
        format!("bracket must satisfy lo < hi, got ({lo0}, {hi0})")
    })?;
    ensure(tol > 0.0, || format!("bisection tolerance must be positive, got {tol}"))?;

    let (label_lo, est_lo) = evaluate(lo0)?;
    let (label_hi, est_hi) = evaluate(hi0)?;
    let unlocked_hi = label_hi == RegimeLabel::Unlocked;
    let use_classifier = (label_lo == RegimeLabel::Unlocked) != unlocked_hi;
    let eta_mid = 0.5 * (est_lo.eta + est_hi.eta);
    let eta_rising = est_hi.eta > est_lo.eta;

    if !use_classifier && (est_hi.eta - est_lo.eta).abs() <= cfg.jump_threshold {
        return Err(Error::InvalidBracket {
            lo: lo0,
            hi: hi0,
            reason: format!(
                "both ends classify as {label_lo}/{label_hi} and eta differs by only {:.3e}",
                (est_hi.eta - est_lo.eta).abs()
            ),
        });
    }

    let like_hi = |label: RegimeLabel, est: &EtaEstimate| {
        if use_classifier {
            (label == RegimeLabel::Unlocked) == unlocked_hi
        } else {
            (est.eta > eta_mid) == eta_rising
        }
    };

    let (mut lo, mut hi) = (lo0, hi0);
    let (mut eta_lo, mut eta_hi) = (est_lo.eta, est_hi.eta);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (label, est) = evaluate(mid)?;
        if like_hi(label, &est) {
            hi = mid;
            eta_hi = est.eta;
        } else {
            lo = mid;
            eta_lo = est.eta;
        }
    }

    if (eta_hi - eta_lo).abs() > cfg.jump_threshold {
        return Ok(CriticalPoint {
            critical: 0.5 * (lo + hi),
            bracket: (lo, hi),
            bracket_width: hi - lo,
            kind: CriticalKind::Jump,
            eta_below: eta_lo,
            eta_above: eta_hi,
        });
    }

    // Smooth transition: report where eta first reaches zero, if it does.
    let zero = cfg.zero_tolerance;
    if est_lo.eta > zero && est_hi.eta <= zero {
        let (mut zl, mut zh) = (lo0, hi0);
        let (mut el, mut eh) = (est_lo.eta, est_hi.eta);
        while zh - zl > tol {
            let mid = 0.5 * (zl + zh);
            let (_, est) = evaluate(mid)?;
            if est.eta <= zero {
                zh = mid;
                eh = est.eta;
            } else {
                zl = mid;
                el = est.eta;
            }
        }
        lo = zl;
        hi = zh;
        eta_lo = el;
        eta_hi = eh;
    }
    let kind = if (eta_hi - eta_lo).abs() > cfg.jump_threshold {
        CriticalKind::Jump
    } else {
        CriticalKind::SmoothZero
    };
    Ok(CriticalPoint {
        critical: 0.5 * (lo + hi),
        bracket: (lo, hi),
        bracket_width: hi - lo,
        kind,
        eta_below: eta_lo,
        eta_above: eta_hi,
    })
}

/// Critical pumping amplitude for fixed interaction ratio and detuning.
pub fn find_critical_b(
    a: f64,
    delta: f64,
    bracket: (f64, f64),
    tol_b: f64,
    cfg: &CriticalConfig,
) -> Result<CriticalPoint> {
    cfg.averaging.validate()?;
    DimensionlessParams::new(a, bracket.0.max(0.0), delta)?;
    ensure(bracket.0 >= 0.0, || {
        format!("pumping amplitude must be >= 0, got {}", bracket.0)
    })?;
    let init = ModeAmplitudes::ground();
    locate_transition(
        |b| classify_with_eta(&DimensionlessParams { a, b, delta }, &init, &cfg.averaging),
        bracket,
        tol_b,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(a: f64, b: f64, delta: f64) -> DimensionlessParams {
        DimensionlessParams::new(a, b, delta).unwrap()
    }

    #[test]
    fn no_pump_gives_unit_eta() {
        let cfg = AveragingConfig::default();
        for (a, delta) in [(0.0, 0.0), (1.0, 0.3), (5.0, -2.0)] {
            let est = eta(&params(a, 0.0, delta), &ModeAmplitudes::ground(), &cfg).unwrap();
            assert_eq!(est.eta, 1.0);
            assert!(est.converged);
        }
    }

    #[test]
    fn parabola_vertex_recovers_exact_minimum() {
        let f = |x: f64| 2.0 * (x - 0.3).powi(2) - 1.0;
        let (x, y) = parabola_vertex((0.0, f(0.0)), (0.25, f(0.25)), (0.7, f(0.7)));
        assert!((x - 0.3).abs() < 1e-14);
        assert!((y + 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_period_matches_rabi() {
        let p = params(0.0, 0.3, 0.4);
        let opts = IntegrationOptions {
            linear: true,
            ..IntegrationOptions::default()
        };
        let traj = dynamics::integrate_with(&p, &ModeAmplitudes::ground(), 100.0, &opts).unwrap();
        let period = detect_period(&traj).unwrap();
        assert!((period - 2.0 * PI / 0.5).abs() < 1e-4, "{period}");
    }

    #[test]
    fn constant_population_has_no_period() {
        let traj = dynamics::integrate(&params(1.0, 0.0, 0.0), &ModeAmplitudes::ground(), 50.0, 1e-10).unwrap();
        assert_eq!(detect_period(&traj), None);
    }

    #[test]
    fn locked_and_unlocked_examples() {
        let cfg = AveragingConfig::default();
        let g = ModeAmplitudes::ground();
        assert_eq!(
            classify_regime(&params(1.0, 0.4, 0.0), &g, &cfg).unwrap(),
            RegimeLabel::Locked
        );
        assert_eq!(
            classify_regime(&params(1.0, 0.6, 0.0), &g, &cfg).unwrap(),
            RegimeLabel::Unlocked
        );
        assert_eq!(
            classify_regime(&params(0.1, 0.2, 0.45), &g, &cfg).unwrap(),
            RegimeLabel::Locked
        );
    }

    #[test]
    fn classification_requires_ground_start() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let init = ModeAmplitudes::new(h.into(), h.into());
        assert!(classify_regime(&params(1.0, 0.4, 0.0), &init, &AveragingConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let g = ModeAmplitudes::ground();
        let p = params(1.0, 0.4, 0.0);
        let short = AveragingConfig {
            max_horizon: 10.0,
            ..Default::default()
        };
        assert!(eta(&p, &g, &short).is_err());
        let loose = AveragingConfig {
            tolerance: 0.5,
            ..Default::default()
        };
        assert!(eta(&p, &g, &loose).is_err());
    }

    #[test]
    fn unlocked_resonant_eta_vanishes() {
        let est = eta(
            &params(1.0, 0.6, 0.0),
            &ModeAmplitudes::ground(),
            &AveragingConfig::default(),
        )
        .unwrap();
        assert!(est.eta.abs() < 0.01, "{est:?}");
        assert!(est.converged);
        assert_eq!(est.method, AveragingMethod::Periodic);
        assert!((est.mean_n0 + est.mean_np - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_single_zero_point() {
        let out = sweep_eta(1.0, 0.0, &[0.0], &AveragingConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].b, 0.0);
        assert_eq!(out[0].outcome.as_ref().unwrap().eta, 1.0);
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        assert!(sweep_eta(1.0, 0.0, &[0.3, 0.1], &AveragingConfig::default()).is_err());
    }

    #[test]
    fn same_regime_bracket_is_invalid() {
        let err = find_critical_b(1.0, 0.0, (0.1, 0.2), 1e-3, &CriticalConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket { .. }));
    }

    #[test]
    fn smooth_transition_reports_zero_crossing() {
        // Synthetic model: eta falls linearly to zero at 0.3 with no jump.
        let model = |x: f64| {
            let eta = (1.0 - x / 0.3).max(0.0);
            let label = if x < 0.25 {
                RegimeLabel::Locked
            } else {
                RegimeLabel::Unlocked
            };
            Ok((
                label,
                EtaEstimate::from_eta(eta, 1.0, true, None, AveragingMethod::Periodic),
            ))
        };
        let cp = locate_transition(model, (0.0, 1.0), 1e-6, &CriticalConfig::default()).unwrap();
        assert_eq!(cp.kind, CriticalKind::SmoothZero);
        // eta <= 0.01 first at x = 0.297.
        assert!((cp.critical - 0.297).abs() < 2e-6, "{cp:?}");
    }

    #[test]
    fn eta_jump_without_label_change_is_tracked() {
        let model = |x: f64| {
            let eta = if x < 0.6 { 0.8 } else { 0.1 };
            Ok((
                RegimeLabel::Locked,
                EtaEstimate::from_eta(eta, 1.0, true, None, AveragingMethod::Periodic),
            ))
        };
        let cp = locate_transition(model, (0.0, 1.0), 1e-5, &CriticalConfig::default()).unwrap();
        assert_eq!(cp.kind, CriticalKind::Jump);
        assert!(cp.bracket.0 < 0.6 && cp.bracket.1 >= 0.6);
    }
}
