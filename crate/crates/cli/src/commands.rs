//! Subcommand implementations. Each produces a [`Report`] in memory;
//! writing artifacts is left to [`crate::output`].

use std::env;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use topomode::dynamics;
use topomode::experiment::{self, CriticalGradient};
use topomode::order::{self, CriticalPoint, EtaEstimate};
use topomode::{ModeCache, ModeIndex, SolvedSetup};

use crate::config::{Control, RunConfig};
use crate::error::CliError;
use crate::plot::{Curve, PlotStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Eta,
    Sweep,
    Critical,
    Modes,
    Quadrupole,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Eta => "eta",
            Subcommand::Sweep => "sweep",
            Subcommand::Critical => "critical",
            Subcommand::Modes => "modes",
            Subcommand::Quadrupole => "quadrupole",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one subcommand before it is written to disk.
#[derive(Debug, Clone)]
pub struct Report {
    pub csv: Vec<u8>,
    pub rows: Value,
    pub diagnostics: Value,
    pub summary: String,
    pub plot: Option<(Vec<Curve>, PlotStyle)>,
    /// Rows whose computation failed; they are still written with a status.
    pub failed_rows: usize,
}

fn tabulate<T: Serialize>(rows: &[T]) -> Result<(Vec<u8>, Value), CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Validation(format!("cannot encode CSV row: {e}")))?;
    }
    let csv = writer
        .into_inner()
        .map_err(|e| CliError::Validation(format!("cannot encode CSV: {e}")))?;
    let json = serde_json::to_value(rows).map_err(|e| CliError::Validation(format!("cannot encode rows: {e}")))?;
    Ok((csv, json))
}

fn status(outcome: &topomode::Result<EtaEstimate>) -> String {
    match outcome {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}"),
    }
}

/// Mode cache backed by `$TOPOMODE_CACHE_DIR/modes.json`, when set.
struct DiskCache {
    cache: ModeCache,
    path: Option<PathBuf>,
}

impl DiskCache {
    fn open() -> Result<Self, CliError> {
        let Some(dir) = env::var_os("TOPOMODE_CACHE_DIR") else {
            return Ok(Self {
                cache: ModeCache::new(),
                path: None,
            });
        };
        let path = PathBuf::from(dir).join("modes.json");
        let cache = ModeCache::load(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            cache,
            path: Some(path),
        })
    }

    fn solve(&self, cfg: &RunConfig) -> Result<SolvedSetup, CliError> {
        Ok(SolvedSetup::solve_with_cache(&cfg.physical_setup(), Some(&self.cache))?)
    }

    fn persist(&self) -> Result<(), CliError> {
        let Some(path) = &self.path else { return Ok(()) };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        self.cache.save(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })
    }
}

pub fn execute(sub: Subcommand, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match sub {
        Subcommand::Simulate => simulate(cfg),
        Subcommand::Eta => eta(cfg),
        Subcommand::Sweep => sweep(cfg),
        Subcommand::Critical => critical(cfg),
        Subcommand::Modes => modes(cfg),
        Subcommand::Quadrupole => quadrupole(cfg),
    }
}

#[derive(Serialize)]
struct SimulateRow {
    t: f64,
    n0: f64,
    np: f64,
    c0_re: f64,
    c0_im: f64,
    cp_re: f64,
    cp_im: f64,
}

fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = &cfg.dynamics;
    let traj = dynamics::integrate_with(&d.params()?, &d.initial_state(), d.horizon, &d.integration())?;
    let rows: Vec<SimulateRow> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| SimulateRow {
            t,
            n0: s.n0(),
            np: s.np(),
            c0_re: s.c0.re,
            c0_im: s.c0.im,
            cp_re: s.cp.re,
            cp_im: s.cp.im,
        })
        .collect();
    let (csv, json) = tabulate(&rows)?;
    let pops = traj.populations();
    let drift = traj.max_normalization_error();
    let curves = vec![
        Curve::new("n0", rows.iter().map(|r| (r.t, r.n0)).collect()),
        Curve::new("np", rows.iter().map(|r| (r.t, r.np)).collect()),
    ];
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({
            "samples": rows.len(),
            "min_n0": pops.min_n0(),
            "max_np": pops.max_np(),
            "max_normalization_error": drift,
        }),
        summary: format!(
            "samples={} min_n0={:.6} max_np={:.6} drift={drift:.2e}",
            rows.len(),
            pops.min_n0(),
            pops.max_np()
        ),
        plot: Some((
            curves,
            PlotStyle::new(
                format!("populations, a={} b={} delta={}", d.a, d.b, d.delta),
                "t'",
                "population",
            ),
        )),
        failed_rows: 0,
    })
}

#[derive(Serialize)]
struct EtaRow {
    a: f64,
    b: f64,
    delta: f64,
    eta: f64,
    mean_n0: f64,
    mean_np: f64,
    averaging_horizon: f64,
    converged: bool,
    period: Option<f64>,
    method: String,
    regime: Option<String>,
}

fn method_name(est: &EtaEstimate) -> String {
    serde_json::to_value(est.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn eta(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = &cfg.dynamics;
    let params = d.params()?;
    let init = d.initial_state();
    let from_ground = (init.n0() - 1.0).abs() <= dynamics::NORMALIZATION_SLACK;
    let (regime, est) = if from_ground {
        let (label, est) = order::classify_with_eta(&params, &init, &cfg.averaging)?;
        (Some(label.to_string()), est)
    } else {
        (None, order::eta(&params, &init, &cfg.averaging)?)
    };
    let row = EtaRow {
        a: d.a,
        b: d.b,
        delta: d.delta,
        eta: est.eta,
        mean_n0: est.mean_n0,
        mean_np: est.mean_np,
        averaging_horizon: est.averaging_horizon,
        converged: est.converged,
        period: est.period_estimate,
        method: method_name(&est),
        regime: regime.clone(),
    };
    let summary = format!(
        "eta={:.6} converged={} method={}{}",
        est.eta,
        est.converged,
        row.method,
        regime.map(|r| format!(" regime={r}")).unwrap_or_default()
    );
    let (csv, json) = tabulate(&[row])?;
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({ "estimate": est }),
        summary,
        plot: None,
        failed_rows: 0,
    })
}

#[derive(Serialize)]
struct SweepRow {
    b: f64,
    eta: Option<f64>,
    converged: Option<bool>,
    period: Option<f64>,
    status: String,
}

fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = &cfg.dynamics;
    let grid = cfg.sweep.b_values();
    let points = order::sweep_eta(d.a, d.delta, &grid, &cfg.averaging)?;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|p| {
            let est = p.outcome.as_ref().ok();
            SweepRow {
                b: p.b,
                eta: est.map(|e| e.eta),
                converged: est.map(|e| e.converged),
                period: est.and_then(|e| e.period_estimate),
                status: status(&p.outcome),
            }
        })
        .collect();
    let failed = points.iter().filter(|p| p.outcome.is_err()).count();
    let unconverged = points
        .iter()
        .filter(|p| p.outcome.as_ref().is_ok_and(|e| !e.converged))
        .count();
    let curve: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.eta.map(|e| (r.b, e))).collect();
    let (csv, json) = tabulate(&rows)?;
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({ "points": rows.len(), "failed": failed, "unconverged": unconverged }),
        summary: format!("points={} failed={failed} unconverged={unconverged}", rows.len()),
        plot: (curve.len() >= 2).then(|| {
            (
                vec![Curve::new("eta", curve)],
                PlotStyle::new(format!("order parameter, a={} delta={}", d.a, d.delta), "b", "eta"),
            )
        }),
        failed_rows: failed,
    })
}

#[derive(Serialize)]
struct CriticalRow {
    control: String,
    critical: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    bracket_width: f64,
    kind: String,
    eta_below: f64,
    eta_above: f64,
    a: f64,
    b: f64,
    delta: f64,
}

fn critical(cfg: &RunConfig) -> Result<Report, CliError> {
    let [lo, hi] = cfg.sweep.bracket;
    let crit = cfg.critical();
    let (name, point, params, extra): (&str, CriticalPoint, _, Value) = match cfg.sweep.control {
        Control::B => {
            let d = &cfg.dynamics;
            let point = order::find_critical_b(d.a, d.delta, (lo, hi), cfg.sweep.tol, &crit)?;
            let params = topomode::DimensionlessParams::new(d.a, point.critical, d.delta)?;
            ("b", point, params, Value::Null)
        }
        Control::Gradient => {
            let cache = DiskCache::open()?;
            let solved = cache.solve(cfg)?;
            cache.persist()?;
            let CriticalGradient { point, params } =
                experiment::find_critical_gradient(&solved, cfg.sweep.detuning_hz, (lo, hi), cfg.sweep.tol, &crit)?;
            (
                "gradient_gauss_per_cm",
                point,
                params,
                json!({ "setup": solved, "detuning_hz": cfg.sweep.detuning_hz }),
            )
        }
    };
    let row = CriticalRow {
        control: name.into(),
        critical: point.critical,
        bracket_lo: point.bracket.0,
        bracket_hi: point.bracket.1,
        bracket_width: point.bracket_width,
        kind: point.kind.to_string(),
        eta_below: point.eta_below,
        eta_above: point.eta_above,
        a: params.a,
        b: params.b,
        delta: params.delta,
    };
    let summary = format!(
        "{name}_critical={:.6} bracket=[{:.6}, {:.6}] kind={} eta_below={:.4} eta_above={:.4}",
        point.critical, point.bracket.0, point.bracket.1, point.kind, point.eta_below, point.eta_above
    );
    let (csv, json) = tabulate(&[row])?;
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({ "point": point, "physical": extra }),
        summary,
        plot: None,
        failed_rows: 0,
    })
}

#[derive(Serialize)]
struct ModeRow {
    mode: String,
    u: f64,
    v: f64,
    variational_energy: f64,
    eigenvalue: f64,
}

fn modes(cfg: &RunConfig) -> Result<Report, CliError> {
    let setup = cfg.physical_setup();
    let (g, lambda) = (setup.coupling(), setup.anisotropy());
    let cache = DiskCache::open()?;
    let found = ModeIndex::ALL
        .iter()
        .map(|&i| cache.cache.get_or_minimize(i, g, lambda))
        .collect::<topomode::Result<Vec<_>>>()?;
    cache.persist()?;
    let rows: Vec<ModeRow> = found
        .iter()
        .map(|m| ModeRow {
            mode: m.index.label().into(),
            u: m.u,
            v: m.v,
            variational_energy: m.variational_energy,
            eigenvalue: m.eigenvalue,
        })
        .collect();
    let ground = found[0].eigenvalue;
    let gaps: Vec<String> = found[1..]
        .iter()
        .map(|m| {
            format!(
                "{}:{:.2}Hz",
                m.index,
                topomode::units::rad_per_s_to_hz((m.eigenvalue - ground) * setup.trap.omega_r)
            )
        })
        .collect();
    let (csv, json) = tabulate(&rows)?;
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({
            "g": g,
            "lambda": lambda,
            "oscillator_length_m": setup.oscillator_length(),
            "modes": found,
        }),
        summary: format!("g={g:.4} lambda={lambda:.4} transitions {}", gaps.join(" ")),
        plot: None,
        failed_rows: 0,
    })
}

#[derive(Serialize)]
struct QuadrupoleRow {
    #[serde(rename = "A_gauss_per_cm")]
    gradient: f64,
    a: f64,
    b: f64,
    delta: f64,
    alpha_p0_rad_s: f64,
    eta: Option<f64>,
    converged: Option<bool>,
    status: String,
}

fn quadrupole(cfg: &RunConfig) -> Result<Report, CliError> {
    let cache = DiskCache::open()?;
    let solved = cache.solve(cfg)?;
    cache.persist()?;
    let detuning = cfg.sweep.detuning_hz;
    let points = experiment::eta_vs_gradient(&solved, detuning, &cfg.sweep.gradient_values(), &cfg.averaging)?;
    let rows: Vec<QuadrupoleRow> = points
        .iter()
        .map(|p| {
            let est = p.outcome.as_ref().ok();
            QuadrupoleRow {
                gradient: p.gradient,
                a: p.params.a,
                b: p.params.b,
                delta: p.params.delta,
                alpha_p0_rad_s: solved.alpha_p0,
                eta: est.map(|e| e.eta),
                converged: est.map(|e| e.converged),
                status: status(&p.outcome),
            }
        })
        .collect();
    let failed = points.iter().filter(|p| p.outcome.is_err()).count();
    let curve: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.eta.map(|e| (r.gradient, e))).collect();
    let (csv, json) = tabulate(&rows)?;
    Ok(Report {
        csv,
        rows: json,
        diagnostics: json!({
            "setup": solved,
            "interaction_ratio": solved.interaction_ratio(),
            "transition_frequency_hz": topomode::units::rad_per_s_to_hz(solved.transition_frequency),
            "failed": failed,
        }),
        summary: format!(
            "points={} failed={failed} a={:.4} alpha_p0={:.3}rad/s b_per_gradient={:.4}",
            rows.len(),
            solved.interaction_ratio(),
            solved.alpha_p0,
            solved.beta_per_gradient.abs() / solved.alpha_p0
        ),
        plot: (curve.len() >= 2).then(|| {
            (
                vec![Curve::new("eta", curve)],
                PlotStyle::new(format!("order parameter, detuning {detuning} Hz"), "A (G/cm)", "eta"),
            )
        }),
        failed_rows: failed,
    })
}
