//! Runs built from a [`RunConfig`]: a single certified run, the cutoff
//! sweep, the logistic-exponent comparison and the heat-equation oracle.
//!
//! Members of a sweep or comparison run on the rayon pool, one
//! single-threaded simulation each; results are assembled in input order,
//! so reports do not depend on the thread count.

use std::f64::consts::PI;

use hotspot_core::diagnostics::{check_l1_bound, check_u2_time_integral, check_v_lower_bound, compute_record};
use hotspot_core::grid::{gradient_centered, integrate};
use hotspot_core::model::bound_constants;
use hotspot_core::stepper::{run, RunFailure, RunOutcome, RunStats};
use hotspot_core::{
    BlowupStatus, Coupling, DiagnosticsRecord, Field, Grid, Parameters, Slack, State, StepControl, Thresholds, Verdict,
};
use rayon::prelude::*;

use crate::config::{validate_ladder, RunConfig};
use crate::error::HarnessError;
use crate::initial::make_initial;

pub fn initial_state(cfg: &RunConfig) -> Result<State, HarnessError> {
    let (u, v) = make_initial(&cfg.initial, &cfg.grid, &cfg.params)?;
    Ok(State::new(0.0, u, v)?)
}

/// Every output state of a run, in time order.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub states: Vec<State>,
    pub status: BlowupStatus,
    pub stats: RunStats,
}

#[allow(clippy::result_large_err)]
pub fn simulate(s0: State, params: &Parameters, control: &StepControl, thresholds: &Thresholds) -> Result<Simulation, RunFailure> {
    let mut states = Vec::new();
    let RunOutcome { status, stats, .. } = run(s0, params, control, Coupling::Full, thresholds, |s| states.push(s.clone()))?;
    Ok(Simulation { states, status, stats })
}

/// Result of a certified run.
#[derive(Debug, Clone)]
pub struct CertifiedRun {
    pub records: Vec<DiagnosticsRecord>,
    pub verdicts: Vec<Verdict>,
    pub final_state: State,
    pub status: BlowupStatus,
    pub stats: RunStats,
}

impl CertifiedRun {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// The L¹ ceiling, the time-integral ceiling at the last record, and the
/// lower bound for `v`.
pub fn standard_verdicts(records: &[DiagnosticsRecord], cfg: &RunConfig, s0: &State) -> Result<Vec<Verdict>, HarnessError> {
    let Some(last) = records.last() else {
        return Ok(Vec::new());
    };
    let mass0 = integrate(&s0.u) + integrate(&s0.v);
    let bc = bound_constants(&cfg.params, cfg.grid.area(), mass0)?;
    let slack = Slack { dt: cfg.control.dt_init, h: cfg.grid.h() };
    let mut out = vec![check_l1_bound(records, &bc, &slack)?];
    out.extend(check_u2_time_integral(records, &bc, &cfg.params, last.t, &slack)?);
    out.push(check_v_lower_bound(records, s0.v.min())?);
    Ok(out)
}

/// Runs `cfg`, computing diagnostics on the fly, and checks the standard
/// verdicts.
pub fn certified_run(cfg: &RunConfig) -> Result<CertifiedRun, HarnessError> {
    let s0 = initial_state(cfg)?;
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut record_err = None;
    let outcome = run(s0.clone(), &cfg.params, &cfg.control, Coupling::Full, &cfg.thresholds, |s| {
        if record_err.is_some() {
            return;
        }
        match compute_record(s, &cfg.params, &cfg.diagnostics, records.last()) {
            Ok(r) => records.push(r),
            Err(e) => record_err = Some(e),
        }
    })?;
    if let Some(e) = record_err {
        return Err(e.into());
    }
    let verdicts = standard_verdicts(&records, cfg, &s0)?;
    Ok(CertifiedRun { records, verdicts, final_state: outcome.state, status: outcome.status, stats: outcome.stats })
}

/// Distances between consecutive rungs of a cutoff ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps_hi: f64,
    pub eps_lo: f64,
    /// `‖ln(u_lo+1) − ln(u_hi+1)‖` in space-time `L²`.
    pub d_lnu: f64,
    pub d_v: f64,
    pub d_gradv: f64,
    /// `‖u_lo − u_hi‖` in space-time `L^{3/2}`.
    pub d_u_lp: f64,
}

/// Whether each distance column is nonincreasing down the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monotonicity {
    pub d_lnu: bool,
    pub d_v: bool,
    pub d_gradv: bool,
    pub d_u_lp: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub ladder: Vec<f64>,
    pub t_end: f64,
    /// Rows for pairs whose members both succeeded, in ladder order.
    pub rows: Vec<SweepRow>,
    /// `(eps, message)` for each failed rung.
    pub failed: Vec<(f64, String)>,
    /// Largest `u` seen by each rung, `NaN` for failed rungs.
    pub sup_u: Vec<f64>,
    pub monotone: Monotonicity,
    /// Rejected steps with negative densities, summed over all rungs.
    pub clamp_events: usize,
}

fn nonincreasing(xs: impl Iterator<Item = f64>) -> bool {
    let xs: Vec<f64> = xs.collect();
    xs.windows(2).all(|w| w[1] <= w[0])
}

/// Space-time distances with the left rectangle rule over the shared output
/// times.
fn distances(a: &[State], b: &[State]) -> Result<[f64; 4], String> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.t != y.t) {
        return Err("output times differ".into());
    }
    let mut acc = [0.0; 4];
    for k in 0..a.len().saturating_sub(1) {
        let tau = a[k + 1].t - a[k].t;
        let (sa, sb) = (&a[k], &b[k]);
        let grid = sa.u.grid;
        let diff = |f: &dyn Fn(f64, f64) -> f64, x: &Field, y: &Field| {
            Field { grid, values: x.values.iter().zip(&y.values).map(|(&p, &q)| f(p, q)).collect() }
        };
        let dlnu = diff(&|p, q| libm::log1p(q) - libm::log1p(p), &sa.u, &sb.u);
        let dv = diff(&|p, q| q - p, &sa.v, &sb.v);
        let du = diff(&|p, q| libm::pow((q - p).abs(), 1.5), &sa.u, &sb.u);
        acc[0] += tau * integrate(&dlnu.map(|x| x * x));
        acc[1] += tau * integrate(&dv.map(|x| x * x));
        acc[2] += tau * integrate(&gradient_centered(&dv).magnitude_squared());
        acc[3] += tau * integrate(&du);
    }
    Ok([libm::sqrt(acc[0]), libm::sqrt(acc[1]), libm::sqrt(acc[2]), libm::pow(acc[3], 2.0 / 3.0)])
}

/// Runs every `ε` of `ladder` from the same initial state up to `t_end` and
/// measures consecutive-rung distances.
pub fn eps_sweep(cfg: &RunConfig, ladder: &[f64], t_end: f64) -> Result<SweepReport, HarnessError> {
    validate_ladder(ladder).map_err(|m| HarnessError::config(0, "sweep.ladder", m))?;
    let s0 = initial_state(cfg)?;
    let control = StepControl { t_end, ..cfg.control };
    control.validate()?;

    let runs: Vec<Result<(Vec<State>, usize), String>> = ladder
        .par_iter()
        .map(|&eps| {
            let params = cfg.params.with_eps(eps).map_err(|e| e.to_string())?;
            let sim = simulate(s0.clone(), &params, &control, &cfg.thresholds).map_err(|f| f.to_string())?;
            if !sim.status.is_none() {
                return Err(format!("{} threshold crossed at t = {}", sim.status.kind.as_str(), sim.status.time));
            }
            Ok((sim.states, sim.stats.clamp_events))
        })
        .collect();

    let mut failed = Vec::new();
    let mut sup_u = Vec::new();
    let mut clamp_events = 0;
    for (&eps, r) in ladder.iter().zip(&runs) {
        match r {
            Ok((states, clamps)) => {
                sup_u.push(states.iter().map(|s| s.u.max()).fold(f64::NEG_INFINITY, f64::max));
                clamp_events += clamps;
            }
            Err(m) => {
                failed.push((eps, m.clone()));
                sup_u.push(f64::NAN);
            }
        }
    }
    let mut rows = Vec::new();
    for j in 0..ladder.len().saturating_sub(1) {
        let (Ok((hi, _)), Ok((lo, _))) = (&runs[j], &runs[j + 1]) else { continue };
        match distances(hi, lo) {
            Ok([d_lnu, d_v, d_gradv, d_u_lp]) => {
                rows.push(SweepRow { eps_hi: ladder[j], eps_lo: ladder[j + 1], d_lnu, d_v, d_gradv, d_u_lp })
            }
            Err(m) => failed.push((ladder[j + 1], m)),
        }
    }
    let monotone = Monotonicity {
        d_lnu: nonincreasing(rows.iter().map(|r| r.d_lnu)),
        d_v: nonincreasing(rows.iter().map(|r| r.d_v)),
        d_gradv: nonincreasing(rows.iter().map(|r| r.d_gradv)),
        d_u_lp: nonincreasing(rows.iter().map(|r| r.d_u_lp)),
    };
    Ok(SweepReport { ladder: ladder.to_vec(), t_end, rows, failed, sup_u, monotone, clamp_events })
}

/// Running maxima of `‖u‖_∞` and `‖v‖_∞` up to one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    pub horizon: f64,
    pub sup_linf_u: f64,
    pub sup_linf_v: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub rows: Vec<GammaRow>,
    /// Per `γ`: `Some(agree)` for `γ > 0`, where `agree` says the maxima over
    /// all horizons are within [`GammaReport::TOLERANCE`] of each other;
    /// `None` for `γ = 0`, which carries no verdict.
    pub stable: Vec<(f64, Option<bool>)>,
    pub clamp_events: usize,
}

impl GammaReport {
    pub const TOLERANCE: f64 = 0.01;
}

fn relative_spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi.abs()
    }
}

/// Runs each `γ` once to the longest horizon and reads off the running
/// maxima at every horizon.
pub fn gamma_compare(cfg: &RunConfig, gammas: &[f64], horizons: &[f64]) -> Result<GammaReport, HarnessError> {
    if gammas.iter().any(|&g| !(g >= 0.0)) {
        return Err(HarnessError::config(0, "gamma.values", "constraint violated: gamma >= 0"));
    }
    if horizons.is_empty() || horizons.iter().any(|&t| !(t > 0.0)) {
        return Err(HarnessError::config(0, "gamma.horizons", "constraint violated: horizons > 0"));
    }
    let s0 = initial_state(cfg)?;
    let t_max = horizons.iter().copied().fold(0.0, f64::max);
    let control = StepControl { t_end: t_max, ..cfg.control };
    control.validate()?;

    // (t, max u, max v) per output, and the clamp count
    type Trace = (Vec<(f64, f64, f64)>, usize);
    let traces: Vec<Result<Trace, String>> = gammas
        .par_iter()
        .map(|&gamma| {
            let params = cfg.params.with_gamma(gamma).map_err(|e| e.to_string())?;
            let mut trace = Vec::new();
            let out = run(s0.clone(), &params, &control, Coupling::Full, &cfg.thresholds, |s| {
                trace.push((s.t, s.u.max(), s.v.max()))
            })
            .map_err(|f| f.to_string())?;
            if !out.status.is_none() {
                return Err(format!("{} threshold crossed at t = {}", out.status.kind.as_str(), out.status.time));
            }
            Ok((trace, out.stats.clamp_events))
        })
        .collect();

    let mut rows = Vec::new();
    let mut stable = Vec::new();
    let mut clamp_events = 0;
    for (&gamma, trace) in gammas.iter().zip(&traces) {
        let mut us = Vec::new();
        let mut vs = Vec::new();
        for &horizon in horizons {
            let row = match trace {
                Ok((tr, _)) => {
                    let upto = tr.iter().filter(|(t, _, _)| *t <= horizon * (1.0 + 1e-12));
                    let (mu, mv) = upto.fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b), &(_, u, v)| (a.max(u), b.max(v)));
                    us.push(mu);
                    vs.push(mv);
                    GammaRow { gamma, horizon, sup_linf_u: mu, sup_linf_v: mv, failure: None }
                }
                Err(m) => GammaRow { gamma, horizon, sup_linf_u: f64::NAN, sup_linf_v: f64::NAN, failure: Some(m.clone()) },
            };
            rows.push(row);
        }
        let verdict = (gamma > 0.0).then(|| {
            trace.is_ok()
                && relative_spread(&us) <= GammaReport::TOLERANCE
                && relative_spread(&vs) <= GammaReport::TOLERANCE
        });
        stable.push((gamma, verdict));
        if let Ok((_, c)) = trace {
            clamp_events += c;
        }
    }
    Ok(GammaReport { rows, stable, clamp_events })
}

/// Space-time `L²` error of the diffusion-only scheme against the exact
/// solution `1 + ½ e^{−π²(1/lx² + 1/ly²)t} cos(πx/lx) cos(πy/ly)`.
pub fn heat_oracle_error(grid: &Grid, dt: f64, t_end: f64) -> Result<f64, HarnessError> {
    let mode = |x: f64, y: f64| libm::cos(PI * x / grid.lx) * libm::cos(PI * y / grid.ly);
    let u0 = Field::from_fn(*grid, |x, y| 1.0 + 0.5 * mode(x, y));
    let s0 = State::new(0.0, u0, Field::constant(*grid, 1.0))?;
    let rate = PI * PI * (1.0 / (grid.lx * grid.lx) + 1.0 / (grid.ly * grid.ly));
    let shape = Field::from_fn(*grid, mode);
    // reactions and taxis are switched off by the coupling mode
    let params = Parameters::new(0.0, 1.0, 1.0, 0.0, 0.0)?;
    let control = StepControl::new(dt, t_end, dt);

    let mut acc = 0.0;
    let mut t_prev = 0.0;
    run(s0, &params, &control, Coupling::DiffusionOnly, &Thresholds::default(), |s| {
        if s.t == 0.0 {
            return;
        }
        let decay = 0.5 * libm::exp(-rate * s.t);
        let err2: f64 = s.u.values.iter().zip(&shape.values).map(|(&u, &m)| (u - 1.0 - decay * m).powi(2)).sum();
        acc += (s.t - t_prev) * err2 * grid.cell_area();
        t_prev = s.t;
    })?;
    Ok(libm::sqrt(acc))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
