//! IMEX time stepping.
//!
//! One step treats diffusion (and the linear decay of `v`) by backward Euler
//! and the taxis flux and the remaining reaction terms explicitly:
//!
//! ```text
//! (I − dt Δ_h) u'            = u + dt (−∇_h·J(u, v) − uv + ρu − μu^{2+γ})
//! ((1 + dt) I − dt Δ_h) v'   = v + dt uv
//! ```
//!
//! Nonnegativity of `u` comes from the step restriction
//! `dt · (outflow + v + μu^{1+γ} + ρ⁻) ≤ cfl_safety` together with the
//! M-matrix property of the implicit operator; nothing is ever clamped.
//! Treating `−v` implicitly makes the discrete decay `(1 + dt)^{-n}`, which
//! never drops below `e^{-t}`.

use alloc::vec;

use crate::error::{Error, Result};
use crate::grid::{gradient_centered, same_grid, taxis_divergence, taxis_outflow_rate, Field};
use crate::model::{reaction_u, Parameters};
use crate::solver::ShiftedDiffusion;

/// Relative residual at which the implicit diffusion solves stop.
pub const SOLVER_RTOL: f64 = 1e-10;
const SOLVER_MAX_ITER: usize = 10_000;
const GROWTH_AFTER: u32 = 10;
const GROWTH_FACTOR: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn new(t: f64, u: Field, v: Field) -> Result<Self> {
        same_grid(&u, &v)?;
        if !t.is_finite() {
            return Err(Error::NonFinite { t, field: "t" });
        }
        if !u.is_finite() {
            return Err(Error::NonFinite { t, field: "u" });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite { t, field: "v" });
        }
        if u.values.iter().any(|&x| x < 0.0) {
            return Err(Error::Invalid { name: "u", constraint: "u >= 0 everywhere" });
        }
        if v.values.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Invalid { name: "v", constraint: "v > 0 everywhere" });
        }
        Ok(State { t, u, v })
    }
}

/// Which terms take part in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    #[default]
    Full,
    /// Pure heat flow for both components (solver oracle mode).
    DiffusionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub cfl_safety: f64,
    /// Hard floor for `v`; `None` means `1e-12 · min v₀`.
    pub v_guard: Option<f64>,
    pub t_end: f64,
    pub output_every: f64,
}

impl StepControl {
    pub fn new(dt_init: f64, t_end: f64, output_every: f64) -> Self {
        StepControl { dt_init, dt_min: 1e-10, cfl_safety: 0.5, v_guard: None, t_end, output_every }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(Error::Invalid { name: "dt_init", constraint: "dt_init > 0" });
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init) {
            return Err(Error::Invalid { name: "dt_min", constraint: "0 < dt_min <= dt_init" });
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Invalid { name: "cfl_safety", constraint: "0 < cfl_safety <= 1" });
        }
        if let Some(g) = self.v_guard {
            if !(g > 0.0) {
                return Err(Error::Invalid { name: "v_guard", constraint: "v_guard > 0" });
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Invalid { name: "t_end", constraint: "t_end >= 0" });
        }
        if !(self.output_every > 0.0) {
            return Err(Error::Invalid { name: "output_every", constraint: "output_every > 0" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub u_sup_max: f64,
    pub v_w1inf_max: f64,
    pub v_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { u_sup_max: 1e8, v_w1inf_max: 1e8, v_min: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupKind {
    None,
    USupBlowup,
    VW1InfBlowup,
    VDegeneracy,
}

impl BlowupKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowupKind::None => "none",
            BlowupKind::USupBlowup => "u_sup_blowup",
            BlowupKind::VW1InfBlowup => "v_w1inf_blowup",
            BlowupKind::VDegeneracy => "v_degeneracy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupStatus {
    pub kind: BlowupKind,
    pub value: f64,
    pub time: f64,
}

impl BlowupStatus {
    pub fn none(time: f64) -> Self {
        BlowupStatus { kind: BlowupKind::None, value: 0.0, time }
    }

    pub fn is_none(&self) -> bool {
        self.kind == BlowupKind::None
    }
}

/// First threshold crossed among `max u`, `max(|v| + |∇v|)` and `min v`.
pub fn detect_blowup(s: &State, th: &Thresholds) -> BlowupStatus {
    let u_max = s.u.max();
    if u_max > th.u_sup_max {
        return BlowupStatus { kind: BlowupKind::USupBlowup, value: u_max, time: s.t };
    }
    let grad = gradient_centered(&s.v).magnitude();
    let w1 = s
        .v
        .values
        .iter()
        .zip(&grad.values)
        .map(|(v, g)| v.abs() + g)
        .fold(f64::NEG_INFINITY, f64::max);
    if w1 > th.v_w1inf_max {
        return BlowupStatus { kind: BlowupKind::VW1InfBlowup, value: w1, time: s.t };
    }
    let v_min = s.v.min();
    if v_min < th.v_min {
        return BlowupStatus { kind: BlowupKind::VDegeneracy, value: v_min, time: s.t };
    }
    BlowupStatus::none(s.t)
}

/// Largest step for which the explicit stage keeps `u` nonnegative, scaled
/// by `cfl_safety`. Infinite when nothing drains `u`.
pub fn positivity_limit(s: &State, p: &Parameters, coupling: Coupling, cfl_safety: f64) -> f64 {
    if coupling == Coupling::DiffusionOnly {
        return f64::INFINITY;
    }
    let mut rate = vec![0.0; s.u.grid.len()];
    taxis_outflow_rate(&s.u, &s.v, p, &mut rate);
    let decay = (-p.rho).max(0.0);
    let max_rate = rate
        .iter()
        .zip(s.u.values.iter().zip(&s.v.values))
        .map(|(r, (&u, &v))| r + v + p.mu * p.logistic_rate(u) + decay)
        .fold(0.0, f64::max);
    if max_rate == 0.0 {
        f64::INFINITY
    } else {
        cfl_safety / max_rate
    }
}

/// Per-step bookkeeping returned with an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub solver_iterations: usize,
}

/// One IMEX step of size `dt` from `s`.
///
/// Fails with a rejection (`PositivityRestriction`, `NegativeDensity`,
/// `Solver`) when a smaller step may succeed, and with `Degeneracy` or
/// `NonFinite` otherwise.
pub fn step_imex(
    s: &State,
    p: &Parameters,
    dt: f64,
    coupling: Coupling,
    cfl_safety: f64,
    v_guard: f64,
) -> Result<(State, StepReport)> {
    let grid = s.u.grid;
    let n = grid.len();

    let (rhs_u, rhs_v, v_shift) = match coupling {
        Coupling::Full => {
            let limit = positivity_limit(s, p, coupling, cfl_safety);
            if dt > limit {
                return Err(Error::PositivityRestriction { dt, limit });
            }
            let div = taxis_divergence(&s.u, &s.v, p)?;
            let mut ru = vec![0.0; n];
            let mut rv = vec![0.0; n];
            for k in 0..n {
                let (u, v) = (s.u.values[k], s.v.values[k]);
                ru[k] = u + dt * (-div.values[k] + reaction_u(u, v, p));
                rv[k] = v + dt * u * v;
            }
            (ru, rv, 1.0 + dt)
        }
        Coupling::DiffusionOnly => (s.u.values.clone(), s.v.values.clone(), 1.0),
    };

    // Starting guesses drop the diffusion term; exact on homogeneous states.
    let mut u_new = rhs_u.clone();
    let mut v_new: alloc::vec::Vec<f64> = rhs_v.iter().map(|r| r / v_shift).collect();
    let op_u = ShiftedDiffusion { grid, shift: 1.0, tau: dt };
    let op_v = ShiftedDiffusion { grid, shift: v_shift, tau: dt };
    let su = op_u.solve(&rhs_u, &mut u_new, SOLVER_RTOL, SOLVER_MAX_ITER)?;
    let sv = op_v.solve(&rhs_v, &mut v_new, SOLVER_RTOL, SOLVER_MAX_ITER)?;

    let t = s.t + dt;
    if u_new.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t, field: "u" });
    }
    if v_new.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t, field: "v" });
    }
    let negative = u_new.iter().filter(|&&x| x < 0.0).count();
    if negative > 0 {
        return Err(Error::NegativeDensity { cells: negative });
    }
    let min_v = v_new.iter().copied().fold(f64::INFINITY, f64::min);
    if min_v <= v_guard {
        return Err(Error::Degeneracy { t, min_v, guard: v_guard });
    }
    Ok((
        State { t, u: Field { grid, values: u_new }, v: Field { grid, values: v_new } },
        StepReport { solver_iterations: su.iterations + sv.iterations },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Cells that came out negative in rejected steps; a clamping scheme
    /// would have had to touch each of them.
    pub clamp_events: usize,
    pub solver_iterations: usize,
    pub dt_min_used: f64,
    pub dt_max_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: State,
    pub status: BlowupStatus,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub last_good: State,
    pub stats: RunStats,
}

impl core::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} (last good state at t = {})", self.error, self.last_good.t)
    }
}

impl core::error::Error for RunFailure {}

/// Integrates from `s0` to `ctrl.t_end`.
///
/// `sink` sees the initial state, every state at a multiple of
/// `output_every`, the final state at `t_end`, and the state at which a
/// threshold was crossed. Steps are clipped to land exactly on output times.
#[allow(clippy::result_large_err)]
pub fn run(
    s0: State,
    p: &Parameters,
    ctrl: &StepControl,
    coupling: Coupling,
    thresholds: &Thresholds,
    mut sink: impl FnMut(&State),
) -> core::result::Result<RunOutcome, RunFailure> {
    let mut stats = RunStats { dt_min_used: f64::INFINITY, ..RunStats::default() };
    let fail = |error: Error, last_good: State, stats: RunStats| RunFailure { error, last_good, stats };

    if let Err(e) = ctrl.validate().and_then(|_| p.validate()) {
        return Err(fail(e, s0, stats));
    }
    let v_guard = ctrl.v_guard.unwrap_or(1e-12 * s0.v.min());

    sink(&s0);
    let mut last_emitted = s0.t;
    let mut state = s0;
    let mut dt = ctrl.dt_init;
    let mut streak = 0u32;
    let mut k_out: u64 = 1;

    loop {
        let next_out = (k_out as f64 * ctrl.output_every).min(ctrl.t_end);
        let remaining = next_out - state.t;
        if remaining <= 1e-12 * next_out.max(1.0) {
            if state.t != last_emitted {
                state.t = next_out;
                sink(&state);
                last_emitted = state.t;
            }
            if next_out >= ctrl.t_end {
                break;
            }
            k_out += 1;
            continue;
        }
        // a step that would land within rounding of the output time is clipped onto it
        let clipped = remaining <= dt * (1.0 + 1e-9);
        let h = if clipped { remaining } else { dt };
        match step_imex(&state, p, h, coupling, ctrl.cfl_safety, v_guard) {
            Ok((mut next, report)) => {
                if clipped {
                    next.t = next_out;
                }
                stats.accepted += 1;
                stats.solver_iterations += report.solver_iterations;
                stats.dt_min_used = stats.dt_min_used.min(h);
                stats.dt_max_used = stats.dt_max_used.max(h);
                if !clipped {
                    streak += 1;
                    if streak >= GROWTH_AFTER {
                        dt = (dt * GROWTH_FACTOR).min(ctrl.dt_init);
                        streak = 0;
                    }
                }
                state = next;
                let at_output = clipped;
                let status = detect_blowup(&state, thresholds);
                if !status.is_none() {
                    sink(&state);
                    return Ok(RunOutcome { state, status, stats });
                }
                if at_output {
                    sink(&state);
                    last_emitted = state.t;
                    k_out += 1;
                    if next_out >= ctrl.t_end {
                        break;
                    }
                }
            }
            Err(e) if e.is_rejection() => {
                stats.rejected += 1;
                if let Error::NegativeDensity { cells } = e {
                    stats.clamp_events += cells;
                }
                streak = 0;
                dt = h * 0.5;
                if dt < ctrl.dt_min {
                    let err = Error::StepUnderflow { t: state.t, dt, dt_min: ctrl.dt_min };
                    return Err(fail(err, state, stats));
                }
            }
            Err(e) => return Err(fail(e, state, stats)),
        }
    }
    let t = state.t;
    Ok(RunOutcome { state, status: BlowupStatus::none(t), stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::homogeneous_fixed_point;
    use std::vec::Vec;

    fn const_state(n: usize, u: f64, v: f64) -> State {
        let g = Grid::unit_square(n).unwrap();
        State::new(0.0, Field::constant(g, u), Field::constant(g, v)).unwrap()
    }

    #[test]
    fn state_validation() {
        let g = Grid::unit_square(4).unwrap();
        assert!(State::new(0.0, Field::constant(g, -1.0), Field::constant(g, 1.0)).is_err());
        assert!(State::new(0.0, Field::constant(g, 1.0), Field::constant(g, 0.0)).is_err());
        let g2 = Grid::unit_square(5).unwrap();
        assert!(matches!(
            State::new(0.0, Field::constant(g, 1.0), Field::constant(g2, 1.0)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn fixed_point_step_is_stationary() {
        let p = Parameters::new(2.0, 1.0, 7.0, 0.0, 0.0).unwrap();
        let (us, vs) = homogeneous_fixed_point(&p).unwrap();
        let s = const_state(16, us, vs);
        let (next, _) = step_imex(&s, &p, 1e-3, Coupling::Full, 0.5, 1e-12).unwrap();
        for (a, b) in next.u.values.iter().zip(&s.u.values).chain(next.v.values.iter().zip(&s.v.values)) {
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn pure_decay_follows_backward_euler_recurrence() {
        let p = Parameters::new(0.3, 1.0, 2.0, 0.0, 0.0).unwrap();
        let mut s = const_state(8, 0.0, 1.0);
        let dt = 0.01;
        for n in 1..=200 {
            s = step_imex(&s, &p, dt, Coupling::Full, 0.5, 1e-12).unwrap().0;
            let expect = libm::pow(1.0 + dt, -(n as f64));
            assert!(s.u.values.iter().all(|&x| x == 0.0));
            for &v in &s.v.values {
                assert!((v - expect).abs() <= 1e-14);
                assert!(v >= libm::exp(-s.t));
            }
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = Parameters::new(-50.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let s = const_state(4, 1.0, 1.0);
        assert!(matches!(
            step_imex(&s, &p, 0.1, Coupling::Full, 0.5, 1e-12),
            Err(Error::PositivityRestriction { .. })
        ));
    }

    #[test]
    fn detect_blowup_examples() {
        let s = const_state(6, 1.0, 1.0);
        assert!(detect_blowup(&s, &Thresholds::default()).is_none());

        let mut hot = s.clone();
        hot.u.values[3] = 1e9;
        hot.t = 2.5;
        let st = detect_blowup(&hot, &Thresholds { u_sup_max: 1e6, ..Thresholds::default() });
        assert_eq!(st.kind, BlowupKind::USupBlowup);
        assert_eq!(st.value, 1e9);
        assert_eq!(st.time, 2.5);

        let steep = State::new(0.0, s.u.clone(), Field::from_fn(s.u.grid, |x, _| 1.0 + 100.0 * x)).unwrap();
        let st = detect_blowup(&steep, &Thresholds { v_w1inf_max: 50.0, ..Thresholds::default() });
        assert_eq!(st.kind, BlowupKind::VW1InfBlowup);
    }

    #[test]
    fn degeneracy_threshold_crossed_near_ln2() {
        let p = Parameters::new(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let ctrl = StepControl::new(1e-3, 1.0, 0.1);
        let th = Thresholds { v_min: 0.5, ..Thresholds::default() };
        let out = run(const_state(8, 0.0, 1.0), &p, &ctrl, Coupling::Full, &th, |_| {}).unwrap();
        assert_eq!(out.status.kind, BlowupKind::VDegeneracy);
        // (1+dt)^{-n} < 1/2 first at n = ceil(ln 2 / ln(1+dt))
        let n = libm::ceil(core::f64::consts::LN_2 / libm::log1p(1e-3));
        assert!((out.status.time - n * 1e-3).abs() < 1e-9, "{}", out.status.time);
        assert!((out.status.time - core::f64::consts::LN_2).abs() < 2e-3);
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let s0 = const_state(4, 0.7, 1.3);
        let mut calls = 0;
        let out = run(s0.clone(), &p, &StepControl::new(1e-3, 0.0, 0.1), Coupling::Full, &Thresholds::default(), |_| {
            calls += 1
        })
        .unwrap();
        assert_eq!(out.state, s0);
        assert!(out.status.is_none());
        assert_eq!(calls, 1);
    }

    #[test]
    fn outputs_land_on_multiples() {
        let p = Parameters::new(1.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let g = Grid::unit_square(8).unwrap();
        let s0 = State::new(
            0.0,
            Field::from_fn(g, |x, y| 0.5 + 0.3 * x * y),
            Field::from_fn(g, |x, _| 1.0 + 0.2 * x),
        )
        .unwrap();
        let mut times = Vec::new();
        let ctrl = StepControl::new(3e-3, 0.1, 0.025);
        run(s0, &p, &ctrl, Coupling::Full, &Thresholds::default(), |s| times.push(s.t)).unwrap();
        let expect: Vec<f64> = (0..5).map(|k| k as f64 * 0.025).collect();
        assert_eq!(times, expect);
    }

    #[test]
    fn step_control_validation() {
        let mut c = StepControl::new(1e-3, 1.0, 0.1);
        assert!(c.validate().is_ok());
        c.cfl_safety = 1.5;
        assert!(c.validate().is_err());
        let mut c = StepControl::new(1e-3, 1.0, 0.1);
        c.dt_min = 1.0;
        assert!(c.validate().is_err());
    }
}
