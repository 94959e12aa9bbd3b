//! Discrete residuals of the generalized-solution inequalities.
//!
//! A trajectory stored on a uniform time lattice is tested against separable
//! functions `φ(x, t) = ψ(x) ζ(t)` and three relations are evaluated:
//!
//! * mass: `∫u(T) − ∫u₀ ≤ −∫₀ᵀ∫uv + ρ∫₀ᵀ∫u − μ∫₀ᵀ∫u^{2+γ}`;
//! * `ln(u+1)` supersolution inequality, left minus right side `≥ 0`;
//! * weak identity for `v`, left minus right side `= 0`.
//!
//! Time integrals use the trapezoidal rule on the lattice, `φ_t` is a
//! centered difference of the analytic `ζ`. Spatial products of gradients
//! are evaluated face by face (the form adjoint to the solver's Laplacian),
//! with face coefficients taken as two-cell averages.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::diagnostics::{Sense, Slack, Verdict};
use crate::error::{Error, Result};
use crate::grid::{face_form, integrate, laplacian_neumann, Field, Grid};
use crate::model::{cutoff_eta_unchecked, Parameters};
use crate::stepper::State;

/// States at `t_k = k τ`, `k = 0..=N`, starting from the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn new(states: Vec<State>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Usage("trajectory needs at least two states".into()));
        }
        if states[0].t != 0.0 {
            return Err(Error::Usage(format!("trajectory must start at t = 0, got {}", states[0].t)));
        }
        let tau = states[1].t - states[0].t;
        if !(tau > 0.0) {
            return Err(Error::Usage("nonpositive trajectory spacing".into()));
        }
        let grid = states[0].u.grid;
        for (k, s) in states.iter().enumerate() {
            if (s.t - k as f64 * tau).abs() > 1e-9 * tau.max(s.t) {
                return Err(Error::Usage(format!("trajectory not uniform at index {k} (t = {})", s.t)));
            }
            if s.u.grid != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Trajectory { states })
    }

    pub fn tau(&self) -> f64 {
        self.states[1].t - self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn grid(&self) -> Grid {
        self.states[0].u.grid
    }

    /// Trapezoidal weights on the lattice.
    fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.states.len() {
            0.5 * self.tau()
        } else {
            self.tau()
        }
    }
}

/// `a · b(x; cx, wx) · b(y; cy, wy)` with the raised cosine
/// `b(x; c, w) = (1 + cos(π (x − c)/w))/2` on `|x − c| < w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialBump {
    pub cx: f64,
    pub cy: f64,
    pub wx: f64,
    pub wy: f64,
    pub amplitude: f64,
}

fn raised_cosine(x: f64, c: f64, w: f64) -> f64 {
    let s = (x - c) / w;
    if s.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + libm::cos(PI * s))
    }
}

impl SpatialBump {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.amplitude * raised_cosine(x, self.cx, self.wx) * raised_cosine(y, self.cy, self.wy)
    }

    /// Zero normal derivative on the boundary: each axis support either lies
    /// inside the domain or is centered on a wall.
    fn check_admissible(&self, grid: &Grid) -> Result<()> {
        let axis_ok = |c: f64, w: f64, l: f64| {
            w > 0.0 && (c - w >= 0.0 || c == 0.0) && (c + w <= l || c == l) && (0.0..=l).contains(&c)
        };
        if !axis_ok(self.cx, self.wx, grid.lx) || !axis_ok(self.cy, self.wy, grid.ly) {
            return Err(Error::Usage(format!("bump {self:?} violates the zero-normal-derivative condition")));
        }
        Ok(())
    }
}

/// Piecewise raised-cosine window: rises on `[rise_start, rise_end]`, equals
/// 1 up to `fall_start`, falls to 0 at `fall_end`. `rise_start = rise_end = 0`
/// means `ζ(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub rise_start: f64,
    pub rise_end: f64,
    pub fall_start: f64,
    pub fall_end: f64,
}

impl TimeWindow {
    /// `ζ ≡ 1` on `[0, fall_start]`, then a cosine ramp to 0.
    pub fn from_start(fall_start: f64, fall_end: f64) -> Self {
        TimeWindow { rise_start: 0.0, rise_end: 0.0, fall_start, fall_end }
    }

    fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.rise_start
            && self.rise_start <= self.rise_end
            && self.rise_end <= self.fall_start
            && self.fall_start < self.fall_end;
        let continuous = self.rise_end > self.rise_start || self.rise_start == 0.0;
        if !(ordered && continuous) {
            return Err(Error::Usage(format!("invalid time window {self:?}")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t >= self.fall_end {
            return 0.0;
        }
        if t > self.fall_start {
            return 0.5 * (1.0 + libm::cos(PI * (t - self.fall_start) / (self.fall_end - self.fall_start)));
        }
        if self.rise_end == self.rise_start || t >= self.rise_end {
            return 1.0;
        }
        if t <= self.rise_start {
            return 0.0;
        }
        0.5 * (1.0 - libm::cos(PI * (t - self.rise_start) / (self.rise_end - self.rise_start)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub space: SpatialBump,
    pub time: TimeWindow,
}

impl TestFunction {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self.space.eval(x, y) * self.time.eval(t)
    }
}

/// Five bumps at distinct centers, widths and time windows inside `[0, t_end]`
/// of a unit-square-like domain.
pub fn default_catalog(grid: &Grid, t_end: f64) -> Vec<TestFunction> {
    let (lx, ly) = (grid.lx, grid.ly);
    let bump = |fx: f64, fy: f64, fw: f64, a: f64| SpatialBump {
        cx: fx * lx,
        cy: fy * ly,
        wx: fw * lx,
        wy: fw * ly,
        amplitude: a,
    };
    alloc::vec![
        TestFunction { space: bump(0.5, 0.5, 0.4, 1.0), time: TimeWindow::from_start(0.3 * t_end, 0.9 * t_end) },
        TestFunction { space: bump(0.35, 0.4, 0.25, 2.0), time: TimeWindow::from_start(0.0, 0.6 * t_end) },
        TestFunction {
            space: bump(0.7, 0.6, 0.25, 1.0),
            time: TimeWindow { rise_start: 0.1 * t_end, rise_end: 0.3 * t_end, fall_start: 0.5 * t_end, fall_end: 0.95 * t_end },
        },
        TestFunction { space: bump(0.0, 0.0, 0.5, 1.5), time: TimeWindow::from_start(0.2 * t_end, 0.7 * t_end) },
        TestFunction {
            space: bump(0.5, 1.0, 0.35, 0.8),
            time: TimeWindow { rise_start: 0.0, rise_end: 0.4 * t_end, fall_start: 0.4 * t_end, fall_end: t_end },
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassResidual {
    pub t: f64,
    /// `∫u(T) − ∫u₀ − (right-hand side)`; the inequality asks for `≤ 0`.
    pub residual: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResidual {
    /// Left minus right side of the `ln(u+1)` inequality; asks for `≥ 0`.
    pub ln_residual: f64,
    pub ln_scale: f64,
    /// Left minus right side of the `v` identity.
    pub v_residual: f64,
    pub v_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakFormReport {
    pub mass: Vec<MassResidual>,
    pub tests: Vec<TestResidual>,
}

impl WeakFormReport {
    /// Mass inequality at every lattice time and the `ln(u+1)` inequality for
    /// every test, each with slack `5 (dt + h) · scale`.
    pub fn sign_verdicts(&self, slack: &Slack) -> Vec<Verdict> {
        let mut out = Vec::new();
        if let Some(worst) = self
            .mass
            .iter()
            .max_by(|a, b| (a.residual - slack.first_order(a.scale)).total_cmp(&(b.residual - slack.first_order(b.scale))))
        {
            out.push(Verdict::new(
                format!("weak_mass@t={}", worst.t),
                Sense::Upper,
                0.0,
                worst.residual,
                slack.first_order(worst.scale),
            ));
        }
        for (i, r) in self.tests.iter().enumerate() {
            out.push(Verdict::new(format!("weak_ln_u[{i}]"), Sense::Lower, 0.0, r.ln_residual, slack.first_order(r.ln_scale)));
        }
        out
    }
}

pub fn weakform_residuals(traj: &Trajectory, p: &Parameters, tests: &[TestFunction]) -> Result<WeakFormReport> {
    let grid = traj.grid();
    for tf in tests {
        tf.time.validate()?;
        tf.space.check_admissible(&grid)?;
        if tf.time.fall_end > traj.t_end() * (1.0 + 1e-12) {
            return Err(Error::Usage(format!(
                "test support ends at {} beyond trajectory end {}",
                tf.time.fall_end,
                traj.t_end()
            )));
        }
    }

    let mass = mass_residuals(traj, p);

    // Per-snapshot fields shared by all tests.
    let snaps: Vec<Snapshot> = traj.states.iter().map(|s| Snapshot::new(s, p)).collect();
    let tests = tests.iter().map(|tf| test_residual(traj, &snaps, p, tf)).collect::<Result<Vec<_>>>()?;
    Ok(WeakFormReport { mass, tests })
}

fn mass_residuals(traj: &Trajectory, p: &Parameters) -> Vec<MassResidual> {
    let m0 = integrate(&traj.states[0].u);
    let mut out = Vec::with_capacity(traj.states.len() - 1);
    // running trapezoid sums of ∫uv, ∫u, ∫u^{2+γ}
    let (mut s_uv, mut s_u, mut s_ug) = (0.0, 0.0, 0.0);
    let terms = |s: &State| {
        let (mut uv, mut u1, mut ug) = (0.0, 0.0, 0.0);
        for (&u, &v) in s.u.values.iter().zip(&s.v.values) {
            uv += u * v;
            u1 += u;
            ug += p.logistic_power(u);
        }
        let a = s.u.grid.cell_area();
        (uv * a, u1 * a, ug * a)
    };
    let tau = traj.tau();
    let mut prev = terms(&traj.states[0]);
    for s in &traj.states[1..] {
        let cur = terms(s);
        s_uv += 0.5 * tau * (prev.0 + cur.0);
        s_u += 0.5 * tau * (prev.1 + cur.1);
        s_ug += 0.5 * tau * (prev.2 + cur.2);
        prev = cur;
        let m = cur.1;
        let rhs = -s_uv + p.rho * s_u - p.mu * s_ug;
        out.push(MassResidual {
            t: s.t,
            residual: m - m0 - rhs,
            scale: m.abs() + m0.abs() + s_uv + p.rho.abs() * s_u + p.mu * s_ug,
        });
    }
    out
}

struct Snapshot {
    ln_u: Field,
    /// `η(u) u / (v (u + 1))`
    taxis_coef: Vec<f64>,
    /// `(−uv + ρu − μu^{2+γ})/(u + 1)`
    source: Vec<f64>,
    uv: Vec<f64>,
}

impl Snapshot {
    fn new(s: &State, p: &Parameters) -> Self {
        let n = s.u.grid.len();
        let mut taxis_coef = Vec::with_capacity(n);
        let mut source = Vec::with_capacity(n);
        let mut uv = Vec::with_capacity(n);
        for (&u, &v) in s.u.values.iter().zip(&s.v.values) {
            taxis_coef.push(cutoff_eta_unchecked(p.eps, u) * u / (v * (u + 1.0)));
            source.push((-u * v + p.rho * u - p.mu * p.logistic_power(u)) / (u + 1.0));
            uv.push(u * v);
        }
        Snapshot { ln_u: s.u.map(libm::log1p), taxis_coef, source, uv }
    }
}

fn dot_area(a: &[f64], b: &[f64], area: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * area
}

fn test_residual(traj: &Trajectory, snaps: &[Snapshot], p: &Parameters, tf: &TestFunction) -> Result<TestResidual> {
    let grid = traj.grid();
    let area = grid.cell_area();
    let psi = Field::from_fn(grid, |x, y| tf.space.eval(x, y));
    let lap_psi = laplacian_neumann(&psi);
    let tau = traj.tau();
    let avg = |w: &[f64], a: usize, b: usize| 0.5 * (w[a] + w[b]);

    // ln(u+1) inequality terms, accumulated over time
    let (mut dt_term, mut lap_term, mut dissip, mut cross, mut drift, mut src) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    // v identity terms
    let (mut v_dt, mut v_grad, mut v_decay, mut v_growth) = (0.0, 0.0, 0.0, 0.0);

    for (k, (s, sn)) in traj.states.iter().zip(snaps).enumerate() {
        let t = s.t;
        let zeta = tf.time.eval(t);
        let zeta_t = (tf.time.eval(t + tau) - tf.time.eval(t - tau)) / (2.0 * tau);
        if zeta == 0.0 && zeta_t == 0.0 {
            continue;
        }
        let w = traj.weight(k);

        dt_term += w * zeta_t * dot_area(&sn.ln_u.values, &psi.values, area);
        v_dt += w * zeta_t * dot_area(&s.v.values, &psi.values, area);
        if zeta == 0.0 {
            continue;
        }
        let wz = w * zeta;
        lap_term += wz * dot_area(&sn.ln_u.values, &lap_psi.values, area);
        dissip += wz * face_form(&sn.ln_u, &sn.ln_u, |a, b| avg(&psi.values, a, b))?;
        cross += wz * face_form(&sn.ln_u, &s.v, |a, b| avg(&sn.taxis_coef, a, b) * avg(&psi.values, a, b))?;
        drift += wz * face_form(&s.v, &psi, |a, b| avg(&sn.taxis_coef, a, b))?;
        src += wz * dot_area(&sn.source, &psi.values, area);

        v_grad += wz * face_form(&s.v, &psi, |_, _| 1.0)?;
        v_decay += wz * dot_area(&s.v.values, &psi.values, area);
        v_growth += wz * dot_area(&sn.uv, &psi.values, area);
    }

    let zeta0 = tf.time.eval(0.0);
    let init_ln = zeta0 * dot_area(&snaps[0].ln_u.values, &psi.values, area);
    let init_v = zeta0 * dot_area(&traj.states[0].v.values, &psi.values, area);

    let lhs_ln = -dt_term - init_ln;
    let rhs_ln = lap_term + dissip - p.chi * cross + p.chi * drift + src;
    let ln_scale = dt_term.abs() + init_ln.abs() + lap_term.abs() + dissip.abs() + p.chi * (cross.abs() + drift.abs()) + src.abs();

    let lhs_v = v_dt + init_v;
    let rhs_v = v_grad + v_decay - v_growth;
    let v_scale = v_dt.abs() + init_v.abs() + v_grad.abs() + v_decay.abs() + v_growth.abs();

    Ok(TestResidual { ln_residual: lhs_ln - rhs_ln, ln_scale, v_residual: lhs_v - rhs_v, v_scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::homogeneous_fixed_point;
    use crate::stepper::{run, Coupling, StepControl, Thresholds};
    use std::vec::Vec;

    fn fixed_point_trajectory(tau: f64, t_end: f64) -> Trajectory {
        let g = Grid::unit_square(12).unwrap();
        let n = libm::round(t_end / tau) as usize;
        let states = (0..=n)
            .map(|k| State::new(k as f64 * tau, Field::constant(g, 1.0), Field::constant(g, 1.0)).unwrap())
            .collect();
        Trajectory::new(states).unwrap()
    }

    #[test]
    fn window_shape() {
        let w = TimeWindow { rise_start: 0.1, rise_end: 0.3, fall_start: 0.5, fall_end: 0.9 };
        assert_eq!(w.eval(0.0), 0.0);
        assert!((w.eval(0.2) - 0.5).abs() < 1e-15);
        assert_eq!(w.eval(0.4), 1.0);
        assert!((w.eval(0.7) - 0.5).abs() < 1e-15);
        assert_eq!(w.eval(0.95), 0.0);
        let s = TimeWindow::from_start(0.2, 0.4);
        assert_eq!(s.eval(-0.1), 1.0);
        assert_eq!(s.eval(0.0), 1.0);
        assert!(TimeWindow { rise_start: 0.2, rise_end: 0.2, fall_start: 0.3, fall_end: 0.4 }.validate().is_err());
    }

    #[test]
    fn zero_test_function_gives_zero_residuals() {
        let traj = fixed_point_trajectory(0.05, 1.0);
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let mut tf = default_catalog(&traj.grid(), 1.0)[0];
        tf.space.amplitude = 0.0;
        let rep = weakform_residuals(&traj, &p, &[tf]).unwrap();
        assert_eq!(rep.tests[0].ln_residual, 0.0);
        assert_eq!(rep.tests[0].v_residual, 0.0);
    }

    #[test]
    fn support_beyond_window_is_rejected() {
        let traj = fixed_point_trajectory(0.05, 1.0);
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let mut tf = default_catalog(&traj.grid(), 1.0)[0];
        tf.time.fall_end = 1.5;
        assert!(matches!(weakform_residuals(&traj, &p, &[tf]), Err(Error::Usage(_))));
        let mut tf = default_catalog(&traj.grid(), 1.0)[0];
        tf.space.cx = 0.9;
        assert!(weakform_residuals(&traj, &p, &[tf]).is_err());
    }

    #[test]
    fn fixed_point_v_identity_converges() {
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let res: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&tau| {
                let traj = fixed_point_trajectory(tau, 1.0);
                let cat = default_catalog(&traj.grid(), 1.0);
                let rep = weakform_residuals(&traj, &p, &cat).unwrap();
                rep.tests.iter().map(|r| r.v_residual.abs()).fold(0.0, f64::max)
            })
            .collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{res:?}");
        }
    }

    #[test]
    fn mass_residual_vanishes_at_fixed_point() {
        let traj = fixed_point_trajectory(0.1, 1.0);
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(homogeneous_fixed_point(&p), Some((1.0, 1.0)));
        let rep = weakform_residuals(&traj, &p, &[]).unwrap();
        assert!(rep.mass.iter().all(|m| m.residual.abs() < 1e-12));
    }

    #[test]
    fn short_run_satisfies_signs() {
        let g = Grid::unit_square(24).unwrap();
        let p = Parameters::new(2.0, 1.0, 2.0, 0.0, 0.1).unwrap();
        let s0 = State::new(
            0.0,
            Field::from_fn(g, |x, y| 0.2 + 2.0 * libm::exp(-((x - 0.35) * (x - 0.35) + (y - 0.4) * (y - 0.4)) / 0.03)),
            Field::from_fn(g, |x, y| 0.5 + libm::exp(-((x - 0.6) * (x - 0.6) + (y - 0.55) * (y - 0.55)) / 0.05)),
        )
        .unwrap();
        let dt = 2e-3;
        let mut states = Vec::new();
        run(s0, &p, &StepControl::new(dt, 0.4, 5.0 * dt), Coupling::Full, &Thresholds::default(), |s| {
            states.push(s.clone())
        })
        .unwrap();
        let traj = Trajectory::new(states).unwrap();
        let rep = weakform_residuals(&traj, &p, &default_catalog(&g, 0.4)).unwrap();
        let slack = Slack { dt, h: g.h() };
        for v in rep.sign_verdicts(&slack) {
            assert!(v.pass, "{v}");
        }
    }
}
