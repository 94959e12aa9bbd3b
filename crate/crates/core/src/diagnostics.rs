//! Per-snapshot diagnostics, cumulative time integrals and verdicts against
//! the explicitly computable a priori ceilings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::{gradient_centered, grad_power_integral, integrate, lp_norm};
use crate::model::{BoundConstants, Parameters};
use crate::stepper::State;

/// Exponents tracked by the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Exponents `p` for `‖v‖_{L^p}` and `∫|∇v^{p/2}|²`.
    pub p_set: Vec<f64>,
    /// Exponent of `‖∇v‖_{L^q}`.
    pub q: f64,
}

impl DiagnosticsConfig {
    /// `p ∈ {2, 3, 5}` and `q = 2 + γ/2`.
    pub fn for_gamma(gamma: f64) -> Self {
        DiagnosticsConfig { p_set: vec![2.0, 3.0, 5.0], q: 2.0 + 0.5 * gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_set.iter().any(|&p| !(p >= 1.0)) || !(self.q >= 1.0) {
            return Err(Error::Invalid { name: "p_set", constraint: "all exponents >= 1" });
        }
        Ok(())
    }
}

/// Every bounded quantity at one output time.
///
/// Cumulative integrals use the left-endpoint rule: the value at record `k`
/// sums `Δt_j · integrand_j` over records `j < k`, so the instantaneous
/// integrands are stored alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub min_v: f64,
    /// `(p, ‖v‖_{L^p})`.
    pub lp_v: Vec<(f64, f64)>,
    pub grad_v_lq: f64,
    /// `∫u²`.
    pub int_u2: f64,
    /// `∫u^{2+γ}`.
    pub int_u2g: f64,
    /// `(p, ∫|∇v^{p/2}|²)`.
    pub grad_vp2: Vec<(f64, f64)>,
    /// `∫|∇u|²/(u+1)²`.
    pub grad_ln_u: f64,
    pub cum_u2: f64,
    pub cum_u2g: f64,
    pub cum_grad_vp2: Vec<(f64, f64)>,
    pub cum_grad_ln_u: f64,
}

pub fn compute_record(
    s: &State,
    params: &Parameters,
    cfg: &DiagnosticsConfig,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord> {
    let (u, v) = (&s.u, &s.v);
    let lp_v = cfg.p_set.iter().map(|&p| Ok((p, lp_norm(v, p)?))).collect::<Result<Vec<_>>>()?;
    let grad_vp2 =
        cfg.p_set.iter().map(|&p| Ok((p, grad_power_integral(v, p)?))).collect::<Result<Vec<_>>>()?;
    let grad_v_lq = lp_norm(&gradient_centered(v).magnitude(), cfg.q)?;

    let grad_u = gradient_centered(u).magnitude_squared();
    let ln_integrand = grad_u.zip_map(u, |g, x| g / ((x + 1.0) * (x + 1.0)))?;

    let mut rec = DiagnosticsRecord {
        t: s.t,
        mass_u: integrate(u),
        mass_v: integrate(v),
        linf_u: u.max(),
        linf_v: v.values.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        min_v: v.min(),
        lp_v,
        grad_v_lq,
        int_u2: integrate(&u.map(|x| x * x)),
        int_u2g: integrate(&u.map(|x| params.logistic_power(x))),
        grad_vp2,
        grad_ln_u: integrate(&ln_integrand),
        cum_u2: 0.0,
        cum_u2g: 0.0,
        cum_grad_vp2: cfg.p_set.iter().map(|&p| (p, 0.0)).collect(),
        cum_grad_ln_u: 0.0,
    };
    if let Some(prev) = prev {
        let dt = s.t - prev.t;
        if !(dt >= 0.0) {
            return Err(Error::Usage(format!("record at t = {} precedes previous t = {}", s.t, prev.t)));
        }
        if prev.grad_vp2.len() != rec.grad_vp2.len() {
            return Err(Error::Usage("previous record uses a different p set".into()));
        }
        rec.cum_u2 = prev.cum_u2 + dt * prev.int_u2;
        rec.cum_u2g = prev.cum_u2g + dt * prev.int_u2g;
        rec.cum_grad_ln_u = prev.cum_grad_ln_u + dt * prev.grad_ln_u;
        for ((cum, &(_, c_prev)), &(_, g_prev)) in
            rec.cum_grad_vp2.iter_mut().zip(&prev.cum_grad_vp2).zip(&prev.grad_vp2)
        {
            cum.1 = c_prev + dt * g_prev;
        }
    }
    Ok(rec)
}

/// Folds a stored trajectory into records in time order.
pub fn records_for(states: &[State], params: &Parameters, cfg: &DiagnosticsConfig) -> Result<Vec<DiagnosticsRecord>> {
    let mut out: Vec<DiagnosticsRecord> = Vec::with_capacity(states.len());
    for s in states {
        let rec = compute_record(s, params, cfg, out.last())?;
        out.push(rec);
    }
    Ok(out)
}

/// Discretization slack for verdicts: `5 (dt + h²)` relative to a ceiling,
/// `5 (dt + h)` relative to the scale of a first-order residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub dt: f64,
    pub h: f64,
}

impl Slack {
    pub const FACTOR: f64 = 5.0;
    pub const RELATIVE: f64 = 1e-6;

    /// Tolerance for ceilings of quantities discretized at second order in space.
    pub fn ceiling(&self, bound: f64) -> f64 {
        (Self::RELATIVE + Self::FACTOR * (self.dt + self.h * self.h)) * bound.abs()
    }

    /// Tolerance `5 (dt + h) · scale` for first-order residuals.
    pub fn first_order(&self, scale: f64) -> f64 {
        Self::FACTOR * (self.dt + self.h) * scale.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `observed ≤ bound`.
    Upper,
    /// `observed ≥ bound`.
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    /// Signed distance to the bound, positive on the safe side.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, sense: Sense, bound: f64, observed: f64, tolerance: f64) -> Self {
        let margin = match sense {
            Sense::Upper => bound - observed,
            Sense::Lower => observed - bound,
        };
        Verdict { name: name.into(), bound, observed, margin, tolerance, pass: margin >= -tolerance }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CHECK {} bound={} observed={} margin={} {}",
            self.name,
            self.bound,
            self.observed,
            self.margin,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn nonempty(records: &[DiagnosticsRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Usage("no diagnostics records".into()));
    }
    Ok(())
}

/// `max_t max(∫u, ∫v) ≤ C₁`.
pub fn check_l1_bound(records: &[DiagnosticsRecord], bc: &BoundConstants, slack: &Slack) -> Result<Verdict> {
    nonempty(records)?;
    let observed = records.iter().map(|r| r.mass_u.max(r.mass_v)).fold(f64::NEG_INFINITY, f64::max);
    let bound = bc.l1_ceiling();
    Ok(Verdict::new("l1_bound", Sense::Upper, bound, observed, slack.ceiling(bound)))
}

/// Value of a cumulative column at time `t`, interpolating linearly between
/// the bracketing records.
fn cumulative_at(records: &[DiagnosticsRecord], t: f64, col: impl Fn(&DiagnosticsRecord) -> f64) -> Result<f64> {
    nonempty(records)?;
    let last = records.last().unwrap();
    let tol = 1e-9 * t.abs().max(1.0);
    if t > last.t + tol {
        return Err(Error::Usage(format!("T = {t} beyond trajectory end {}", last.t)));
    }
    if t < records[0].t - tol {
        return Err(Error::Usage(format!("T = {t} before trajectory start {}", records[0].t)));
    }
    let k = records.iter().position(|r| r.t >= t - tol).unwrap();
    let r = &records[k];
    if (r.t - t).abs() <= tol || k == 0 {
        return Ok(col(r));
    }
    let l = &records[k - 1];
    let w = (t - l.t) / (r.t - l.t);
    Ok(col(l) + w * (col(r) - col(l)))
}

/// `∫₀ᵀ∫u² ≤ (∫(u₀+v₀) + T|ρ|C₁)/μ`; for `γ > 0` additionally
/// `∫₀ᵀ∫u^{2+γ}` against the same form with the strengthened ceiling.
pub fn check_u2_time_integral(
    records: &[DiagnosticsRecord],
    bc: &BoundConstants,
    params: &Parameters,
    t: f64,
    slack: &Slack,
) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    if params.gamma == 0.0 {
        let observed = cumulative_at(records, t, |r| r.cum_u2)?;
        let bound = bc.c2_of_t(t);
        out.push(Verdict::new("u2_time_integral", Sense::Upper, bound, observed, slack.ceiling(bound)));
    } else {
        let observed = cumulative_at(records, t, |r| r.cum_u2g)?;
        let bound = bc.u2g_ceiling(t);
        out.push(Verdict::new("u2g_time_integral", Sense::Upper, bound, observed, slack.ceiling(bound)));
    }
    Ok(out)
}

/// `min v(·, t) ≥ e^{−t} min v₀` with no slack.
///
/// The margin is taken over records with `t > 0`; at `t = 0` it is zero by
/// construction. A sequence holding only the initial record is judged on it.
pub fn check_v_lower_bound(records: &[DiagnosticsRecord], v0_min: f64) -> Result<Verdict> {
    nonempty(records)?;
    if !(v0_min > 0.0) {
        return Err(Error::Domain(format!("v0_min must be > 0, got {v0_min}")));
    }
    let later = records.iter().filter(|r| r.t > 0.0);
    let considered: Vec<&DiagnosticsRecord> =
        if later.clone().next().is_some() { later.collect() } else { records.iter().collect() };
    let worst = considered
        .iter()
        .map(|r| (r.min_v, libm::exp(-r.t) * v0_min))
        .min_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1)))
        .unwrap();
    Ok(Verdict::new("v_lower_bound", Sense::Lower, worst.1, worst.0, 0.0))
}

/// Mass balance of `u` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBalance {
    /// `∫u(T) − ∫u₀ − Σ Δt_k · f(t_k)` with left endpoints, the balance the
    /// scheme satisfies exactly up to rounding.
    pub discrete: f64,
    /// The same with the trapezoidal rule, a second-order approximation of
    /// the continuous time integral.
    pub continuum: f64,
    /// `|∫u(T)| + |∫u₀| + Σ Δt_k |f(t_k)|`.
    pub scale: f64,
}

/// Mass balance of `u` over a stored trajectory, with
/// `f = −∫uv + ρ∫u − μ∫u^{2+γ}`.
pub fn mass_balance(states: &[State], params: &Parameters) -> Result<MassBalance> {
    if states.len() < 2 {
        return Err(Error::Usage("mass balance needs at least two states".into()));
    }
    let f: Vec<f64> = states
        .iter()
        .map(|s| {
            let g = s.u.grid;
            let mut acc = 0.0;
            for k in 0..g.len() {
                let (u, v) = (s.u.values[k], s.v.values[k]);
                acc += -u * v + params.rho * u - params.mu * params.logistic_power(u);
            }
            acc * g.cell_area()
        })
        .collect();
    let mut left = 0.0;
    let mut trap = 0.0;
    let mut abs = 0.0;
    for k in 0..states.len() - 1 {
        let dt = states[k + 1].t - states[k].t;
        left += dt * f[k];
        trap += 0.5 * dt * (f[k] + f[k + 1]);
        abs += dt * f[k].abs();
    }
    let m0 = integrate(&states[0].u);
    let m1 = integrate(&states[states.len() - 1].u);
    Ok(MassBalance { discrete: m1 - m0 - left, continuum: m1 - m0 - trap, scale: m1.abs() + m0.abs() + abs })
}
