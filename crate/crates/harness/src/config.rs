//! Flat `key = value` run configuration.
//!
//! Every key is optional; missing keys take the defaults listed in
//! [`KEYS`]. Unknown or repeated keys are errors, and every constraint is
//! checked at parse time so a returned [`RunConfig`] is ready to run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hotspot_core::diagnostics::DiagnosticsConfig;
use hotspot_core::{Error, Grid, Parameters, StepControl, Thresholds};

use crate::error::HarnessError;

/// Recognised keys and their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("nx", "64"),
    ("ny", "64"),
    ("lx", "1"),
    ("ly", "1"),
    ("rho", "2"),
    ("mu", "1"),
    ("chi", "2"),
    ("gamma", "0"),
    ("eps", "0.1"),
    ("dt_init", "1e-3"),
    ("dt_min", "1e-10"),
    ("cfl_safety", "0.5"),
    ("v_guard", "1e-12 * min v0"),
    ("t_end", "1"),
    ("output_every", "0.01"),
    ("ic", "gaussian_bump"),
    ("p_set", "2, 3, 5"),
    ("q", "2 + gamma/2"),
    ("u_sup_max", "1e8"),
    ("v_w1inf_max", "1e8"),
    ("v_min", "0"),
    ("output_dir", "out"),
    ("sweep.ladder", "0.4, 0.2, 0.1, 0.05, 0.025"),
    ("sweep.t", "t_end"),
    ("gamma.values", "0, 1"),
    ("gamma.horizons", "25, 50, 100"),
];

/// Initial-condition family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// `ic.u` (0), `ic.v` (1).
    Constant { u: f64, v: f64 },
    /// The positive homogeneous equilibrium `(1, ρ − μ)`; needs `ρ > μ`.
    FixedPoint,
    /// `floor + amp·exp(−r²/width²)` for each field. Keys `ic.cx`, `ic.cy`
    /// (domain center), `ic.width` (0.15), `ic.u_amp` (1), `ic.u_floor`
    /// (0.5), `ic.v_amp` (0.5), `ic.v_floor` (1).
    GaussianBump { cx: f64, cy: f64, width: f64, u_amp: f64, u_floor: f64, v_amp: f64, v_floor: f64 },
    /// `base·(1 + a·cos(kx π x/lx)·cos(ky π y/ly))`. Keys `ic.u` (1),
    /// `ic.v` (1), `ic.amplitude` (0.1), `ic.kx` (1), `ic.ky` (1).
    PerturbedHomogeneous { u: f64, v: f64, amplitude: f64, kx: u32, ky: u32 },
    /// `base·(1 + a·(2r − 1))` with `r` uniform on `[0, 1)` per cell. Keys
    /// `ic.seed` (0), `ic.u` (1), `ic.v` (1), `ic.amplitude` (0.1).
    SeededRandom { seed: u64, u: f64, v: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub params: Parameters,
    pub control: StepControl,
    pub initial: InitialSpec,
    pub diagnostics: DiagnosticsConfig,
    pub thresholds: Thresholds,
    pub output_dir: PathBuf,
    pub sweep_ladder: Vec<f64>,
    pub sweep_t: f64,
    pub gamma_values: Vec<f64>,
    pub gamma_horizons: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, HarnessError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, s)) => parse_f64(&s).ok_or_else(|| HarnessError::config(line, key, format!("expected a real number, got {s:?}"))),
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, HarnessError> {
        if self.map.contains_key(key) {
            self.f64_or(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn uint_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, HarnessError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, s)) => s
                .parse()
                .map_err(|_| HarnessError::config(line, key, format!("expected a nonnegative integer, got {s:?}"))),
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, HarnessError> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, s)) => s
                .split(',')
                .map(|item| {
                    parse_f64(item.trim())
                        .ok_or_else(|| HarnessError::config(line, key, format!("expected a list of reals, got {s:?}")))
                })
                .collect(),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn constraint(line: usize, key: &str, holds: bool, text: &str) -> Result<(), HarnessError> {
    if holds {
        Ok(())
    } else {
        Err(HarnessError::config(line, key, format!("constraint violated: {text}")))
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, HarnessError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(HarnessError::config(line, content, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(HarnessError::config(line, key, "empty key"));
        }
        if value.is_empty() {
            return Err(HarnessError::config(line, key, "empty value"));
        }
        if let Some((first, _)) = map.get(key) {
            return Err(HarnessError::config(line, key, format!("duplicate key, first set on line {first}")));
        }
        map.insert(key.to_string(), (line, value.to_string()));
    }
    let mut e = Entries { map };

    let line = e.line_of("nx");
    let nx = e.uint_or("nx", 64usize)?;
    constraint(line, "nx", nx >= 2, "nx >= 2")?;
    let line = e.line_of("ny");
    let ny = e.uint_or("ny", 64usize)?;
    constraint(line, "ny", ny >= 2, "ny >= 2")?;
    let line = e.line_of("lx");
    let lx = e.f64_or("lx", 1.0)?;
    constraint(line, "lx", lx > 0.0, "lx > 0")?;
    let line = e.line_of("ly");
    let ly = e.f64_or("ly", 1.0)?;
    constraint(line, "ly", ly > 0.0, "ly > 0")?;
    let grid = Grid::new(nx, ny, lx, ly)?;

    let mut lines = BTreeMap::new();
    for k in ["rho", "mu", "chi", "gamma", "eps", "dt_init", "dt_min", "cfl_safety", "v_guard", "t_end", "output_every", "p_set", "q"] {
        lines.insert(k, e.line_of(k));
    }
    let invalid = |err: Error| match err {
        Error::Invalid { name, constraint } => {
            HarnessError::config(lines.get(name).copied().unwrap_or(0), name, format!("constraint violated: {constraint}"))
        }
        other => other.into(),
    };

    let params = Parameters {
        rho: e.f64_or("rho", 2.0)?,
        mu: e.f64_or("mu", 1.0)?,
        chi: e.f64_or("chi", 2.0)?,
        gamma: e.f64_or("gamma", 0.0)?,
        eps: e.f64_or("eps", 0.1)?,
    };
    params.validate().map_err(invalid)?;

    let control = StepControl {
        dt_init: e.f64_or("dt_init", 1e-3)?,
        dt_min: e.f64_or("dt_min", 1e-10)?,
        cfl_safety: e.f64_or("cfl_safety", 0.5)?,
        v_guard: e.opt_f64("v_guard")?,
        t_end: e.f64_or("t_end", 1.0)?,
        output_every: e.f64_or("output_every", 0.01)?,
    };
    control.validate().map_err(invalid)?;

    let defaults = DiagnosticsConfig::for_gamma(params.gamma);
    let diagnostics = DiagnosticsConfig { p_set: e.list_or("p_set", &defaults.p_set)?, q: e.f64_or("q", defaults.q)? };
    diagnostics.validate().map_err(|err| match err {
        Error::Invalid { constraint, .. } => {
            let key = if diagnostics.q >= 1.0 { "p_set" } else { "q" };
            HarnessError::config(lines[key], key, format!("constraint violated: {constraint}"))
        }
        other => other.into(),
    })?;

    let thresholds = Thresholds {
        u_sup_max: e.f64_or("u_sup_max", 1e8)?,
        v_w1inf_max: e.f64_or("v_w1inf_max", 1e8)?,
        v_min: e.f64_or("v_min", 0.0)?,
    };

    let initial = parse_initial(&mut e, &grid, &params)?;

    let output_dir = PathBuf::from(e.take("output_dir").map_or_else(|| "out".to_string(), |(_, s)| s));

    let line = e.line_of("sweep.ladder");
    let sweep_ladder = e.list_or("sweep.ladder", &[0.4, 0.2, 0.1, 0.05, 0.025])?;
    validate_ladder(&sweep_ladder).map_err(|msg| HarnessError::config(line, "sweep.ladder", msg))?;
    let line = e.line_of("sweep.t");
    let sweep_t = e.f64_or("sweep.t", control.t_end)?;
    constraint(line, "sweep.t", sweep_t > 0.0, "sweep.t > 0")?;

    let line = e.line_of("gamma.values");
    let gamma_values = e.list_or("gamma.values", &[0.0, 1.0])?;
    constraint(line, "gamma.values", gamma_values.iter().all(|&g| g >= 0.0), "gamma >= 0")?;
    let line = e.line_of("gamma.horizons");
    let gamma_horizons = e.list_or("gamma.horizons", &[25.0, 50.0, 100.0])?;
    constraint(line, "gamma.horizons", gamma_horizons.iter().all(|&t| t > 0.0), "horizons > 0")?;

    if let Some((key, (line, _))) = e.map.iter().next() {
        return Err(HarnessError::config(*line, key.clone(), "unknown key"));
    }

    Ok(RunConfig {
        grid,
        params,
        control,
        initial,
        diagnostics,
        thresholds,
        output_dir,
        sweep_ladder,
        sweep_t,
        gamma_values,
        gamma_horizons,
    })
}

/// A cutoff ladder must be nonempty, strictly decreasing and inside `(0, 1]`.
pub fn validate_ladder(ladder: &[f64]) -> Result<(), String> {
    if ladder.is_empty() {
        return Err("ladder is empty".into());
    }
    if ladder.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err("constraint violated: 0 < eps <= 1".into());
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err("constraint violated: ladder strictly decreasing".into());
    }
    Ok(())
}

fn parse_initial(e: &mut Entries, grid: &Grid, params: &Parameters) -> Result<InitialSpec, HarnessError> {
    let (kind_line, kind) = e.take("ic").unwrap_or((0, "gaussian_bump".to_string()));
    let spec = match kind.as_str() {
        "constant" => InitialSpec::Constant { u: e.f64_or("ic.u", 0.0)?, v: e.f64_or("ic.v", 1.0)? },
        "fixed_point" => {
            constraint(kind_line, "ic", params.rho > params.mu, "rho > mu for a positive fixed point")?;
            InitialSpec::FixedPoint
        }
        "gaussian_bump" => {
            let line = e.line_of("ic.width");
            let spec = InitialSpec::GaussianBump {
                cx: e.f64_or("ic.cx", 0.5 * grid.lx)?,
                cy: e.f64_or("ic.cy", 0.5 * grid.ly)?,
                width: e.f64_or("ic.width", 0.15)?,
                u_amp: e.f64_or("ic.u_amp", 1.0)?,
                u_floor: e.f64_or("ic.u_floor", 0.5)?,
                v_amp: e.f64_or("ic.v_amp", 0.5)?,
                v_floor: e.f64_or("ic.v_floor", 1.0)?,
            };
            if let InitialSpec::GaussianBump { width, .. } = spec {
                constraint(line, "ic.width", width > 0.0, "ic.width > 0")?;
            }
            spec
        }
        "perturbed_homogeneous" => InitialSpec::PerturbedHomogeneous {
            u: e.f64_or("ic.u", 1.0)?,
            v: e.f64_or("ic.v", 1.0)?,
            amplitude: e.f64_or("ic.amplitude", 0.1)?,
            kx: e.uint_or("ic.kx", 1u32)?,
            ky: e.uint_or("ic.ky", 1u32)?,
        },
        "seeded_random" => InitialSpec::SeededRandom {
            seed: e.uint_or("ic.seed", 0u64)?,
            u: e.f64_or("ic.u", 1.0)?,
            v: e.f64_or("ic.v", 1.0)?,
            amplitude: e.f64_or("ic.amplitude", 0.1)?,
        },
        other => {
            return Err(HarnessError::config(
                kind_line,
                "ic",
                format!("unknown kind {other:?}; expected constant, fixed_point, gaussian_bump, perturbed_homogeneous or seeded_random"),
            ))
        }
    };
    // reject parameters that belong to another kind
    if let Some((key, (line, _))) = e.map.iter().find(|(k, _)| k.starts_with("ic.")) {
        return Err(HarnessError::config(*line, key.clone(), format!("not a parameter of ic = {kind}")));
    }
    crate::initial::make_initial(&spec, grid, params)
        .map_err(|err| HarnessError::config(kind_line, "ic", err.to_string()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_text(src: &str) -> String {
        parse_config(src).unwrap_err().to_string()
    }

    #[test]
    fn empty_config_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.grid, Grid::unit_square(64).unwrap());
        assert_eq!(c.params, Parameters { rho: 2.0, mu: 1.0, chi: 2.0, gamma: 0.0, eps: 0.1 });
        assert_eq!(c.control.dt_init, 1e-3);
        assert_eq!(c.control.v_guard, None);
        assert_eq!(c.diagnostics.p_set, vec![2.0, 3.0, 5.0]);
        assert_eq!(c.diagnostics.q, 2.0);
        assert_eq!(c.sweep_ladder, vec![0.4, 0.2, 0.1, 0.05, 0.025]);
        assert_eq!(c.sweep_t, 1.0);
        assert!(matches!(c.initial, InitialSpec::GaussianBump { .. }));
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn every_documented_key_is_accepted() {
        for (key, _) in KEYS {
            let value = match *key {
                "ic" => "constant",
                "output_dir" => "x",
                "p_set" | "sweep.ladder" | "gamma.values" | "gamma.horizons" => "0.5",
                "nx" | "ny" => "8",
                "dt_min" => "1e-9",
                _ => "1",
            };
            let src = format!("{key} = {value}\n");
            assert!(parse_config(&src).is_ok() || err_text(&src).contains("constraint"), "{key}");
        }
    }

    #[test]
    fn negative_mu_names_constraint_and_line() {
        let t = err_text("# comment\nrho = 1\nmu = -1\n");
        assert!(t.contains("mu > 0"), "{t}");
        assert!(t.starts_with("line 3: mu"), "{t}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let t = err_text("chi = 1\nchi = 2\n");
        assert!(t.contains("duplicate"), "{t}");
        assert!(t.starts_with("line 2"), "{t}");
    }

    #[test]
    fn unknown_and_misplaced_keys_rejected() {
        assert!(err_text("colour = red").contains("unknown key"));
        assert!(err_text("ic = constant\nic.width = 0.2").contains("not a parameter"));
        assert!(err_text("ic = spiral").contains("unknown kind"));
    }

    #[test]
    fn type_mismatch_rejected() {
        assert!(err_text("nx = 3.5").contains("integer"));
        assert!(err_text("rho = two").contains("real"));
        assert!(err_text("rho = inf").contains("real"));
        assert!(err_text("nx").contains("key = value"));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  nx=16 # trailing\n\n#ny = 3\n ny =  8 ").unwrap();
        assert_eq!((c.grid.nx, c.grid.ny), (16, 8));
    }

    #[test]
    fn ladder_must_strictly_decrease() {
        assert!(err_text("sweep.ladder = 0.4, 0.2, 0.2").contains("strictly decreasing"));
        assert!(err_text("sweep.ladder = 0.2, 0.4").contains("strictly decreasing"));
        assert!(err_text("sweep.ladder = 1.5").contains("eps"));
    }

    #[test]
    fn fixed_point_needs_rho_above_mu() {
        assert!(err_text("ic = fixed_point\nrho = 1\nmu = 1").contains("rho > mu"));
        assert!(parse_config("ic = fixed_point").is_ok());
    }

    #[test]
    fn nonpositive_v0_rejected() {
        let t = err_text("ic = constant\nic.v = 0");
        assert!(t.contains("ic"), "{t}");
    }

    #[test]
    fn q_default_tracks_gamma() {
        assert_eq!(parse_config("gamma = 1").unwrap().diagnostics.q, 2.5);
        assert_eq!(parse_config("gamma = 1\nq = 2.2").unwrap().diagnostics.q, 2.2);
    }

    #[test]
    fn step_control_constraints() {
        assert!(err_text("dt_init = 0").contains("dt_init > 0"));
        assert!(err_text("cfl_safety = 2").contains("cfl_safety"));
        assert!(err_text("dt_init = 1e-3\ndt_min = 1").contains("dt_min"));
    }
}
