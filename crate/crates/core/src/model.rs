//! Model constants, the taxis cutoff family and pointwise reaction terms.

use alloc::format;

use crate::error::{Error, Result};

/// Constants of the system.
///
/// `gamma = 0` gives the quadratic logistic source, `gamma > 0` the
/// strengthened `μu^{2+γ}` variant. `eps = 0` switches the taxis cutoff off
/// (`η ≡ 1`), any `eps` in `(0, 1]` selects the regularized system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    pub rho: f64,
    pub mu: f64,
    pub chi: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl Parameters {
    pub fn new(rho: f64, mu: f64, chi: f64, gamma: f64, eps: f64) -> Result<Self> {
        let p = Parameters { rho, mu, chi, gamma, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() {
            return Err(Error::Invalid { name: "rho", constraint: "rho finite" });
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Invalid { name: "mu", constraint: "mu > 0" });
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(Error::Invalid { name: "chi", constraint: "chi > 0" });
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Invalid { name: "gamma", constraint: "gamma >= 0" });
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::Invalid { name: "eps", constraint: "0 <= eps <= 1" });
        }
        Ok(())
    }

    /// Copy with a different cutoff index.
    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Parameters { eps, ..self }.validate_into()
    }

    /// Copy with a different logistic exponent offset.
    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Parameters { gamma, ..self }.validate_into()
    }

    fn validate_into(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// `u^{2+γ}`, with the quadratic case evaluated as a plain product.
    #[inline]
    pub fn logistic_power(&self, u: f64) -> f64 {
        if self.gamma == 0.0 {
            u * u
        } else {
            libm::pow(u, 2.0 + self.gamma)
        }
    }

    /// `u^{1+γ}`, the per-unit-mass logistic sink rate divided by `μ`.
    #[inline]
    pub fn logistic_rate(&self, u: f64) -> f64 {
        if self.gamma == 0.0 {
            u
        } else {
            libm::pow(u, 1.0 + self.gamma)
        }
    }
}

/// Quintic smoothstep `6x⁵ − 15x⁴ + 10x³` on `[0, 1]`.
#[inline]
fn smoothstep5(x: f64) -> f64 {
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// Cutoff `η_ε(s)`.
///
/// Identically 1 on `[0, 1/ε − 1]`, identically 0 on `[1/ε, ∞)` and a
/// quintic smoothstep (C²) in between. `eps = 0` returns 1 everywhere.
pub fn cutoff_eta(eps: f64, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("cutoff argument must be >= 0, got {s}")));
    }
    Ok(cutoff_eta_unchecked(eps, s))
}

#[inline]
pub(crate) fn cutoff_eta_unchecked(eps: f64, s: f64) -> f64 {
    if eps == 0.0 {
        return 1.0;
    }
    let upper = 1.0 / eps;
    let lower = upper - 1.0;
    if s <= lower {
        1.0
    } else if s >= upper {
        0.0
    } else {
        1.0 - smoothstep5(s - lower)
    }
}

/// Source term of the `u` equation: `−uv + ρu − μu^{2+γ}`.
#[inline]
pub fn reaction_u(u: f64, v: f64, p: &Parameters) -> f64 {
    -u * v + p.rho * u - p.mu * p.logistic_power(u)
}

/// Source term of the `v` equation: `−v + uv`.
#[inline]
pub fn reaction_v(u: f64, v: f64) -> f64 {
    -v + u * v
}

/// Taxis coefficient `χ η_ε(u) u / v`.
pub fn taxis_coefficient(u: f64, v: f64, p: &Parameters) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Singular { cell: 0, v });
    }
    Ok(p.chi * cutoff_eta(p.eps, u)? * u / v)
}

/// Spatially homogeneous equilibrium with positive `v`.
///
/// `(1, ρ − μ)` zeroes both reactions for every `γ` since `μ·1^{2+γ} = μ`;
/// no such equilibrium exists when `ρ ≤ μ`.
pub fn homogeneous_fixed_point(p: &Parameters) -> Option<(f64, f64)> {
    if p.rho > p.mu {
        Some((1.0, p.rho - p.mu))
    } else {
        None
    }
}

/// Explicitly computable ceilings for mass and space-time integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `max((|ρ|+1)²|Ω|/(4μ), ∫(u₀+v₀))`, ceiling of `∫u` and `∫v`.
    pub c1: f64,
    /// `((1+|ρ|)/(2+γ))^{2+γ} (1+γ)/μ^{1+γ} |Ω|` as stated for the
    /// strengthened system.
    pub k1_weak: f64,
    /// `sup_{y≥0} ((1+|ρ|)y − μy^{2+γ}) |Ω|`, the exact Young constant.
    pub k1_weak_sharp: f64,
    /// `∫(u₀+v₀)`.
    pub initial_mass: f64,
    pub area: f64,
    rho_abs: f64,
    mu: f64,
    gamma: f64,
}

impl BoundConstants {
    /// `(∫(u₀+v₀) + T|ρ|C₁)/μ`, ceiling of `∫₀ᵀ∫u²` for `γ = 0`.
    pub fn c2_of_t(&self, t: f64) -> f64 {
        (self.initial_mass + t * self.rho_abs * self.c1) / self.mu
    }

    /// Ceiling of `∫u` and `∫v` valid for the configured `γ`.
    ///
    /// For `γ = 0` this is `c1`. For `γ > 0` the comparison constant is the
    /// exact Young supremum, which can exceed `k1_weak`.
    pub fn l1_ceiling(&self) -> f64 {
        if self.gamma == 0.0 {
            self.c1
        } else {
            self.k1_weak_sharp.max(self.initial_mass)
        }
    }

    /// `(∫u₀ + T|ρ|C₁)/μ` bounding `∫₀ᵀ∫u^{2+γ}`; `∫u₀` is majorized by
    /// the total initial mass.
    pub fn u2g_ceiling(&self, t: f64) -> f64 {
        (self.initial_mass + t * self.rho_abs * self.l1_ceiling()) / self.mu
    }
}

pub fn bound_constants(p: &Parameters, omega_area: f64, initial_mass: f64) -> Result<BoundConstants> {
    if !(omega_area > 0.0) {
        return Err(Error::Invalid { name: "omega_area", constraint: "area > 0" });
    }
    if !(initial_mass >= 0.0) {
        return Err(Error::Invalid { name: "initial_mass", constraint: "initial mass >= 0" });
    }
    let rho_abs = p.rho.abs();
    let a = 1.0 + rho_abs;
    let c1 = (a * a * omega_area / (4.0 * p.mu)).max(initial_mass);
    let g = p.gamma;
    let k1_weak = libm::pow(a / (2.0 + g), 2.0 + g) * (1.0 + g) / libm::pow(p.mu, 1.0 + g) * omega_area;
    // argmax of a·y − μ y^{2+γ} is y* = (a/(μ(2+γ)))^{1/(1+γ)}
    let y_star = libm::pow(a / (p.mu * (2.0 + g)), 1.0 / (1.0 + g));
    let k1_weak_sharp = a * y_star * (1.0 + g) / (2.0 + g) * omega_area;
    Ok(BoundConstants {
        c1,
        k1_weak,
        k1_weak_sharp,
        initial_mass,
        area: omega_area,
        rho_abs,
        mu: p.mu,
        gamma: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(rho: f64, mu: f64, chi: f64, gamma: f64, eps: f64) -> Parameters {
        Parameters::new(rho, mu, chi, gamma, eps).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_eta(0.5, 0.0).unwrap(), 1.0);
        assert_eq!(cutoff_eta(0.5, 2.0).unwrap(), 0.0);
        assert!((cutoff_eta(0.1, 9.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cutoff_eta(0.0, 1e300).unwrap(), 1.0);
        assert!(matches!(cutoff_eta(0.5, -1e-3), Err(Error::Domain(_))));
        assert!(cutoff_eta(0.5, f64::NAN).is_err());
    }

    #[test]
    fn cutoff_strictly_decreasing_on_band() {
        let eps = 0.25;
        let mut prev = cutoff_eta(eps, 3.0).unwrap();
        for k in 1..=100 {
            let s = 3.0 + k as f64 / 100.0;
            let cur = cutoff_eta(eps, s).unwrap();
            if k < 100 {
                assert!(cur < prev, "not strictly decreasing at s = {s}");
            }
            prev = cur;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn reaction_examples() {
        let p = params(2.0, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(reaction_u(1.0, 1.0, &p), 0.0);
        assert_eq!(reaction_u(0.0, 5.0, &p), 0.0);
        let p = params(0.0, 1.0, 1.0, 1.0, 0.0);
        assert!((reaction_u(2.0, 1.0, &p) + 10.0).abs() < 1e-12);

        assert_eq!(reaction_v(1.0, 3.0), 0.0);
        assert_eq!(reaction_v(0.0, 2.0), -2.0);
        assert_eq!(reaction_v(3.0, 0.5), 1.0);
    }

    #[test]
    fn taxis_coefficient_examples() {
        assert_eq!(taxis_coefficient(0.0, 1.0, &params(0.0, 1.0, 2.0, 0.0, 0.5)).unwrap(), 0.0);
        assert_eq!(taxis_coefficient(1.0, 2.0, &params(0.0, 1.0, 2.0, 0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(taxis_coefficient(4.0, 1.0, &params(0.0, 1.0, 2.0, 0.0, 0.5)).unwrap(), 0.0);
        let p = params(0.0, 1.0, 2.0, 0.0, 0.0);
        assert!(matches!(taxis_coefficient(1.0, 0.0, &p), Err(Error::Singular { .. })));
        assert!(taxis_coefficient(1.0, -1.0, &p).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(homogeneous_fixed_point(&params(2.0, 1.0, 1.0, 0.0, 0.0)), Some((1.0, 1.0)));
        assert_eq!(homogeneous_fixed_point(&params(1.0, 1.0, 1.0, 0.0, 0.0)), None);
        assert_eq!(homogeneous_fixed_point(&params(3.0, 1.0, 1.0, 2.0, 0.0)), Some((1.0, 2.0)));
    }

    #[test]
    fn bound_constant_examples() {
        let p = params(1.0, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(bound_constants(&p, 1.0, 0.5).unwrap().c1, 1.0);
        assert_eq!(bound_constants(&p, 1.0, 2.0).unwrap().c1, 2.0);
        let p = params(1.0, 1.0, 1.0, 1.0, 0.0);
        let bc = bound_constants(&p, 1.0, 0.0).unwrap();
        assert!((bc.k1_weak - 16.0 / 27.0).abs() < 1e-14);
    }

    #[test]
    fn sharp_young_constant_matches_brute_force() {
        for &(rho, mu, gamma) in &[(1.0, 1.0, 1.0), (2.0, 1.0, 1.0), (0.0, 0.5, 0.5), (-1.0, 2.0, 3.0), (1.0, 1.0, 0.0)] {
            let p = params(rho, mu, 1.0, gamma, 0.0);
            let bc = bound_constants(&p, 1.0, 0.0).unwrap();
            let a = 1.0 + f64::abs(rho);
            let brute = (0..200_000)
                .map(|k| {
                    let y = k as f64 * 1e-4;
                    a * y - mu * y.powf(2.0 + gamma)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((bc.k1_weak_sharp - brute).abs() < 1e-6, "rho={rho} mu={mu} gamma={gamma}");
            if gamma == 0.0 {
                assert!((bc.k1_weak_sharp - bc.c1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn c2_formula() {
        let p = params(2.0, 1.0, 2.0, 0.0, 0.0);
        let bc = bound_constants(&p, 1.0, 2.0).unwrap();
        // c1 = max(9/4, 2)
        assert_eq!(bc.c1, 2.25);
        assert!((bc.c2_of_t(3.0) - (2.0 + 3.0 * 2.0 * 2.25)).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(Parameters::new(0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(Parameters::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(Parameters::new(0.0, 1.0, 1.0, -0.1, 0.0).is_err());
        assert!(Parameters::new(0.0, 1.0, 1.0, 0.0, 1.5).is_err());
        assert!(Parameters::new(-3.0, 1.0, 1.0, 0.0, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn cutoff_range_plateaus_and_eps_monotonicity(eps in 0.01f64..1.0, shrink in 0.0f64..1.0, s in 0.0f64..200.0) {
            let eta = cutoff_eta(eps, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&eta));
            if s <= 1.0 / eps - 1.0 { prop_assert_eq!(eta, 1.0); }
            if s >= 1.0 / eps { prop_assert_eq!(eta, 0.0); }
            let smaller = eps * shrink;
            prop_assert!(cutoff_eta(smaller, s).unwrap() >= eta);
        }

        #[test]
        fn taxis_vanishes_beyond_support(eps in 0.01f64..1.0, extra in 0.0f64..50.0, v in 0.01f64..10.0) {
            let p = params(0.0, 1.0, 3.0, 0.0, eps);
            prop_assert_eq!(taxis_coefficient(1.0 / eps + extra, v, &p).unwrap(), 0.0);
        }

        #[test]
        fn fixed_point_zeroes_reactions(rho in -5.0f64..5.0, mu in 0.01f64..4.0, gamma in 0.0f64..3.0) {
            let p = params(rho, mu, 1.0, gamma, 0.0);
            if let Some((us, vs)) = homogeneous_fixed_point(&p) {
                prop_assert!(vs > 0.0);
                prop_assert!(reaction_u(us, vs, &p).abs() <= 1e-12 * (1.0 + rho.abs()));
                prop_assert_eq!(reaction_v(us, vs), 0.0);
            } else {
                prop_assert!(rho <= mu);
            }
        }

        #[test]
        fn c1_nonincreasing_in_mu(rho in -4.0f64..4.0, mu in 0.01f64..4.0, bump in 0.0f64..4.0) {
            let lo = bound_constants(&params(rho, mu, 1.0, 0.0, 0.0), 1.0, 0.0).unwrap();
            let hi = bound_constants(&params(rho, mu + bump, 1.0, 0.0, 0.0), 1.0, 0.0).unwrap();
            prop_assert!(hi.c1 <= lo.c1);
        }
    }
}
