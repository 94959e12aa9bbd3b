use std::f64::consts::PI;

use hotspot_core::model::homogeneous_fixed_point;
use hotspot_core::{Error, Field, Grid, Parameters, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::InitialSpec;

/// Builds `(u0, v0)` on `grid`.
///
/// Fails unless `u0 ≥ 0` and `v0 > 0` in every cell.
pub fn make_initial(spec: &InitialSpec, grid: &Grid, params: &Parameters) -> Result<(Field, Field)> {
    let (u, v) = match *spec {
        InitialSpec::Constant { u, v } => (Field::constant(*grid, u), Field::constant(*grid, v)),
        InitialSpec::FixedPoint => {
            let (u, v) = homogeneous_fixed_point(params)
                .ok_or(Error::Invalid { name: "ic", constraint: "rho > mu for a positive fixed point" })?;
            (Field::constant(*grid, u), Field::constant(*grid, v))
        }
        InitialSpec::GaussianBump { cx, cy, width, u_amp, u_floor, v_amp, v_floor } => {
            let bump = |x: f64, y: f64| {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                libm::exp(-r2 / (width * width))
            };
            (
                Field::from_fn(*grid, |x, y| u_floor + u_amp * bump(x, y)),
                Field::from_fn(*grid, |x, y| v_floor + v_amp * bump(x, y)),
            )
        }
        InitialSpec::PerturbedHomogeneous { u, v, amplitude, kx, ky } => {
            let mode = |x: f64, y: f64| {
                libm::cos(kx as f64 * PI * x / grid.lx) * libm::cos(ky as f64 * PI * y / grid.ly)
            };
            (
                Field::from_fn(*grid, |x, y| u * (1.0 + amplitude * mode(x, y))),
                Field::from_fn(*grid, |x, y| v * (1.0 + amplitude * mode(x, y))),
            )
        }
        InitialSpec::SeededRandom { seed, u, v, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noise = |base: f64| base * (1.0 + amplitude * (2.0 * rng.random::<f64>() - 1.0));
            let uf = Field::from_fn(*grid, |_, _| noise(u));
            let vf = Field::from_fn(*grid, |_, _| noise(v));
            (uf, vf)
        }
    };
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::Invalid { name: "ic", constraint: "finite initial data" });
    }
    if u.min() < 0.0 {
        return Err(Error::Invalid { name: "ic", constraint: "u0 >= 0 everywhere" });
    }
    if !(v.min() > 0.0) {
        return Err(Error::Invalid { name: "ic", constraint: "v0 > 0 everywhere" });
    }
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Parameters {
        Parameters::new(2.0, 1.0, 2.0, 0.0, 0.1).unwrap()
    }

    #[test]
    fn constant_zero_one() {
        let g = Grid::unit_square(8).unwrap();
        let (u, v) = make_initial(&InitialSpec::Constant { u: 0.0, v: 1.0 }, &g, &p()).unwrap();
        assert!(u.values.iter().all(|&x| x == 0.0));
        assert!(v.values.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn fixed_point_fields() {
        let g = Grid::unit_square(8).unwrap();
        let (u, v) = make_initial(&InitialSpec::FixedPoint, &g, &p()).unwrap();
        assert!(u.values.iter().all(|&x| x == 1.0));
        assert!(v.values.iter().all(|&x| x == 1.0));
        let q = Parameters::new(3.0, 0.5, 2.0, 0.0, 0.1).unwrap();
        let (u, v) = make_initial(&InitialSpec::FixedPoint, &g, &q).unwrap();
        assert_eq!((u.values[0], v.values[0]), (1.0, 2.5));
        let r = Parameters::new(1.0, 1.0, 2.0, 0.0, 0.1).unwrap();
        assert!(make_initial(&InitialSpec::FixedPoint, &g, &r).is_err());
    }

    #[test]
    fn gaussian_bump_matches_formula() {
        let g = Grid::unit_square(10).unwrap();
        let spec = InitialSpec::GaussianBump {
            cx: 0.5,
            cy: 0.5,
            width: 0.2,
            u_amp: 2.0,
            u_floor: 0.3,
            v_amp: 0.5,
            v_floor: 1.0,
        };
        let (u, v) = make_initial(&spec, &g, &p()).unwrap();
        // cell (4, 4) has center (0.45, 0.45): r² = 0.005
        let k = g.index(4, 4);
        let e = (-0.005f64 / 0.04).exp();
        assert!((u.values[k] - (0.3 + 2.0 * e)).abs() < 1e-14);
        assert!((v.values[k] - (1.0 + 0.5 * e)).abs() < 1e-14);
        // corner is far from the bump: the minimum sits just above the floor
        assert!(u.min() > 0.3 && u.min() < 0.3 + 2.0 * (-0.405f64 / 0.04).exp() * 1.01);
    }

    #[test]
    fn perturbed_homogeneous_mean_is_base() {
        let g = Grid::unit_square(16).unwrap();
        let spec = InitialSpec::PerturbedHomogeneous { u: 1.0, v: 2.0, amplitude: 0.3, kx: 1, ky: 2 };
        let (u, v) = make_initial(&spec, &g, &p()).unwrap();
        let mean = |f: &Field| f.values.iter().sum::<f64>() / f.values.len() as f64;
        assert!((mean(&u) - 1.0).abs() < 1e-12);
        assert!((mean(&v) - 2.0).abs() < 1e-12);
        let bad = InitialSpec::PerturbedHomogeneous { u: 1.0, v: 1.0, amplitude: 1.5, kx: 1, ky: 0 };
        assert!(make_initial(&bad, &g, &p()).is_err());
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let g = Grid::unit_square(8).unwrap();
        let a = InitialSpec::SeededRandom { seed: 0xdead_beef_0123_4567, u: 1.0, v: 1.0, amplitude: 0.5 };
        let b = InitialSpec::SeededRandom { seed: 7, u: 1.0, v: 1.0, amplitude: 0.5 };
        let (u1, v1) = make_initial(&a, &g, &p()).unwrap();
        let (u2, v2) = make_initial(&a, &g, &p()).unwrap();
        let (u3, _) = make_initial(&b, &g, &p()).unwrap();
        assert_eq!(u1, u2);
        assert_eq!(v1, v2);
        assert_ne!(u1, u3);
        assert!(u1.min() >= 0.5 && u1.max() < 1.5);
    }

    #[test]
    fn nonpositive_v_rejected() {
        let g = Grid::unit_square(4).unwrap();
        assert!(make_initial(&InitialSpec::Constant { u: 1.0, v: 0.0 }, &g, &p()).is_err());
        assert!(make_initial(&InitialSpec::Constant { u: -1.0, v: 1.0 }, &g, &p()).is_err());
    }
}
