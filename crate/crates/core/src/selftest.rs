//! Round-off level identities of the discrete operators and the scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::leapfrog::{cfl_timestep, integrate, leapfrog_step, verify_one_step_identity, Forcing, LeapfrogConfig, Schedule};
use crate::mesh::{build_cartesian_mesh, Point, Subdomain};
use crate::operators::{estimate_cfl_norm, FluxVariant, LiftMode, MaxwellOperators};
use crate::space::{DgSpace, MaterialParams, TEState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    /// Worst measured value; compared against `tolerance` (or a bound of 1
    /// for ratios).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertyCheck {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        }
    }
}

fn unequal() -> MaterialParams {
    MaterialParams::new(2.0, 0.5, 1.5, 3.0).expect("positive materials")
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> TEState {
    let mut v = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    TEState {
        h3: v(),
        e1: v(),
        e2: v(),
        t: 0.0,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `|(C u, v) + (C v, u)| / (|u| |v|)` over 100 random pairs per material set.
pub fn check_skew_adjointness(seed: u64) -> Result<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for m in [MaterialParams::vacuum(), unequal()] {
        let s = DgSpace::new(&build_cartesian_mesh(2, 3), 2)?;
        let ops = MaxwellOperators::new(&s, m)?;
        for _ in 0..100 {
            let u = random_state(s.dim(), &mut rng);
            let v = random_state(s.dim(), &mut rng);
            let lhs = s.weighted_inner_product(&ops.apply_combined(&u), &v, &m)?
                + s.weighted_inner_product(&ops.apply_combined(&v), &u, &m)?;
            worst = worst.max(lhs.abs() / (s.energy_norm(&u, &m) * s.energy_norm(&v, &m)));
        }
    }
    Ok(PropertyCheck::new("skew_adjointness", worst, 1e-11))
}

/// Tangentially continuous piecewise polynomials: discrete curls equal the
/// projected exact curls.
pub fn check_consistency() -> Result<PropertyCheck> {
    let mut worst: f64 = 0.0;
    for m in [MaterialParams::vacuum(), unequal()] {
        for variant in [FluxVariant::Plain, FluxVariant::Conjugate] {
            let s = DgSpace::new(&build_cartesian_mesh(3, 2), 3)?;
            let ops = MaxwellOperators::with_variant(&s, m, variant)?;
            // E1 may jump across x1 = 0, E2 may not; PEC on the outer walls
            let a = |sd: Subdomain| if sd == Subdomain::Minus { 2.0 } else { -1.0 };
            let e1 = s.nodal_interpolate_volume(|x, sd| a(sd) * x[1] * (1.0 - x[1]) * (1.0 + x[0] * x[0]));
            let e2 = s.nodal_interpolate_volume(|x, _| (1.0 - x[0] * x[0]) * (1.0 + x[1]));
            let curl = s.l2_project(|x, sd| {
                let d1e2 = -2.0 * x[0] * (1.0 + x[1]);
                let d2e1 = a(sd) * (1.0 - 2.0 * x[1]) * (1.0 + x[0] * x[0]);
                (d1e2 - d2e1) / m.mu(sd)
            });
            worst = worst.max(max_abs_diff(&ops.ce(&e1, &e2), &curl));

            let h3 = s.nodal_interpolate_volume(|x: Point, _| x[0] * x[0] * x[1] + 2.0 * x[1] * x[1] - x[0]);
            let (c1, c2) = ops.ch_hat(&h3);
            let p1 = s.l2_project(|x, sd| (x[0] * x[0] + 4.0 * x[1]) / m.eps(sd));
            let p2 = s.l2_project(|x, sd| -(2.0 * x[0] * x[1] - 1.0) / m.eps(sd));
            worst = worst.max(max_abs_diff(&c1, &p1)).max(max_abs_diff(&c2, &p2));
        }
    }
    Ok(PropertyCheck::new("consistency", worst, 1e-11))
}

/// H3 with a jump g across the interface: `C_H H - L(g)` is the projected
/// piecewise curl.
pub fn check_lift_correction() -> Result<PropertyCheck> {
    let mut worst: f64 = 0.0;
    for m in [MaterialParams::vacuum(), unequal()] {
        for k in [2, 3] {
            let s = DgSpace::new(&build_cartesian_mesh(2, 3), k)?;
            let ops = MaxwellOperators::new(&s, m)?;
            let jump = |y: f64| 1.0 + y * y;
            let h3 = s.nodal_interpolate_volume(|x, sd| {
                let base = x[0] * x[1] - x[1] * x[1];
                if sd == Subdomain::Plus {
                    base + jump(x[1])
                } else {
                    base
                }
            });
            let (a1, a2) = ops.ch_hat(&h3);
            let (l1, l2) = ops.lift_interface(jump, LiftMode::Quadrature);
            let c1 = s.l2_project(|x, sd| {
                let d2 = x[0] - 2.0 * x[1] + if sd == Subdomain::Plus { 2.0 * x[1] } else { 0.0 };
                d2 / m.eps(sd)
            });
            let c2 = s.l2_project(|x, sd| -x[1] / m.eps(sd));
            let r1: Vec<f64> = a1.iter().zip(&l1).map(|(a, l)| a - l).collect();
            let r2: Vec<f64> = a2.iter().zip(&l2).map(|(a, l)| a - l).collect();
            worst = worst.max(max_abs_diff(&r1, &c1)).max(max_abs_diff(&r2, &c2));
        }
    }
    Ok(PropertyCheck::new("lift_correction", worst, 1e-11))
}

/// Relative residual of the one-step formulation on random states.
pub fn check_one_step_identity(seed: u64) -> Result<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for m in [MaterialParams::vacuum(), unequal()] {
        let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2)?;
        let ops = MaxwellOperators::new(&s, m)?;
        for _ in 0..5 {
            let u = random_state(s.dim(), &mut rng);
            let v = leapfrog_step(&u, 0.003, &ops, &Forcing::None)?;
            let r = verify_one_step_identity(&u, &v, 0.003, &ops, &Forcing::None)?;
            worst = worst.max(r / s.energy_norm(&u, &m));
        }
    }
    Ok(PropertyCheck::new("one_step_identity", worst, 1e-12))
}

/// Largest `|u^n| / ((1 - theta^2)^{-1/2} |u^0|)` over 1000 source-free steps
/// at `theta = 0.9`; passes when at most 1.
pub fn check_energy_bound(seed: u64) -> Result<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = MaterialParams::new(1.0, 2.0, 1.0, 0.5)?;
    let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2)?;
    let ops = MaxwellOperators::new(&s, m)?;
    let theta = 0.9;
    let tau = cfl_timestep(theta, estimate_cfl_norm(&ops, 1e-12, 100_000)?.norm)?;
    let mut u = random_state(s.dim(), &mut rng);
    let bound = s.energy_norm(&u, &m) / (1.0 - theta * theta).sqrt();
    let cfg = LeapfrogConfig::new(tau, 1000.0 * tau)?;
    let mut worst: f64 = 0.0;
    integrate(&mut u, &cfg, &ops, &Forcing::None, &Schedule::EveryStep, |_, v| {
        worst = worst.max(s.energy_norm(v, &m));
        Ok(())
    })?;
    Ok(PropertyCheck::new("energy_bound", worst / bound, 1.0))
}

/// All identity checks in a fixed order.
pub fn run_selftest(seed: u64) -> Result<Vec<PropertyCheck>> {
    Ok(vec![
        check_skew_adjointness(seed)?,
        check_consistency()?,
        check_lift_correction()?,
        check_one_step_identity(seed.wrapping_add(1))?,
        check_energy_bound(seed.wrapping_add(2))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        for c in run_selftest(3).unwrap() {
            assert!(c.passed, "{} = {:e}", c.name, c.value);
        }
    }

    #[test]
    fn non_finite_values_fail() {
        assert!(!PropertyCheck::new("x", f64::NAN, 1.0).passed);
        assert!(PropertyCheck::new("x", 0.5, 1.0).passed);
    }
}
