use maxdg::leapfrog::{surface_term, volume_term};
use maxdg::operators::{estimate_cfl_norm, LiftMode, MaxwellOperators};
use maxdg::solutions::{self, CavityParams};
use maxdg::{
    build_cartesian_mesh, cfl_timestep, integrate, leapfrog_step, verify_one_step_identity, DgSpace, Error, Forcing,
    Leapfrog, LeapfrogConfig, MaterialParams, Schedule, TEState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, seed: u64) -> TEState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    TEState {
        h3: v(),
        e1: v(),
        e2: v(),
        t: 0.0,
    }
}

fn diff_norm(space: &DgSpace, m: &MaterialParams, a: &TEState, b: &TEState) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    space.energy_norm(&d, m)
}

fn cavity_forcing(ops: &MaxwellOperators, mode: LiftMode) -> Forcing {
    let p = CavityParams::default();
    let k2 = p.k2();
    let mut f = Forcing::None;
    for (amp, w, sign) in p.surface_current_terms() {
        f.push(surface_term(ops, move |x2| sign * amp * (k2 * x2).cos(), move |t| (w * t).sin(), mode));
    }
    f
}

#[test]
fn zero_state_stays_zero() {
    let s = DgSpace::new(&build_cartesian_mesh(2, 2), 2).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    let u = TEState::zeros(s.dim());
    let v = leapfrog_step(&u, 0.01, &ops, &Forcing::None).unwrap();
    assert!(v.h3.iter().chain(&v.e1).chain(&v.e2).all(|&x| x == 0.0));
    assert!((v.t - 0.01).abs() < 1e-16);
}

#[test]
fn constant_surface_current_step() {
    let s = DgSpace::new(&build_cartesian_mesh(2, 3), 2).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::new(1.0, 2.0, 1.5, 0.5).unwrap()).unwrap();
    let tau = 0.01;
    let forcing = Forcing::Separable(vec![surface_term(&ops, |_| 1.0, |_| 1.0, LiftMode::Quadrature)]);
    let v = leapfrog_step(&TEState::zeros(s.dim()), tau, &ops, &forcing).unwrap();
    let (l1, l2) = ops.lift_interface(|_| 1.0, LiftMode::Quadrature);
    for i in 0..s.dim() {
        assert!((v.e1[i] + tau * l1[i]).abs() < 1e-15);
        assert!((v.e2[i] + tau * l2[i]).abs() < 1e-15);
    }
    let ce = ops.ce(&v.e1, &v.e2);
    for i in 0..s.dim() {
        assert!((v.h3[i] + 0.5 * tau * ce[i]).abs() < 1e-15);
    }
}

#[test]
fn one_step_identity_random_states() {
    for m in [MaterialParams::vacuum(), MaterialParams::new(2.0, 0.5, 1.5, 3.0).unwrap()] {
        let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2).unwrap();
        let ops = MaxwellOperators::new(&s, m).unwrap();
        for seed in 0..5 {
            let u = random_state(s.dim(), seed);
            let v = leapfrog_step(&u, 0.003, &ops, &Forcing::None).unwrap();
            let r = verify_one_step_identity(&u, &v, 0.003, &ops, &Forcing::None).unwrap();
            assert!(r <= 1e-12 * s.energy_norm(&u, &m), "{r:e}");
        }
    }
}

#[test]
fn one_step_identity_cavity_and_sensitivity() {
    let m = MaterialParams::vacuum();
    let s = DgSpace::new(&build_cartesian_mesh(5, 5), 2).unwrap();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let forcing = cavity_forcing(&ops, LiftMode::Quadrature);
    let p = CavityParams::default();
    let mut u = s.project_state(0.3, |x, sd| p.fields(x, sd, 0.3));
    u.t = 0.3;
    let tau = 1e-3;
    let v = leapfrog_step(&u, tau, &ops, &forcing).unwrap();
    let norm = s.energy_norm(&u, &m);
    let r = verify_one_step_identity(&u, &v, tau, &ops, &forcing).unwrap();
    assert!(r <= 1e-12 * norm, "{r:e}");

    // corrupting one H coefficient by delta gives a residual of order delta
    let mut w = v.clone();
    let delta = 1e-6;
    w.h3[7] += delta;
    let mut unit = TEState::zeros(s.dim());
    unit.h3[7] = delta;
    let expected = s.energy_norm(&unit, &m);
    let r = verify_one_step_identity(&u, &w, tau, &ops, &forcing).unwrap();
    assert!((r - expected).abs() < 0.05 * expected, "{r:e} vs {expected:e}");
}

#[test]
fn separable_lift_matches_direct_lift() {
    let s = DgSpace::new(&build_cartesian_mesh(4, 4), 2).unwrap();
    let m = MaterialParams::vacuum();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let sep = cavity_forcing(&ops, LiftMode::Quadrature);
    let direct = {
        let s2 = DgSpace::new(&build_cartesian_mesh(4, 4), 2).unwrap();
        let p = CavityParams::default();
        Forcing::General(Box::new(move |t, o1, o2| {
            let ops = MaxwellOperators::new(&s2, m).unwrap();
            let (a, b) = ops.lift_interface(|x2| p.surface_current(x2, t), LiftMode::Quadrature);
            o1.copy_from_slice(&a);
            o2.copy_from_slice(&b);
        }))
    };
    let n = s.dim();
    for &t in &[0.0, 0.123, 0.77] {
        let (mut a1, mut a2, mut b1, mut b2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        sep.eval(t, &mut a1, &mut a2);
        direct.eval(t, &mut b1, &mut b2);
        let scale = b2.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..n {
            assert!((a1[i] - b1[i]).abs() <= 1e-13 * scale);
            assert!((a2[i] - b2[i]).abs() <= 1e-13 * scale);
        }
    }
}

/// One step from the projected cavity data against the projection of the
/// exact solution. The deviation is tau times the spatial consistency defect,
/// so it must be small at h ~ 0.1 and shrink faster than h^2.
#[test]
fn cavity_single_step_local_error() {
    let m = MaterialParams::vacuum();
    let p = CavityParams::default();
    let tau = 1e-4;
    let mut errs = vec![];
    // h = sqrt(2)/14 ~ 0.101 and its half
    for (nh, ny) in [(7, 10), (14, 20)] {
        let s = DgSpace::new(&build_cartesian_mesh(nh, ny), 2).unwrap();
        let ops = MaxwellOperators::new(&s, m).unwrap();
        let forcing = cavity_forcing(&ops, LiftMode::Quadrature);
        let u0 = s.project_state(0.0, |x, sd| p.fields(x, sd, 0.0));
        let u1 = leapfrog_step(&u0, tau, &ops, &forcing).unwrap();
        let exact = s.project_state(tau, |x, sd| p.fields(x, sd, tau));
        errs.push(diff_norm(&s, &m, &u1, &exact));
    }
    assert!(errs[0] < 1e-5, "{:e}", errs[0]);
    assert!(errs[0] / errs[1] > 4.0, "{errs:?}");
}

#[test]
fn zero_end_time_is_identity() {
    let s = DgSpace::new(&build_cartesian_mesh(2, 2), 1).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    let u0 = random_state(s.dim(), 3);
    let mut u = u0.clone();
    let cfg = LeapfrogConfig::new(0.1, 0.0).unwrap();
    let mut seen = vec![];
    let rep = integrate(&mut u, &cfg, &ops, &Forcing::None, &Schedule::EveryStep, |n, _| {
        seen.push(n);
        Ok(())
    })
    .unwrap();
    assert_eq!(rep.steps, 0);
    assert_eq!(seen, vec![0]);
    assert_eq!(u, u0);
}

#[test]
fn source_free_norm_bound_under_cfl() {
    let m = MaterialParams::new(1.0, 2.0, 1.0, 0.5).unwrap();
    let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2).unwrap();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let est = estimate_cfl_norm(&ops, 1e-12, 100_000).unwrap();
    let theta = 0.9;
    let tau = cfl_timestep(theta, est.norm).unwrap();
    let mut u = random_state(s.dim(), 21);
    let n0 = s.energy_norm(&u, &m);
    let bound = n0 / (1.0 - theta * theta).sqrt();
    let mut cfg = LeapfrogConfig::new(tau, 1000.0 * tau).unwrap();
    cfg.verify_every = Some(97);
    let mut worst: f64 = 0.0;
    let rep = integrate(&mut u, &cfg, &ops, &Forcing::None, &Schedule::EveryStep, |_, v| {
        worst = worst.max(s.energy_norm(v, &m));
        Ok(())
    })
    .unwrap();
    assert_eq!(rep.steps, 1000);
    assert!(worst <= bound, "{worst} > {bound}");
    assert!(rep.max_identity_residual.unwrap() < 1e-12);
}

#[test]
fn step_above_cfl_diverges() {
    let m = MaterialParams::vacuum();
    let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2).unwrap();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let est = estimate_cfl_norm(&ops, 1e-12, 100_000).unwrap();
    let tau = 1.5 * 2.0 / est.norm;
    let mut u = random_state(s.dim(), 4);
    let n0 = s.energy_norm(&u, &m);
    let mut cfg = LeapfrogConfig::new(tau, 1e4 * tau).unwrap();
    cfg.abort_factor = 1e12;
    let mut crossed = None;
    let res = integrate(&mut u, &cfg, &ops, &Forcing::None, &Schedule::EveryStep, |n, v| {
        if crossed.is_none() && s.energy_norm(v, &m) > 1e6 * n0 {
            crossed = Some(n);
        }
        Ok(())
    });
    assert!(matches!(res, Err(Error::Unstable { .. })));
    assert!(crossed.is_some_and(|n| n <= 10_000));
}

#[test]
fn source_free_scheme_is_time_reversible() {
    let m = MaterialParams::new(2.0, 1.0, 1.0, 3.0).unwrap();
    let s = DgSpace::new(&build_cartesian_mesh(3, 2), 3).unwrap();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let est = estimate_cfl_norm(&ops, 1e-10, 100_000).unwrap();
    let tau = cfl_timestep(0.5, est.norm).unwrap();
    let u0 = random_state(s.dim(), 8);
    let mut u = u0.clone();
    let none = Forcing::None;
    let mut fwd = Leapfrog::new(&ops, &none, tau);
    for _ in 0..200 {
        fwd.step(&mut u).unwrap();
    }
    let mut bwd = Leapfrog::new(&ops, &none, -tau);
    for _ in 0..200 {
        bwd.step(&mut u).unwrap();
    }
    let err = diff_norm(&s, &m, &u, &u0);
    assert!(err <= 1e-10 * s.energy_norm(&u0, &m), "{err:e}");
}

#[test]
fn polynomial_forcing_is_consistent() {
    // The polynomial solution lies in the k = 3 space, so one step from the
    // exact data stays close to the exact data at the next time.
    let m = MaterialParams::vacuum();
    let s = DgSpace::new(&build_cartesian_mesh(2, 3), 3).unwrap();
    let ops = MaxwellOperators::new(&s, m).unwrap();
    let (a, b) = solutions::polynomial_volume_terms();
    let mut f = Forcing::None;
    f.push(volume_term(&s, &m, a, solutions::poly_time));
    f.push(volume_term(&s, &m, b, solutions::poly_time_dd));
    f.push(surface_term(&ops, |x2| -3.0 * solutions::poly_r(x2).1, solutions::poly_time, LiftMode::Quadrature));
    let tau = 1e-3;
    let u0 = s.interpolate_state(0.0, |x, sd| solutions::polynomial_fields(x, sd, 0.0));
    let u1 = leapfrog_step(&u0, tau, &ops, &f).unwrap();
    let exact = s.interpolate_state(tau, |x, sd| solutions::polynomial_fields(x, sd, tau));
    let err = diff_norm(&s, &m, &u1, &exact);
    // local error is O(tau^3)
    assert!(err < 1e-6, "{err:e}");
}
