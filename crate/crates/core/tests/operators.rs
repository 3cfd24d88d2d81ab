use maxdg::operators::{estimate_cfl_norm, FluxVariant, LiftMode, MaxwellOperators};
use maxdg::quadrature::gauss_legendre;
use maxdg::{build_cartesian_mesh, DgSpace, MaterialParams, Point, Subdomain, TEState};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn unequal() -> MaterialParams {
    MaterialParams::new(2.0, 0.5, 1.5, 3.0).unwrap()
}

fn random_state(space: &DgSpace, rng: &mut ChaCha8Rng) -> TEState {
    let n = space.dim();
    let mut v = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    TEState {
        h3: v(),
        e1: v(),
        e2: v(),
        t: 0.0,
    }
}

#[test]
fn ce_of_zero_is_zero() {
    let s = DgSpace::new(&build_cartesian_mesh(2, 2), 2).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    let z = vec![0.0; s.dim()];
    assert_eq!(max_abs(&ops.ce(&z, &z)), 0.0);
    let (a, b) = ops.ch_hat(&z);
    assert_eq!(max_abs(&a) + max_abs(&b), 0.0);
    let (l1, l2) = ops.lift_interface(|_| 0.0, LiftMode::Quadrature);
    assert_eq!(max_abs(&l1) + max_abs(&l2), 0.0);
}

#[test]
fn dimension_mismatch_is_reported() {
    let s = DgSpace::new(&build_cartesian_mesh(1, 1), 1).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    let short = vec![0.0; s.dim() - 1];
    let mut out = vec![0.0; s.dim()];
    assert!(ops.apply_ce(&short, &out.clone(), &mut out).is_err());
}

/// E = (x2, 0) has a nonzero tangential trace on x2 = 1, which the electric
/// operator treats as a PEC wall, so only elements away from that wall see
/// the exact curl.
#[test]
fn ce_consistency_affine() {
    for (nh, ny, k) in [(1, 2, 1), (2, 3, 1), (3, 2, 2), (2, 4, 3)] {
        let s = DgSpace::new(&build_cartesian_mesh(nh, ny), k).unwrap();
        let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
        let e1 = s.nodal_interpolate_volume(|x, _| x[1]);
        let e2 = vec![0.0; s.dim()];
        let h = ops.ce(&e1, &e2);
        let mut checked = 0;
        for e in 0..s.num_elements() {
            let r = s.rect(e);
            if r.y0 + r.hy > 1.0 - 1e-12 {
                continue;
            }
            checked += 1;
            assert!(h[s.range(e)].iter().all(|v| (v + 1.0).abs() < 1e-12), "k={k} element {e}");
        }
        assert!(checked > 0);
    }
}

#[test]
fn ch_consistency_bilinear() {
    for k in 2..=3 {
        let s = DgSpace::new(&build_cartesian_mesh(2, 3), k).unwrap();
        let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
        let h = s.nodal_interpolate_volume(|x, _| x[0] * x[1]);
        let (e1, e2) = ops.ch_hat(&h);
        let p1 = s.l2_project(|x, _| x[0]);
        let p2 = s.l2_project(|x, _| -x[1]);
        assert!(max_abs_diff(&e1, &p1) < 1e-12);
        assert!(max_abs_diff(&e2, &p2) < 1e-12);
    }
}

/// Tangentially continuous piecewise polynomial fields with unequal
/// materials: the discrete curls equal projections of the exact ones.
#[test]
fn consistency_with_unequal_materials() {
    let m = unequal();
    for variant in [FluxVariant::Plain, FluxVariant::Conjugate] {
        let s = DgSpace::new(&build_cartesian_mesh(3, 2), 3).unwrap();
        let ops = MaxwellOperators::with_variant(&s, m, variant).unwrap();
        // E2 continuous across x1 = 0, E1 may jump (normal component);
        // E1 = 0 on x2 in {0, 1} and E2 = 0 on x1 = +-1.
        let e1f = |x: Point, sd: Subdomain| {
            let a = if sd == Subdomain::Minus { 2.0 } else { -1.0 };
            a * x[1] * (1.0 - x[1]) * (1.0 + x[0] * x[0])
        };
        let e2f = |x: Point, _| (1.0 - x[0] * x[0]) * (1.0 + x[1]);
        let e1 = s.nodal_interpolate_volume(e1f);
        let e2 = s.nodal_interpolate_volume(e2f);
        let h = ops.ce(&e1, &e2);
        // curl E = d1 E2 - d2 E1, divided by mu
        let curl = s.l2_project(|x, sd| {
            let a = if sd == Subdomain::Minus { 2.0 } else { -1.0 };
            let d1e2 = -2.0 * x[0] * (1.0 + x[1]);
            let d2e1 = a * (1.0 - 2.0 * x[1]) * (1.0 + x[0] * x[0]);
            (d1e2 - d2e1) / m.mu(sd)
        });
        assert!(max_abs_diff(&h, &curl) < 1e-11, "{:e}", max_abs_diff(&h, &curl));

        // H3 continuous everywhere
        let hf = |x: Point, _| x[0] * x[0] * x[1] + 2.0 * x[1] * x[1] - x[0];
        let h3 = s.nodal_interpolate_volume(hf);
        let (a1, a2) = ops.ch_hat(&h3);
        let c1 = s.l2_project(|x, sd| (x[0] * x[0] + 4.0 * x[1]) / m.eps(sd));
        let c2 = s.l2_project(|x, sd| -(2.0 * x[0] * x[1] - 1.0) / m.eps(sd));
        assert!(max_abs_diff(&a1, &c1) < 1e-11);
        assert!(max_abs_diff(&a2, &c2) < 1e-11);
    }
}

/// H3 with a jump g across the interface: the magnetic operator minus the
/// lift of g equals the projection of the piecewise curl.
#[test]
fn lift_correction_identity() {
    for m in [MaterialParams::vacuum(), unequal()] {
        for k in [2, 3] {
            let s = DgSpace::new(&build_cartesian_mesh(2, 3), k).unwrap();
            let ops = MaxwellOperators::new(&s, m).unwrap();
            let jump = |y: f64| 1.0 + y * y;
            let hf = |x: Point, sd: Subdomain| {
                let base = x[0] * x[1] - x[1] * x[1];
                if sd == Subdomain::Plus {
                    base + jump(x[1])
                } else {
                    base
                }
            };
            let h3 = s.nodal_interpolate_volume(hf);
            let (a1, a2) = ops.ch_hat(&h3);
            let (l1, l2) = ops.lift_interface(jump, LiftMode::Quadrature);
            let c1 = s.l2_project(|x, sd| {
                let d2 = x[0] - 2.0 * x[1] + if sd == Subdomain::Plus { 2.0 * x[1] } else { 0.0 };
                d2 / m.eps(sd)
            });
            let c2 = s.l2_project(|x, sd| -x[1] / m.eps(sd));
            let r1: Vec<f64> = a1.iter().zip(&l1).map(|(a, l)| a - l).collect();
            let r2: Vec<f64> = a2.iter().zip(&l2).map(|(a, l)| a - l).collect();
            assert!(max_abs_diff(&r1, &c1) < 1e-11, "{:e}", max_abs_diff(&r1, &c1));
            assert!(max_abs_diff(&r2, &c2) < 1e-11, "{:e}", max_abs_diff(&r2, &c2));
        }
    }
}

#[test]
fn skew_adjointness_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in [MaterialParams::vacuum(), unequal()] {
        let s = DgSpace::new(&build_cartesian_mesh(2, 3), 2).unwrap();
        let ops = MaxwellOperators::new(&s, m).unwrap();
        for _ in 0..100 {
            let u = random_state(&s, &mut rng);
            let v = random_state(&s, &mut rng);
            let cu = ops.apply_combined(&u);
            let cv = ops.apply_combined(&v);
            let lhs = s.weighted_inner_product(&cu, &v, &m).unwrap() + s.weighted_inner_product(&cv, &u, &m).unwrap();
            let scale = s.energy_norm(&u, &m) * s.energy_norm(&v, &m);
            assert!(lhs.abs() <= 1e-11 * scale, "{lhs:e} vs {scale:e}");
        }
    }
}

#[test]
fn equal_materials_make_variants_identical() {
    let m = MaterialParams::new(2.0, 2.0, 0.5, 0.5).unwrap();
    let s = DgSpace::new(&build_cartesian_mesh(2, 2), 2).unwrap();
    let a = MaxwellOperators::with_variant(&s, m, FluxVariant::Plain).unwrap();
    let b = MaxwellOperators::with_variant(&s, m, FluxVariant::Conjugate).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_state(&s, &mut rng);
    let (ca, cb) = (a.apply_combined(&u), b.apply_combined(&u));
    assert_eq!(ca, cb);
}

#[test]
fn lift_is_linear_and_local() {
    let s = DgSpace::new(&build_cartesian_mesh(3, 3), 2).unwrap();
    let ops = MaxwellOperators::new(&s, unequal()).unwrap();
    let f = |y: f64| (3.0 * y).sin();
    let g = |y: f64| y * y * y - 0.2;
    let (_, lf) = ops.lift_interface(f, LiftMode::Quadrature);
    let (_, lg) = ops.lift_interface(g, LiftMode::Quadrature);
    let (_, lfg) = ops.lift_interface(|y| 2.0 * f(y) - 3.0 * g(y), LiftMode::Quadrature);
    let comb: Vec<f64> = lf.iter().zip(&lg).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    assert!(max_abs_diff(&comb, &lfg) < 1e-13);
    let adjacent: Vec<usize> = s
        .mesh()
        .interface_faces()
        .flat_map(|(_, f)| [f.left, f.right.unwrap()])
        .collect();
    for e in 0..s.num_elements() {
        if !adjacent.contains(&e) {
            assert!(lf[s.range(e)].iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn lift_modes_agree_for_face_polynomials() {
    let k = 3;
    let s = DgSpace::new(&build_cartesian_mesh(2, 4), k).unwrap();
    let ops = MaxwellOperators::new(&s, unequal()).unwrap();
    let g = |y: f64| 1.0 - 2.0 * y + 5.0 * y.powi(3);
    let (_, a) = ops.lift_interface(g, LiftMode::Quadrature);
    let (_, b) = ops.lift_interface(g, LiftMode::Interpolation);
    assert!(max_abs_diff(&a, &b) < 1e-12);
}

/// Brute-force assembly of the lift on the two-element mesh: integrate
/// `-J {psi2}` along the interface with an independent rule and solve with
/// the dense mass matrix.
#[test]
fn lift_matches_dense_assembly() {
    let s = DgSpace::new(&build_cartesian_mesh(1, 1), 1).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    let (_, l2) = ops.lift_interface(|_| 1.0, LiftMode::Quadrature);
    let rule = gauss_legendre(6);
    let d = s.local_dim();
    for e in 0..2 {
        let mut rhs = DVector::zeros(d);
        for i in 0..d {
            let mut c = vec![0.0; s.dim()];
            c[e * d + i] = 1.0;
            // trace of psi from element e at x1 = 0, halved by the average
            rhs[i] = -0.5
                * rule.integrate(0.0, 1.0, |y| {
                    let xi = if e == 0 { 1.0 } else { -1.0 };
                    s.eval_local(&c, e, xi, 2.0 * y - 1.0)
                });
        }
        let m = s.element_mass_matrix(e, 1.0);
        let sol = m.lu().solve(&rhs).unwrap();
        for i in 0..d {
            assert!((sol[i] - l2[e * d + i]).abs() < 1e-13);
        }
    }
}

/// Hand quadrature of the electric face term on the (1, 1) mesh for a
/// field whose E2 jumps across the interface.
#[test]
fn ce_face_term_matches_hand_quadrature() {
    let s = DgSpace::new(&build_cartesian_mesh(1, 1), 1).unwrap();
    let ops = MaxwellOperators::new(&s, MaterialParams::vacuum()).unwrap();
    // constant E2 = 1 on the left element, E2 = 3 on the right, E1 = 0
    let e1 = vec![0.0; s.dim()];
    let e2 = s.nodal_interpolate_volume(|_, sd| if sd == Subdomain::Minus { 1.0 } else { 3.0 });
    let h = ops.ce(&e1, &e2);
    let rule = gauss_legendre(4);
    let d = s.local_dim();
    // volume part vanishes for constant E2 times d1 phi after integration
    // against phi on each element plus the face term -{E2} n1 [phi]
    for e in 0..2 {
        let mut rhs = DVector::zeros(d);
        for i in 0..d {
            let mut c = vec![0.0; s.dim()];
            c[e * d + i] = 1.0;
            let e2v = if e == 0 { 1.0 } else { 3.0 };
            let rect = *s.rect(e);
            // -(E2, d1 phi)_K by tensor quadrature with finite-difference derivative
            let vol = rule.integrate(rect.x0, rect.x0 + rect.hx, |x| {
                rule.integrate(0.0, 1.0, |y| {
                    let dx = 1e-6;
                    let (xi_p, eta) = rect.to_reference([x + dx, y]);
                    let (xi_m, _) = rect.to_reference([x - dx, y]);
                    let d1 = (s.eval_local(&c, e, xi_p, eta) - s.eval_local(&c, e, xi_m, eta)) / (2.0 * dx);
                    -e2v * d1
                })
            });
            let sign = if e == 0 { -1.0 } else { 1.0 };
            let face = rule.integrate(0.0, 1.0, |y| {
                let xi = if e == 0 { 1.0 } else { -1.0 };
                -(2.0) * 1.0 * sign * s.eval_local(&c, e, xi, 2.0 * y - 1.0)
            });
            rhs[i] = vol + face;
        }
        let sol = s.element_mass_matrix(e, 1.0).lu().solve(&rhs).unwrap();
        for i in 0..d {
            assert!((sol[i] - h[e * d + i]).abs() < 1e-8, "{} vs {}", sol[i], h[e * d + i]);
        }
    }
    assert!(max_abs(&h) > 0.1);
}

fn dense_curl_curl(ops: &MaxwellOperators) -> DMatrix<f64> {
    let n = ops.dim();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..2 * n {
        let mut e1 = vec![0.0; n];
        let mut e2 = vec![0.0; n];
        if j < n {
            e1[j] = 1.0
        } else {
            e2[j - n] = 1.0
        }
        let (a1, a2) = ops.apply_curl_curl(&e1, &e2);
        for i in 0..n {
            a[(i, j)] = a1[i];
            a[(i + n, j)] = a2[i];
        }
    }
    a
}

#[test]
fn cfl_norm_matches_dense_eigenvalue() {
    let s = DgSpace::new(&build_cartesian_mesh(1, 1), 1).unwrap();
    for m in [MaterialParams::vacuum(), unequal()] {
        let ops = MaxwellOperators::new(&s, m).unwrap();
        let a = dense_curl_curl(&ops);
        // symmetrize with the eps-weighted mass: A is self-adjoint in that product
        let n = s.dim();
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        for e in 0..s.num_elements() {
            let me = s.element_mass_matrix(e, m.eps(s.subdomain(e)));
            for (off, _) in [(0, 0), (n, 0)] {
                for i in 0..s.local_dim() {
                    for j in 0..s.local_dim() {
                        w[(off + e * s.local_dim() + i, off + e * s.local_dim() + j)] = me[(i, j)];
                    }
                }
            }
        }
        let wa = &w * &a;
        assert!((&wa - wa.transpose()).amax() < 1e-11 * wa.amax());
        let chol = w.clone().cholesky().unwrap();
        let l = chol.l();
        let linv = l.clone().try_inverse().unwrap();
        let sym = &linv * &wa * linv.transpose();
        let sym = 0.5 * (&sym + sym.transpose());
        let eig = sym.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(lmin > -1e-10 * lmax, "negative eigenvalue {lmin}");
        let est = estimate_cfl_norm(&ops, 1e-13, 20_000).unwrap();
        assert!(est.converged);
        assert!((est.norm - lmax.sqrt()).abs() < 1e-8 * lmax.sqrt(), "{} vs {}", est.norm, lmax.sqrt());
    }
}

#[test]
fn cfl_norm_scales_with_mesh_and_speed() {
    let m = MaterialParams::vacuum();
    let s1 = DgSpace::new(&build_cartesian_mesh(3, 3), 2).unwrap();
    let s2 = DgSpace::new(&build_cartesian_mesh(6, 6), 2).unwrap();
    let n1 = estimate_cfl_norm(&MaxwellOperators::new(&s1, m).unwrap(), 1e-9, 50_000).unwrap();
    let n2 = estimate_cfl_norm(&MaxwellOperators::new(&s2, m).unwrap(), 1e-9, 50_000).unwrap();
    let ratio = n2.norm / n1.norm;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");

    // mu, eps halved: wave speed doubles
    let fast = m.scaled(0.5);
    let n3 = estimate_cfl_norm(&MaxwellOperators::new(&s1, fast).unwrap(), 1e-9, 50_000).unwrap();
    let ratio = n3.norm / n1.norm;
    assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
}
