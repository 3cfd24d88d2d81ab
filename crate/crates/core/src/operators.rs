//! Discrete TE Maxwell operators with weighted central fluxes.
//!
//! With `E = (E1, E2, 0)` and `H = (0, 0, H3)` the electric operator maps
//! `(E1, E2)` to the H3 space and represents, in the mu-weighted inner
//! product,
//!
//! ```text
//! sum_K (E1, d2 phi)_K - (E2, d1 phi)_K + sum_{F interior} ({E1}^{eps c} n2 - {E2}^{eps c} n1, [phi])_F
//! ```
//!
//! and the magnetic operator maps H3 to the `(E1, E2)` space and represents,
//! in the eps-weighted inner product,
//!
//! ```text
//! sum_K (H3, d1 psi2 - d2 psi1)_K + sum_{F boundary} (H3, n2 psi1 - n1 psi2)_F
//!     - sum_{F interior} ({H3}^{mu c}, [psi1] n2 - [psi2] n1)_F.
//! ```
//!
//! No boundary terms enter the electric operator, which imposes the perfect
//! conductor condition weakly. Jumps are `right - left` with the face normal
//! pointing from left to right.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{kron_apply, DgSpace, EdgeLink, MaterialParams, Side, TEState};

/// Weighted face average. The plain variant weights the left trace with
/// `w_left`; the conjugate variant swaps the weights.
pub fn weighted_average(v_left: f64, v_right: f64, w_left: f64, w_right: f64, conjugate: bool) -> f64 {
    let (a, b) = if conjugate { (w_right, w_left) } else { (w_left, w_right) };
    (a * v_left + b * v_right) / (w_left + w_right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum FluxVariant {
    #[default]
    Plain,
    Conjugate,
}

/// How the surface current enters the lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    /// Face integrals of the current by Gauss quadrature.
    Quadrature,
    /// The current is replaced by its face-wise nodal interpolant first.
    #[serde(rename = "interp", alias = "interpolation")]
    Interpolation,
}

impl LiftMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LiftMode::Quadrature => "quadrature",
            LiftMode::Interpolation => "interp",
        }
    }
}

impl std::str::FromStr for LiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" | "quad" | "exact" => Ok(LiftMode::Quadrature),
            "interp" | "interpolation" | "nodal" => Ok(LiftMode::Interpolation),
            other => Err(Error::InvalidParameter(format!("unknown lift mode '{other}'"))),
        }
    }
}

/// Per interior face: `(left, right)` weights for the `mu c` and `eps c`
/// averages.
#[derive(Debug, Clone)]
pub struct FluxWeights {
    pub mu_c: Vec<Option<[f64; 2]>>,
    pub eps_c: Vec<Option<[f64; 2]>>,
    pub variant: FluxVariant,
}

impl FluxWeights {
    pub fn new(space: &DgSpace, materials: &MaterialParams, variant: FluxVariant) -> Self {
        let mesh = space.mesh();
        let mut mu_c = Vec::with_capacity(mesh.faces.len());
        let mut eps_c = Vec::with_capacity(mesh.faces.len());
        for face in &mesh.faces {
            match face.right {
                Some(r) => {
                    let (sl, sr) = (space.subdomain(face.left), space.subdomain(r));
                    mu_c.push(Some([materials.mu_c(sl), materials.mu_c(sr)]));
                    eps_c.push(Some([materials.eps_c(sl), materials.eps_c(sr)]));
                }
                None => {
                    mu_c.push(None);
                    eps_c.push(None);
                }
            }
        }
        Self { mu_c, eps_c, variant }
    }

    pub fn conjugate(&self) -> bool {
        self.variant == FluxVariant::Conjugate
    }
}

/// Matrix-free application of the discrete TE operators on one space.
#[derive(Debug, Clone)]
pub struct MaxwellOperators<'a> {
    space: &'a DgSpace,
    materials: MaterialParams,
    weights: FluxWeights,
    mu: Vec<f64>,
    eps: Vec<f64>,
}

impl<'a> MaxwellOperators<'a> {
    pub fn new(space: &'a DgSpace, materials: MaterialParams) -> Result<Self> {
        Self::with_variant(space, materials, FluxVariant::Plain)
    }

    pub fn with_variant(space: &'a DgSpace, materials: MaterialParams, variant: FluxVariant) -> Result<Self> {
        space.mesh().validate_interface_alignment()?;
        let mu = (0..space.num_elements()).map(|e| materials.mu(space.subdomain(e))).collect();
        let eps = (0..space.num_elements()).map(|e| materials.eps(space.subdomain(e))).collect();
        Ok(Self {
            space,
            materials,
            weights: FluxWeights::new(space, &materials, variant),
            mu,
            eps,
        })
    }

    pub fn space(&self) -> &'a DgSpace {
        self.space
    }

    pub fn materials(&self) -> &MaterialParams {
        &self.materials
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Nodal trace of a local field on `side`. With a Gauss-Lobatto nodal
    /// basis these are the side nodal values.
    fn trace(&self, local: &[f64], side: Side, out: &mut [f64]) {
        for (o, i) in out.iter_mut().zip(self.space.side_nodes(side)) {
            *o = local[i];
        }
    }

    /// Adds `coef * M^{-1} f` where `f_i = int_side g theta_i ds` and `g` is
    /// the degree-k polynomial with nodal values `g`. The 1D face mass
    /// cancels one Kronecker factor of the inverse, leaving a rank-one update.
    fn add_side_lift(&self, side: Side, len: f64, g: &[f64], coef: f64, out: &mut [f64]) {
        let n = self.space.n1d();
        let minv = self.space.m1_inv();
        let s = coef * 0.5 * len;
        match side {
            Side::East | Side::West => {
                let i0 = if side == Side::East { n - 1 } else { 0 };
                for j in 0..n {
                    let gj = s * g[j];
                    for i in 0..n {
                        out[j * n + i] += gj * minv[i * n + i0];
                    }
                }
            }
            Side::South | Side::North => {
                let j0 = if side == Side::North { n - 1 } else { 0 };
                for j in 0..n {
                    let mj = s * minv[j * n + j0];
                    for i in 0..n {
                        out[j * n + i] += mj * g[i];
                    }
                }
            }
        }
    }

    /// `out[j][i] = sum_b P[j][b] u[b][i]` (derivative along x2 index).
    fn weak_d_slow(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.space.n1d();
        let p = self.space.weak_deriv();
        for j in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for b in 0..n {
                    s += p[j * n + b] * u[b * n + i];
                }
                out[j * n + i] += scale * s;
            }
        }
    }

    /// `out[j][i] = sum_a P[i][a] u[j][a]` (derivative along x1 index).
    fn weak_d_fast(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.space.n1d();
        let p = self.space.weak_deriv();
        for j in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += p[i * n + a] * u[j * n + a];
                }
                out[j * n + i] += scale * s;
            }
        }
    }

    /// Electric operator: `(E1, E2) -> H3` space.
    pub fn apply_ce(&self, e1: &[f64], e2: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(e1.len())?;
        self.check(e2.len())?;
        self.check(out.len())?;
        let sp = self.space;
        let n = sp.n1d();
        let conj = self.weights.conjugate();
        let mut tr = vec![0.0; 4 * n];
        let mut g = vec![0.0; n];
        for e in 0..sp.num_elements() {
            let r = sp.rect(e);
            let range = sp.range(e);
            let (le1, le2) = (&e1[range.clone()], &e2[range.clone()]);
            let o = &mut out[range];
            let inv_mu = 1.0 / self.mu[e];
            o.iter_mut().for_each(|v| *v = 0.0);
            self.weak_d_slow(le1, 2.0 / r.hy * inv_mu, o);
            self.weak_d_fast(le2, -2.0 / r.hx * inv_mu, o);

            let coef = inv_mu * 4.0 / r.area();
            for side in Side::ALL {
                let EdgeLink::Interior {
                    face,
                    neighbor,
                    neighbor_side,
                    is_right,
                    normal,
                    ..
                } = sp.links(e)[side as usize]
                else {
                    continue;
                };
                let nb = sp.range(neighbor);
                let (t1, rest) = tr.split_at_mut(n);
                let (t2, rest) = rest.split_at_mut(n);
                let (u1, u2) = rest.split_at_mut(n);
                self.trace(le1, side, t1);
                self.trace(le2, side, t2);
                self.trace(&e1[nb.clone()], neighbor_side, u1);
                self.trace(&e2[nb], neighbor_side, u2);
                let [wl, wr] = self.weights.eps_c[face].expect("interior face");
                let sigma = if is_right { 1.0 } else { -1.0 };
                for q in 0..n {
                    let (l1, r1, l2, r2) = if is_right {
                        (u1[q], t1[q], u2[q], t2[q])
                    } else {
                        (t1[q], u1[q], t2[q], u2[q])
                    };
                    let avg1 = weighted_average(l1, r1, wl, wr, conj);
                    let avg2 = weighted_average(l2, r2, wl, wr, conj);
                    g[q] = sigma * (avg1 * normal[1] - avg2 * normal[0]);
                }
                self.add_side_lift(side, r.side_length(side), &g[..n], coef, o);
            }
        }
        Ok(())
    }

    /// Magnetic operator: `H3 -> (E1, E2)` space.
    pub fn apply_ch_hat(&self, h3: &[f64], out1: &mut [f64], out2: &mut [f64]) -> Result<()> {
        self.check(h3.len())?;
        self.check(out1.len())?;
        self.check(out2.len())?;
        let sp = self.space;
        let n = sp.n1d();
        let conj = self.weights.conjugate();
        let mut tr = vec![0.0; 2 * n];
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        for e in 0..sp.num_elements() {
            let r = sp.rect(e);
            let range = sp.range(e);
            let lh = &h3[range.clone()];
            let inv_eps = 1.0 / self.eps[e];
            {
                let o1 = &mut out1[range.clone()];
                o1.iter_mut().for_each(|v| *v = 0.0);
                self.weak_d_slow(lh, -2.0 / r.hy * inv_eps, o1);
            }
            {
                let o2 = &mut out2[range.clone()];
                o2.iter_mut().for_each(|v| *v = 0.0);
                self.weak_d_fast(lh, 2.0 / r.hx * inv_eps, o2);
            }

            let coef = inv_eps * 4.0 / r.area();
            for side in Side::ALL {
                let (t, u) = tr.split_at_mut(n);
                self.trace(lh, side, t);
                match sp.links(e)[side as usize] {
                    EdgeLink::Boundary { normal, .. } => {
                        for q in 0..n {
                            g1[q] = t[q] * normal[1];
                            g2[q] = -t[q] * normal[0];
                        }
                    }
                    EdgeLink::Interior {
                        face,
                        neighbor,
                        neighbor_side,
                        is_right,
                        normal,
                        ..
                    } => {
                        self.trace(&h3[sp.range(neighbor)], neighbor_side, &mut u[..n]);
                        let [wl, wr] = self.weights.mu_c[face].expect("interior face");
                        let sigma = if is_right { 1.0 } else { -1.0 };
                        for q in 0..n {
                            let (l, rr) = if is_right { (u[q], t[q]) } else { (t[q], u[q]) };
                            let avg = weighted_average(l, rr, wl, wr, conj);
                            g1[q] = -sigma * avg * normal[1];
                            g2[q] = sigma * avg * normal[0];
                        }
                    }
                }
                let len = r.side_length(side);
                self.add_side_lift(side, len, &g1, coef, &mut out1[range.clone()]);
                self.add_side_lift(side, len, &g2, coef, &mut out2[range.clone()]);
            }
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh H3 vector.
    pub fn ce(&self, e1: &[f64], e2: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_ce(e1, e2, &mut out).expect("dimensions checked by caller");
        out
    }

    /// Convenience wrapper returning fresh `(E1, E2)` vectors.
    pub fn ch_hat(&self, h3: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut o1 = vec![0.0; self.dim()];
        let mut o2 = vec![0.0; self.dim()];
        self.apply_ch_hat(h3, &mut o1, &mut o2).expect("dimensions checked by caller");
        (o1, o2)
    }

    /// The combined operator `(H, E) -> (-C_E E, C_H H)`.
    pub fn apply_combined(&self, u: &TEState) -> TEState {
        let mut h = self.ce(&u.e1, &u.e2);
        h.iter_mut().for_each(|v| *v = -*v);
        let (e1, e2) = self.ch_hat(&u.h3);
        TEState { h3: h, e1, e2, t: u.t }
    }

    /// Lift of a surface current `J_s(x2)` on the interface into the
    /// `(E1, E2)` space. Only the E2 component is nonzero; it represents
    /// `-sum_{F interface} (J_s, {psi2}^{conj mu c})_F` in the eps-weighted
    /// product, where the conjugate average weights the left trace with the
    /// right element's `mu c`.
    pub fn lift_interface(&self, js: impl Fn(f64) -> f64, mode: LiftMode) -> (Vec<f64>, Vec<f64>) {
        let sp = self.space;
        let n = sp.n1d();
        let rule = sp.lift_rule();
        let tab = sp.lift_tab();
        let gll = sp.gll_nodes();
        let mut e2 = vec![0.0; self.dim()];
        let mut moments = vec![0.0; n];
        let mut rhs = vec![0.0; n * n];
        let mut tmp = vec![0.0; n * n];
        let mut jq = vec![0.0; rule.len()];
        for (f, face) in sp.mesh().interface_faces() {
            let left = face.left;
            let right = face.right.expect("interface faces are interior");
            let side = Side::East;
            let rect = sp.rect(left);
            debug_assert_eq!(sp.links(left)[side as usize].face(), f);
            let len = rect.side_length(side);
            match mode {
                LiftMode::Quadrature => {
                    for (q, &s) in rule.points.iter().enumerate() {
                        jq[q] = js(rect.side_point(side, s)[1]);
                    }
                }
                LiftMode::Interpolation => {
                    let nodal: Vec<f64> = gll.iter().map(|&s| js(rect.side_point(side, s)[1])).collect();
                    for q in 0..rule.len() {
                        jq[q] = (0..n).map(|a| nodal[a] * tab[q * n + a]).sum();
                    }
                }
            }
            for (a, m) in moments.iter_mut().enumerate() {
                *m = 0.5 * len * (0..rule.len()).map(|q| rule.weights[q] * jq[q] * tab[q * n + a]).sum::<f64>();
            }
            let [zl, zr] = self.weights.mu_c[f].expect("interior face");
            for (e, own_side, other_w) in [(left, Side::East, zr), (right, Side::West, zl)] {
                let coef = -other_w / (zl + zr);
                rhs.iter_mut().for_each(|v| *v = 0.0);
                for (a, node) in sp.side_nodes(own_side).enumerate() {
                    rhs[node] = coef * moments[a];
                }
                kron_apply(sp.m1_inv(), sp.m1_inv(), &rhs, &mut tmp, n);
                let scale = 4.0 / (sp.rect(e).area() * self.eps[e]);
                for (o, t) in e2[sp.range(e)].iter_mut().zip(&tmp) {
                    *o += scale * t;
                }
            }
        }
        (vec![0.0; self.dim()], e2)
    }

    /// Applies `C_H C_E` to an electric state. With the sign convention
    /// `dH/dt = -C_E E`, `dE/dt = C_H H` this composition is positive
    /// semidefinite in the eps-weighted product.
    pub fn apply_curl_curl(&self, e1: &[f64], e2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.ce(e1, e2);
        self.ch_hat(&h)
    }

    fn eps_inner(&self, a1: &[f64], a2: &[f64], b1: &[f64], b2: &[f64]) -> f64 {
        let m = &self.materials;
        self.space.weighted_inner(a1, b1, |s| m.eps(s)) + self.space.weighted_inner(a2, b2, |s| m.eps(s))
    }
}

/// Result of the power iteration for the CFL bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflEstimate {
    /// Largest eigenvalue of `C_H C_E`, i.e. `||C_H C_E||` in the eps norm.
    pub composition_norm: f64,
    /// `sqrt(composition_norm)`, the quantity the step size scales with.
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `C_H C_E`, which is self-adjoint and positive
/// semidefinite in the eps-weighted product. Iterates until the Rayleigh
/// quotient changes by less than `tol` relative.
pub fn estimate_cfl_norm(ops: &MaxwellOperators, tol: f64, max_iters: usize) -> Result<CflEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let n = ops.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = ops.eps_inner(&v1, &v2, &v1, &v2).sqrt();
    v1.iter_mut().chain(v2.iter_mut()).for_each(|v| *v /= nv);
    let mut lambda = 0.0;
    for it in 1..=max_iters {
        let (w1, w2) = ops.apply_curl_curl(&v1, &v2);
        let next = ops.eps_inner(&w1, &w2, &v1, &v2);
        let nw = ops.eps_inner(&w1, &w2, &w1, &w2).sqrt();
        if nw == 0.0 {
            return Ok(CflEstimate {
                composition_norm: 0.0,
                norm: 0.0,
                iterations: it,
                converged: true,
            });
        }
        v1 = w1;
        v2 = w2;
        v1.iter_mut().chain(v2.iter_mut()).for_each(|v| *v /= nw);
        let done = it > 1 && (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            return Ok(CflEstimate {
                composition_norm: lambda,
                norm: lambda.sqrt(),
                iterations: it,
                converged: true,
            });
        }
    }
    log::warn!("power iteration did not converge in {max_iters} iterations");
    Ok(CflEstimate {
        composition_norm: lambda,
        norm: lambda.sqrt(),
        iterations: max_iters,
        converged: false,
    })
}
