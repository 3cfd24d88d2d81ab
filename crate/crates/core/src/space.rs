//! Broken tensor-product polynomial space Q_k on axis-aligned rectangles.
//!
//! Each element carries a nodal Lagrange basis on the (k+1)^2 tensor
//! Gauss–Lobatto points. Local degrees of freedom are stored x-fastest:
//! index `b * (k + 1) + a` belongs to node `(xi_a, eta_b)`.
//!
//! Mass matrices are exact (Gauss rule with k+2 points per direction) and
//! factor as `(hx hy / 4) * (M1 ⊗ M1)` on every element; only the 1D factor
//! and its inverse are stored.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Face, FaceKind, Mesh2D, Point, Subdomain};
use crate::quadrature::{gauss_legendre, gauss_lobatto, LagrangeBasis, Rule1D};

/// Element sides in the local ordering used for traces. South and north
/// traces are parametrized by increasing x1, east and west by increasing x2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    South = 0,
    East = 1,
    North = 2,
    West = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Rect {
    pub fn to_physical(&self, xi: f64, eta: f64) -> Point {
        [
            self.x0 + 0.5 * (xi + 1.0) * self.hx,
            self.y0 + 0.5 * (eta + 1.0) * self.hy,
        ]
    }

    pub fn to_reference(&self, p: Point) -> (f64, f64) {
        (
            2.0 * (p[0] - self.x0) / self.hx - 1.0,
            2.0 * (p[1] - self.y0) / self.hy - 1.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn side_length(&self, side: Side) -> f64 {
        match side {
            Side::South | Side::North => self.hx,
            Side::East | Side::West => self.hy,
        }
    }

    /// Physical point on `side` at trace parameter `s` in [-1, 1].
    pub fn side_point(&self, side: Side, s: f64) -> Point {
        match side {
            Side::South => self.to_physical(s, -1.0),
            Side::North => self.to_physical(s, 1.0),
            Side::East => self.to_physical(1.0, s),
            Side::West => self.to_physical(-1.0, s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLink {
    Boundary {
        face: usize,
        normal: [f64; 2],
    },
    Interior {
        face: usize,
        neighbor: usize,
        neighbor_side: Side,
        /// True when this element is the face's `right` element.
        is_right: bool,
        normal: [f64; 2],
        interface: bool,
    },
}

impl EdgeLink {
    pub fn face(&self) -> usize {
        match *self {
            EdgeLink::Boundary { face, .. } | EdgeLink::Interior { face, .. } => face,
        }
    }
}

/// Field state of the TE system at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct TEState {
    pub h3: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub t: f64,
}

impl TEState {
    pub fn zeros(n: usize) -> Self {
        Self {
            h3: vec![0.0; n],
            e1: vec![0.0; n],
            e2: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.h3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h3.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.h3
            .iter()
            .chain(&self.e1)
            .chain(&self.e2)
            .all(|v| v.is_finite())
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        for len in [self.h3.len(), self.e1.len(), self.e2.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(())
    }

    /// `self + a * other` field-wise (time stamp kept).
    pub fn axpy(&mut self, a: f64, other: &TEState) {
        for (x, y) in self
            .h3
            .iter_mut()
            .zip(&other.h3)
            .chain(self.e1.iter_mut().zip(&other.e1))
            .chain(self.e2.iter_mut().zip(&other.e2))
        {
            *x += a * y;
        }
    }
}

/// Piecewise constant permeability and permittivity on the two subdomains.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaterialParams {
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub eps_minus: f64,
    pub eps_plus: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl MaterialParams {
    pub fn new(mu_minus: f64, mu_plus: f64, eps_minus: f64, eps_plus: f64) -> Result<Self> {
        let m = Self {
            mu_minus,
            mu_plus,
            eps_minus,
            eps_plus,
        };
        for (name, v) in [
            ("mu_minus", mu_minus),
            ("mu_plus", mu_plus),
            ("eps_minus", eps_minus),
            ("eps_plus", eps_plus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(m)
    }

    pub fn vacuum() -> Self {
        Self {
            mu_minus: 1.0,
            mu_plus: 1.0,
            eps_minus: 1.0,
            eps_plus: 1.0,
        }
    }

    pub fn mu(&self, side: Subdomain) -> f64 {
        match side {
            Subdomain::Minus => self.mu_minus,
            Subdomain::Plus => self.mu_plus,
        }
    }

    pub fn eps(&self, side: Subdomain) -> f64 {
        match side {
            Subdomain::Minus => self.eps_minus,
            Subdomain::Plus => self.eps_plus,
        }
    }

    /// Wave speed `(mu eps)^{-1/2}`.
    pub fn c(&self, side: Subdomain) -> f64 {
        1.0 / (self.mu(side) * self.eps(side)).sqrt()
    }

    /// The flux weight `mu c`.
    pub fn mu_c(&self, side: Subdomain) -> f64 {
        self.mu(side) * self.c(side)
    }

    /// The flux weight `eps c`.
    pub fn eps_c(&self, side: Subdomain) -> f64 {
        self.eps(side) * self.c(side)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mu_minus: self.mu_minus * factor,
            mu_plus: self.mu_plus * factor,
            eps_minus: self.eps_minus * factor,
            eps_plus: self.eps_plus * factor,
        }
    }
}

/// Number of face-quadrature points for the lift of surface data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpaceOptions {
    pub lift_points: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DgSpace {
    degree: usize,
    n1d: usize,
    mesh: Mesh2D,
    basis: LagrangeBasis,
    nodes: Vec<f64>,
    m1: Vec<f64>,
    m1_inv: Vec<f64>,
    /// `M1^{-1} G` with `G[p][q] = int l_q l_p'`.
    weak_deriv: Vec<f64>,
    vol_rule: Rule1D,
    vol_tab: Vec<f64>,
    face_rule: Rule1D,
    lift_rule: Rule1D,
    lift_tab: Vec<f64>,
    rects: Vec<Rect>,
    links: Vec<[EdgeLink; 4]>,
    tags: Vec<Subdomain>,
    locator: Locator,
}

impl DgSpace {
    pub fn new(mesh: &Mesh2D, degree: usize) -> Result<Self> {
        Self::with_options(mesh, degree, SpaceOptions { lift_points: None })
    }

    pub fn with_options(mesh: &Mesh2D, degree: usize, opts: SpaceOptions) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        let n = degree + 1;
        let nodes = gauss_lobatto(n).points;
        let basis = LagrangeBasis::new(&nodes);

        let vol_rule = gauss_legendre(degree + 2);
        let vol_tab = basis.tabulate(&vol_rule.points);
        let mut m1 = vec![0.0; n * n];
        let mut g = vec![0.0; n * n];
        for (q, (&x, &w)) in vol_rule.points.iter().zip(&vol_rule.weights).enumerate() {
            for p in 0..n {
                let dp = basis.deriv(p, x);
                for r in 0..n {
                    m1[p * n + r] += w * vol_tab[q * n + p] * vol_tab[q * n + r];
                    g[p * n + r] += w * dp * vol_tab[q * n + r];
                }
            }
        }
        let m1_mat = DMatrix::from_row_slice(n, n, &m1);
        let m1_inv_mat = m1_mat
            .clone()
            .cholesky()
            .ok_or(Error::SingularMass)?
            .inverse();
        let m1_inv: Vec<f64> = (0..n * n).map(|i| m1_inv_mat[(i / n, i % n)]).collect();
        let weak = &m1_inv_mat * DMatrix::from_row_slice(n, n, &g);
        let weak_deriv = (0..n * n).map(|i| weak[(i / n, i % n)]).collect();

        let face_rule = gauss_legendre(degree + 1);
        let lift_rule = gauss_legendre(opts.lift_points.unwrap_or(degree + 2).max(1));
        let lift_tab = basis.tabulate(&lift_rule.points);

        let rects = mesh
            .elements
            .iter()
            .enumerate()
            .map(|(e, _)| rect_of(mesh, e))
            .collect::<Result<Vec<_>>>()?;
        let mut sides_of_face = vec![Vec::new(); mesh.faces.len()];
        let mut side_faces = vec![[usize::MAX; 4]; mesh.elements.len()];
        for (e, el) in mesh.elements.iter().enumerate() {
            for &f in &el.faces {
                let side = side_of_face(&rects[e], &mesh.faces[f]).ok_or_else(|| {
                    Error::InvalidMesh(format!("face {f} is not a full side of element {e}"))
                })?;
                side_faces[e][side as usize] = f;
                sides_of_face[f].push((e, side));
            }
        }
        let mut links = Vec::with_capacity(mesh.elements.len());
        for e in 0..mesh.elements.len() {
            let mut row = [EdgeLink::Boundary {
                face: usize::MAX,
                normal: [0.0, 0.0],
            }; 4];
            for side in Side::ALL {
                let f = side_faces[e][side as usize];
                let face = &mesh.faces[f];
                row[side as usize] = match face.right {
                    None => EdgeLink::Boundary {
                        face: f,
                        normal: face.normal,
                    },
                    Some(right) => {
                        let neighbor = if right == e { face.left } else { right };
                        let neighbor_side = sides_of_face[f]
                            .iter()
                            .find(|(el, _)| *el == neighbor)
                            .map(|&(_, s)| s)
                            .ok_or_else(|| Error::InvalidMesh(format!("face {f} has no neighbor side")))?;
                        EdgeLink::Interior {
                            face: f,
                            neighbor,
                            neighbor_side,
                            is_right: right == e,
                            normal: face.normal,
                            interface: face.kind == FaceKind::Interface,
                        }
                    }
                };
            }
            links.push(row);
        }
        let tags = mesh.elements.iter().map(|el| el.subdomain).collect();
        let locator = Locator::new(&rects);

        Ok(Self {
            degree,
            n1d: n,
            mesh: mesh.clone(),
            basis,
            nodes,
            m1,
            m1_inv,
            weak_deriv,
            vol_rule,
            vol_tab,
            face_rule,
            lift_rule,
            lift_tab,
            rects,
            links,
            tags,
            locator,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n1d(&self) -> usize {
        self.n1d
    }

    /// Local dimension `(k + 1)^2`.
    pub fn local_dim(&self) -> usize {
        self.n1d * self.n1d
    }

    pub fn num_elements(&self) -> usize {
        self.rects.len()
    }

    /// Global dimension of one scalar field.
    pub fn dim(&self) -> usize {
        self.num_elements() * self.local_dim()
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn rect(&self, e: usize) -> &Rect {
        &self.rects[e]
    }

    pub fn subdomain(&self, e: usize) -> Subdomain {
        self.tags[e]
    }

    pub fn links(&self, e: usize) -> &[EdgeLink; 4] {
        &self.links[e]
    }

    pub fn gll_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn basis_1d(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub(crate) fn m1_inv(&self) -> &[f64] {
        &self.m1_inv
    }

    pub(crate) fn weak_deriv(&self) -> &[f64] {
        &self.weak_deriv
    }

    pub fn face_rule(&self) -> &Rule1D {
        &self.face_rule
    }

    pub fn lift_rule(&self) -> &Rule1D {
        &self.lift_rule
    }

    pub(crate) fn lift_tab(&self) -> &[f64] {
        &self.lift_tab
    }

    pub fn volume_rule(&self) -> &Rule1D {
        &self.vol_rule
    }

    /// Local node indices on `side`, ordered by increasing trace parameter.
    pub fn side_nodes(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        let n = self.n1d;
        (0..n).map(move |i| match side {
            Side::South => i,
            Side::North => (n - 1) * n + i,
            Side::East => i * n + n - 1,
            Side::West => i * n,
        })
    }

    /// Physical coordinates of local node `i` on element `e`.
    pub fn node_point(&self, e: usize, i: usize) -> Point {
        let n = self.n1d;
        self.rects[e].to_physical(self.nodes[i % n], self.nodes[i / n])
    }

    pub fn range(&self, e: usize) -> std::ops::Range<usize> {
        let d = self.local_dim();
        e * d..(e + 1) * d
    }

    /// Dense element mass matrix weighted by the constant `weight`.
    pub fn element_mass_matrix(&self, e: usize, weight: f64) -> DMatrix<f64> {
        let n = self.n1d;
        let d = n * n;
        let scale = weight * self.rects[e].area() / 4.0;
        DMatrix::from_fn(d, d, |i, j| {
            scale * self.m1[(i / n) * n + j / n] * self.m1[(i % n) * n + j % n]
        })
    }

    /// Dense inverse of [`Self::element_mass_matrix`] from the stored 1D factors.
    pub fn element_mass_inverse(&self, e: usize, weight: f64) -> DMatrix<f64> {
        let n = self.n1d;
        let d = n * n;
        let scale = 4.0 / (weight * self.rects[e].area());
        DMatrix::from_fn(d, d, |i, j| {
            scale * self.m1_inv[(i / n) * n + j / n] * self.m1_inv[(i % n) * n + j % n]
        })
    }

    /// `u^T M_e v` for the unweighted element mass matrix.
    pub fn element_inner(&self, e: usize, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n1d;
        let mut tmp = vec![0.0; n * n];
        kron_apply(&self.m1, &self.m1, v, &mut tmp, n);
        u.iter().zip(&tmp).map(|(a, b)| a * b).sum::<f64>() * self.rects[e].area() / 4.0
    }

    /// Unweighted L2 inner product of two scalar broken fields.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.num_elements())
            .map(|e| self.element_inner(e, &u[self.range(e)], &v[self.range(e)]))
            .sum()
    }

    /// L2 inner product with a piecewise constant weight per subdomain.
    pub fn weighted_inner(&self, u: &[f64], v: &[f64], weight: impl Fn(Subdomain) -> f64) -> f64 {
        (0..self.num_elements())
            .map(|e| weight(self.tags[e]) * self.element_inner(e, &u[self.range(e)], &v[self.range(e)]))
            .sum()
    }

    /// Applies `(M_e)^{-1}` (unweighted) to `rhs` in place.
    pub fn apply_mass_inverse(&self, e: usize, rhs: &mut [f64]) {
        let n = self.n1d;
        let mut tmp = vec![0.0; n * n];
        kron_apply(&self.m1_inv, &self.m1_inv, rhs, &mut tmp, n);
        let scale = 4.0 / self.rects[e].area();
        for (r, t) in rhs.iter_mut().zip(&tmp) {
            *r = scale * t;
        }
    }

    /// Broken L2-orthogonal projection of `f`, evaluated with the
    /// (k+2)-point tensor Gauss rule.
    pub fn l2_project(&self, f: impl Fn(Point, Subdomain) -> f64) -> Vec<f64> {
        let rule = self.vol_rule.clone();
        let tab = self.vol_tab.clone();
        self.l2_project_with(&rule, &tab, f)
    }

    /// Projection with an arbitrary tensor rule (used for refined-quadrature checks).
    pub fn l2_project_with_points(&self, points: usize, f: impl Fn(Point, Subdomain) -> f64) -> Vec<f64> {
        let rule = gauss_legendre(points);
        let tab = self.basis.tabulate(&rule.points);
        self.l2_project_with(&rule, &tab, f)
    }

    fn l2_project_with(&self, rule: &Rule1D, tab: &[f64], f: impl Fn(Point, Subdomain) -> f64) -> Vec<f64> {
        let n = self.n1d;
        let nq = rule.len();
        let mut out = vec![0.0; self.dim()];
        for e in 0..self.num_elements() {
            let rect = self.rects[e];
            let side = self.tags[e];
            let local = &mut out[self.range(e)];
            for qy in 0..nq {
                for qx in 0..nq {
                    let x = rect.to_physical(rule.points[qx], rule.points[qy]);
                    let w = rule.weights[qx] * rule.weights[qy] * f(x, side);
                    for b in 0..n {
                        let wb = w * tab[qy * n + b];
                        for a in 0..n {
                            local[b * n + a] += wb * tab[qx * n + a];
                        }
                    }
                }
            }
            // b carries a factor area/4 that cancels against the mass scaling
            let mut tmp = vec![0.0; n * n];
            kron_apply(&self.m1_inv, &self.m1_inv, local, &mut tmp, n);
            local.copy_from_slice(&tmp);
        }
        out
    }

    /// Nodal interpolant: coefficient `i` on element `e` is `f` at that node.
    pub fn nodal_interpolate_volume(&self, f: impl Fn(Point, Subdomain) -> f64) -> Vec<f64> {
        let d = self.local_dim();
        (0..self.dim())
            .map(|g| {
                let e = g / d;
                f(self.node_point(e, g % d), self.tags[e])
            })
            .collect()
    }

    /// Interpolates `g` at the Gauss–Lobatto nodes of an interface face.
    pub fn nodal_interpolate_face(&self, face: usize, g: impl Fn(Point) -> f64) -> Result<FacePolynomial> {
        let f = self
            .mesh
            .faces
            .get(face)
            .ok_or_else(|| Error::InvalidParameter(format!("no face {face}")))?;
        if f.kind != FaceKind::Interface {
            return Err(Error::NotInterfaceFace(face));
        }
        let (a, b) = ordered_endpoints(f);
        let nodes: Vec<Point> = self
            .nodes
            .iter()
            .map(|&s| lerp(a, b, 0.5 * (s + 1.0)))
            .collect();
        let values = nodes.iter().map(|&p| g(p)).collect();
        Ok(FacePolynomial {
            start: a,
            end: b,
            basis: self.basis.clone(),
            values,
        })
    }

    /// Evaluates a broken field at local reference coordinates of element `e`.
    pub fn eval_local(&self, coeffs: &[f64], e: usize, xi: f64, eta: f64) -> f64 {
        let n = self.n1d;
        let mut lx = vec![0.0; n];
        let mut ly = vec![0.0; n];
        self.basis.eval_all(xi, &mut lx);
        self.basis.eval_all(eta, &mut ly);
        let local = &coeffs[self.range(e)];
        let mut s = 0.0;
        for b in 0..n {
            let mut row = 0.0;
            for a in 0..n {
                row += local[b * n + a] * lx[a];
            }
            s += row * ly[b];
        }
        s
    }

    /// Locates the element containing `p`, preferring `hint` when `p` lies
    /// on a shared edge.
    pub fn locate(&self, p: Point, hint: Option<Subdomain>) -> Option<usize> {
        self.locator.locate(&self.rects, &self.tags, p, hint)
    }

    /// Point evaluation of a broken field.
    pub fn eval_at(&self, coeffs: &[f64], p: Point, hint: Option<Subdomain>) -> Result<f64> {
        let e = self.locate(p, hint).ok_or(Error::OutsideDomain(p[0], p[1]))?;
        let (xi, eta) = self.rects[e].to_reference(p);
        Ok(self.eval_local(coeffs, e, xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0)))
    }

    /// `<mu H3^u, H3^v> + <eps E1^u, E1^v> + <eps E2^u, E2^v>`.
    pub fn weighted_inner_product(&self, u: &TEState, v: &TEState, materials: &MaterialParams) -> Result<f64> {
        u.check_len(self.dim())?;
        v.check_len(self.dim())?;
        Ok(self.weighted_inner(&u.h3, &v.h3, |s| materials.mu(s))
            + self.weighted_inner(&u.e1, &v.e1, |s| materials.eps(s))
            + self.weighted_inner(&u.e2, &v.e2, |s| materials.eps(s)))
    }

    /// The energy norm induced by [`Self::weighted_inner_product`].
    pub fn energy_norm(&self, u: &TEState, materials: &MaterialParams) -> f64 {
        self.weighted_inner_product(u, u, materials)
            .expect("state matches space")
            .max(0.0)
            .sqrt()
    }

    /// Projects TE fields given pointwise into a state at time `t`.
    pub fn project_state(&self, t: f64, fields: impl Fn(Point, Subdomain) -> [f64; 3]) -> TEState {
        TEState {
            h3: self.l2_project(|x, s| fields(x, s)[0]),
            e1: self.l2_project(|x, s| fields(x, s)[1]),
            e2: self.l2_project(|x, s| fields(x, s)[2]),
            t,
        }
    }

    pub fn interpolate_state(&self, t: f64, fields: impl Fn(Point, Subdomain) -> [f64; 3]) -> TEState {
        TEState {
            h3: self.nodal_interpolate_volume(|x, s| fields(x, s)[0]),
            e1: self.nodal_interpolate_volume(|x, s| fields(x, s)[1]),
            e2: self.nodal_interpolate_volume(|x, s| fields(x, s)[2]),
            t,
        }
    }
}

/// Lagrange polynomial on one interface face.
#[derive(Debug, Clone)]
pub struct FacePolynomial {
    start: Point,
    end: Point,
    basis: LagrangeBasis,
    pub values: Vec<f64>,
}

impl FacePolynomial {
    /// Evaluates at trace parameter `s` in [-1, 1].
    pub fn eval_param(&self, s: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.basis.eval(i, s))
            .sum()
    }

    /// Evaluates at a point on the face (projected onto the face line).
    pub fn eval(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = ((p[0] - self.start[0]) * d[0] + (p[1] - self.start[1]) * d[1]) / len2;
        self.eval_param(2.0 * t - 1.0)
    }

    pub fn nodes(&self) -> Vec<Point> {
        self.basis
            .nodes()
            .iter()
            .map(|&s| lerp(self.start, self.end, 0.5 * (s + 1.0)))
            .collect()
    }
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn ordered_endpoints(f: &Face) -> (Point, Point) {
    let [a, b] = f.endpoints;
    if (a[0], a[1]) <= (b[0], b[1]) {
        (a, b)
    } else {
        (b, a)
    }
}

/// `out = (A ⊗ B) x` for an `n x n` tensor `x[b][a]` where `A` acts on the
/// slow index and `B` on the fast index.
pub(crate) fn kron_apply(a_mat: &[f64], b_mat: &[f64], x: &[f64], out: &mut [f64], n: usize) {
    let mut tmp = [0.0f64; 64];
    let tmp = if n * n <= 64 { &mut tmp[..n * n] } else { return kron_apply_heap(a_mat, b_mat, x, out, n) };
    for b in 0..n {
        for i in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                s += b_mat[i * n + a] * x[b * n + a];
            }
            tmp[b * n + i] = s;
        }
    }
    for j in 0..n {
        for i in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += a_mat[j * n + b] * tmp[b * n + i];
            }
            out[j * n + i] = s;
        }
    }
}

fn kron_apply_heap(a_mat: &[f64], b_mat: &[f64], x: &[f64], out: &mut [f64], n: usize) {
    let mut tmp = vec![0.0; n * n];
    for b in 0..n {
        for i in 0..n {
            tmp[b * n + i] = (0..n).map(|a| b_mat[i * n + a] * x[b * n + a]).sum();
        }
    }
    for j in 0..n {
        for i in 0..n {
            out[j * n + i] = (0..n).map(|b| a_mat[j * n + b] * tmp[b * n + i]).sum();
        }
    }
}

fn rect_of(mesh: &Mesh2D, e: usize) -> Result<Rect> {
    let vs = mesh.element_vertices(e);
    let x0 = vs.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let x1 = vs.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let y0 = vs.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let y1 = vs.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + (x1 - x0).abs() + (y1 - y0).abs());
    let on_corner = |p: &Point| {
        ((p[0] - x0).abs() < tol || (p[0] - x1).abs() < tol) && ((p[1] - y0).abs() < tol || (p[1] - y1).abs() < tol)
    };
    if !vs.iter().all(on_corner) || x1 - x0 <= tol || y1 - y0 <= tol {
        return Err(Error::UnsupportedElement(e));
    }
    Ok(Rect {
        x0,
        y0,
        hx: x1 - x0,
        hy: y1 - y0,
    })
}

fn side_of_face(rect: &Rect, face: &Face) -> Option<Side> {
    let [a, b] = face.endpoints;
    let tol = 1e-12;
    let close = |u: f64, v: f64| (u - v).abs() < tol;
    let (xa, xb) = (rect.x0, rect.x0 + rect.hx);
    let (ya, yb) = (rect.y0, rect.y0 + rect.hy);
    let spans_x = (close(a[0], xa) && close(b[0], xb)) || (close(a[0], xb) && close(b[0], xa));
    let spans_y = (close(a[1], ya) && close(b[1], yb)) || (close(a[1], yb) && close(b[1], ya));
    if spans_x && close(a[1], ya) && close(b[1], ya) {
        Some(Side::South)
    } else if spans_x && close(a[1], yb) && close(b[1], yb) {
        Some(Side::North)
    } else if spans_y && close(a[0], xa) && close(b[0], xa) {
        Some(Side::West)
    } else if spans_y && close(a[0], xb) && close(b[0], xb) {
        Some(Side::East)
    } else {
        None
    }
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
struct Locator {
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(rects: &[Rect]) -> Self {
        let x0 = rects.iter().map(|r| r.x0).fold(f64::INFINITY, f64::min);
        let y0 = rects.iter().map(|r| r.y0).fold(f64::INFINITY, f64::min);
        let x1 = rects.iter().map(|r| r.x0 + r.hx).fold(f64::NEG_INFINITY, f64::max);
        let y1 = rects.iter().map(|r| r.y0 + r.hy).fold(f64::NEG_INFINITY, f64::max);
        let side = (rects.len() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [2 * side, side];
        let cell = [(x1 - x0) / dims[0] as f64, (y1 - y0) / dims[1] as f64];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        for (e, r) in rects.iter().enumerate() {
            let i0 = clamp(((r.x0 - x0) / cell[0]).floor() - 1.0, dims[0]);
            let i1 = clamp(((r.x0 + r.hx - x0) / cell[0]).ceil() + 1.0, dims[0]);
            let j0 = clamp(((r.y0 - y0) / cell[1]).floor() - 1.0, dims[1]);
            let j1 = clamp(((r.y0 + r.hy - y0) / cell[1]).ceil() + 1.0, dims[1]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * dims[0] + i].push(e);
                }
            }
        }
        Self {
            origin: [x0, y0],
            cell,
            dims,
            buckets,
        }
    }

    fn locate(&self, rects: &[Rect], tags: &[Subdomain], p: Point, hint: Option<Subdomain>) -> Option<usize> {
        let fi = ((p[0] - self.origin[0]) / self.cell[0]).floor();
        let fj = ((p[1] - self.origin[1]) / self.cell[1]).floor();
        if !(fi.is_finite() && fj.is_finite()) {
            return None;
        }
        let i = (fi.max(0.0) as usize).min(self.dims[0] - 1);
        let j = (fj.max(0.0) as usize).min(self.dims[1] - 1);
        let tol = 1e-12;
        let mut found = None;
        for &e in &self.buckets[j * self.dims[0] + i] {
            let r = &rects[e];
            let inside = p[0] >= r.x0 - tol
                && p[0] <= r.x0 + r.hx + tol
                && p[1] >= r.y0 - tol
                && p[1] <= r.y0 + r.hy + tol;
            if inside {
                if hint.map_or(true, |h| h == tags[e]) {
                    return Some(e);
                }
                found.get_or_insert(e);
            }
        }
        found
    }
}
