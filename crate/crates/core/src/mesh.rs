//! Interface-aligned quadrilateral meshes of the domain (-1, 1) x (0, 1).
//!
//! The interface is the segment {x1 = 0}. Elements carry the tag of the
//! subdomain they belong to. Every interior face stores a `left` and `right`
//! element with the face normal pointing from left to right; jumps are always
//! taken as `right - left`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subdomain {
    Minus,
    Plus,
}

impl Subdomain {
    pub fn of_x1(x1: f64) -> Self {
        if x1 < 0.0 {
            Subdomain::Minus
        } else {
            Subdomain::Plus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceKind {
    Interior,
    Boundary,
    Interface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub kind: FaceKind,
    pub normal: [f64; 2],
    pub left: usize,
    /// `None` for boundary faces.
    pub right: Option<usize>,
    pub endpoints: [Point; 2],
}

impl Face {
    pub fn measure(&self) -> f64 {
        dist(self.endpoints[0], self.endpoints[1])
    }

    pub fn is_interior(&self) -> bool {
        self.kind != FaceKind::Boundary
    }
}

/// Quadrilateral with counter-clockwise vertices. Local edge `i` joins
/// vertex `i` and `i + 1`; for an axis-aligned rectangle starting at the
/// south-west corner this gives the order south, east, north, west.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub vertices: [usize; 4],
    pub subdomain: Subdomain,
    pub faces: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub vertices: Vec<Point>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    pub h_max: f64,
    pub h_min: f64,
    /// Shape-regularity constant: max over elements of h_K / rho_K.
    pub sigma: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn on_interface(p: Point) -> bool {
    p[0].abs() < GEOM_TOL
}

/// Uniform tensor mesh with `n_half` cells per subdomain in x1 and `n_y`
/// cells in x2.
pub fn build_cartesian_mesh(n_half: usize, n_y: usize) -> Mesh2D {
    assert!(n_half >= 1 && n_y >= 1, "cell counts must be positive");
    let xs: Vec<f64> = (0..=n_half).map(|i| i as f64 / n_half as f64).collect();
    let ys: Vec<f64> = (0..=n_y).map(|j| j as f64 / n_y as f64).collect();
    build_tensor_mesh(&xs, &xs, &ys).expect("tensor mesh is well formed")
}

/// Tensor mesh whose cell widths alternate between `1 + delta` and
/// `1 - delta` times the uniform width (rescaled to fill each unit side),
/// starting with the wide cell at the interface and at x2 = 0.
pub fn build_alternating_mesh(n_half: usize, n_y: usize, delta: f64) -> Result<Mesh2D> {
    if n_half == 0 || n_y == 0 {
        return Err(Error::InvalidMesh("cell counts must be positive".into()));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidMesh(format!("alternation must lie in [0, 1), got {delta}")));
    }
    let lines = |n: usize| -> Vec<f64> {
        let widths: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 + delta } else { 1.0 - delta }).collect();
        let total: f64 = widths.iter().sum();
        let mut acc = 0.0;
        let mut v = vec![0.0];
        for w in &widths {
            acc += w;
            v.push(acc / total);
        }
        v[n] = 1.0;
        v
    };
    let x = lines(n_half);
    build_tensor_mesh(&x, &x, &lines(n_y))
}

/// Rectangles on a tensor grid. `left` and `right` are the x1 grid lines of
/// each half as distances from the interface, increasing from 0 to 1 and of
/// equal length; `ys` are the x2 lines from 0 to 1.
pub fn build_tensor_mesh(left: &[f64], right: &[f64], ys: &[f64]) -> Result<Mesh2D> {
    let valid = |v: &[f64]| {
        v.len() >= 2 && v[0] == 0.0 && (v[v.len() - 1] - 1.0).abs() <= GEOM_TOL && v.windows(2).all(|w| w[1] > w[0])
    };
    if !valid(left) || !valid(right) || !valid(ys) {
        return Err(Error::InvalidMesh("grid lines must increase strictly from 0 to 1".into()));
    }
    if left.len() != right.len() {
        return Err(Error::InvalidMesh("both halves need the same number of cells".into()));
    }
    let n_half = right.len() - 1;
    let n_y = ys.len() - 1;
    let nx = 2 * n_half;
    // full row of x1 lines, the interface column exactly at zero
    let row: Vec<f64> = left[1..].iter().rev().map(|x| -x).chain(right.iter().copied()).collect();
    let mut vertices = Vec::with_capacity((nx + 1) * (n_y + 1));
    for &y in ys {
        for &x in &row {
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let quads = (0..n_y)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let tag = if i < n_half {
                Subdomain::Minus
            } else {
                Subdomain::Plus
            };
            (
                [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)],
                tag,
            )
        })
        .collect();
    Mesh2D::from_elements(vertices, quads)
}

/// Returns `(h_max, h_min)`.
pub fn mesh_size(mesh: &Mesh2D) -> (f64, f64) {
    (mesh.h_max, mesh.h_min)
}

impl Mesh2D {
    /// Builds faces from element connectivity. Interior normals point in
    /// the +x1 direction (or +x2 for faces parallel to the x1 axis).
    pub fn from_elements(vertices: Vec<Point>, quads: Vec<([usize; 4], Subdomain)>) -> Result<Self> {
        if quads.is_empty() {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        let mut edge_owner: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, (vs, _)) in quads.iter().enumerate() {
            if vs.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("element {e} references a missing vertex")));
            }
            if signed_area(&vertices, vs) <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} is not counter-clockwise")));
            }
            for local in 0..4 {
                let (a, b) = (vs[local], vs[(local + 1) % 4]);
                edge_owner.entry((a.min(b), a.max(b))).or_default().push((e, local));
            }
        }

        let mut elements: Vec<Element> = quads
            .iter()
            .map(|&(vertices, subdomain)| Element {
                vertices,
                subdomain,
                faces: [usize::MAX; 4],
            })
            .collect();

        let mut keys: Vec<_> = edge_owner.keys().copied().collect();
        keys.sort_unstable();
        let mut faces = Vec::with_capacity(keys.len());
        for key in keys {
            let owners = &edge_owner[&key];
            let (e0, l0) = owners[0];
            let vs = quads[e0].0;
            let (a, b) = (vertices[vs[l0]], vertices[vs[(l0 + 1) % 4]]);
            let len = dist(a, b);
            let outward = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            let id = faces.len();
            let face = match owners.len() {
                1 => Face {
                    kind: FaceKind::Boundary,
                    normal: outward,
                    left: e0,
                    right: None,
                    endpoints: [a, b],
                },
                2 => {
                    let (e1, _) = owners[1];
                    let positive = outward[0] > GEOM_TOL
                        || (outward[0].abs() <= GEOM_TOL && outward[1] > 0.0);
                    let (left, right, normal) = if positive {
                        (e0, e1, outward)
                    } else {
                        (e1, e0, [-outward[0], -outward[1]])
                    };
                    let kind = if on_interface(a) && on_interface(b) {
                        FaceKind::Interface
                    } else {
                        FaceKind::Interior
                    };
                    Face {
                        kind,
                        normal,
                        left,
                        right: Some(right),
                        endpoints: if a[0] + a[1] <= b[0] + b[1] { [a, b] } else { [b, a] },
                    }
                }
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} shared by {n} elements"
                    )))
                }
            };
            for &(e, local) in owners {
                elements[e].faces[local] = id;
            }
            faces.push(face);
        }
        Ok(Self::from_parts(vertices, elements, faces))
    }

    /// Assembles a mesh from explicit parts without re-deriving faces.
    pub fn from_parts(vertices: Vec<Point>, elements: Vec<Element>, faces: Vec<Face>) -> Self {
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut sigma: f64 = 0.0;
        for el in &elements {
            let (h, rho) = diameter_and_inradius(&vertices, &el.vertices);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            sigma = sigma.max(h / rho);
        }
        Self {
            vertices,
            elements,
            faces,
            h_max,
            h_min,
            sigma,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> [Point; 4] {
        self.elements[e].vertices.map(|v| self.vertices[v])
    }

    pub fn interface_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FaceKind::Interface)
    }

    /// Checks that no element crosses {x1 = 0}, that subdomain tags match
    /// element positions, and that every face on {x1 = 0} is an interior
    /// interface face whose normal is (1, 0).
    pub fn validate_interface_alignment(&self) -> Result<()> {
        for (e, el) in self.elements.iter().enumerate() {
            let xs = self.element_vertices(e).map(|p| p[0]);
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < -GEOM_TOL && hi > GEOM_TOL {
                return Err(Error::AlignmentViolation(format!(
                    "element {e} spans x1 in ({lo}, {hi})"
                )));
            }
            let expected = if hi <= GEOM_TOL { Subdomain::Minus } else { Subdomain::Plus };
            if el.subdomain != expected {
                return Err(Error::AlignmentViolation(format!(
                    "element {e} tagged {:?} but lies in {expected:?}",
                    el.subdomain
                )));
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            if !(on_interface(face.endpoints[0]) && on_interface(face.endpoints[1])) {
                if face.kind == FaceKind::Interface {
                    return Err(Error::AlignmentViolation(format!(
                        "face {f} is tagged interface but does not lie on x1 = 0"
                    )));
                }
                continue;
            }
            if face.kind != FaceKind::Interface || face.right.is_none() {
                return Err(Error::AlignmentViolation(format!(
                    "face {f} lies on x1 = 0 but is not an interior interface face"
                )));
            }
            if (face.normal[0] - 1.0).abs() > GEOM_TOL || face.normal[1].abs() > GEOM_TOL {
                return Err(Error::AlignmentViolation(format!(
                    "interface face {f} has normal {:?}, expected (1, 0)",
                    face.normal
                )));
            }
            let right = face.right.unwrap_or(face.left);
            if self.elements[face.left].subdomain != Subdomain::Minus
                || self.elements[right].subdomain != Subdomain::Plus
            {
                return Err(Error::AlignmentViolation(format!(
                    "interface face {f} does not run from the minus to the plus side"
                )));
            }
        }
        Ok(())
    }

    /// Checks that element-face incidence is symmetric.
    pub fn validate_topology(&self) -> Result<()> {
        for (e, el) in self.elements.iter().enumerate() {
            for &f in &el.faces {
                let face = self
                    .faces
                    .get(f)
                    .ok_or_else(|| Error::InvalidMesh(format!("element {e} lists missing face {f}")))?;
                if face.left != e && face.right != Some(e) {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} lists face {f} which does not list it back"
                    )));
                }
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            for e in std::iter::once(face.left).chain(face.right) {
                if !self.elements.get(e).is_some_and(|el| el.faces.contains(&f)) {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} lists element {e} which does not list it back"
                    )));
                }
            }
            let n = face.normal;
            if ((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() > 1e-14 {
                return Err(Error::InvalidMesh(format!("face {f} normal is not unit")));
            }
        }
        Ok(())
    }
}

fn signed_area(vertices: &[Point], vs: &[usize; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let a = vertices[vs[i]];
            let b = vertices[vs[(i + 1) % 4]];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

/// Element diameter and the width used as inscribed diameter (exact for
/// parallelograms).
fn diameter_and_inradius(vertices: &[Point], vs: &[usize; 4]) -> (f64, f64) {
    let p = vs.map(|v| vertices[v]);
    let mut h: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            h = h.max(dist(p[i], p[j]));
        }
    }
    let mut rho = f64::INFINITY;
    for i in 0..4 {
        let (a, b) = (p[i], p[(i + 1) % 4]);
        let len = dist(a, b);
        let width = p
            .iter()
            .map(|q| ((b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])).abs() / len)
            .fold(0.0, f64::max);
        rho = rho.min(width);
    }
    (h, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(mesh: &Mesh2D, kind: FaceKind) -> usize {
        mesh.faces.iter().filter(|f| f.kind == kind).count()
    }

    #[test]
    fn smallest_mesh() {
        let m = build_cartesian_mesh(1, 1);
        assert_eq!(m.num_elements(), 2);
        assert_eq!(count(&m, FaceKind::Interface), 1);
        assert_eq!(count(&m, FaceKind::Boundary), 6);
        assert_eq!(count(&m, FaceKind::Interior), 0);
    }

    #[test]
    fn two_by_two_mesh() {
        let m = build_cartesian_mesh(2, 2);
        assert_eq!(m.num_elements(), 8);
        let iface: Vec<_> = m.interface_faces().collect();
        assert_eq!(iface.len(), 2);
        for (_, f) in iface {
            assert_eq!(f.normal, [1.0, 0.0]);
        }
        m.validate_interface_alignment().unwrap();
        m.validate_topology().unwrap();
    }

    #[test]
    fn mesh_sizes() {
        let m = build_cartesian_mesh(10, 10);
        let (hmax, hmin) = mesh_size(&m);
        assert!((hmax - 0.02f64.sqrt()).abs() < 1e-12);
        assert!((hmin - hmax).abs() < 1e-12);
        let m = build_cartesian_mesh(20, 10);
        let (hmax, hmin) = mesh_size(&m);
        assert!((hmax - 0.111803398875).abs() < 1e-9);
        assert!((hmin - 0.111803398875).abs() < 1e-9);
        assert!((m.sigma - 0.0125f64.sqrt() / 0.05).abs() < 1e-9);
    }

    #[test]
    fn boundary_and_interface_measures() {
        for (nh, ny) in [(1, 1), (3, 5), (7, 4)] {
            let m = build_cartesian_mesh(nh, ny);
            let perimeter: f64 = m
                .faces
                .iter()
                .filter(|f| f.kind == FaceKind::Boundary)
                .map(Face::measure)
                .sum();
            assert!((perimeter - 6.0).abs() < 1e-12);
            let iface: f64 = m.interface_faces().map(|(_, f)| f.measure()).sum();
            assert!((iface - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn straddling_element_is_rejected() {
        let vertices = vec![
            [-1.0, 0.0],
            [-0.1, 0.0],
            [0.1, 0.0],
            [1.0, 0.0],
            [-1.0, 1.0],
            [-0.1, 1.0],
            [0.1, 1.0],
            [1.0, 1.0],
        ];
        let quads = vec![
            ([0, 1, 5, 4], Subdomain::Minus),
            ([1, 2, 6, 5], Subdomain::Minus),
            ([2, 3, 7, 6], Subdomain::Plus),
        ];
        let m = Mesh2D::from_elements(vertices, quads).unwrap();
        match m.validate_interface_alignment() {
            Err(Error::AlignmentViolation(msg)) => assert!(msg.contains("element 1"), "{msg}"),
            other => panic!("expected alignment violation, got {other:?}"),
        }
    }

    #[test]
    fn reversed_interface_normal_is_rejected() {
        let m = build_cartesian_mesh(1, 1);
        let mut faces = m.faces.clone();
        let (f, _) = m.interface_faces().next().unwrap();
        let face = &mut faces[f];
        face.normal = [-1.0, 0.0];
        let (l, r) = (face.left, face.right.unwrap());
        face.left = r;
        face.right = Some(l);
        let bad = Mesh2D::from_parts(m.vertices.clone(), m.elements.clone(), faces);
        match bad.validate_interface_alignment() {
            Err(Error::AlignmentViolation(msg)) => assert!(msg.contains(&format!("face {f}")), "{msg}"),
            other => panic!("expected alignment violation, got {other:?}"),
        }
    }
}
