//! One-dimensional Gauss and Gauss–Lobatto rules and Lagrange bases on [-1, 1].

use std::f64::consts::PI;

/// A quadrature rule on the reference interval [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over [a, b] with the affinely mapped rule.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(mid + half * s))
            .sum::<f64>()
            * half
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule1D {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Rule1D { points, weights }
}

/// `n`-point Gauss–Lobatto–Legendre rule (includes both endpoints), `n >= 2`.
pub fn gauss_lobatto(n: usize) -> Rule1D {
    assert!(n >= 2, "Gauss-Lobatto rule needs at least two points");
    let k = n - 1;
    let kf = k as f64;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    points[0] = -1.0;
    points[k] = 1.0;
    // interior nodes are the roots of P_k'
    for i in 1..k {
        let mut x = -(PI * i as f64 / kf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            let ddp = (2.0 * x * dp - kf * (kf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        points[i] = x;
    }
    for i in 0..n {
        let (p, _) = legendre(k, points[i]);
        weights[i] = 2.0 / (kf * (kf + 1.0) * p * p);
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Rule1D { points, weights }
}

/// Lagrange basis on a fixed set of distinct nodes.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    denom: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &[f64]) -> Self {
        let denom = (0..nodes.len())
            .map(|i| {
                nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &xj)| nodes[i] - xj)
                    .product()
            })
            .collect();
        Self {
            nodes: nodes.to_vec(),
            denom,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| x - xj)
            .product::<f64>()
            / self.denom[i]
    }

    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval(i, x);
        }
    }

    pub fn deriv(&self, i: usize, x: f64) -> f64 {
        let n = self.nodes.len();
        let mut total = 0.0;
        for m in 0..n {
            if m == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..n {
                if j != i && j != m {
                    prod *= x - self.nodes[j];
                }
            }
            total += prod;
        }
        total / self.denom[i]
    }

    /// Matrix `V[q][i] = l_i(x_q)`, row-major.
    pub fn tabulate(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut v = vec![0.0; xs.len() * n];
        for (q, &x) in xs.iter().enumerate() {
            self.eval_all(x, &mut v[q * n..(q + 1) * n]);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials_exactly() {
        for n in 1..=12 {
            let rule = gauss_legendre(n);
            for p in 0..(2 * n) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let approx = rule.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                assert!((approx - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn lobatto_includes_endpoints_and_is_exact() {
        for n in 2..=8 {
            let rule = gauss_lobatto(n);
            assert_eq!(rule.points[0], -1.0);
            assert_eq!(rule.points[n - 1], 1.0);
            for p in 0..(2 * n - 2) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let approx = rule.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                assert!((approx - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn large_gauss_rule_is_accurate() {
        let rule = gauss_legendre(800);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-12);
        // oscillatory integrand: int_{-1}^{1} cos(500 x) dx = 2 sin(500)/500
        let approx = rule.integrate(-1.0, 1.0, |x| (500.0 * x).cos());
        assert!((approx - 2.0 * 500f64.sin() / 500.0).abs() < 1e-12);
    }

    #[test]
    fn lagrange_is_nodal_and_derivative_matches_fd() {
        let nodes = gauss_lobatto(5).points;
        let basis = LagrangeBasis::new(&nodes);
        for i in 0..5 {
            for (j, &x) in nodes.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((basis.eval(i, x) - expect).abs() < 1e-14);
            }
            let x = 0.3;
            let h = 1e-6;
            let fd = (basis.eval(i, x + h) - basis.eval(i, x - h)) / (2.0 * h);
            assert!((basis.deriv(i, x) - fd).abs() < 1e-7);
        }
    }
}
