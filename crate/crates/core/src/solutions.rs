//! Exact solutions and source data for the three experiments.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Point, Subdomain};

/// Separable standing waves in each half of the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub k_minus: u32,
    pub k_plus: u32,
    pub m: u32,
    pub a2: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            k_minus: 2,
            k_plus: 4,
            m: 1,
            a2: 1.0,
        }
    }
}

impl CavityParams {
    pub fn new(k_minus: u32, k_plus: u32, m: u32, a2: f64) -> Result<Self> {
        if k_minus == 0 || k_plus == 0 || m == 0 {
            return Err(Error::InvalidParameter("cavity wave indices must be positive".into()));
        }
        if k_minus % 2 != 0 || k_plus % 2 != 0 {
            return Err(Error::InvalidParameter(
                "cavity x1 wave indices must be even for zero tangential E at the walls and interface".into(),
            ));
        }
        Ok(Self { k_minus, k_plus, m, a2 })
    }

    pub fn k1(&self, side: Subdomain) -> f64 {
        let k = match side {
            Subdomain::Minus => self.k_minus,
            Subdomain::Plus => self.k_plus,
        };
        PI * k as f64 / 2.0
    }

    pub fn k2(&self) -> f64 {
        PI * self.m as f64
    }

    pub fn omega(&self, side: Subdomain) -> f64 {
        self.k1(side).hypot(self.k2())
    }

    pub fn a1(&self, side: Subdomain) -> f64 {
        -self.a2 * self.k2() / self.k1(side)
    }

    /// Amplitude of H3, `(k1 A2 - k2 A1) / omega`.
    fn h_amp(&self, side: Subdomain) -> f64 {
        (self.k1(side) * self.a2 - self.k2() * self.a1(side)) / self.omega(side)
    }

    /// `(H3, E1, E2)` on `side` at `x`, `t` (vacuum material).
    pub fn fields(&self, x: Point, side: Subdomain, t: f64) -> [f64; 3] {
        let (k1, k2, w) = (self.k1(side), self.k2(), self.omega(side));
        let s = x[0] + 1.0;
        let h3 = self.h_amp(side) * (k2 * x[1]).cos() * (k1 * s).cos() * (w * t).sin();
        let e1 = -self.a1(side) * (k2 * x[1]).sin() * (k1 * s).cos() * (w * t).cos();
        let e2 = -self.a2 * (k2 * x[1]).cos() * (k1 * s).sin() * (w * t).cos();
        [h3, e1, e2]
    }

    /// `H3(0+, x2) - H3(0-, x2)`.
    pub fn surface_current(&self, x2: f64, t: f64) -> f64 {
        self.fields([0.0, x2], Subdomain::Plus, t)[0] - self.fields([0.0, x2], Subdomain::Minus, t)[0]
    }

    /// Spatial profile and time factor of each subdomain's contribution to
    /// the surface current: `J_s = sum_i profile_i(x2) * time_i(t)`.
    pub fn surface_current_terms(&self) -> [(f64, f64, f64); 2] {
        // (amplitude at x2 with cos(k2 x2), omega, sign)
        let amp = |side| self.h_amp(side) * (self.k1(side) * 1.0).cos();
        [
            (amp(Subdomain::Plus), self.omega(Subdomain::Plus), 1.0),
            (amp(Subdomain::Minus), self.omega(Subdomain::Minus), -1.0),
        ]
    }
}

/// `q(x1)` on each side.
fn poly_q(side: Subdomain, x1: f64) -> (f64, f64) {
    match side {
        Subdomain::Minus => (2.0 + x1, 1.0),
        Subdomain::Plus => (-1.0 + x1, 1.0),
    }
}

fn poly_p(t: f64) -> (f64, f64, f64) {
    let w = 2.0 * PI;
    ((w * t).sin(), w * (w * t).cos(), -w * w * (w * t).sin())
}

/// `(r, r', r'')` for `r = x2 (1 - x2)`.
pub fn poly_r(x2: f64) -> (f64, f64, f64) {
    (x2 * (1.0 - x2), 1.0 - 2.0 * x2, -2.0)
}

/// `(H3, E1, E2)` of the polynomial solution.
pub fn polynomial_fields(x: Point, side: Subdomain, t: f64) -> [f64; 3] {
    let (q, _) = poly_q(side, x[0]);
    let (p, dp, _) = poly_p(t);
    let (r, dr, _) = poly_r(x[1]);
    [p * q * dr, dp * q * r, 0.0]
}

/// Volume current `(J1, J2)` of the polynomial solution.
pub fn polynomial_volume_current(x: Point, side: Subdomain, t: f64) -> [f64; 2] {
    let (q, dq) = poly_q(side, x[0]);
    let (p, _, ddp) = poly_p(t);
    let (r, dr, ddr) = poly_r(x[1]);
    [p * q * ddr - ddp * q * r, -p * dq * dr]
}

/// `H3(0+) - H3(0-) = -3 p(t) r'(x2)`.
pub fn polynomial_surface_current(x2: f64, t: f64) -> f64 {
    poly_p(t).0 * polynomial_surface_profile(x2)
}

/// Spatial factor `(q+(0) - q-(0)) r'(x2)` of the surface current.
pub fn polynomial_surface_profile(x2: f64) -> f64 {
    let jump = poly_q(Subdomain::Plus, 0.0).0 - poly_q(Subdomain::Minus, 0.0).0;
    jump * poly_r(x2).1
}

/// Spatial profiles of the polynomial volume current split by time factor:
/// `J = p(t) * a(x) + p''(t) * b(x)`.
pub fn polynomial_volume_terms() -> (fn(Point, Subdomain) -> [f64; 2], fn(Point, Subdomain) -> [f64; 2]) {
    fn a(x: Point, side: Subdomain) -> [f64; 2] {
        let (q, dq) = poly_q(side, x[0]);
        let (_, dr, ddr) = poly_r(x[1]);
        [q * ddr, -dq * dr]
    }
    fn b(x: Point, side: Subdomain) -> [f64; 2] {
        let (q, _) = poly_q(side, x[0]);
        [-q * poly_r(x[1]).0, 0.0]
    }
    (a, b)
}

pub fn poly_time(t: f64) -> f64 {
    poly_p(t).0
}

pub fn poly_time_dd(t: f64) -> f64 {
    poly_p(t).2
}

/// How negative Fourier indices are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CoefficientRule {
    /// `nu_{-j} = -nu_j`: a real sine series.
    #[default]
    SineSeries,
    /// `nu_{-j} = -nu_{M/2 - j}` as written; the real part is evaluated.
    Literal,
}

/// Random trigonometric polynomial of prescribed regularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughCurrentParams {
    pub alpha: f64,
    pub modes: usize,
    pub seed: u64,
    pub rule: CoefficientRule,
    /// `r_j` for `j = 1..M/2-1` (index 0 holds `r_1`).
    pub r: Vec<f64>,
    /// `|nu_j| = |r_j| (1 + j^2)^{-(1/2 + alpha)/2}` with sign of `r_j`.
    pub amplitudes: Vec<f64>,
    /// `||f||_0`.
    pub l2_norm: f64,
}

fn weight(alpha: f64, j: usize) -> f64 {
    (1.0 + (j * j) as f64).powf(-0.5 * (0.5 + alpha))
}

/// Samples `r_j ~ U[-1, 1]`, `j = 1..M/2-1`, from a ChaCha8 stream.
pub fn sample_trig_coeffs(alpha: f64, modes: usize, seed: u64) -> Result<RoughCurrentParams> {
    if !(modes >= 4 && modes.is_power_of_two()) {
        return Err(Error::InvalidParameter(format!("mode count must be a power of two >= 4, got {modes}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (1..modes / 2).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    RoughCurrentParams::from_r(alpha, r, seed, CoefficientRule::SineSeries)
}

impl RoughCurrentParams {
    /// Builds the parameters from given `r_j`, `j = 1..M/2-1`.
    pub fn from_r(alpha: f64, r: Vec<f64>, seed: u64, rule: CoefficientRule) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be nonnegative, got {alpha}")));
        }
        let modes = 2 * (r.len() + 1);
        if !(modes >= 4 && modes.is_power_of_two()) {
            return Err(Error::InvalidParameter(format!("{} coefficients do not match M/2 - 1 for a power of two M", r.len())));
        }
        if r.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("coefficients must lie in [-1, 1]".into()));
        }
        let amplitudes = r.iter().enumerate().map(|(i, v)| v * weight(alpha, i + 1)).collect();
        let mut p = Self {
            alpha,
            modes,
            seed,
            rule,
            r,
            amplitudes,
            l2_norm: 0.0,
        };
        p.l2_norm = p.sobolev_norm(0.0);
        Ok(p)
    }

    pub fn with_rule(mut self, rule: CoefficientRule) -> Self {
        self.rule = rule;
        self.l2_norm = self.sobolev_norm(0.0);
        self
    }

    /// Coefficients of `sin(j x)`, `j = 1..M/2-1`.
    pub fn sine_coefficients(&self) -> Vec<f64> {
        let c = &self.amplitudes;
        let n = c.len();
        match self.rule {
            CoefficientRule::SineSeries => c.iter().map(|v| -2.0 * v).collect(),
            // Re(i c_j e^{ijx}) - Re(i c_{M/2-j} e^{-ijx}) = -(c_j + c_{M/2-j}) sin(jx)
            CoefficientRule::Literal => (0..n).map(|i| -(c[i] + c[n - 1 - i])).collect(),
        }
    }

    /// `(j, |nu_j|)` over all nonzero indices of both signs.
    pub fn fourier_modulus(&self) -> Vec<(i64, f64)> {
        let c = &self.amplitudes;
        let n = c.len();
        let mut out = Vec::with_capacity(2 * n);
        for (i, v) in c.iter().enumerate() {
            out.push(((i + 1) as i64, v.abs()));
        }
        for l in 1..=n {
            let v = match self.rule {
                CoefficientRule::SineSeries => c[l - 1],
                CoefficientRule::Literal => c[n - l],
            };
            out.push((-(l as i64), v.abs()));
        }
        out
    }

    /// `sqrt(2 pi sum_j (1 + j^2)^eta |nu_j|^2)`.
    pub fn sobolev_norm(&self, eta: f64) -> f64 {
        let s: f64 = self
            .fourier_modulus()
            .iter()
            .map(|&(j, v)| (1.0 + (j * j) as f64).powf(eta) * v * v)
            .sum();
        (2.0 * PI * s).sqrt()
    }

    /// `f_alpha(x)` by the Chebyshev recurrence for `sin(j x)`.
    pub fn eval(&self, x: f64) -> f64 {
        eval_sine_series(&self.sine_coefficients(), x)
    }

    /// Evaluator that caches the sine coefficients.
    pub fn evaluator(&self) -> SineSeries {
        SineSeries {
            coeffs: self.sine_coefficients(),
        }
    }

    /// `J_s(t, x2) = f(2 pi x2 - pi) / ||f||_0 * sin(pi t)^2` split as
    /// `(spatial profile, time factor)`.
    pub fn surface_current(&self) -> Result<(impl Fn(f64) -> f64 + Send + Sync, fn(f64) -> f64)> {
        if self.l2_norm <= 0.0 {
            return Err(Error::DegenerateNormalization);
        }
        let series = self.evaluator();
        let norm = self.l2_norm;
        Ok((move |x2: f64| series.eval(2.0 * PI * x2 - PI) / norm, lowreg_time as fn(f64) -> f64))
    }

    /// Writes `j, r_j, amplitude, sine coefficient` rows.
    pub fn write_coefficients_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["j", "r_j", "amplitude", "sine_coefficient"])?;
        for (i, (r, s)) in self.r.iter().zip(self.sine_coefficients()).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                format!("{r:.17e}"),
                format!("{:.17e}", self.amplitudes[i]),
                format!("{s:.17e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn lowreg_time(t: f64) -> f64 {
    (PI * t).sin().powi(2)
}

/// Real sine series `sum_j c_j sin(j x)`, `j = 1..`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub coeffs: Vec<f64>,
}

impl SineSeries {
    pub fn eval(&self, x: f64) -> f64 {
        eval_sine_series(&self.coeffs, x)
    }
}

fn eval_sine_series(c: &[f64], x: f64) -> f64 {
    // Clenshaw for sum c_j sin(jx): b_k = c_k + 2cos(x) b_{k+1} - b_{k+2}
    let two_cos = 2.0 * x.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().rev() {
        let b0 = ck + two_cos * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * x.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cavity_frequencies() {
        let p = CavityParams::default();
        assert_relative_eq!(p.omega(Subdomain::Minus), PI * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(p.omega(Subdomain::Plus), PI * 5f64.sqrt(), epsilon = 1e-14);
        assert!((p.omega(Subdomain::Minus) - 4.442883).abs() < 1e-6);
        assert!((p.omega(Subdomain::Plus) - 7.024815).abs() < 1e-6);
        assert!(CavityParams::new(1, 4, 1, 1.0).is_err());
    }

    #[test]
    fn cavity_pec_traces() {
        let p = CavityParams::default();
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            let t = 0.37 * s;
            assert!(p.fields([-1.0, s], Subdomain::Minus, t)[2].abs() < 1e-12);
            assert!(p.fields([1.0, s], Subdomain::Plus, t)[2].abs() < 1e-12);
            assert!(p.fields([0.0, s], Subdomain::Minus, t)[2].abs() < 1e-12);
            assert!(p.fields([0.0, s], Subdomain::Plus, t)[2].abs() < 1e-12);
            let x1 = 2.0 * s - 1.0;
            let sd = Subdomain::of_x1(x1);
            assert!(p.fields([x1, 0.0], sd, t)[1].abs() < 1e-12);
            assert!(p.fields([x1, 1.0], sd, t)[1].abs() < 1e-12);
            assert_eq!(p.fields([x1, s], sd, 0.0)[0], 0.0);
        }
    }

    #[test]
    fn cavity_surface_current_terms_match() {
        let p = CavityParams::default();
        for &(x2, t) in &[(0.0, 0.3), (0.4, 0.9), (0.77, 0.05)] {
            let s: f64 = p
                .surface_current_terms()
                .iter()
                .map(|&(a, w, sg)| sg * a * (p.k2() * x2).cos() * (w * t).sin())
                .sum();
            assert!((s - p.surface_current(x2, t)).abs() < 1e-13);
        }
        assert_eq!(p.surface_current(0.3, 0.0), 0.0);
    }

    #[test]
    fn polynomial_examples() {
        assert!((polynomial_surface_current(0.25, 0.25) + 1.5).abs() < 1e-14);
        let f = polynomial_fields([-0.5, 0.3], Subdomain::Minus, 0.0);
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 2.0 * PI * 1.5 * 0.21).abs() < 1e-13);
    }

    #[test]
    fn rough_single_mode() {
        let mut r = vec![0.0; 7];
        r[0] = 1.0;
        let p = RoughCurrentParams::from_r(0.0, r, 0, CoefficientRule::SineSeries).unwrap();
        let c = 2f64.powf(-0.25);
        for &x in &[-2.0, 0.3, 1.1] {
            assert!((p.eval(x) + 2.0 * c * x.sin()).abs() < 1e-14);
        }
        assert_relative_eq!(p.l2_norm.powi(2), 2.0 * PI * 2.0 * c * c, epsilon = 1e-13);
    }

    #[test]
    fn rough_zero_is_degenerate() {
        let p = RoughCurrentParams::from_r(1.0, vec![0.0; 7], 0, CoefficientRule::SineSeries).unwrap();
        assert_eq!(p.l2_norm, 0.0);
        assert_eq!(p.eval(0.4), 0.0);
        assert!(matches!(p.surface_current(), Err(Error::DegenerateNormalization)));
    }

    #[test]
    fn rough_sampling_is_deterministic() {
        let a = sample_trig_coeffs(0.5, 64, 9).unwrap();
        let b = sample_trig_coeffs(0.5, 64, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.r.len(), 31);
        assert!(a.r.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(sample_trig_coeffs(0.5, 48, 9).is_err());
        assert!(sample_trig_coeffs(0.5, 2, 9).is_err());
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let p = sample_trig_coeffs(0.0, 1024, 3).unwrap();
        let c = p.sine_coefficients();
        for &x in &[-3.0, -0.1, 0.7, 2.9] {
            let direct: f64 = c.iter().enumerate().map(|(i, v)| v * ((i + 1) as f64 * x).sin()).sum();
            assert!((p.eval(x) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn literal_rule_is_real_part() {
        let p = sample_trig_coeffs(0.0, 16, 2).unwrap().with_rule(CoefficientRule::Literal);
        let c = &p.amplitudes;
        let n = c.len();
        let x = 0.83;
        let mut re = 0.0;
        for j in 1..=n {
            // nu_j = i c_j, nu_{-l} = -nu_{M/2-l}
            re += -c[j - 1] * (j as f64 * x).sin();
            let l = j;
            let nu_im = -c[n - l];
            // Re(i a e^{-ilx}) = a sin(lx)
            re += nu_im * (l as f64 * x).sin();
        }
        assert!((p.eval(x) - re).abs() < 1e-13);
    }
}
