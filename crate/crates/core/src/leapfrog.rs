//! Leapfrog time stepping for the semi-discrete TE system
//!
//! ```text
//! dH/dt = -C_E E,   dE/dt = C_H H - F(t)
//! ```
//!
//! where `F(t) = J_vol,h(t) + L(J_s(t))` collects the projected volume
//! current and the interface lift.

use crate::error::{Error, Result};
use crate::operators::{LiftMode, MaxwellOperators};
use crate::space::{DgSpace, MaterialParams, TEState};
use crate::Point;
use crate::Subdomain;

/// `tau_CFL = 2 theta / norm`, with `norm = sqrt(lambda_max(C_H C_E))`.
pub fn cfl_timestep(theta: f64, norm_estimate: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(norm_estimate > 0.0 && norm_estimate.is_finite()) {
        return Err(Error::InvalidParameter(format!("norm estimate must be positive, got {norm_estimate}")));
    }
    Ok(2.0 * theta / norm_estimate)
}

type TimeFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A fixed vector in the `(E1, E2)` space times a scalar time factor.
pub struct SourceTerm {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub time: TimeFn,
}

/// The E-space forcing `F(t)` subtracted in the electric update.
pub enum Forcing {
    None,
    Separable(Vec<SourceTerm>),
    General(Box<dyn Fn(f64, &mut [f64], &mut [f64]) + Send + Sync>),
}

impl Forcing {
    pub fn is_none(&self) -> bool {
        match self {
            Forcing::None => true,
            Forcing::Separable(terms) => terms.is_empty(),
            Forcing::General(_) => false,
        }
    }

    /// Writes `F(t)` into `out1`, `out2`.
    pub fn eval(&self, t: f64, out1: &mut [f64], out2: &mut [f64]) {
        out1.iter_mut().chain(out2.iter_mut()).for_each(|v| *v = 0.0);
        match self {
            Forcing::None => {}
            Forcing::Separable(terms) => {
                for term in terms {
                    let s = (term.time)(t);
                    if s == 0.0 {
                        continue;
                    }
                    for (o, v) in out1.iter_mut().zip(&term.e1) {
                        *o += s * v;
                    }
                    for (o, v) in out2.iter_mut().zip(&term.e2) {
                        *o += s * v;
                    }
                }
            }
            Forcing::General(f) => f(t, out1, out2),
        }
    }

    pub fn push(&mut self, term: SourceTerm) {
        match self {
            Forcing::None => *self = Forcing::Separable(vec![term]),
            Forcing::Separable(terms) => terms.push(term),
            Forcing::General(_) => panic!("cannot add a separable term to a general forcing"),
        }
    }
}

/// Lift of `profile(x2) * time(t)`, computed once.
pub fn surface_term(
    ops: &MaxwellOperators,
    profile: impl Fn(f64) -> f64,
    time: impl Fn(f64) -> f64 + Send + Sync + 'static,
    mode: LiftMode,
) -> SourceTerm {
    let (e1, e2) = ops.lift_interface(profile, mode);
    SourceTerm {
        e1,
        e2,
        time: Box::new(time),
    }
}

/// Projection of `eps^{-1} J(x) * time(t)` for a volume current profile `J`.
pub fn volume_term(
    space: &DgSpace,
    materials: &MaterialParams,
    profile: impl Fn(Point, Subdomain) -> [f64; 2],
    time: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> SourceTerm {
    let e1 = space.l2_project(|x, sd| profile(x, sd)[0] / materials.eps(sd));
    let e2 = space.l2_project(|x, sd| profile(x, sd)[1] / materials.eps(sd));
    SourceTerm {
        e1,
        e2,
        time: Box::new(time),
    }
}

/// Which steps the observer sees.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    EveryStep,
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogConfig {
    pub tau: f64,
    pub end_time: f64,
    /// Abort once the coefficient norm exceeds this factor times
    /// `max(initial norm, 1)`.
    pub abort_factor: f64,
    /// Check the one-step identity every this many steps.
    pub verify_every: Option<usize>,
}

impl LeapfrogConfig {
    pub fn new(tau: f64, end_time: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            end_time,
            abort_factor: 1e8,
            verify_every: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return Err(Error::InvalidParameter(format!("end time must be nonnegative, got {}", self.end_time)));
        }
        if !(self.abort_factor > 1.0) {
            return Err(Error::InvalidParameter("abort factor must exceed 1".into()));
        }
        Ok(())
    }

    /// `ceil(T / tau)`, treating ratios within 1e-9 of an integer as exact.
    pub fn num_steps(&self) -> usize {
        let r = self.end_time / self.tau;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Step indices for the requested observation times.
    pub fn observation_steps(&self, schedule: &Schedule) -> Result<Vec<usize>> {
        let n = self.num_steps();
        match schedule {
            Schedule::EveryStep => Ok((0..=n).collect()),
            Schedule::Times(times) => {
                let mut steps = Vec::with_capacity(times.len());
                for &t in times {
                    let r = t / self.tau;
                    let s = r.round();
                    if (r - s).abs() * self.tau > 1e-12 * t.abs().max(1.0) || s < 0.0 || s as usize > n {
                        return Err(Error::InvalidParameter(format!(
                            "observation time {t} is not a step multiple of tau = {} within [0, T]",
                            self.tau
                        )));
                    }
                    steps.push(s as usize);
                }
                steps.sort_unstable();
                steps.dedup();
                Ok(steps)
            }
        }
    }
}

/// Stateful stepper that reuses `C_E E^{n+1}` and `F(t_{n+1})` as the
/// starting values of the next step.
pub struct Leapfrog<'a> {
    ops: &'a MaxwellOperators<'a>,
    forcing: &'a Forcing,
    tau: f64,
    ce: Vec<f64>,
    f_old: (Vec<f64>, Vec<f64>),
    f_new: (Vec<f64>, Vec<f64>),
    buf1: Vec<f64>,
    buf2: Vec<f64>,
    cached_at: Option<f64>,
}

impl<'a> Leapfrog<'a> {
    /// `tau` may be negative, which runs the scheme backwards.
    pub fn new(ops: &'a MaxwellOperators<'a>, forcing: &'a Forcing, tau: f64) -> Self {
        let n = ops.dim();
        Self {
            ops,
            forcing,
            tau,
            ce: vec![0.0; n],
            f_old: (vec![0.0; n], vec![0.0; n]),
            f_new: (vec![0.0; n], vec![0.0; n]),
            buf1: vec![0.0; n],
            buf2: vec![0.0; n],
            cached_at: None,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Overrides the time stamp of `u`, keeping the cached values valid.
    pub fn set_time(&mut self, u: &mut TEState, t: f64) {
        if self.cached_at == Some(u.t) {
            self.cached_at = Some(t);
        }
        u.t = t;
    }

    /// Advances `u` from `t_n` to `t_n + tau` in place.
    pub fn step(&mut self, u: &mut TEState) -> Result<()> {
        u.check_len(self.ops.dim())?;
        let tau = self.tau;
        let t0 = u.t;
        let t1 = t0 + tau;
        if self.cached_at != Some(t0) {
            self.ops.apply_ce(&u.e1, &u.e2, &mut self.ce)?;
            self.forcing.eval(t0, &mut self.f_old.0, &mut self.f_old.1);
        }
        for (h, c) in u.h3.iter_mut().zip(&self.ce) {
            *h -= 0.5 * tau * c;
        }
        self.ops.apply_ch_hat(&u.h3, &mut self.buf1, &mut self.buf2)?;
        let has_f = !self.forcing.is_none();
        if has_f {
            self.forcing.eval(t1, &mut self.f_new.0, &mut self.f_new.1);
        }
        for i in 0..u.e1.len() {
            u.e1[i] += tau * self.buf1[i];
            u.e2[i] += tau * self.buf2[i];
        }
        if has_f {
            for i in 0..u.e1.len() {
                u.e1[i] -= 0.5 * tau * (self.f_old.0[i] + self.f_new.0[i]);
                u.e2[i] -= 0.5 * tau * (self.f_old.1[i] + self.f_new.1[i]);
            }
            std::mem::swap(&mut self.f_old, &mut self.f_new);
        }
        self.ops.apply_ce(&u.e1, &u.e2, &mut self.ce)?;
        for (h, c) in u.h3.iter_mut().zip(&self.ce) {
            *h -= 0.5 * tau * c;
        }
        u.t = t1;
        self.cached_at = Some(t1);
        Ok(())
    }
}

/// One leapfrog step without caching.
pub fn leapfrog_step(state: &TEState, tau: f64, ops: &MaxwellOperators, forcing: &Forcing) -> Result<TEState> {
    let mut u = state.clone();
    Leapfrog::new(ops, forcing, tau).step(&mut u)?;
    Ok(u)
}

/// Energy norm of `R_- u^{n+1} - R_+ u^n - (tau/2)(s^n + s^{n+1})` with
/// `R_pm = I pm (tau/2) C - (tau^2/4) D`, `C(H, E) = (-C_E E, C_H H)`,
/// `D(H, E) = (0, C_H C_E E)` and `s = (0, -F)`.
pub fn verify_one_step_identity(
    before: &TEState,
    after: &TEState,
    tau: f64,
    ops: &MaxwellOperators,
    forcing: &Forcing,
) -> Result<f64> {
    let n = ops.dim();
    before.check_len(n)?;
    after.check_len(n)?;
    let apply_r = |u: &TEState, sign: f64| -> TEState {
        let c = ops.apply_combined(u);
        let (d1, d2) = ops.apply_curl_curl(&u.e1, &u.e2);
        let mut r = u.clone();
        r.axpy(sign * 0.5 * tau, &c);
        for i in 0..n {
            r.e1[i] -= 0.25 * tau * tau * d1[i];
            r.e2[i] -= 0.25 * tau * tau * d2[i];
        }
        r
    };
    let mut r = apply_r(after, -1.0);
    let rp = apply_r(before, 1.0);
    r.axpy(-1.0, &rp);
    let (mut a1, mut a2) = (vec![0.0; n], vec![0.0; n]);
    let (mut b1, mut b2) = (vec![0.0; n], vec![0.0; n]);
    forcing.eval(before.t, &mut a1, &mut a2);
    forcing.eval(after.t, &mut b1, &mut b2);
    for i in 0..n {
        r.e1[i] += 0.5 * tau * (a1[i] + b1[i]);
        r.e2[i] += 0.5 * tau * (a2[i] + b2[i]);
    }
    Ok(ops.space().energy_norm(&r, ops.materials()))
}

/// Summary of a completed integration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationReport {
    pub steps: usize,
    /// Largest one-step residual relative to the state norm among checked steps.
    pub max_identity_residual: Option<f64>,
}

fn coeff_norm(u: &TEState) -> f64 {
    u.h3.iter().chain(&u.e1).chain(&u.e2).map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs `cfg.num_steps()` steps from `state`, calling `observer(step, state)`
/// at the scheduled steps (including step 0 if scheduled). Aborts with
/// [`Error::Unstable`] when the coefficient norm exceeds
/// `abort_factor * max(initial, 1)` or becomes non-finite.
pub fn integrate(
    state: &mut TEState,
    cfg: &LeapfrogConfig,
    ops: &MaxwellOperators,
    forcing: &Forcing,
    schedule: &Schedule,
    mut observer: impl FnMut(usize, &TEState) -> Result<()>,
) -> Result<IntegrationReport> {
    cfg.validate()?;
    state.check_len(ops.dim())?;
    let steps = cfg.observation_steps(schedule)?;
    let mut next_obs = steps.iter().peekable();
    let initial = coeff_norm(state);
    let limit = cfg.abort_factor * initial.max(1.0);
    let n = cfg.num_steps();
    let t0 = state.t;
    let mut stepper = Leapfrog::new(ops, forcing, cfg.tau);
    let mut max_res: Option<f64> = None;
    for step in 0..=n {
        if next_obs.peek() == Some(&&step) {
            observer(step, state)?;
            next_obs.next();
        }
        if step == n {
            break;
        }
        let check = cfg.verify_every.is_some_and(|k| k > 0 && step % k == 0);
        let before = check.then(|| state.clone());
        stepper.step(state)?;
        // keep t_n = t0 + n tau without accumulated rounding
        stepper.set_time(state, t0 + (step + 1) as f64 * cfg.tau);
        if let Some(before) = before {
            let res = verify_one_step_identity(&before, state, cfg.tau, ops, forcing)?;
            let scale = ops.space().energy_norm(state, ops.materials()).max(f64::MIN_POSITIVE);
            let rel = res / scale;
            max_res = Some(max_res.map_or(rel, |m: f64| m.max(rel)));
        }
        let norm = coeff_norm(state);
        if !norm.is_finite() || norm > limit {
            log::warn!("aborting at t = {}: norm {norm:e}", state.t);
            return Err(Error::Unstable {
                time: state.t,
                norm,
                initial,
            });
        }
    }
    Ok(IntegrationReport {
        steps: n,
        max_identity_residual: max_res,
    })
}
