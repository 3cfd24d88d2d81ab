//! Error measurement, order estimation and the experiment drivers.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leapfrog::{cfl_timestep, integrate, surface_term, volume_term, Forcing, LeapfrogConfig, Schedule};
use crate::mesh::{build_alternating_mesh, build_cartesian_mesh, Point, Subdomain};
use crate::operators::{estimate_cfl_norm, LiftMode, MaxwellOperators};
use crate::quadrature::{gauss_legendre, Rule1D};
use crate::solutions::{self, sample_trig_coeffs, CavityParams, CoefficientRule, RoughCurrentParams};
use crate::space::{DgSpace, MaterialParams, SpaceOptions, TEState};

/// Mesh of square cells with `n` cells per unit length, `h = sqrt(2) / n`.
pub fn square_mesh_space(n: usize, degree: usize, opts: SpaceOptions) -> Result<DgSpace> {
    DgSpace::with_options(&build_cartesian_mesh(n, n), degree, opts)
}

/// Cell-width alternation used for the cavity sweeps. Uniform square grids
/// superconverge for even degrees with central fluxes, which hides the
/// generic rate.
pub const CAVITY_ALTERNATION: f64 = 0.3;

/// `n` cells per unit length with widths alternating by `alternation`
/// (0 gives the uniform square mesh).
pub fn mesh_space(n: usize, degree: usize, alternation: f64, opts: SpaceOptions) -> Result<DgSpace> {
    DgSpace::with_options(&build_alternating_mesh(n, n, alternation)?, degree, opts)
}

/// Gauss rule and basis table used for over-integration on `space`.
fn error_rule(space: &DgSpace) -> (Rule1D, Vec<f64>) {
    let rule = gauss_legendre(space.degree() + 3);
    let tab = space.basis_1d().tabulate(&rule.points);
    (rule, tab)
}

/// Values of a local field at the tensor points of a tabulated rule,
/// `out[q2 * nq + q1]`.
fn eval_tensor(local: &[f64], tab: &[f64], n: usize, nq: usize, tmp: &mut [f64], out: &mut [f64]) {
    // contract the fast (x1) index first
    for b in 0..n {
        for q1 in 0..nq {
            let row = &tab[q1 * n..(q1 + 1) * n];
            tmp[b * nq + q1] = (0..n).map(|a| row[a] * local[b * n + a]).sum();
        }
    }
    for q2 in 0..nq {
        let row = &tab[q2 * n..(q2 + 1) * n];
        for q1 in 0..nq {
            out[q2 * nq + q1] = (0..n).map(|b| row[b] * tmp[b * nq + q1]).sum();
        }
    }
}

/// `||u - u_exact||_{mu, eps}` by Gauss quadrature with `k + 3` points per
/// direction.
pub fn weighted_l2_error(
    space: &DgSpace,
    state: &TEState,
    materials: &MaterialParams,
    exact: impl Fn(Point, Subdomain) -> [f64; 3],
) -> Result<f64> {
    state.check_len(space.dim())?;
    let (rule, tab) = error_rule(space);
    let n = space.n1d();
    let nq = rule.len();
    let mut tmp = vec![0.0; n * nq];
    let mut vals = [vec![0.0; nq * nq], vec![0.0; nq * nq], vec![0.0; nq * nq]];
    let mut total = 0.0;
    for e in 0..space.num_elements() {
        let r = space.rect(e);
        let sd = space.subdomain(e);
        let w = [materials.mu(sd), materials.eps(sd), materials.eps(sd)];
        let range = space.range(e);
        for (f, field) in [&state.h3, &state.e1, &state.e2].into_iter().enumerate() {
            eval_tensor(&field[range.clone()], &tab, n, nq, &mut tmp, &mut vals[f]);
        }
        let jac = 0.25 * r.area();
        let mut s = 0.0;
        for q2 in 0..nq {
            for q1 in 0..nq {
                let x = r.to_physical(rule.points[q1], rule.points[q2]);
                let ex = exact(x, sd);
                let wq = rule.weights[q1] * rule.weights[q2];
                for f in 0..3 {
                    let d = vals[f][q2 * nq + q1] - ex[f];
                    s += wq * w[f] * d * d;
                }
            }
        }
        total += jac * s;
    }
    Ok(total.sqrt())
}

/// Weighted L2 distance between a state on `coarse` and one on `fine`,
/// evaluating the fine state at the coarse over-integration points.
pub fn cross_mesh_l2_error(
    coarse: &DgSpace,
    coarse_state: &TEState,
    fine: &DgSpace,
    fine_state: &TEState,
    materials: &MaterialParams,
) -> Result<f64> {
    fine_state.check_len(fine.dim())?;
    weighted_l2_error(coarse, coarse_state, materials, |x, sd| {
        let e = fine.locate(x, Some(sd)).expect("coarse quadrature points lie in the domain");
        let (xi, eta) = fine.rect(e).to_reference(x);
        [
            fine.eval_local(&fine_state.h3, e, xi, eta),
            fine.eval_local(&fine_state.e1, e, xi, eta),
            fine.eval_local(&fine_state.e2, e, xi, eta),
        ]
    })
    .and_then(|v| if v.is_finite() { Ok(v) } else { Err(Error::OutsideDomain(f64::NAN, f64::NAN)) })
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn estimate_eoc(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::DegenerateFit("mesh sizes and errors must be positive and finite".into()));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("all mesh sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub experiment: String,
    pub degree: usize,
    /// Cells per unit length.
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub lift_mode: LiftMode,
    pub seed: Option<u64>,
    pub sample_times: Vec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub diverged: bool,
    pub tau_cfl: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EocRecord {
    pub alpha: f64,
    pub degree: usize,
    pub seed: u64,
    pub points: Vec<(f64, f64)>,
    pub eoc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityRecord {
    pub alpha: f64,
    pub degree: usize,
    pub seed: u64,
    pub n: usize,
    pub h: f64,
    pub error_at_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevRecord {
    pub alpha: f64,
    pub eta: f64,
    pub modes: usize,
    pub norm: f64,
}

/// Cavity sweep over meshes, degrees and lift modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub meshes: Vec<usize>,
    /// See [`mesh_space`].
    pub alternation: f64,
    pub degrees: Vec<usize>,
    pub tau: f64,
    pub end_time: f64,
    /// Errors are sampled at `i T / samples`, `i = 1..=samples`.
    pub samples: usize,
    pub lift_modes: Vec<LiftMode>,
    pub cavity: CavityParams,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            meshes: vec![19, 25, 32, 41, 52, 66],
            alternation: CAVITY_ALTERNATION,
            degrees: vec![1, 2],
            tau: 1e-4,
            end_time: 1.0,
            samples: 10,
            lift_modes: vec![LiftMode::Quadrature, LiftMode::Interpolation],
            cavity: CavityParams::default(),
        }
    }
}

fn sample_times(end_time: f64, samples: usize) -> Vec<f64> {
    (1..=samples).map(|i| end_time * i as f64 / samples as f64).collect()
}

/// One cavity run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityCase {
    pub n: usize,
    pub degree: usize,
    pub tau: f64,
    pub end_time: f64,
    /// Errors are sampled at `i T / samples`, `i = 1..=samples`.
    pub samples: usize,
    pub lift_mode: LiftMode,
    pub alternation: f64,
    pub cavity: CavityParams,
}

impl CavityCase {
    /// Default cavity, `T = 1`, 10 samples, quadrature lift, alternating mesh.
    pub fn new(n: usize, degree: usize, tau: f64) -> Self {
        Self {
            n,
            degree,
            tau,
            end_time: 1.0,
            samples: 10,
            lift_mode: LiftMode::Quadrature,
            alternation: CAVITY_ALTERNATION,
            cavity: CavityParams::default(),
        }
    }
}

pub fn run_cavity_case(case: &CavityCase) -> Result<ConvergenceRecord> {
    let CavityCase {
        n,
        degree,
        tau,
        end_time,
        samples,
        lift_mode: mode,
        alternation,
        cavity,
    } = *case;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample time".into()));
    }
    let start = Instant::now();
    let m = MaterialParams::vacuum();
    let space = mesh_space(n, degree, alternation, SpaceOptions::default())?;
    let ops = MaxwellOperators::new(&space, m)?;
    let k2 = cavity.k2();
    let mut forcing = Forcing::None;
    for (amp, w, sign) in cavity.surface_current_terms() {
        forcing.push(surface_term(&ops, move |x2| sign * amp * (k2 * x2).cos(), move |t| (w * t).sin(), mode));
    }
    let mut u = space.project_state(0.0, |x, sd| cavity.fields(x, sd, 0.0));
    let cfg = LeapfrogConfig::new(tau, end_time)?;
    let times = sample_times(end_time, samples);
    let mut errors = Vec::with_capacity(times.len());
    let res = integrate(&mut u, &cfg, &ops, &forcing, &Schedule::Times(times.clone()), |_, v| {
        errors.push(weighted_l2_error(&space, v, &m, |x, sd| cavity.fields(x, sd, v.t))?);
        Ok(())
    });
    let diverged = matches!(res, Err(Error::Unstable { .. }));
    if !diverged {
        res?;
    }
    let max_error = if diverged { f64::INFINITY } else { errors.iter().copied().fold(0.0, f64::max) };
    log::info!("cavity k={degree} n={n} mode={} max error {max_error:.4e}", mode.as_str());
    Ok(ConvergenceRecord {
        experiment: "cavity".into(),
        degree,
        n,
        h: space.mesh().h_max,
        tau,
        lift_mode: mode,
        seed: None,
        sample_times: times,
        errors,
        max_error,
        diverged,
        tau_cfl: None,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// All `(mesh, degree, mode)` cases of the cavity sweep, sorted by key.
pub fn run_spatial_convergence(cfg: &SpatialConfig) -> Result<Vec<ConvergenceRecord>> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample time".into()));
    }
    let mut cases = vec![];
    for &k in &cfg.degrees {
        for &mode in &cfg.lift_modes {
            for &n in &cfg.meshes {
                cases.push((k, mode, n));
            }
        }
    }
    // largest cases first for load balance
    cases.sort_by_key(|&(k, _, n)| std::cmp::Reverse(n * n * (k + 1) * (k + 1)));
    let mut out = cases
        .par_iter()
        .map(|&(k, mode, n)| {
            run_cavity_case(&CavityCase {
                n,
                degree: k,
                tau: cfg.tau,
                end_time: cfg.end_time,
                samples: cfg.samples,
                lift_mode: mode,
                alternation: cfg.alternation,
                cavity: cfg.cavity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        (a.degree, a.lift_mode.as_str(), a.n).cmp(&(b.degree, b.lift_mode.as_str(), b.n))
    });
    Ok(out)
}

/// Polynomial solution sweep over step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalConfig {
    pub meshes: Vec<usize>,
    pub degree: usize,
    pub taus: Vec<f64>,
    pub end_time: f64,
    pub theta: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self {
            meshes: vec![3, 5, 9],
            degree: 3,
            taus: vec![1.0 / 70.0, 1.0 / 84.0, 1e-2, 5e-3, 2.5e-3, 1e-3],
            end_time: 1.0,
            theta: 0.9,
        }
    }
}

/// Forcing for the polynomial solution on `ops`.
pub fn polynomial_forcing(ops: &MaxwellOperators, mode: LiftMode) -> Forcing {
    let space = ops.space();
    let m = *ops.materials();
    let (a, b) = solutions::polynomial_volume_terms();
    let mut f = Forcing::None;
    f.push(volume_term(space, &m, a, solutions::poly_time));
    f.push(volume_term(space, &m, b, solutions::poly_time_dd));
    f.push(surface_term(ops, solutions::polynomial_surface_profile, solutions::poly_time, mode));
    f
}

/// One polynomial run; the error is sampled after every step.
pub fn run_polynomial_case(n: usize, degree: usize, tau: f64, end_time: f64, tau_cfl: Option<f64>) -> Result<ConvergenceRecord> {
    let start = Instant::now();
    let m = MaterialParams::vacuum();
    let space = square_mesh_space(n, degree, SpaceOptions::default())?;
    let ops = MaxwellOperators::new(&space, m)?;
    let forcing = polynomial_forcing(&ops, LiftMode::Quadrature);
    let mut u = space.project_state(0.0, |x, sd| solutions::polynomial_fields(x, sd, 0.0));
    let cfg = LeapfrogConfig::new(tau, end_time)?;
    let mut max_error: f64 = 0.0;
    let res = integrate(&mut u, &cfg, &ops, &forcing, &Schedule::EveryStep, |_, v| {
        let e = weighted_l2_error(&space, v, &m, |x, sd| solutions::polynomial_fields(x, sd, v.t))?;
        max_error = max_error.max(e);
        Ok(())
    });
    let diverged = match res {
        Ok(_) => false,
        Err(Error::Unstable { .. }) => true,
        Err(e) => return Err(e),
    };
    log::info!("polynomial k={degree} n={n} tau={tau:.4e} diverged={diverged} max error {max_error:.4e}");
    Ok(ConvergenceRecord {
        experiment: "polynomial".into(),
        degree,
        n,
        h: space.mesh().h_max,
        tau,
        lift_mode: LiftMode::Quadrature,
        seed: None,
        sample_times: vec![],
        errors: vec![],
        max_error: if diverged { f64::INFINITY } else { max_error },
        diverged,
        tau_cfl,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// CFL step bound of the operators on a square mesh.
pub fn cfl_for_mesh(n: usize, degree: usize, theta: f64, materials: MaterialParams) -> Result<f64> {
    let space = square_mesh_space(n, degree, SpaceOptions::default())?;
    let ops = MaxwellOperators::new(&space, materials)?;
    let est = estimate_cfl_norm(&ops, 1e-10, 200_000)?;
    cfl_timestep(theta, est.norm)
}

pub fn run_temporal_convergence(cfg: &TemporalConfig) -> Result<Vec<ConvergenceRecord>> {
    let cfls = cfg
        .meshes
        .par_iter()
        .map(|&n| cfl_for_mesh(n, cfg.degree, cfg.theta, MaterialParams::vacuum()))
        .collect::<Result<Vec<_>>>()?;
    let cases: Vec<(usize, f64, f64)> = cfg
        .meshes
        .iter()
        .zip(&cfls)
        .flat_map(|(&n, &c)| cfg.taus.iter().map(move |&t| (n, t, c)))
        .collect();
    let mut out = cases
        .par_iter()
        .map(|&(n, tau, c)| run_polynomial_case(n, cfg.degree, tau, cfg.end_time, Some(c)))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| (a.n, b.tau).partial_cmp(&(b.n, a.tau)).expect("finite step sizes"));
    Ok(out)
}

/// Low-regularity study against a fine numerical reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    pub alphas: Vec<f64>,
    pub modes: usize,
    pub seed: u64,
    pub rule: CoefficientRule,
    pub degree: usize,
    pub meshes: Vec<usize>,
    pub tau: f64,
    pub end_time: f64,
    pub reference_degree: usize,
    pub reference_mesh: usize,
    pub reference_tau: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            modes: 1 << 14,
            seed: 20240229,
            rule: CoefficientRule::SineSeries,
            degree: 1,
            meshes: vec![8, 11, 16, 23],
            tau: 2.5e-4,
            end_time: 1.0,
            reference_degree: 2,
            reference_mesh: 64,
            reference_tau: 2.5e-4,
        }
    }
}

/// Face points needed to integrate the rough current exactly enough on a
/// mesh with `n` interface faces.
pub fn rough_lift_points(modes: usize, n: usize, degree: usize) -> usize {
    let per_face = std::f64::consts::PI * (modes / 2) as f64 / n as f64;
    (per_face.ceil() as usize + 2 * degree + 16).max(degree + 2)
}

/// Rough-current parameters, resampling with `seed + 1, ...` if the draw
/// is degenerate. Returns the parameters and the seed actually used.
pub fn rough_params(alpha: f64, modes: usize, seed: u64, rule: CoefficientRule) -> Result<RoughCurrentParams> {
    for s in seed..seed.saturating_add(16) {
        let p = sample_trig_coeffs(alpha, modes, s)?.with_rule(rule);
        if p.l2_norm > 0.0 {
            if s != seed {
                log::warn!("degenerate draw for seed {seed}, using {s}");
            }
            return Ok(p);
        }
    }
    Err(Error::DegenerateNormalization)
}

/// Integrates the low-regularity problem from zero data to `end_time`.
pub fn run_lowreg(params: &RoughCurrentParams, n: usize, degree: usize, tau: f64, end_time: f64) -> Result<(DgSpace, TEState)> {
    let m = MaterialParams::vacuum();
    let opts = SpaceOptions {
        lift_points: Some(rough_lift_points(params.modes, n, degree)),
    };
    let space = square_mesh_space(n, degree, opts)?;
    let (profile, time) = params.surface_current()?;
    let state = {
        let ops = MaxwellOperators::new(&space, m)?;
        let mut f = Forcing::None;
        f.push(surface_term(&ops, profile, time, LiftMode::Quadrature));
        let mut u = TEState::zeros(space.dim());
        let cfg = LeapfrogConfig::new(tau, end_time)?;
        integrate(&mut u, &cfg, &ops, &f, &Schedule::Times(vec![]), |_, _| Ok(()))?;
        u
    };
    Ok((space, state))
}

pub fn run_regularity_study(cfg: &RegularityConfig) -> Result<(Vec<RegularityRecord>, Vec<EocRecord>)> {
    let m = MaterialParams::vacuum();
    let results = cfg
        .alphas
        .par_iter()
        .map(|&alpha| -> Result<(Vec<RegularityRecord>, EocRecord)> {
            let params = rough_params(alpha, cfg.modes, cfg.seed, cfg.rule)?;
            let (ref_space, ref_state) =
                run_lowreg(&params, cfg.reference_mesh, cfg.reference_degree, cfg.reference_tau, cfg.end_time)?;
            let mut rows = vec![];
            for &n in &cfg.meshes {
                let (space, state) = run_lowreg(&params, n, cfg.degree, cfg.tau, cfg.end_time)?;
                let err = cross_mesh_l2_error(&space, &state, &ref_space, &ref_state, &m)?;
                log::info!("lowreg alpha={alpha} n={n} error {err:.4e}");
                rows.push(RegularityRecord {
                    alpha,
                    degree: cfg.degree,
                    seed: params.seed,
                    n,
                    h: space.mesh().h_max,
                    error_at_t: err,
                });
            }
            let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error_at_t)).collect();
            let eoc = estimate_eoc(&points)?;
            Ok((
                rows,
                EocRecord {
                    alpha,
                    degree: cfg.degree,
                    seed: params.seed,
                    points,
                    eoc,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![];
    let mut eocs = vec![];
    for (r, e) in results {
        rows.extend(r);
        eocs.push(e);
    }
    Ok((rows, eocs))
}

/// Norms `||f_alpha||_eta` for all combinations.
pub fn sobolev_sweep(alphas: &[f64], etas: &[f64], modes: &[usize], seed: u64) -> Result<Vec<SobolevRecord>> {
    let mut out = vec![];
    for &alpha in alphas {
        for &m in modes {
            let p = sample_trig_coeffs(alpha, m, seed)?;
            for &eta in etas {
                out.push(SobolevRecord {
                    alpha,
                    eta,
                    modes: m,
                    norm: p.sobolev_norm(eta),
                });
            }
        }
    }
    Ok(out)
}

fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spatial_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_rows(
        path,
        &["experiment", "k", "h", "tau", "lift_mode", "max_l2_error", "diverged"],
        records.iter().map(|r| {
            vec![
                r.experiment.clone(),
                r.degree.to_string(),
                sci(r.h),
                sci(r.tau),
                r.lift_mode.as_str().to_string(),
                sci(r.max_error),
                r.diverged.to_string(),
            ]
        }),
    )
}

pub fn write_temporal_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_rows(
        path,
        &["k", "h", "tau", "max_l2_error", "diverged", "tau_cfl"],
        records.iter().map(|r| {
            vec![
                r.degree.to_string(),
                sci(r.h),
                sci(r.tau),
                sci(r.max_error),
                r.diverged.to_string(),
                r.tau_cfl.map(sci).unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_regularity_csv(path: &Path, records: &[RegularityRecord]) -> Result<()> {
    write_rows(
        path,
        &["alpha", "degree", "seed", "h", "error_at_T"],
        records.iter().map(|r| vec![sci(r.alpha), r.degree.to_string(), r.seed.to_string(), sci(r.h), sci(r.error_at_t)]),
    )
}

pub fn write_eoc_csv(path: &Path, records: &[EocRecord]) -> Result<()> {
    write_rows(
        path,
        &["alpha", "degree", "seed", "eoc"],
        records.iter().map(|r| vec![sci(r.alpha), r.degree.to_string(), r.seed.to_string(), sci(r.eoc)]),
    )
}

pub fn write_sobolev_csv(path: &Path, records: &[SobolevRecord]) -> Result<()> {
    write_rows(
        path,
        &["alpha", "eta", "M", "norm"],
        records.iter().map(|r| vec![sci(r.alpha), sci(r.eta), r.modes.to_string(), sci(r.norm)]),
    )
}

/// Per-sample errors of the cavity runs, one row per sample time.
pub fn write_samples_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "k,h,lift_mode,t,l2_error")?;
    for r in records {
        for (t, e) in r.sample_times.iter().zip(&r.errors) {
            writeln!(f, "{},{},{},{},{}", r.degree, sci(r.h), r.lift_mode.as_str(), sci(*t), sci(*e))?;
        }
    }
    Ok(())
}
