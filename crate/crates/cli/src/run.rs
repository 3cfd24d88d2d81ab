//! Experiment dispatch and artifact writing. Cases run on the rayon pool;
//! every file is written from the calling thread once results are in.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use maxdg::harness::{
    estimate_eoc, rough_params, run_regularity_study, run_spatial_convergence, run_temporal_convergence, sobolev_sweep,
    mesh_space, write_eoc_csv, write_regularity_csv, write_samples_csv, write_sobolev_csv, write_spatial_csv,
    write_temporal_csv, ConvergenceRecord, RegularityConfig, SpatialConfig, TemporalConfig,
};
use maxdg::selftest::run_selftest;
use maxdg::solutions::{CavityParams, CoefficientRule};
use maxdg::space::SpaceOptions;
use maxdg::{build_alternating_mesh, cfl_timestep, estimate_cfl_norm, MaterialParams, MaxwellOperators};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Subcommand};

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub n: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CflInfo {
    pub n: usize,
    pub degree: usize,
    pub h: f64,
    pub theta: f64,
    pub norm: f64,
    pub tau_cfl: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseTime {
    pub case: String,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub seed: u64,
    pub basis: &'static str,
    pub config: RunConfig,
    pub meshes: Vec<MeshInfo>,
    pub tau_cfl: Vec<CflInfo>,
    pub initial_data: &'static str,
    pub cases: Vec<CaseTime>,
    pub total_wall_time: f64,
    pub outputs: Vec<String>,
    pub ok: bool,
}

/// What a run produced.
#[derive(Debug)]
pub struct Outcome {
    /// False if a case aborted unexpectedly or a self-test property failed.
    pub ok: bool,
    pub summary: String,
    pub outputs: Vec<PathBuf>,
}

struct Artifacts {
    meshes: Vec<MeshInfo>,
    tau_cfl: Vec<CflInfo>,
    initial_data: &'static str,
    cases: Vec<CaseTime>,
    outputs: Vec<PathBuf>,
    summary: String,
    ok: bool,
}

impl Artifacts {
    fn new(cfg: &RunConfig, initial_data: &'static str) -> Self {
        Self {
            meshes: cfg
                .meshes
                .iter()
                .map(|&n| MeshInfo {
                    n,
                    h: build_alternating_mesh(n, n, cfg.alternation).map(|m| m.h_max).unwrap_or(f64::NAN),
                })
                .collect(),
            tau_cfl: vec![],
            initial_data,
            cases: vec![],
            outputs: vec![],
            summary: String::new(),
            ok: true,
        }
    }

    fn file(&mut self, dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        self.outputs.push(p.clone());
        p
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut art = match cfg.subcommand {
        Subcommand::Cavity => run_cavity(cfg)?,
        Subcommand::Polynomial => run_polynomial(cfg)?,
        Subcommand::Lowreg => run_lowreg(cfg)?,
        Subcommand::Cfl => run_cfl(cfg)?,
        Subcommand::Selftest => run_selftest_cmd(cfg)?,
    };
    let total = start.elapsed().as_secs_f64();
    writeln!(art.summary, "total wall time {total:.2} s")?;

    let summary_path = art.file(&cfg.out, "summary.txt");
    std::fs::write(&summary_path, &art.summary)?;
    let meta_path = art.file(&cfg.out, "metadata.json");
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cfg.subcommand,
        seed: cfg.seed,
        basis: "Q_k tensor-product Lagrange, Gauss-Lobatto nodes",
        config: cfg.clone(),
        meshes: art.meshes,
        tau_cfl: art.tau_cfl,
        initial_data: art.initial_data,
        cases: art.cases,
        total_wall_time: total,
        outputs: art.outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
        ok: art.ok,
    };
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(Outcome {
        ok: art.ok,
        summary: art.summary,
        outputs: art.outputs,
    })
}

fn case_time(r: &ConvergenceRecord) -> CaseTime {
    CaseTime {
        case: format!("{} k={} n={} tau={:e} lift={}", r.experiment, r.degree, r.n, r.tau, r.lift_mode.as_str()),
        wall_time: r.wall_time,
    }
}

fn run_cavity(cfg: &RunConfig) -> Result<Artifacts> {
    let mut art = Artifacts::new(cfg, "L2 projection of the exact solution at t = 0");
    let mut records = vec![];
    for &tau in &cfg.taus {
        let sc = SpatialConfig {
            meshes: cfg.meshes.clone(),
            alternation: cfg.alternation,
            degrees: cfg.degrees.clone(),
            tau,
            end_time: cfg.end_time,
            samples: cfg.samples,
            lift_modes: cfg.lift_modes.clone(),
            cavity: CavityParams::default(),
        };
        records.extend(run_spatial_convergence(&sc)?);
    }
    let p = art.file(&cfg.out, "spatial.csv");
    write_spatial_csv(&p, &records)?;
    let p = art.file(&cfg.out, "samples.csv");
    write_samples_csv(&p, &records)?;

    let s = &mut art.summary;
    writeln!(s, "cavity problem, T = {}, {} sample times", cfg.end_time, cfg.samples)?;
    writeln!(s, "{:>3} {:>8} {:>10} {:>11} {:>14}", "k", "lift", "tau", "h", "max L2 error")?;
    for r in &records {
        let err = if r.diverged { "diverged".to_string() } else { format!("{:.6e}", r.max_error) };
        writeln!(s, "{:>3} {:>8} {:>10.3e} {:>11.5e} {:>14}", r.degree, r.lift_mode.as_str(), r.tau, r.h, err)?;
    }
    for &tau in &cfg.taus {
        for &k in &cfg.degrees {
            for &mode in &cfg.lift_modes {
                let pts: Vec<(f64, f64)> = records
                    .iter()
                    .filter(|r| r.degree == k && r.lift_mode == mode && r.tau == tau && !r.diverged)
                    .map(|r| (r.h, r.max_error))
                    .collect();
                if let Ok(eoc) = estimate_eoc(&pts) {
                    writeln!(s, "spatial EOC k={k} lift={} tau={tau:e}: {eoc:.3}", mode.as_str())?;
                }
            }
        }
    }
    if records.iter().any(|r| r.diverged) {
        writeln!(s, "error: at least one cavity run diverged; reduce tau")?;
        art.ok = false;
    }
    art.cases = records.iter().map(case_time).collect();
    Ok(art)
}

fn run_polynomial(cfg: &RunConfig) -> Result<Artifacts> {
    let mut art = Artifacts::new(cfg, "L2 projection of the exact solution at t = 0");
    let mut records = vec![];
    for &k in &cfg.degrees {
        let tc = TemporalConfig {
            meshes: cfg.meshes.clone(),
            degree: k,
            taus: cfg.taus.clone(),
            end_time: cfg.end_time,
            theta: cfg.theta,
        };
        records.extend(run_temporal_convergence(&tc)?);
    }
    let p = art.file(&cfg.out, "temporal.csv");
    write_temporal_csv(&p, &records)?;

    let s = &mut art.summary;
    writeln!(s, "polynomial problem, T = {}, error measured after every step", cfg.end_time)?;
    writeln!(s, "{:>3} {:>11} {:>11} {:>11} {:>14}", "k", "h", "tau_cfl", "tau", "max L2 error")?;
    for r in &records {
        let err = if r.diverged { "diverged".to_string() } else { format!("{:.6e}", r.max_error) };
        writeln!(s, "{:>3} {:>11.5e} {:>11.5e} {:>11.5e} {:>14}", r.degree, r.h, r.tau_cfl.unwrap_or(f64::NAN), r.tau, err)?;
    }
    for &k in &cfg.degrees {
        for &n in &cfg.meshes {
            let rows: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.degree == k && r.n == n).collect();
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| !r.diverged).map(|r| (r.tau, r.max_error)).collect();
            if let Ok(eoc) = estimate_eoc(&pts) {
                writeln!(s, "temporal EOC k={k} h={:.5e}: {eoc:.3}", rows[0].h)?;
            }
            if let Some(c) = rows[0].tau_cfl {
                art.tau_cfl.push(CflInfo {
                    n,
                    degree: k,
                    h: rows[0].h,
                    theta: cfg.theta,
                    norm: 2.0 * cfg.theta / c,
                    tau_cfl: c,
                    iterations: 0,
                    converged: true,
                });
            }
        }
    }
    // runs above the CFL bound are expected to diverge
    art.cases = records.iter().map(case_time).collect();
    Ok(art)
}

fn run_lowreg(cfg: &RunConfig) -> Result<Artifacts> {
    if cfg.taus.len() != 1 {
        bail!("invalid value for `tau`: lowreg takes a single step size");
    }
    let mut art = Artifacts::new(cfg, "zero");
    let mut rows = vec![];
    let mut eocs = vec![];
    for &k in &cfg.degrees {
        let start = Instant::now();
        let rc = RegularityConfig {
            alphas: cfg.alphas.clone(),
            modes: cfg.modes,
            seed: cfg.seed,
            rule: CoefficientRule::SineSeries,
            degree: k,
            meshes: cfg.meshes.clone(),
            tau: cfg.taus[0],
            end_time: cfg.end_time,
            reference_degree: cfg.reference_degree,
            reference_mesh: cfg.reference_mesh,
            reference_tau: cfg.taus[0],
        };
        let (r, e) = run_regularity_study(&rc)?;
        rows.extend(r);
        eocs.extend(e);
        art.cases.push(CaseTime {
            case: format!("lowreg k={k}"),
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let p = art.file(&cfg.out, "regularity.csv");
    write_regularity_csv(&p, &rows)?;
    let p = art.file(&cfg.out, "eoc.csv");
    write_eoc_csv(&p, &eocs)?;

    let max_alpha = cfg.alphas.iter().copied().fold(0.0, f64::max);
    let etas: Vec<f64> = (0..=((2.0 * max_alpha + 2.0) as usize)).map(|i| 0.5 * i as f64).collect();
    let mut sweep_modes: Vec<usize> = (10..).map(|m| 1usize << m).take_while(|&m| m <= cfg.modes).collect();
    if sweep_modes.is_empty() {
        sweep_modes.push(cfg.modes);
    }
    let sob = sobolev_sweep(&cfg.alphas, &etas, &sweep_modes, cfg.seed)?;
    let p = art.file(&cfg.out, "sobolev.csv");
    write_sobolev_csv(&p, &sob)?;
    for &alpha in &cfg.alphas {
        let params = rough_params(alpha, cfg.modes, cfg.seed, CoefficientRule::SineSeries)?;
        let p = art.file(&cfg.out, &format!("coefficients_alpha_{alpha}.csv"));
        params.write_coefficients_csv(&p)?;
    }

    let s = &mut art.summary;
    writeln!(
        s,
        "low-regularity problem, M = {}, seed {}, zero initial data, reference k={} n={}",
        cfg.modes, cfg.seed, cfg.reference_degree, cfg.reference_mesh
    )?;
    writeln!(s, "{:>6} {:>3} {:>11} {:>14}", "alpha", "k", "h", "error at T")?;
    for r in &rows {
        writeln!(s, "{:>6} {:>3} {:>11.5e} {:>14.6e}", r.alpha, r.degree, r.h, r.error_at_t)?;
    }
    for e in &eocs {
        writeln!(s, "EOC alpha={} k={} (seed {}): {:.3}", e.alpha, e.degree, e.seed, e.eoc)?;
    }
    Ok(art)
}

fn run_cfl(cfg: &RunConfig) -> Result<Artifacts> {
    let mut art = Artifacts::new(cfg, "none");
    let cases: Vec<(usize, usize)> = cfg.meshes.iter().flat_map(|&n| cfg.degrees.iter().map(move |&k| (n, k))).collect();
    let infos = cases
        .par_iter()
        .map(|&(n, k)| -> Result<(CflInfo, f64)> {
            let start = Instant::now();
            let space = mesh_space(n, k, cfg.alternation, SpaceOptions::default())?;
            let ops = MaxwellOperators::new(&space, MaterialParams::vacuum())?;
            let est = estimate_cfl_norm(&ops, 1e-10, 200_000)?;
            let info = CflInfo {
                n,
                degree: k,
                h: space.mesh().h_max,
                theta: cfg.theta,
                norm: est.norm,
                tau_cfl: cfl_timestep(cfg.theta, est.norm)?,
                iterations: est.iterations,
                converged: est.converged,
            };
            Ok((info, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = art.file(&cfg.out, "cfl.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["k", "h", "theta", "norm", "tau_cfl", "iterations", "converged"])?;
    let s = &mut art.summary;
    writeln!(s, "CFL estimates (vacuum), tau_cfl = 2 theta / norm")?;
    for (info, t) in infos {
        w.write_record([
            info.degree.to_string(),
            format!("{:.9e}", info.h),
            format!("{:.9e}", info.theta),
            format!("{:.9e}", info.norm),
            format!("{:.9e}", info.tau_cfl),
            info.iterations.to_string(),
            info.converged.to_string(),
        ])?;
        writeln!(
            s,
            "k={} h={:.5e}: norm {:.6e}, tau_cfl(theta={}) {:.6e}",
            info.degree, info.h, info.norm, info.theta, info.tau_cfl
        )?;
        art.cases.push(CaseTime {
            case: format!("cfl k={} n={}", info.degree, info.n),
            wall_time: t,
        });
        art.tau_cfl.push(info);
    }
    w.flush()?;
    Ok(art)
}

fn run_selftest_cmd(cfg: &RunConfig) -> Result<Artifacts> {
    let mut art = Artifacts::new(cfg, "random states from the seed");
    art.meshes.clear();
    let checks = run_selftest(cfg.seed)?;
    let p = art.file(&cfg.out, "selftest.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["property", "value", "tolerance", "passed"])?;
    for c in &checks {
        w.write_record([c.name.to_string(), format!("{:.9e}", c.value), format!("{:.9e}", c.tolerance), c.passed.to_string()])?;
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(art.summary, "{tag} {:<18} {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance)?;
    }
    w.flush()?;
    art.ok = checks.iter().all(|c| c.passed);
    Ok(art)
}
