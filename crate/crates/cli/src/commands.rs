use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;
use serde_json::json;

use skorohod_core::geometry::{check_drop, check_semiconvex_set, check_uebc, ViolationReport};
use skorohod_core::sde::{monte_carlo as run_mc, simulate as run_path, Functional};
use skorohod_core::skorohod::{
    certify_with, convergence_study_with_drift, reconstruct_drift, solve_with_drift, Certificate, CertifyOptions,
    SkorohodSolution,
};
use skorohod_core::Error;

use crate::problem::{load, Problem};
use crate::Failure;

fn io_failure(path: &FsPath, e: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

fn emit(value: &impl Serialize, out: Option<&FsPath>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::solver(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| io_failure(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn report_warnings(sol: &SkorohodSolution<f64>) {
    for w in &sol.warnings {
        eprintln!("skorohod: warning: {w}");
    }
}

fn write_solution(sol: &SkorohodSolution<f64>, path: &FsPath) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    sol.write_csv(&mut w)?;
    w.flush().map_err(|e| io_failure(path, e))
}

/// Exit 1 naming the failing checks, after the certificate was printed.
fn verdict(cert: &Certificate) -> Result<(), Failure> {
    if cert.pass {
        return Ok(());
    }
    let names: Vec<String> = cert
        .failing()
        .map(|c| format!("{} (residual {:e} > tolerance {:e})", c.name, c.residual, c.tolerance))
        .collect();
    Err(Failure::certificate(format!("certificate failed: {}", names.join(", "))))
}

fn path_opts() -> CertifyOptions {
    CertifyOptions { variational: false, windowed: false, ..CertifyOptions::default() }
}

pub fn solve(file: &FsPath, out: Option<PathBuf>, steps: Option<usize>, tol: Option<f64>) -> Result<(), Failure> {
    let p = load(file)?;
    let phi = p.potential()?;
    let cfg = p.config(tol)?;
    let f = p.drift(phi.domain())?;
    let m = p.driver(steps.unwrap_or(p.file.steps))?;
    let sol = solve_with_drift(&phi, &p.file.x0, &f, &m, &cfg)?;
    report_warnings(&sol);
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.solution.csv", p.stem)));
    write_solution(&sol, &out)?;
    let cert = certify_with(&phi, &sol, &m, &[], &cfg, &CertifyOptions::default())?;
    emit(
        &json!({
            "problem": p.name(),
            "solution": out.display().to_string(),
            "nodes": sol.times().len(),
            "bisections": sol.bisections,
            "total_variation": sol.k.total(),
            "certificate": cert,
        }),
        None,
    )?;
    verdict(&cert)
}

pub fn certify(
    file: &FsPath,
    solution: &FsPath,
    steps: Option<usize>,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let p = load(file)?;
    let phi = p.potential()?;
    let cfg = p.config(tol)?;
    let f = p.drift(phi.domain())?;
    let m = p.driver(steps.unwrap_or(p.file.steps))?;
    let reader = File::open(solution).map_err(|e| io_failure(solution, e))?;
    let sol = SkorohodSolution::<f64>::read_csv(reader, solution.display().to_string())
        .map_err(|e| io_failure(solution, e))?;
    if sol.dim() != phi.dim() {
        return Err(Failure::usage(format!("{}: solution has dimension {}", solution.display(), sol.dim())));
    }
    // a CSV carries no step parts: certify against m + int f along x
    let forcing = if p.file.drift.is_some() {
        let on_grid = m.resample(sol.times().to_vec()).map_err(grid_failure)?;
        let drift = reconstruct_drift(&f, &sol.x, cfg.delay_n)?;
        on_grid.add_scaled(1.0, &drift)?
    } else {
        m
    };
    let cert = certify_with(&phi, &sol, &forcing, &[], &cfg, &CertifyOptions::default()).map_err(grid_failure)?;
    emit(&json!({ "problem": p.name(), "solution": solution.display().to_string(), "certificate": cert }), out.as_deref())?;
    verdict(&cert)
}

fn grid_failure(e: Error) -> Failure {
    match e {
        Error::GridMismatch(_) => Failure::certificate(format!("solution does not match the problem: {e}")),
        other => other.into(),
    }
}

fn path_seed(p: &Problem, seed: Option<u64>) -> u64 {
    seed.or(p.driver_seed()).unwrap_or(0)
}

pub fn simulate(
    file: &FsPath,
    seed: Option<u64>,
    steps: Option<usize>,
    out: Option<PathBuf>,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let p = load(file)?;
    let phi = p.potential()?;
    let cfg = p.config(tol)?;
    let f = p.drift(phi.domain())?;
    let g = p.diffusion(phi.dim())?;
    let seed = path_seed(&p, seed);
    let steps = steps.unwrap_or(p.file.steps);
    let bm = p.brownian(seed, steps)?;
    let sol = run_path(&phi, &p.file.x0, &f, &g, &bm, &cfg)?;
    report_warnings(&sol);
    if let Some(path) = &out {
        write_solution(&sol, path)?;
    }
    let m = sol.forcing_path().ok_or_else(|| Failure::solver("simulated path carries no step parts"))?;
    let cert = certify_with(&phi, &sol, &m, &[], &cfg, &path_opts())?;
    let terminal = sol.x.value(sol.x.len() - 1).to_vec();
    emit(
        &json!({
            "problem": p.name(),
            "seed": seed,
            "steps": steps,
            "config": p.file,
            "bisections": sol.bisections,
            "terminal": terminal,
            "total_variation": sol.k.total(),
            "certificate": cert,
        }),
        None,
    )?;
    verdict(&cert)
}

#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    file: &FsPath,
    paths: usize,
    seed: u64,
    steps: Option<usize>,
    out: Option<PathBuf>,
    path_csv: Option<PathBuf>,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let p = load(file)?;
    let phi = p.potential()?;
    let cfg = p.config(tol)?;
    let f = p.drift(phi.domain())?;
    let g = p.diffusion(phi.dim())?;
    let steps = steps.unwrap_or(p.file.steps);
    if paths == 0 {
        return Err(Failure::usage("--paths must be at least 1"));
    }
    let mut functionals: Vec<Functional<f64>> = (0..phi.dim()).map(Functional::Terminal).collect();
    functionals.extend([Functional::TerminalNorm, Functional::SupNorm, Functional::Variation]);
    let report = run_mc(&phi, &p.file.x0, &f, &g, p.file.t_end, steps, paths, seed, &functionals, &cfg, true)?;
    if let Some(dir) = &path_csv {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        for j in 0..paths {
            let s = seed.wrapping_add(j as u64);
            let bm = p.brownian(s, steps)?;
            if let Ok(sol) = run_path(&phi, &p.file.x0, &f, &g, &bm, &cfg) {
                write_solution(&sol, &dir.join(format!("path_{j:06}.csv")))?;
            }
        }
    }
    emit(
        &json!({
            "problem": p.name(),
            "seed": seed,
            "paths": paths,
            "steps": steps,
            "config": p.file,
            "report": report,
        }),
        out.as_deref(),
    )?;
    if !report.failures.is_empty() {
        return Err(Failure::solver(format!(
            "{} of {paths} paths failed; first: {}",
            report.failures.len(),
            report.failures[0].error
        )));
    }
    if report.certificate_failures > 0 {
        return Err(Failure::certificate(format!("{} of {paths} paths failed certification", report.certificate_failures)));
    }
    Ok(())
}

pub fn converge(file: &FsPath, steps: &[usize], out: Option<PathBuf>) -> Result<(), Failure> {
    let p = load(file)?;
    let phi = p.potential()?;
    let cfg = p.config(None)?;
    let f = p.drift(phi.domain())?;
    let finest = steps.iter().copied().max().unwrap_or(1);
    if steps.windows(2).any(|w| w[0] >= w[1]) || steps.len() < 2 {
        return Err(Failure::usage("--steps needs at least two strictly increasing counts"));
    }
    // validate the generator up front so that bad step lists are usage errors
    for &n in steps {
        p.nested_driver(n, finest)?;
    }
    let generator = |n: usize| p.nested_driver(n, finest).map_err(|e| Error::InvalidArgument(e.message));
    let drift = p.file.drift.as_ref().map(|_| &f);
    let report = convergence_study_with_drift(&phi, &p.file.x0, drift, generator, steps, &cfg)?;
    emit(&json!({ "problem": p.name(), "config": p.file, "report": report }), out.as_deref())
}

pub fn check_domain(file: &FsPath, seed: Option<u64>, tol: f64, out: Option<PathBuf>) -> Result<(), Failure> {
    let p = load(file)?;
    let domain = p.domain()?;
    let c = &p.file.checks;
    let seed = seed.unwrap_or(c.seed);
    let mut checks: Vec<(&str, ViolationReport)> = vec![
        ("uebc", check_uebc(&domain, c.samples, seed)),
        ("semiconvex_set", check_semiconvex_set(&domain, domain.semiconvexity_gamma(), c.samples, seed)),
    ];
    if let (Some(h0), Some(r)) = (c.drop_h0, c.drop_radius) {
        checks.push(("drop", check_drop(&domain, h0, r, c.samples, seed)));
    }
    let pass = checks.iter().all(|(_, r)| r.passes(tol));
    let records: Vec<_> = checks
        .iter()
        .map(|(name, r)| json!({ "name": name, "pass": r.passes(tol), "tolerance": tol, "report": r }))
        .collect();
    emit(
        &json!({
            "problem": p.name(),
            "domain": domain.kind_name(),
            "r0": domain.uebc_radius(),
            "gamma": domain.semiconvexity_gamma(),
            "pass": pass,
            "checks": records,
        }),
        out.as_deref(),
    )?;
    if pass {
        Ok(())
    } else {
        let bad: Vec<&str> = checks.iter().filter(|(_, r)| !r.passes(tol)).map(|(n, _)| *n).collect();
        Err(Failure::certificate(format!("domain checks failed: {}", bad.join(", "))))
    }
}
