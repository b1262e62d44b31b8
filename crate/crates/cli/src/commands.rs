use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use horocm::apriori::{c0_bounds, certify, CertifyTolerances};
use horocm::assumptions::check_assumption;
use horocm::conformal::{check_combination_identity, regularity_condition, schouten_eigs};
use horocm::horo_geometry::{curvature_radii, embed, to_poincare_ball, write_obj, SupportFunction};
use horocm::solver::{constant_solution, continuation_solve, residual, ProblemSpec, SolveError, StepRecord};
use horocm::sphere_grid::io::{read_fields, write_csv, write_fields};
use horocm::symfunc::{sigma_k, sigma_k_deleted, SymVec};
use horocm::{ScalarField, SphereGrid};

use crate::config::{build_f, RunConfig};
use crate::{Cli, Command, ExportFormat};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;
pub const EXIT_SOLVER_FAILED: u8 = 3;

pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Constant { gamma, p, k, n } => constant(*gamma, *p, *k, *n),
        Command::Selftest { cases } => selftest(cli.seed, *cases),
        cmd => {
            let mut cfg = match &cli.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            if let Some(r) = cli.resolution {
                cfg.resolution = r;
            }
            cfg.validate()?;
            match cmd {
                Command::CheckF => check_f(&cfg),
                Command::Solve => solve(&cfg),
                Command::Verify => verify(&cfg),
                Command::Export { format } => export(&cfg, *format),
                Command::Constant { .. } | Command::Selftest { .. } => unreachable!(),
            }
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn write_solution(path: &Path, grid: &SphereGrid, phi: &ScalarField, f: &ScalarField) -> Result<()> {
    let mut w = create(path)?;
    write_fields(&mut w, grid, &[("phi", phi), ("f", f)])?;
    w.flush()?;
    Ok(())
}

fn check_f(cfg: &RunConfig) -> Result<u8> {
    let grid = cfg.grid()?;
    let (f, _) = build_f(cfg, &grid)?;
    let report = check_assumption(&grid, &f, cfg.p, cfg.k)?;
    let out = out_dir(cfg)?;
    write_json(&out.join("assumption_report.json"), &report)?;
    println!(
        "case {}: margin {:e} (tolerance {:e}), {}",
        report.case,
        report.margin,
        report.tolerance,
        if report.pass { "pass" } else { "FAIL" }
    );
    for aux in &report.aux {
        println!("  {}: {} vs {} {}", aux.name, aux.value, aux.bound, if aux.pass { "ok" } else { "FAIL" });
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct FailureReport {
    error: String,
    last_good_t: Option<f64>,
    steps: Vec<StepRecord>,
}

fn solve(cfg: &RunConfig) -> Result<u8> {
    let grid = cfg.grid()?;
    let (f, exact) = build_f(cfg, &grid)?;
    let spec = ProblemSpec::new(&grid, cfg.k, cfg.p, f)?;
    let out = out_dir(cfg)?;
    match continuation_solve(&spec, &cfg.homotopy) {
        Ok(report) => {
            let phi = report.phi.as_ref().expect("solve report carries phi");
            write_solution(&out.join("solution.hcm"), &grid, phi.phi(), spec.f())?;
            write_json(&out.join("solve_report.json"), &report)?;
            write_json(&out.join("certificate.json"), &report.certificate)?;
            println!(
                "converged: {}, residual {:e} (tolerance {:e}), margin {:e}, {} steps",
                report.converged,
                report.final_residual,
                report.residual_tolerance,
                report.hconvexity_margin,
                report.t_schedule.len() - 1
            );
            if let Some(exact) = exact {
                let err = phi.phi().zip_map(&exact, |a, b| a - b).sup_norm();
                println!("sup error against the manufactured solution: {err:e}");
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let ok = report.converged && report.hconvexity_margin > 0.0;
            Ok(if ok { EXIT_OK } else { EXIT_SOLVER_FAILED })
        }
        Err(SolveError::Setup(e)) => Err(e.into()),
        Err(err) => {
            let (last_good_t, steps) = match &err {
                SolveError::StepUnderflow { t, last_good, steps, .. } => {
                    write_solution(&out.join("last_good.hcm"), &grid, last_good, spec.f())?;
                    (Some(*t), steps.clone())
                }
                _ => (None, Vec::new()),
            };
            write_json(
                &out.join("failure.json"),
                &FailureReport {
                    error: err.to_string(),
                    last_good_t,
                    steps,
                },
            )?;
            eprintln!("solver failed: {err}");
            Ok(EXIT_SOLVER_FAILED)
        }
    }
}

/// Grid, support function and `f` of a stored solution.
fn load_solution(cfg: &RunConfig) -> Result<(SphereGrid, SupportFunction, ScalarField)> {
    let path = cfg.solution_path();
    let file = File::open(&path).with_context(|| format!("cannot open solution {}", path.display()))?;
    let data = read_fields(BufReader::new(file))?;
    let grid = cfg.grid()?;
    data.check_grid(&grid)?;
    let phi = data
        .field("phi")
        .with_context(|| format!("{} has no field named 'phi'", path.display()))?;
    let f = match data.field("f") {
        Some(f) => f,
        None => build_f(cfg, &grid)?.0,
    };
    let phi = SupportFunction::new(&grid, phi, 0.0)?;
    Ok((grid, phi, f))
}

fn verify(cfg: &RunConfig) -> Result<u8> {
    let (grid, phi, f) = load_solution(cfg)?;
    let cert = certify(&grid, &phi, &f, cfg.p, cfg.k, CertifyTolerances::default())?;
    let out = out_dir(cfg)?;
    write_json(&out.join("verify_certificate.json"), &cert)?;
    println!(
        "residual {:e} ({}), C0 {}, gradient {}, margin {:e} ({})",
        cert.residual_sup,
        pass_word(cert.residual_pass),
        pass_word(cert.c0_pass),
        pass_word(cert.gradient_pass),
        cert.hconvexity_margin,
        pass_word(cert.margin_pass)
    );
    Ok(if cert.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn export(cfg: &RunConfig, format: ExportFormat) -> Result<u8> {
    let (grid, phi, f) = load_solution(cfg)?;
    let out = out_dir(cfg)?;
    let n = grid.dim();
    let want = |f: ExportFormat| format == f || format == ExportFormat::All;

    if want(ExportFormat::Obj) {
        if n == 2 {
            let ball = to_poincare_ball(&embed(&grid, &phi))?;
            let mut w = create(&out.join("mesh.obj"))?;
            write_obj(&mut w, &grid, &ball)?;
            w.flush()?;
        } else if format == ExportFormat::Obj {
            bail!("OBJ export needs n = 2, got n = {n}");
        } else {
            eprintln!("note: skipping OBJ mesh for n = {n}");
        }
    }
    let radii = if want(ExportFormat::Csv) || want(ExportFormat::Conformal) {
        curvature_radii(&grid, &phi)?
    } else {
        Vec::new()
    };
    let column = |values: Vec<f64>| ScalarField::new(values);
    if want(ExportFormat::Csv) {
        let spec = ProblemSpec::new(&grid, cfg.k, cfg.p, f)?;
        let res = residual(&phi, &spec, 1.0)?;
        let mut names = vec!["phi".to_string()];
        let mut cols = vec![phi.phi().clone()];
        for a in 0..n {
            names.push(format!("radius_{}", a + 1));
            cols.push(column(radii.iter().map(|r| r[a]).collect()));
        }
        names.push("residual".into());
        cols.push(res);
        let table: Vec<(&str, &ScalarField)> = names.iter().map(String::as_str).zip(cols.iter()).collect();
        let mut w = create(&out.join("nodes.csv"))?;
        write_csv(&mut w, &grid, &table)?;
        w.flush()?;
    }
    if want(ExportFormat::Conformal) {
        let lambda = schouten_eigs(&grid, &phi)?;
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for a in 0..n {
            names.push(format!("lambda_{}", a + 1));
            cols.push(column(lambda.iter().map(|l| l[a]).collect()));
        }
        let gaps = radii
            .iter()
            .map(|r| check_combination_identity(r, cfg.k).map(|(_, _, gap)| gap))
            .collect::<horocm::Result<Vec<f64>>>()?;
        names.push("identity_gap".into());
        cols.push(column(gaps));
        let table: Vec<(&str, &ScalarField)> = names.iter().map(String::as_str).zip(cols.iter()).collect();
        let mut w = create(&out.join("conformal.csv"))?;
        write_csv(&mut w, &grid, &table)?;
        w.flush()?;
        let reg = regularity_condition(&grid, &phi);
        if let Some(warning) = &reg.warning {
            eprintln!("warning: {warning}");
        }
        println!("regularity 2Sch - g > 0: {} (min radius {:e})", reg.holds, reg.min_radius);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ConstantReport {
    gamma: f64,
    p: f64,
    k: usize,
    n: usize,
    constant: f64,
    c0_lower: f64,
    c0_upper: f64,
}

fn constant(gamma: f64, p: f64, k: usize, n: usize) -> Result<u8> {
    let c = constant_solution(gamma, p, k, n)?;
    let (lo, hi) = c0_bounds(gamma, gamma, p, k, n)?;
    let report = ConstantReport {
        gamma,
        p,
        k,
        n,
        constant: c,
        c0_lower: lo,
        c0_upper: hi,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SelftestReport {
    seed: u64,
    cases: usize,
    max_identity_error: f64,
    max_conformal_gap: f64,
    tolerance: f64,
    pass: bool,
}

/// Expansion identities of `σ_k` and the conformal combination identity on
/// random eigenvalue tuples.
fn selftest(seed: u64, cases: usize) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut identity = 0.0f64;
    let mut conformal = 0.0f64;
    for _ in 0..cases {
        let n = rng.random_range(2..=8usize);
        let k = rng.random_range(1..=n);
        let lam: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sk = sigma_k(&lam, k);
        let scale = 1.0 + sk.abs();
        let mut weighted = 0.0;
        for i in 0..n {
            let d = sigma_k_deleted(&lam, k, &[i])?;
            let d1 = sigma_k_deleted(&lam, k - 1, &[i])?;
            identity = identity.max((sk - d - lam[i] * d1).abs() / scale);
            weighted += lam[i] * d1;
        }
        identity = identity.max((weighted - k as f64 * sk).abs() / scale);
        if n <= 6 {
            let (_, _, gap) = check_combination_identity(&SymVec::new(lam)?, k)?;
            conformal = conformal.max(gap);
        }
    }
    let tolerance = 1e-12;
    let report = SelftestReport {
        seed,
        cases,
        max_identity_error: identity,
        max_conformal_gap: conformal,
        tolerance,
        pass: identity <= tolerance && conformal <= tolerance,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}
