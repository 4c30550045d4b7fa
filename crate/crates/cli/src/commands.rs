use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{Context, Result};
use hopf_core::bifurcate::{
    definiteness, fd_hessian, find_degenerate, grid_scan, ParamPoint, ScanRequest, Window,
};
use hopf_core::fdesim::{integrate, oscillation_metric, DemoField, SimConfig};
use hopf_core::frh::{self, VerdictTag};
use hopf_core::polycore::{sector_of, ComplexRoot, Sector};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};

/// Writes the result to the configured path with its sidecar, or to stdout.
fn emit(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.output.path {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("writing {path}"))?;
            let sidecar = serde_json::to_string_pretty(&cfg.sidecar()?)?;
            let side = format!("{path}.sidecar.json");
            std::fs::write(&side, sidecar + "\n").with_context(|| format!("writing {side}"))?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn json_body<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn point(cfg: &RunConfig, values: &[f64]) -> Result<ParamPoint> {
    Ok(ParamPoint::new(cfg.param_names(), values.to_vec())?)
}

fn describe_mu(mu: &ParamPoint) -> String {
    let parts: Vec<String> = mu
        .names()
        .iter()
        .zip(mu.values())
        .map(|(n, v)| format!("{n} = {v:?}"))
        .collect();
    if parts.is_empty() {
        "(none)".into()
    } else {
        parts.join(", ")
    }
}

#[derive(Serialize)]
struct OracleRoot {
    root: ComplexRoot,
    sector: Sector,
}

#[derive(Serialize)]
struct ClassifyReport {
    alpha: f64,
    mu: ParamPoint,
    coefficients: Vec<f64>,
    minors: frh::MinorSequence,
    verdict: frh::StabilityVerdict,
    critical_roots: Option<[ComplexRoot; 2]>,
    oracle_roots: Vec<OracleRoot>,
}

pub fn classify(cfg: &RunConfig) -> Result<ExitCode> {
    let tol = cfg.tolerances();
    let sys = cfg.param_system()?;
    let mu = point(cfg, cfg.command.mu.as_deref().unwrap_or_default())?;
    let p = sys.charpoly(mu.values())?;
    let minors = sys.minors(mu.values())?;
    let verdict = frh::verdict_from_minors(&minors, &tol)?;
    let critical_roots = match verdict.tag {
        VerdictTag::HopfCandidate => Some(frh::critical_roots(&verdict, sys.alpha())?),
        _ => None,
    };
    let oracle_roots = p
        .roots()?
        .into_iter()
        .map(|root| OracleRoot {
            root,
            sector: sector_of(&root, sys.alpha(), &tol),
        })
        .collect();
    let report = ClassifyReport {
        alpha: sys.alpha(),
        mu,
        coefficients: p.coeffs().to_vec(),
        minors,
        verdict,
        critical_roots,
        oracle_roots,
    };
    let body = match cfg.output.format {
        Format::Json => json_body(&report)?,
        Format::Csv => classify_text(&report),
    };
    emit(cfg, &body)?;
    Ok(ExitCode::from(match report.verdict.tag {
        VerdictTag::Stable => 0,
        VerdictTag::HopfCandidate => 2,
        VerdictTag::Indeterminate => 3,
    }))
}

fn classify_text(r: &ClassifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "alpha = {:?}", r.alpha);
    let _ = writeln!(s, "mu: {}", describe_mu(&r.mu));
    for (j, a) in r.coefficients.iter().enumerate() {
        let _ = writeln!(s, "a{} = {a:?}", j + 1);
    }
    for (p, d) in r.minors.nabla.iter().enumerate() {
        let _ = writeln!(s, "nabla{} = {d:?}", p + 1);
    }
    if let Some(t) = r.minors.nabla_tilde {
        let _ = writeln!(s, "nabla_tilde = {t:?}");
    }
    let _ = writeln!(s, "verdict: {:?}", r.verdict.tag);
    if let Some(r0) = r.verdict.critical_modulus {
        let _ = writeln!(s, "r0 = {r0:?}");
    }
    if let Some(pair) = &r.critical_roots {
        for z in pair {
            let _ = writeln!(s, "critical root: {:?} {:+?}i", z.re, z.im);
        }
    }
    let _ = writeln!(s, "oracle roots (re, im, modulus, argument, sector):");
    for o in &r.oracle_roots {
        let z = &o.root;
        let _ = writeln!(
            s,
            "  {:?}, {:?}, {:?}, {:?}, {:?}",
            z.re, z.im, z.modulus, z.argument, o.sector
        );
    }
    s
}

pub fn scan(cfg: &RunConfig) -> Result<ExitCode> {
    let tol = cfg.tolerances();
    let sys = cfg.param_system()?;
    let c = &cfg.command;
    let axes = c.axes.clone().context("axes")?;
    let w = c.window.clone().context("window")?;
    let res = c.resolution.clone().context("resolution")?;
    let req = ScanRequest {
        base: point(cfg, c.mu.as_deref().unwrap_or_default())?,
        axes: [axes[0].clone(), axes[1].clone()],
        window: Window { x0: w[0], x1: w[1], y0: w[2], y1: w[3] },
        resolution: (res[0], res[1]),
    };
    let out = grid_scan(&sys, &req, &tol)?;
    eprintln!(
        "{} points, {} rejected edges, {} failed nodes",
        out.points.len(),
        out.rejected.len(),
        out.failed_nodes
    );
    for r in &out.rejected {
        eprintln!("rejected edge {:?} -> {:?}: {}", r.from, r.to, r.error);
    }
    let body = match cfg.output.format {
        Format::Json => {
            let rejected: Vec<_> = out
                .rejected
                .iter()
                .map(|r| json!({"from": r.from, "to": r.to, "error": r.error.to_string()}))
                .collect();
            json_body(&json!({
                "axes": axes,
                "points": out.points,
                "rejected": rejected,
                "failed_nodes": out.failed_nodes,
            }))?
        }
        Format::Csv => {
            let mut s = format!("{},{},r0,transversal\n", axes[0], axes[1]);
            for bp in &out.points {
                let r0 = bp.r0.map(|r| format!("{r:?}")).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{:?},{:?},{r0},{:?}",
                    bp.mu_star.get(&axes[0]).unwrap_or(f64::NAN),
                    bp.mu_star.get(&axes[1]).unwrap_or(f64::NAN),
                    bp.transversality
                );
            }
            s
        }
    };
    emit(cfg, &body)?;
    Ok(ExitCode::SUCCESS)
}

pub fn degenerate(cfg: &RunConfig) -> Result<ExitCode> {
    let tol = cfg.tolerances();
    let sys = cfg.param_system()?;
    let guess = point(cfg, cfg.command.guess.as_deref().unwrap_or_default())?;
    let bp = find_degenerate(&sys, &guess, &tol)?;
    let mu = bp.mu_star.values();
    let hessian = fd_hessian(&|x: &[f64]| sys.minors(x).map(|m| m.last()), mu)?;
    let (_, eigenvalues) = definiteness(&hessian, tol.hessian_rel);
    let last = bp.minors.last();
    let threshold = tol.det_threshold(bp.minors.last_scale());
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "point": bp,
            "hessian_eigenvalues": eigenvalues,
            "surface_threshold": threshold,
        }))?,
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "mu: {}", describe_mu(&bp.mu_star));
            let _ = writeln!(s, "nabla{} = {last:?} (threshold {threshold:?})", bp.minors.n());
            let _ = writeln!(s, "gradient = {:?}", bp.gradient);
            let _ = writeln!(s, "hessian eigenvalues = {eigenvalues:?}");
            let verdict = bp.hessian_verdict.map(|v| format!("{v:?}"));
            let _ = writeln!(s, "hessian: {}", verdict.as_deref().unwrap_or("not evaluated"));
            let _ = writeln!(s, "transversality: {:?}", bp.transversality);
            if let Some(r0) = bp.r0 {
                let _ = writeln!(s, "r0 = {r0:?}");
            }
            s
        }
    };
    emit(cfg, &body)?;
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(cfg: &RunConfig) -> Result<ExitCode> {
    let c = &cfg.command;
    let mu = c.mu.clone().context("mu")?;
    let field = DemoField {
        system: cfg.demo()?,
        mu: [mu[0], mu[1]],
    };
    let sim = SimConfig {
        alpha: cfg.alpha(),
        x0: c.x0.clone().context("x0")?,
        v0: c.v0.clone(),
        horizon: c.horizon.context("horizon")?,
        step: c.step.context("step")?,
    };
    let tr = integrate(&field, &sim)?;
    if let Some(k) = tr.blowup {
        eprintln!("warning: state became non-finite at step {k}; trajectory truncated");
    }
    let metric = oscillation_metric(&tr, 0.25)?;
    let body = match cfg.output.format {
        Format::Json => json_body(&json!({
            "times": tr.times,
            "states": tr.states,
            "oscillation_metric": metric,
            "max_step_residual": tr.max_step_residual,
            "blowup": tr.blowup,
        }))?,
        Format::Csv => {
            let mut s = String::from("t,x1,x2,x3\n");
            for (t, x) in tr.times.iter().zip(&tr.states) {
                let _ = writeln!(s, "{t:?},{:?},{:?},{:?}", x[0], x[1], x[2]);
            }
            s
        }
    };
    emit(cfg, &body)?;
    let line = format!("oscillation_metric = {metric:?}");
    if cfg.output.path.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}
