//! One PASS/FAIL line per acceptance criterion. A criterion passes only if its
//! check holds and it finishes inside its time budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{closed_form, expand, hadamard, mittag_leffler_neg, rotated, stable_roots, sylvester, ALPHAS};
use hopf_core::bifurcate::{refine_on_segment, ParamPoint, ParamSystem};
use hopf_core::exprdsl::DemoSystem;
use hopf_core::fdesim::{integrate, oscillation_metric, DemoField, LinearField, SimConfig};
use hopf_core::frh::{self, VerdictTag};
use hopf_core::polycore::{sector_classify, CharPoly};
use hopf_core::TolerancePolicy;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEGENERATE: [f64; 2] = [3.817533638, -4.170716050];

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn demo() -> ParamSystem {
    ParamSystem::demo(&DemoSystem::default())
}

fn binary(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_hopf-frh"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn closed_form_regression() -> Outcome {
    let sys = demo();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mu = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let m = sys.minors(&mu).map_err(|e| e.to_string())?;
        let a = sys.charpoly(&mu).map_err(|e| e.to_string())?;
        let cf = closed_form([a.coeffs()[0], a.coeffs()[1], a.coeffs()[2]]);
        let pairs = [
            (m.nabla[0], cf.nabla[0]),
            (m.nabla[1], cf.nabla[1]),
            (m.nabla[2], cf.nabla[2]),
            (m.nabla_tilde.unwrap_or(f64::NAN), cf.tilde),
        ];
        for (got, want) in pairs {
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    let detail = format!("worst relative error {worst:.2e} over 20 points, limit 1e-9");
    if worst <= 1e-9 { Ok(detail) } else { Err(detail) }
}

fn degenerate_point() -> Outcome {
    let out = binary(&["degenerate", "--guess", "3.8,-4.2"])?;
    let field = |prefix: &str| {
        out.lines()
            .find_map(|l| l.strip_prefix(prefix))
            .map(str::to_string)
            .ok_or_else(|| format!("no `{prefix}` line in report"))
    };
    let mu: Vec<f64> = field("mu: ")?
        .split(", ")
        .map(|p| p.rsplit(" = ").next().unwrap_or("").parse().unwrap_or(f64::NAN))
        .collect();
    let last = field("nabla3 = ")?;
    let (value, threshold) = last
        .split_once(" (threshold ")
        .ok_or("malformed nabla3 line")?;
    let value: f64 = value.parse().map_err(|_| "nabla3 value")?;
    let threshold: f64 = threshold.trim_end_matches(')').parse().map_err(|_| "threshold")?;
    let hessian = field("hessian: ")?;
    let close = mu.len() == 2 && mu.iter().zip(DEGENERATE).all(|(x, y)| (x - y).abs() <= 1e-4);
    let on_surface = value.abs() <= threshold;
    let detail = format!(
        "mu0 = ({:.9}, {:.9}), |nabla3| = {:.1e} (threshold {threshold:.0e}), hessian {hessian}, expected NegDefinite",
        mu[0], mu[1], value.abs()
    );
    if close && on_surface && hessian == "NegDefinite" { Ok(detail) } else { Err(detail) }
}

fn planted_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let oracle_tol = TolerancePolicy { arg: 1e-5, ..tol() };
    let (mut worst_r0, mut worst_root) = (0.0_f64, 0.0_f64);
    for case in 0..100 {
        let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
        let r0 = rng.gen_range(0.1..10.0);
        let extra = rng.gen_range(0..=2);
        let mut roots = stable_roots(&mut rng, extra, alpha);
        let pair = Complex64::from_polar(r0, alpha * PI / 2.0);
        roots.extend([pair, pair.conj()]);
        let p = CharPoly::new(expand(&roots)).map_err(|e| e.to_string())?;
        let v = frh::classify(&p, alpha, &tol()).map_err(|e| format!("case {case}: {e}"))?;
        if v.tag != VerdictTag::HopfCandidate {
            return Err(format!("case {case}: verdict {:?}", v.tag));
        }
        let r = v.critical_modulus.ok_or("no r0")?;
        worst_r0 = worst_r0.max((r - r0).abs() / r0);
        let found = p.roots().map_err(|e| e.to_string())?;
        let on_line: Vec<_> = found
            .iter()
            .filter(|f| frh_sector_critical(f, alpha, &oracle_tol))
            .collect();
        if on_line.len() != 2 {
            return Err(format!("case {case}: oracle finds {} roots on the critical line", on_line.len()));
        }
        for z in frh::critical_roots(&v, alpha).map_err(|e| e.to_string())? {
            let best = on_line
                .iter()
                .map(|f| (f.value() - z.value()).norm())
                .fold(f64::INFINITY, f64::min);
            worst_root = worst_root.max(best / r0.max(1.0));
        }
    }
    let detail = format!(
        "100 cases (degree 2..4): worst r0 error {worst_r0:.1e} (limit 1e-6), worst root distance {worst_root:.1e} (limit 1e-6)"
    );
    if worst_r0 <= 1e-6 && worst_root <= 1e-6 { Ok(detail) } else { Err(detail) }
}

fn frh_sector_critical(r: &hopf_core::polycore::ComplexRoot, alpha: f64, t: &TolerancePolicy) -> bool {
    hopf_core::polycore::sector_of(r, alpha, t) == hopf_core::polycore::Sector::Critical
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut checked, mut stable, mut disagreements) = (0, 0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
        let p = CharPoly::new(common::random_coeffs(&mut rng, n, 5.0)).map_err(|e| e.to_string())?;
        let roots = p.roots().map_err(|e| e.to_string())?;
        let edge = alpha * PI / 2.0;
        if roots.iter().any(|r| (r.argument.abs() - edge).abs() < 1e-5) {
            continue;
        }
        checked += 1;
        let oracle = sector_classify(&roots, alpha, &tol()).map_err(|e| e.to_string())?;
        let says_stable = frh::classify(&p, alpha, &tol()).map(|v| v.tag) == Ok(VerdictTag::Stable);
        stable += says_stable as usize;
        disagreements += (says_stable != oracle.all_stable()) as usize;
    }
    let detail = format!("{checked} samples kept ({stable} stable), {disagreements} disagreements");
    if disagreements == 0 { Ok(detail) } else { Err(detail) }
}

fn resultant_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
        let a = common::random_coeffs(&mut rng, n, 5.0);
        let p = CharPoly::new(a.clone()).map_err(|e| e.to_string())?;
        let m = frh::minors_of(&p, alpha).map_err(|e| e.to_string())?;
        let (abar, bbar) = rotated(&a, alpha);
        let s = sylvester(&abar, &bbar);
        let res = common::det(s.clone());
        worst = worst.max((m.last().abs() - res.abs()).abs() / hadamard(&s));
    }
    let detail = format!("worst | |nabla_n| - |Res| | / Hadamard = {worst:.1e} over 200 instances, limit 1e-7");
    if worst <= 1e-7 { Ok(detail) } else { Err(detail) }
}

fn surface_reproduction() -> Outcome {
    let dir = std::env::temp_dir().join(format!("hopf-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let csv = dir.join("surface.csv");
    binary(&[
        "scan", "--window", "0,6,-8,2", "--res", "400,400",
        "--output", csv.to_str().ok_or("path")?,
    ])?;
    let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    let rows: Vec<[f64; 2]> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut cols = l.split(',').map(|c| c.parse::<f64>().unwrap_or(f64::NAN));
            [cols.next().unwrap_or(f64::NAN), cols.next().unwrap_or(f64::NAN)]
        })
        .collect();
    if rows.is_empty() {
        return Err("scan emitted no points".into());
    }
    let sys = demo();
    let mut failures = 0;
    for mu in &rows {
        let ok = sys.minors(mu).map(|m| m.on_surface(&tol())).unwrap_or(false);
        failures += (!ok) as usize;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let edge = 1.1 * PI / 2.0;
    let mut oracle_misses = 0;
    for _ in 0..20 {
        let mu = rows[rng.gen_range(0..rows.len())];
        let roots = sys.charpoly(&mu).and_then(|p| Ok(p.roots()?)).map_err(|e| e.to_string())?;
        let on = roots.iter().filter(|r| (r.argument.abs() - edge).abs() <= 1e-5).count();
        let rest = roots.iter().filter(|r| (r.argument.abs() - edge).abs() > 1e-5).all(|r| r.argument.abs() > edge);
        oracle_misses += !(on == 2 && rest) as usize;
    }
    let detail = format!(
        "{} points; {failures} fail re-validation; {oracle_misses} of 20 sampled lack exactly one critical pair",
        rows.len()
    );
    if failures == 0 && oracle_misses == 0 { Ok(detail) } else { Err(detail) }
}

fn simulator_validation() -> Outcome {
    let relax = |h: f64| -> Result<f64, String> {
        let cfg = SimConfig { alpha: 1.5, x0: vec![1.0], v0: None, horizon: 1.0, step: h };
        let tr = integrate(&LinearField { dim: 1, rate: -1.0 }, &cfg).map_err(|e| e.to_string())?;
        Ok((tr.states.last().ok_or("empty")?[0] - mittag_leffler_neg(1.5, 1.0)).abs())
    };
    let err = relax(1e-3)?;
    let ladder = [0.02, 0.01, 0.005, 0.0025].map(relax);
    let ladder: Vec<f64> = ladder.into_iter().collect::<Result<_, _>>()?;
    let orders: Vec<f64> = ladder.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let converges = orders.iter().all(|&o| o >= 1.0);

    let at = |m: f64| ParamPoint::new(vec!["mu1".into(), "mu2".into()], vec![m, -2.0]).unwrap();
    let star = refine_on_segment(&demo(), &at(2.5), &at(3.1), &tol())
        .map_err(|e| e.to_string())?
        .mu_star
        .values()[0];
    let run = |mu1: f64| -> Result<(f64, f64), String> {
        let field = DemoField { system: DemoSystem::default(), mu: [mu1, -2.0] };
        let cfg = SimConfig { alpha: 1.1, x0: vec![0.1; 3], v0: None, horizon: 200.0, step: 0.05 };
        let tr = integrate(&field, &cfg).map_err(|e| e.to_string())?;
        let last = tr.states.last().ok_or("empty")?;
        let norm = last.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok((norm, oscillation_metric(&tr, 0.25).map_err(|e| e.to_string())?))
    };
    let (stable_norm, stable_metric) = run(star + 0.1)?;
    let (_, unstable_metric) = run(star - 0.1)?;
    let ratio = unstable_metric / stable_metric;
    let detail = format!(
        "ML error {err:.1e} (limit 1e-3); observed orders {orders:.2?}; mu1* = {star:.9}; \
         stable |x(200)| = {stable_norm:.1e}; metric ratio {ratio:.3e} (limit 10)"
    );
    if err <= 1e-3 && converges && stable_norm < 1e-2 && ratio >= 10.0 { Ok(detail) } else { Err(detail) }
}

fn first_minor_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let a1 = rng.gen_range(-100.0..100.0);
        let alpha = rng.gen_range(1.0001..1.9999);
        let p = CharPoly::new(vec![a1]).map_err(|e| e.to_string())?;
        let m = frh::minors_of(&p, alpha).map_err(|e| e.to_string())?;
        let want = a1 * (alpha * PI / 2.0).sin();
        worst = worst.max((m.nabla[0] - want).abs() / want.abs().max(1.0));
    }
    let detail = format!("worst mixed error {worst:.1e} over 10^4 samples, limit 1e-12");
    if worst <= 1e-12 { Ok(detail) } else { Err(detail) }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form minors of the demo network", 1, closed_form_regression),
        ("degenerate point of the demo surface", 5, degenerate_point),
        ("critical modulus of planted pairs", 10, planted_recovery),
        ("stable verdict agrees with root oracle", 30, oracle_agreement),
        ("last minor equals the resultant", 10, resultant_equivalence),
        ("bifurcation curve of the demo network", 60, surface_reproduction),
        ("simulator against reference and criterion", 60, simulator_validation),
        ("first minor identity", 1, first_minor_identity),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failed += (!ok) as usize;
        println!(
            "{} {}. {name}: {detail} [{:.2}s of {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
