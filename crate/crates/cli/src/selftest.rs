//! Quick randomized checks of the criterion against the root oracle.

use std::f64::consts::PI;
use std::process::ExitCode;

use anyhow::Result;
use hopf_core::bifurcate::ParamSystem;
use hopf_core::exprdsl::DemoSystem;
use hopf_core::frh::{self, FrhError, VerdictTag};
use hopf_core::polycore::{sector_classify, CharPoly};
use hopf_core::TolerancePolicy;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHAS: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

struct Check {
    name: &'static str,
    failures: usize,
    cases: usize,
}

fn first_minor(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut failures = 0;
    for _ in 0..10_000 {
        let a1 = rng.gen_range(-10.0..10.0);
        let alpha = rng.gen_range(1.0001..1.9999);
        let m = frh::minors_of(&CharPoly::new(vec![a1])?, alpha)?;
        let expected = a1 * (alpha * PI / 2.0).sin();
        if (m.nabla[0] - expected).abs() > 1e-12 * expected.abs().max(1.0) {
            failures += 1;
        }
    }
    Ok(Check { name: "first minor identity", failures, cases: 10_000 })
}

fn oracle_agreement(rng: &mut ChaCha8Rng, tol: &TolerancePolicy) -> Result<Check> {
    let (mut failures, mut cases) = (0, 0);
    for _ in 0..500 {
        let n = rng.gen_range(2..=6);
        let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let p = CharPoly::new(coeffs)?;
        let roots = p.roots()?;
        let edge = alpha * PI / 2.0;
        if roots.iter().any(|r| (r.argument.abs() - edge).abs() < 1e-5 || r.modulus < 1e-5) {
            continue;
        }
        let stable_roots = sector_classify(&roots, alpha, tol)?.all_stable();
        let stable_criterion = match frh::classify(&p, alpha, tol) {
            Ok(v) => v.tag == VerdictTag::Stable,
            Err(FrhError::DegenerateMinor { .. }) => false,
            Err(e) => return Err(e.into()),
        };
        cases += 1;
        if stable_roots != stable_criterion {
            failures += 1;
        }
    }
    Ok(Check { name: "stable verdict matches root oracle", failures, cases })
}

fn planted_pair(rng: &mut ChaCha8Rng, tol: &TolerancePolicy) -> Result<(Check, Check)> {
    let (mut recovered, mut identity) = (0, 0);
    for _ in 0..100 {
        let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
        let edge = alpha * PI / 2.0;
        let r0 = rng.gen_range(0.1..10.0);
        let mut roots = vec![Complex64::from_polar(r0, edge), Complex64::from_polar(r0, -edge)];
        let extra = rng.gen_range(0..=2);
        while roots.len() < 2 + extra {
            let modulus = rng.gen_range(0.3..4.0);
            if 2 + extra - roots.len() >= 2 && rng.gen_bool(0.6) {
                let z = Complex64::from_polar(modulus, rng.gen_range(edge + 0.05..PI - 0.05));
                roots.extend([z, z.conj()]);
            } else {
                roots.push(Complex64::new(-modulus, 0.0));
            }
        }
        let p = CharPoly::from_roots(&roots)?;
        let m = frh::minors_of(&p, alpha)?;
        let ok = frh::verdict_from_minors(&m, tol)
            .ok()
            .filter(|v| v.tag == VerdictTag::HopfCandidate)
            .and_then(|v| v.critical_modulus)
            .is_some_and(|r| (r - r0).abs() <= 1e-6 * r0);
        if !ok {
            recovered += 1;
        }
        let n = m.n();
        let residual = m.nabla_at(n - 1) * r0 + m.nabla_tilde.unwrap_or(0.0);
        let scale = m.scale[n - 2].max(1.0) * r0 + m.tilde_scale.unwrap_or(0.0);
        if residual.abs() > 1e-8 * scale.max(1.0) {
            identity += 1;
        }
    }
    Ok((
        Check { name: "planted critical pair recovered", failures: recovered, cases: 100 },
        Check { name: "subresultant identity at critical points", failures: identity, cases: 100 },
    ))
}

fn demo_coefficient() -> Result<Check> {
    let sys = ParamSystem::demo(&DemoSystem::default());
    let a1 = sys.charpoly(&[2.0, 2.0])?.coeffs()[0];
    Ok(Check { name: "demo a1 at (2, 2) is 8", failures: usize::from(a1 != 8.0), cases: 1 })
}

pub fn run(seed: u64) -> Result<ExitCode> {
    let tol = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (planted, identity) = planted_pair(&mut rng, &tol)?;
    let checks = [
        first_minor(&mut rng)?,
        oracle_agreement(&mut rng, &tol)?,
        planted,
        identity,
        demo_coefficient()?,
    ];
    let mut all = true;
    for c in &checks {
        let status = if c.failures == 0 { "PASS" } else { "FAIL" };
        all &= c.failures == 0;
        println!("{status} {} ({} of {} cases failed)", c.name, c.failures, c.cases);
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
