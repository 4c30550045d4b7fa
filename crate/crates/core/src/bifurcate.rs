//! Parameter-space machinery for the bifurcation surface
//! `BS = { μ : ∇_n(μ) = 0, ∇_p(μ) > 0 (p < n), ∇̃(μ) < 0 }`.
//!
//! Grid scans detect sign changes of `∇_n` along grid edges whose endpoints
//! satisfy the side conditions, then refine each crossing by bisection.
//! Transversality uses the sufficient conditions on the gradient and Hessian
//! of `∇_n`, both by central finite differences.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exprdsl::{
    self, validate_param_names, BoundExpr, DemoSystem, ExprError, ALPHA, DEMO_COEFFICIENTS,
    DEMO_PARAMS,
};
use crate::frh::{self, FrhError, MinorSequence, StabilityVerdict, VerdictTag};
use crate::polycore::{CharPoly, ComplexRoot, PolyError};
use crate::{check_alpha, TolerancePolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifurcateError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Frh(#[from] FrhError),
    #[error("expected {expected} parameter values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter `{name}` has non-finite value {value}")]
    NonFiniteParam { name: String, value: f64 },
    #[error("parameter name `{0}` is not unique")]
    DuplicateParam(String),
    #[error("unknown axis `{0}`")]
    AxisUnknown(String),
    #[error("scan window has zero or negative extent: [{x0}, {x1}] x [{y0}, {y1}]")]
    WindowDegenerate { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("grid resolution must be at least 2 x 2, got {0} x {1}")]
    ResolutionTooSmall(usize, usize),
    #[error("∇_n does not change sign between the segment endpoints ({a:e}, {b:e})")]
    NoSignChange { a: f64, b: f64 },
    #[error("side condition (∇_p > 0 for p < n, ∇̃ < 0) fails at segment parameter {s}")]
    SideConditionViolated { s: f64 },
    #[error("|∇_n| = {value:e} exceeds the surface threshold {threshold:e}")]
    NotOnSurface { value: f64, threshold: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NewtonDiverged { iterations: usize, gradient_norm: f64 },
    #[error("stationary point found but |∇_n| = {value:e} exceeds {threshold:e}")]
    StationaryOffSurface { value: f64, threshold: f64 },
    #[error("degenerate point search needs exactly two parameters, got {0}")]
    NotTwoParameters(usize),
}

impl From<PolyError> for BifurcateError {
    fn from(e: PolyError) -> Self {
        BifurcateError::Frh(FrhError::Poly(e))
    }
}

/// Named parameter values `μ_1..μ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamPoint {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamPoint {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self, BifurcateError> {
        if names.len() != values.len() {
            return Err(BifurcateError::DimensionMismatch {
                expected: names.len(),
                got: values.len(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(BifurcateError::DuplicateParam(name.clone()));
            }
            if !values[i].is_finite() {
                return Err(BifurcateError::NonFiniteParam {
                    name: name.clone(),
                    value: values[i],
                });
            }
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.values[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            names: self.names.clone(),
            values,
        }
    }
}

/// Coefficient functions `a_i(alpha, mu)` of a parameterized characteristic polynomial.
#[derive(Debug, Clone)]
pub struct ParamSystem {
    alpha: f64,
    names: Vec<String>,
    coeffs: Vec<BoundExpr>,
}

impl ParamSystem {
    /// Parses and binds `a_1..a_n`. Identifiers resolve to parameters, `alpha`,
    /// or entries of `constants`, in that order.
    pub fn from_expressions(
        alpha: f64,
        names: Vec<String>,
        sources: &[String],
        constants: &HashMap<String, f64>,
    ) -> Result<Self, ExprError> {
        if !check_alpha(alpha) {
            return Err(ExprError::AlphaOutOfRange(alpha));
        }
        if sources.is_empty() {
            return Err(ExprError::Poly(PolyError::EmptyPolynomial));
        }
        validate_param_names(&names)?;
        let mut slots = names.clone();
        slots.push(ALPHA.to_string());
        let coeffs = sources
            .iter()
            .map(|s| Ok(exprdsl::parse(s)?.bind(&slots, constants)?))
            .collect::<Result<Vec<_>, ExprError>>()?;
        Ok(Self {
            alpha,
            names,
            coeffs,
        })
    }

    /// The built-in three-neuron network with parameters `mu1`, `mu2`.
    pub fn demo(demo: &DemoSystem) -> Self {
        let sources: Vec<String> = DEMO_COEFFICIENTS.iter().map(|s| s.to_string()).collect();
        Self::from_expressions(
            demo.alpha,
            DEMO_PARAMS.iter().map(|s| s.to_string()).collect(),
            &sources,
            &demo.weight_bindings(),
        )
        .expect("built-in formulas bind")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn point(&self, values: Vec<f64>) -> Result<ParamPoint, BifurcateError> {
        ParamPoint::new(self.names.clone(), values)
    }

    pub fn charpoly(&self, mu: &[f64]) -> Result<CharPoly, BifurcateError> {
        if mu.len() != self.names.len() {
            return Err(BifurcateError::DimensionMismatch {
                expected: self.names.len(),
                got: mu.len(),
            });
        }
        let mut slots = mu.to_vec();
        slots.push(self.alpha);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.eval(&slots))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ExprError::from)?;
        Ok(CharPoly::new(coeffs)?)
    }

    pub fn minors(&self, mu: &[f64]) -> Result<MinorSequence, BifurcateError> {
        Ok(frh::minors_of(&self.charpoly(mu)?, self.alpha)?)
    }

    fn nabla_n(&self, mu: &[f64]) -> Result<f64, BifurcateError> {
        Ok(self.minors(mu)?.last())
    }

    /// Hadamard bound of the full matrix, the size of `∇_n` itself near `mu`.
    /// Unlike the perturbation scale it does not collapse where `∇_n` and
    /// `∇_{n-1}` vanish together.
    pub fn magnitude(&self, mu: &[f64]) -> Result<f64, BifurcateError> {
        let rp = frh::rotate(&self.charpoly(mu)?, self.alpha)?;
        Ok(frh::hadamard_bound(frh::build_matrix(&rp).entries()))
    }
}

/// Runs the criterion at one parameter point. Bit-identical for identical inputs.
pub fn eval_criterion(
    sys: &ParamSystem,
    mu: &ParamPoint,
    tol: &TolerancePolicy,
) -> Result<(MinorSequence, StabilityVerdict), BifurcateError> {
    let m = sys.minors(mu.values())?;
    let v = frh::verdict_from_minors(&m, tol)?;
    Ok((m, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transversality {
    Transversal,
    DegenerateStationary,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    Indefinite,
    PosDefinite,
    NegDefinite,
    Semidefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub gradient: Vec<f64>,
    pub gradient_threshold: f64,
    /// Symmetrized, row-major; only computed when the gradient vanishes.
    pub hessian: Option<Vec<Vec<f64>>>,
    pub hessian_eigenvalues: Option<Vec<f64>>,
    pub hessian_verdict: Option<Definiteness>,
    pub verdict: Transversality,
}

/// A point on the bifurcation surface with its critical pair and transversality verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub mu_star: ParamPoint,
    /// Absent at degenerate points where `∇_{n-1}` also vanishes.
    pub r0: Option<f64>,
    pub critical_pair: Option<[ComplexRoot; 2]>,
    pub minors: MinorSequence,
    pub transversality: Transversality,
    pub gradient: Vec<f64>,
    pub hessian_verdict: Option<Definiteness>,
}

fn gradient_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

fn hessian_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

/// Central-difference gradient with steps `ε^{1/3} max(1, |x_i|)`.
pub fn fd_gradient<F>(f: &F, x: &[f64]) -> Result<Vec<f64>, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = gradient_step(x[i]);
            probe[i] = x[i] + h;
            let fp = f(&probe)?;
            probe[i] = x[i] - h;
            let fm = f(&probe)?;
            probe[i] = x[i];
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Central second differences with steps `ε^{1/4} max(1, |x_i|)`, symmetrized.
pub fn fd_hessian<F>(f: &F, x: &[f64]) -> Result<DMatrix<f64>, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let k = x.len();
    let h: Vec<f64> = x.iter().map(|&v| hessian_step(v)).collect();
    let f0 = f(x)?;
    let mut probe = x.to_vec();
    let mut at = |shifts: &[(usize, f64)]| {
        probe.copy_from_slice(x);
        for &(i, s) in shifts {
            probe[i] += s;
        }
        f(&probe)
    };
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        let fp = at(&[(i, h[i])])?;
        let fm = at(&[(i, -h[i])])?;
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = at(&[(i, h[i]), (j, h[j])])?;
            let fpm = at(&[(i, h[i]), (j, -h[j])])?;
            let fmp = at(&[(i, -h[i]), (j, h[j])])?;
            let fmm = at(&[(i, -h[i]), (j, -h[j])])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Eigenvalue-sign classification with threshold `rel * max|eigenvalue|`.
pub fn definiteness(h: &DMatrix<f64>, rel: f64) -> (Definiteness, Vec<f64>) {
    let sym = (h + h.transpose()) * 0.5;
    let eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    let norm = eig.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let t = rel * norm;
    let pos = eig.iter().filter(|&&e| e > t).count();
    let neg = eig.iter().filter(|&&e| e < -t).count();
    let d = if norm == 0.0 {
        Definiteness::Semidefinite
    } else if pos == eig.len() {
        Definiteness::PosDefinite
    } else if neg == eig.len() {
        Definiteness::NegDefinite
    } else if pos > 0 && neg > 0 {
        Definiteness::Indefinite
    } else {
        Definiteness::Semidefinite
    };
    (d, eig)
}

/// Transversality of an arbitrary scalar field at `x`; `scale` sets the gradient threshold.
pub fn transversality_of<F>(
    f: &F,
    x: &[f64],
    scale: f64,
    tol: &TolerancePolicy,
) -> Result<TransversalityReport, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let gradient = fd_gradient(f, x)?;
    let gradient_threshold = tol.gradient_rel * scale.max(1.0);
    let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > gradient_threshold {
        return Ok(TransversalityReport {
            gradient,
            gradient_threshold,
            hessian: None,
            hessian_eigenvalues: None,
            hessian_verdict: None,
            verdict: Transversality::Transversal,
        });
    }
    let h = fd_hessian(f, x)?;
    let (d, eig) = definiteness(&h, tol.hessian_rel);
    let verdict = match d {
        Definiteness::Indefinite => Transversality::Transversal,
        Definiteness::PosDefinite | Definiteness::NegDefinite => {
            Transversality::DegenerateStationary
        }
        Definiteness::Semidefinite => Transversality::Inconclusive,
    };
    Ok(TransversalityReport {
        gradient,
        gradient_threshold,
        hessian: Some(
            h.row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        ),
        hessian_eigenvalues: Some(eig),
        hessian_verdict: Some(d),
        verdict,
    })
}

/// Transversality of `∇_n` at a surface point; the gradient threshold scales with
/// [`ParamSystem::magnitude`] there.
pub fn transversality(
    sys: &ParamSystem,
    mu_star: &ParamPoint,
    tol: &TolerancePolicy,
) -> Result<TransversalityReport, BifurcateError> {
    let m = sys.minors(mu_star.values())?;
    let threshold = tol.det_threshold(m.last_scale());
    if m.last().abs() > 10.0 * threshold {
        return Err(BifurcateError::NotOnSurface {
            value: m.last(),
            threshold: 10.0 * threshold,
        });
    }
    let f = |x: &[f64]| sys.nabla_n(x);
    transversality_of(&f, mu_star.values(), sys.magnitude(mu_star.values())?, tol)
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Bisection budget: `2^-41 < 1e-12` of the segment length.
const BISECTION_STEPS: usize = 41;

/// Locates the crossing of `∇_n = 0` between two points with opposite signs.
pub fn refine_on_segment(
    sys: &ParamSystem,
    mu_a: &ParamPoint,
    mu_b: &ParamPoint,
    tol: &TolerancePolicy,
) -> Result<BifurcationPoint, BifurcateError> {
    let (a, b) = (mu_a.values(), mu_b.values());
    let ma = sys.minors(a)?;
    let mb = sys.minors(b)?;
    refine_between(sys, mu_a, a, b, &ma, &mb, tol)
}

fn refine_between(
    sys: &ParamSystem,
    template: &ParamPoint,
    a: &[f64],
    b: &[f64],
    ma: &MinorSequence,
    mb: &MinorSequence,
    tol: &TolerancePolicy,
) -> Result<BifurcationPoint, BifurcateError> {
    let (va, vb) = (ma.last(), mb.last());
    if !(va * vb < 0.0) {
        return Err(BifurcateError::NoSignChange { a: va, b: vb });
    }
    if !ma.side_conditions_hold(tol) {
        return Err(BifurcateError::SideConditionViolated { s: 0.0 });
    }
    if !mb.side_conditions_hold(tol) {
        return Err(BifurcateError::SideConditionViolated { s: 1.0 });
    }

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let v = sys.nabla_n(&lerp(a, b, mid))?;
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (v > 0.0) == (va > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let mu = lerp(a, b, s);
    let m = sys.minors(&mu)?;
    if !m.side_conditions_hold(tol) {
        return Err(BifurcateError::SideConditionViolated { s });
    }
    let threshold = tol.det_threshold(m.last_scale());
    if m.last().abs() > threshold {
        return Err(BifurcateError::NotOnSurface {
            value: m.last(),
            threshold,
        });
    }
    let verdict = frh::verdict_from_minors(&m, tol)?;
    let pair = frh::critical_roots(&verdict, sys.alpha())?;
    let mu_star = template.with_values(mu);
    let t = transversality(sys, &mu_star, tol)?;
    Ok(BifurcationPoint {
        mu_star,
        r0: verdict.critical_modulus,
        critical_pair: Some(pair),
        minors: m,
        transversality: t.verdict,
        gradient: t.gradient,
        hessian_verdict: t.hessian_verdict,
    })
}

/// Axis-aligned scan rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    fn validate(&self) -> Result<(), BifurcateError> {
        let ok = [self.x0, self.x1, self.y0, self.y1]
            .iter()
            .all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0;
        if ok {
            Ok(())
        } else {
            Err(BifurcateError::WindowDegenerate {
                x0: self.x0,
                x1: self.x1,
                y0: self.y0,
                y1: self.y1,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRequest {
    /// Values for every parameter; the two axes are overwritten on the grid.
    pub base: ParamPoint,
    pub axes: [String; 2],
    pub window: Window,
    pub resolution: (usize, usize),
}

/// A sign-changing edge whose refinement failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedEdge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub error: BifurcateError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    /// Refined points in grid order: rows of constant `y`, then `x`, horizontal edge first.
    pub points: Vec<BifurcationPoint>,
    pub rejected: Vec<RejectedEdge>,
    /// Grid nodes where the coefficients or the minors could not be evaluated.
    pub failed_nodes: usize,
}

/// Scans the window for crossings of the bifurcation surface.
///
/// Runs on the current rayon pool; results are merged in grid order.
pub fn grid_scan(
    sys: &ParamSystem,
    req: &ScanRequest,
    tol: &TolerancePolicy,
) -> Result<ScanOutcome, BifurcateError> {
    req.window.validate()?;
    let (m1, m2) = req.resolution;
    if m1 < 2 || m2 < 2 {
        return Err(BifurcateError::ResolutionTooSmall(m1, m2));
    }
    if req.base.values().len() != sys.param_names().len() {
        return Err(BifurcateError::DimensionMismatch {
            expected: sys.param_names().len(),
            got: req.base.values().len(),
        });
    }
    let axis = |name: &str| {
        req.base
            .index_of(name)
            .ok_or_else(|| BifurcateError::AxisUnknown(name.to_string()))
    };
    let (ix, iy) = (axis(&req.axes[0])?, axis(&req.axes[1])?);
    if ix == iy {
        return Err(BifurcateError::AxisUnknown(req.axes[1].clone()));
    }
    let w = req.window;
    let node_mu = |i: usize, j: usize| {
        let mut v = req.base.values().to_vec();
        v[ix] = w.x0 + (w.x1 - w.x0) * i as f64 / (m1 - 1) as f64;
        v[iy] = w.y0 + (w.y1 - w.y0) * j as f64 / (m2 - 1) as f64;
        v
    };

    let nodes: Vec<Option<MinorSequence>> = (0..m1 * m2)
        .into_par_iter()
        .map(|idx| sys.minors(&node_mu(idx % m1, idx / m1)).ok())
        .collect();
    let failed_nodes = nodes.iter().filter(|n| n.is_none()).count();
    let node = |i: usize, j: usize| nodes[j * m1 + i].as_ref();

    let mut edges = Vec::new();
    for j in 0..m2 {
        for i in 0..m1 {
            for (di, dj) in [(1, 0), (0, 1)] {
                let (i2, j2) = (i + di, j + dj);
                if i2 >= m1 || j2 >= m2 {
                    continue;
                }
                let (Some(a), Some(b)) = (node(i, j), node(i2, j2)) else {
                    continue;
                };
                if a.last() * b.last() < 0.0
                    && a.side_conditions_hold(tol)
                    && b.side_conditions_hold(tol)
                {
                    edges.push(((i, j), (i2, j2)));
                }
            }
        }
    }

    let refined: Vec<_> = edges
        .par_iter()
        .map(|&((i, j), (i2, j2))| {
            let (a, b) = (node_mu(i, j), node_mu(i2, j2));
            refine_between(
                sys,
                &req.base,
                &a,
                &b,
                node(i, j).expect("checked"),
                node(i2, j2).expect("checked"),
                tol,
            )
        })
        .collect();

    let mut points = Vec::new();
    let mut rejected = Vec::new();
    for (r, &(from, to)) in refined.into_iter().zip(&edges) {
        match r {
            Ok(p) => points.push(p),
            Err(error) => rejected.push(RejectedEdge { from, to, error }),
        }
    }
    Ok(ScanOutcome {
        points,
        rejected,
        failed_nodes,
    })
}

/// Damped Newton settings for the degenerate point search.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub damping_floor: f64,
    pub step_tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            damping_floor: 1e-8,
            step_tolerance: 1e-11,
        }
    }
}

/// Solves `grad ∇_n = 0` from `guess` and reports the Hessian verdict there.
pub fn find_degenerate(
    sys: &ParamSystem,
    guess: &ParamPoint,
    tol: &TolerancePolicy,
) -> Result<BifurcationPoint, BifurcateError> {
    find_degenerate_with(sys, guess, tol, &NewtonOptions::default())
}

pub fn find_degenerate_with(
    sys: &ParamSystem,
    guess: &ParamPoint,
    tol: &TolerancePolicy,
    opts: &NewtonOptions,
) -> Result<BifurcationPoint, BifurcateError> {
    if sys.param_names().len() != 2 {
        return Err(BifurcateError::NotTwoParameters(sys.param_names().len()));
    }
    let f = |x: &[f64]| sys.nabla_n(x);
    let mu = newton_stationary(&f, guess.values(), opts, |x| {
        Ok(tol.gradient_rel * sys.magnitude(x)?.max(1.0))
    })?;

    let m = sys.minors(&mu)?;
    let threshold = tol.det_threshold(m.last_scale());
    if m.last().abs() > threshold {
        return Err(BifurcateError::StationaryOffSurface {
            value: m.last(),
            threshold,
        });
    }
    let r0 = frh::verdict_from_minors(&m, tol)
        .ok()
        .filter(|v| v.tag == VerdictTag::HopfCandidate)
        .and_then(|v| v.critical_modulus);
    let critical_pair = r0.map(|r| {
        let half = sys.alpha() * std::f64::consts::PI / 2.0;
        [ComplexRoot::from_polar(r, half), ComplexRoot::from_polar(r, -half)]
    });
    let t = transversality_of(&f, &mu, sys.magnitude(&mu)?, tol)?;
    Ok(BifurcationPoint {
        mu_star: guess.with_values(mu),
        r0,
        critical_pair,
        minors: m,
        transversality: t.verdict,
        gradient: t.gradient,
        hessian_verdict: t.hessian_verdict,
    })
}

/// Five-point gradient, steps `ε^{0.3} max(1, |x_i|)`. The stationary point of a
/// degenerate surface is only as accurate as the cube root of the gradient error,
/// so the Newton search needs more than the plain central difference.
fn fine_gradient<F>(f: &F, x: &[f64]) -> Result<Vec<f64>, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = f64::EPSILON.powf(0.3) * x[i].abs().max(1.0);
            let mut at = |s: f64| {
                probe[i] = x[i] + s * h;
                let v = f(&probe);
                probe[i] = x[i];
                v
            };
            let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
            Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h))
        })
        .collect()
}

/// Central differences of [`fine_gradient`], symmetrized.
fn gradient_jacobian<F>(f: &F, x: &[f64]) -> Result<DMatrix<f64>, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let k = x.len();
    let mut m = DMatrix::zeros(k, k);
    let mut probe = x.to_vec();
    for j in 0..k {
        let h = gradient_step(x[j]);
        probe[j] = x[j] + h;
        let gp = fine_gradient(f, &probe)?;
        probe[j] = x[j] - h;
        let gm = fine_gradient(f, &probe)?;
        probe[j] = x[j];
        for i in 0..k {
            m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Damped Newton on `grad f = 0`. Stops when the step falls below
/// `step_tolerance`, or when the line search stalls with the gradient norm
/// under `floor(x)`.
fn newton_stationary<F, G>(
    f: &F,
    start: &[f64],
    opts: &NewtonOptions,
    floor: G,
) -> Result<Vec<f64>, BifurcateError>
where
    F: Fn(&[f64]) -> Result<f64, BifurcateError>,
    G: Fn(&[f64]) -> Result<f64, BifurcateError>,
{
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = start.to_vec();
    let mut g = fine_gradient(f, &x)?;
    for _ in 0..opts.max_iterations {
        let gn = norm(&g);
        if gn == 0.0 {
            return Ok(x);
        }
        let jac = gradient_jacobian(f, &x)?;
        let rhs = -DVector::from_column_slice(&g);
        let step = match jac.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => jac
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|_| BifurcateError::NewtonDiverged {
                    iterations: opts.max_iterations,
                    gradient_norm: gn,
                })?,
        };
        let mut lambda = 1.0;
        let accepted = loop {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok(gc) = fine_gradient(f, &cand) {
                if norm(&gc) < gn {
                    break Some((cand, gc));
                }
            }
            lambda *= 0.5;
            if lambda < opts.damping_floor {
                break None;
            }
        };
        match accepted {
            Some((cand, gc)) => {
                let moved = lambda * step.norm();
                x = cand;
                g = gc;
                if moved <= opts.step_tolerance * (1.0 + norm(&x)) {
                    return Ok(x);
                }
            }
            None if gn <= floor(&x)? => return Ok(x),
            None => {
                return Err(BifurcateError::NewtonDiverged {
                    iterations: opts.max_iterations,
                    gradient_norm: gn,
                })
            }
        }
    }
    if norm(&g) <= floor(&x)? {
        Ok(x)
    } else {
        Err(BifurcateError::NewtonDiverged {
            iterations: opts.max_iterations,
            gradient_norm: norm(&g),
        })
    }
}
