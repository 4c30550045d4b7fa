//! Monic real polynomials and the eigenvalue oracle.
//!
//! The root finder is an Aberth-Ehrlich simultaneous iteration. It is kept
//! independent of the minor-based criterion in [`crate::frh`] so the two can
//! be checked against each other.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::{check_alpha, TolerancePolicy};

/// Largest degree accepted by the root finder.
pub const MAX_ROOT_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial must have degree at least 1")]
    EmptyPolynomial,
    #[error("coefficient a{index} is not finite ({value})")]
    NonFiniteCoefficient { index: usize, value: f64 },
    #[error("leading coefficient must be exactly 1 (got {0}); non-monic input is rejected")]
    NotMonic(f64),
    #[error("degree {0} exceeds the root finder limit of {MAX_ROOT_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("polynomial evaluation overflowed at z = {0}")]
    Overflow(Complex64),
    #[error("root iteration did not settle within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    AlphaOutOfRange(f64),
}

/// `λ^n + a_1 λ^{n-1} + ... + a_n` with real, finite coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPoly {
    coeffs: Vec<f64>,
}

impl CharPoly {
    /// Builds a polynomial from `a_1..a_n`; the leading `1` is implicit.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::EmptyPolynomial);
        }
        if let Some((i, &v)) = coeffs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(PolyError::NonFiniteCoefficient {
                index: i + 1,
                value: v,
            });
        }
        Ok(Self { coeffs })
    }

    /// Builds a polynomial from the full coefficient list `[1, a_1, .., a_n]`.
    pub fn from_full(full: &[f64]) -> Result<Self, PolyError> {
        match full.split_first() {
            None => Err(PolyError::EmptyPolynomial),
            Some((&lead, rest)) if lead != 1.0 => {
                if rest.is_empty() {
                    Err(PolyError::EmptyPolynomial)
                } else {
                    Err(PolyError::NotMonic(lead))
                }
            }
            Some((_, rest)) => Self::new(rest.to_vec()),
        }
    }

    /// Expands `Π (λ - r_k)`. The root set must be closed under conjugation
    /// for the result to be real; imaginary residue is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self, PolyError> {
        let mut full = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            full.push(Complex64::new(0.0, 0.0));
            for i in (1..full.len()).rev() {
                let prev = full[i - 1];
                full[i] -= r * prev;
            }
        }
        Self::new(full[1..].iter().map(|c| c.re).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_1..a_n`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `a_j` with `a_0 = 1`.
    pub fn coeff(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.coeffs[j - 1]
        }
    }

    /// Horner evaluation of `z^n + a_1 z^{n-1} + ... + a_n`.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64, PolyError> {
        let v = self
            .coeffs
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &a| acc * z + a);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(PolyError::Overflow(z))
        }
    }

    /// All roots with multiplicity, in conjugate-paired order, using the default budget.
    pub fn roots(&self) -> Result<Vec<ComplexRoot>, PolyError> {
        RootFinder::default().roots(self)
    }

    /// Residual bound `1e-8 * (1 + Σ|a_i|) * max(1, |z|)^n` the oracle guarantees.
    pub fn residual_bound(&self, z: Complex64) -> f64 {
        let l1: f64 = self.coeffs.iter().map(|a| a.abs()).sum();
        1e-8 * (1.0 + l1) * z.norm().max(1.0).powi(self.degree() as i32)
    }
}

/// A root stored with its polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexRoot {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// Principal argument in `(-π, π]`.
    pub argument: f64,
}

impl ComplexRoot {
    pub fn new(z: Complex64) -> Self {
        // -0.0 would put negative reals at -π
        let im = if z.im == 0.0 { 0.0 } else { z.im };
        Self {
            re: z.re,
            im,
            modulus: z.re.hypot(im),
            argument: im.atan2(z.re),
        }
    }

    pub fn from_polar(modulus: f64, argument: f64) -> Self {
        Self::new(Complex64::from_polar(modulus, argument))
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Aberth-Ehrlich iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct RootFinder {
    pub max_iterations: usize,
}

impl Default for RootFinder {
    fn default() -> Self {
        Self {
            max_iterations: 500,
        }
    }
}

impl RootFinder {
    pub fn roots(&self, p: &CharPoly) -> Result<Vec<ComplexRoot>, PolyError> {
        let raw = self.raw_roots(p.coeffs())?;
        let paired = pair_conjugates(&raw);
        for z in &paired {
            let r = p.evaluate(*z)?.norm();
            if !(r <= p.residual_bound(*z)) {
                return Err(PolyError::ConvergenceFailure {
                    iterations: self.max_iterations,
                });
            }
        }
        Ok(paired.into_iter().map(ComplexRoot::new).collect())
    }

    /// Unpaired roots of the monic polynomial with lower coefficients `tail`.
    pub fn raw_roots(&self, tail: &[f64]) -> Result<Vec<Complex64>, PolyError> {
        let n = tail.len();
        if n == 0 {
            return Err(PolyError::EmptyPolynomial);
        }
        if n > MAX_ROOT_DEGREE {
            return Err(PolyError::DegreeTooLarge(n));
        }
        if n == 1 {
            return Ok(vec![Complex64::new(-tail[0], 0.0)]);
        }

        let radius = 1.0 + tail.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let jitter = 0.3 * ((k as f64 * 0.618_033_988_75).fract());
                let theta = (2.0 * PI * k as f64 + jitter) / n as f64 + 0.4;
                Complex64::from_polar(radius, theta)
            })
            .collect();
        let mut done = vec![false; n];

        for _ in 0..self.max_iterations {
            let mut settled = true;
            for k in 0..n {
                if done[k] {
                    continue;
                }
                let (p, dp, bound) = horner_with_derivative(tail, z[k]);
                if p == Complex64::new(0.0, 0.0) || p.norm() <= 4.0 * f64::EPSILON * bound {
                    done[k] = true;
                    continue;
                }
                settled = false;
                if dp.norm() == 0.0 {
                    let nudge = Complex64::new(1e-7, 1e-7) * z[k].norm().max(1.0);
                    z[k] += nudge;
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| (z[k] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                let step = if step.re.is_finite() && step.im.is_finite() {
                    step
                } else {
                    ratio
                };
                z[k] -= step;
                if step.norm() <= 2.0 * f64::EPSILON * z[k].norm() {
                    done[k] = true;
                }
            }
            if settled {
                break;
            }
        }
        Ok(z)
    }
}

/// Value, derivative and the rounding-scale bound `Σ|a_i||z|^{n-i}` in one pass.
fn horner_with_derivative(tail: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 1.0;
    let az = z.norm();
    for &a in tail {
        dp = dp * z + p;
        p = p * z + a;
        bound = bound * az + a.abs();
    }
    (p, dp, bound)
}

/// Matches each root with its nearest conjugate partner and symmetrizes.
/// Roots closer to their own mirror image than to any partner become real.
/// Output: real roots ascending, then pairs `(z, z̄)` with `Im z > 0`.
fn pair_conjugates(raw: &[Complex64]) -> Vec<Complex64> {
    let mut pool: Vec<Complex64> = raw.to_vec();
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    while !pool.is_empty() {
        let (idx, _) = pool
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.im.abs().total_cmp(&b.1.im.abs()))
            .expect("non-empty pool");
        let z = pool.swap_remove(idx);
        let partner = pool
            .iter()
            .enumerate()
            .map(|(j, w)| (j, (w - z.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match partner {
            Some((j, dist)) if dist < 2.0 * z.im.abs() => {
                let w = pool.swap_remove(j);
                let avg = (z + w.conj()) * 0.5;
                pairs.push(Complex64::new(avg.re, avg.im.abs()));
            }
            _ => reals.push(z.re),
        }
    }
    reals.sort_by(f64::total_cmp);
    pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<Complex64> = reals.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    for p in pairs {
        out.push(p);
        out.push(p.conj());
    }
    out
}

/// Root counts per stability sector of the order-`alpha` system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SectorVerdict {
    pub n_stable: usize,
    pub n_critical: usize,
    pub n_unstable: usize,
    pub n_zero: usize,
}

impl SectorVerdict {
    pub fn all_stable(&self) -> bool {
        self.n_critical == 0 && self.n_unstable == 0 && self.n_zero == 0
    }
}

/// Sector membership of a single root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sector {
    Stable,
    Critical,
    Unstable,
    Zero,
}

pub fn sector_of(root: &ComplexRoot, alpha: f64, tol: &TolerancePolicy) -> Sector {
    if root.modulus < tol.zero {
        return Sector::Zero;
    }
    let boundary = alpha * PI / 2.0;
    let arg = root.argument.abs();
    if (arg - boundary).abs() <= tol.arg {
        Sector::Critical
    } else if arg > boundary {
        Sector::Stable
    } else {
        Sector::Unstable
    }
}

/// Counts roots in the stable sector, on the critical line and in the unstable sector.
pub fn sector_classify(
    roots: &[ComplexRoot],
    alpha: f64,
    tol: &TolerancePolicy,
) -> Result<SectorVerdict, PolyError> {
    if !check_alpha(alpha) {
        return Err(PolyError::AlphaOutOfRange(alpha));
    }
    let mut v = SectorVerdict::default();
    for r in roots {
        match sector_of(r, alpha, tol) {
            Sector::Stable => v.n_stable += 1,
            Sector::Critical => v.n_critical += 1,
            Sector::Unstable => v.n_unstable += 1,
            Sector::Zero => v.n_zero += 1,
        }
    }
    Ok(v)
}
