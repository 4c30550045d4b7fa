//! Fractional-order Routh-Hurwitz matrix and the minor-based Hopf criterion.
//!
//! For `f(λ) = λ^n + a_1 λ^{n-1} + ... + a_n` and order `alpha`, evaluating `f`
//! on the ray `r * exp(i*alpha*pi/2)` splits into
//!
//! ```text
//! f1(r) = Σ ā_j r^{n-j},  ā_j = a_j sin((n-j) alpha pi / 2)   (imaginary part)
//! f2(r) = Σ b̄_j r^{n-j},  b̄_j = a_j cos((n-j) alpha pi / 2)   (real part)
//! ```
//!
//! The `2n x 2n` matrix interleaves shifted copies of both coefficient rows.
//! All leading even-order minors positive means every root lies in the stable
//! sector; `∇_n = 0` with the lower minors positive and `∇̃ < 0` means exactly
//! one conjugate pair sits on the critical line at modulus `-∇̃ / ∇_{n-1}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::polycore::{CharPoly, ComplexRoot, PolyError, RootFinder};
use crate::{check_alpha, TolerancePolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrhError {
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    AlphaOutOfRange(f64),
    #[error("both ∇_n and ∇_(n-1) vanish (∇_n = {nabla_n:e}, ∇_(n-1) = {nabla_prev:e}); critical modulus undefined")]
    DegenerateMinor { nabla_n: f64, nabla_prev: f64 },
    #[error("verdict is {0:?}, not a Hopf candidate")]
    NotCritical(VerdictTag),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Imaginary/real coefficient rows of `f(r * exp(i*alpha*pi/2))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotatedPair {
    pub n: usize,
    pub alpha: f64,
    /// `ā_0..ā_n`, coefficients of the imaginary part.
    pub abar: Vec<f64>,
    /// `b̄_0..b̄_n`, coefficients of the real part.
    pub bbar: Vec<f64>,
}

pub fn rotate(p: &CharPoly, alpha: f64) -> Result<RotatedPair, FrhError> {
    if !check_alpha(alpha) {
        return Err(FrhError::AlphaOutOfRange(alpha));
    }
    let n = p.degree();
    let half = alpha * PI / 2.0;
    let mut abar = Vec::with_capacity(n + 1);
    let mut bbar = Vec::with_capacity(n + 1);
    for j in 0..n {
        let (s, c) = ((n - j) as f64 * half).sin_cos();
        abar.push(p.coeff(j) * s);
        bbar.push(p.coeff(j) * c);
    }
    abar.push(0.0);
    bbar.push(p.coeff(n));
    Ok(RotatedPair {
        n,
        alpha,
        abar,
        bbar,
    })
}

/// The `2n x 2n` interleaved matrix. Row pair `i` holds `ā` and `b̄`, shifted right by `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzMatrix {
    pub n: usize,
    entries: DMatrix<f64>,
}

impl HurwitzMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// One-based `(row, col)` access.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[(row - 1, col - 1)]
    }

    pub fn determinant(&self) -> f64 {
        self.entries.clone().lu().determinant()
    }
}

pub fn build_matrix(rp: &RotatedPair) -> HurwitzMatrix {
    let n = rp.n;
    let dim = 2 * n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..=n {
            let col = i + j;
            if col < dim {
                m[(2 * i, col)] = rp.abar[j];
                m[(2 * i + 1, col)] = rp.bbar[j];
            }
        }
    }
    HurwitzMatrix { n, entries: m }
}

/// Leading minors `∇_1..∇_n`, the auxiliary determinant `∇̃`, and their tolerance scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorSequence {
    pub nabla: Vec<f64>,
    /// Undefined for `n = 1`.
    pub nabla_tilde: Option<f64>,
    /// Perturbation scale of each determinant; see [`minors`].
    pub scale: Vec<f64>,
    pub tilde_scale: Option<f64>,
}

impl MinorSequence {
    pub fn n(&self) -> usize {
        self.nabla.len()
    }

    /// `∇_p` for `p = 0..=n`, with `∇_0 = 1`.
    pub fn nabla_at(&self, p: usize) -> f64 {
        if p == 0 {
            1.0
        } else {
            self.nabla[p - 1]
        }
    }

    fn scale_at(&self, p: usize) -> f64 {
        if p == 0 {
            1.0
        } else {
            self.scale[p - 1]
        }
    }

    pub fn last(&self) -> f64 {
        self.nabla[self.n() - 1]
    }

    pub fn last_scale(&self) -> f64 {
        self.scale[self.n() - 1]
    }

    pub fn sign(&self, p: usize, tol: &TolerancePolicy) -> Sign {
        Sign::of(self.nabla_at(p), tol.det_threshold(self.scale_at(p)))
    }

    pub fn tilde_sign(&self, tol: &TolerancePolicy) -> Option<Sign> {
        Some(Sign::of(
            self.nabla_tilde?,
            tol.det_threshold(self.tilde_scale?),
        ))
    }

    /// `∇_p > 0` for `p < n` and `∇̃ < 0`: everything but `∇_n = 0`.
    pub fn side_conditions_hold(&self, tol: &TolerancePolicy) -> bool {
        let n = self.n();
        (1..n).all(|p| self.sign(p, tol) == Sign::Positive)
            && self.tilde_sign(tol) == Some(Sign::Negative)
    }

    /// All four surface conditions, including `|∇_n|` within tolerance.
    pub fn on_surface(&self, tol: &TolerancePolicy) -> bool {
        self.sign(self.n(), tol) == Sign::Zero && self.side_conditions_hold(tol)
    }
}

/// Each determinant carries the scale `Σ_{r,q} |A_rq · adj(A)_qr|`, the
/// first-order change of `det A` when every entry is perturbed by a relative
/// amount of at most one. A minor below `τ · scale` is therefore not
/// distinguishable from zero under relative entry perturbations of size `τ`.
/// The ratio is invariant under row and column scaling, unlike the Hadamard
/// bound, which overestimates it by many orders of magnitude for large
/// coefficients or higher degree.
pub fn minors(h: &HurwitzMatrix) -> MinorSequence {
    let n = h.n;
    let m = &h.entries;
    let mut nabla = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    // each block factorized on its own: a running pivot product breaks on zero pivots
    for p in 1..=n {
        let (d, s) = determinant(m.view((0, 0), (2 * p, 2 * p)).into_owned());
        nabla.push(d);
        scale.push(s);
    }
    let (nabla_tilde, tilde_scale) = if n >= 2 {
        let rows = 2 * n - 2;
        let cols: Vec<usize> = (0..2 * n - 3).chain(std::iter::once(2 * n - 2)).collect();
        let (d, s) = determinant(DMatrix::from_fn(rows, rows, |r, q| m[(r, cols[q])]));
        (Some(d), Some(s))
    } else {
        (None, None)
    };
    MinorSequence {
        nabla,
        nabla_tilde,
        scale,
        tilde_scale,
    }
}

/// Minors straight from a polynomial.
pub fn minors_of(p: &CharPoly, alpha: f64) -> Result<MinorSequence, FrhError> {
    Ok(minors(&build_matrix(&rotate(p, alpha)?)))
}

/// Pivoted-LU determinant and its componentwise perturbation scale.
fn determinant(m: DMatrix<f64>) -> (f64, f64) {
    let k = m.nrows();
    if k == 0 {
        return (1.0, 1.0);
    }
    let det = m.clone().lu().determinant();
    (det, componentwise_scale(&m))
}

/// `Σ |A_rq adj(A)_qr|`. Up to a sign, `adj(A) = V diag(∏_{j≠i} σ_j) Uᵀ`, which
/// stays defined for singular blocks.
fn componentwise_scale(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sigma = &svd.singular_values;
    // products of all singular values but one, without dividing
    let mut others = vec![1.0; k];
    let mut prefix = 1.0;
    for i in 0..k {
        others[i] = prefix;
        prefix *= sigma[i];
    }
    let mut suffix = 1.0;
    for i in (0..k).rev() {
        others[i] *= suffix;
        suffix *= sigma[i];
    }
    let adj = v_t.transpose() * DMatrix::from_diagonal(&DVector::from_vec(others)) * u.transpose();
    let mut total = 0.0;
    for r in 0..k {
        for q in 0..k {
            total += (m[(r, q)] * adj[(q, r)]).abs();
        }
    }
    total
}

/// Product of the Euclidean row norms, an upper bound on `|det|`.
pub fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

impl Sign {
    pub fn of(value: f64, threshold: f64) -> Self {
        if value > threshold {
            Sign::Positive
        } else if value < -threshold {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictTag {
    Stable,
    HopfCandidate,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub tag: VerdictTag,
    /// `r_0 = -∇̃ / ∇_{n-1}`, present only for Hopf candidates.
    pub critical_modulus: Option<f64>,
    pub minor_signs: Vec<Sign>,
    pub tilde_sign: Option<Sign>,
}

/// Decides the verdict from precomputed minors.
pub fn verdict_from_minors(
    m: &MinorSequence,
    tol: &TolerancePolicy,
) -> Result<StabilityVerdict, FrhError> {
    let n = m.n();
    let minor_signs: Vec<Sign> = (1..=n).map(|p| m.sign(p, tol)).collect();
    let tilde_sign = m.tilde_sign(tol);
    let verdict = |tag, critical_modulus| StabilityVerdict {
        tag,
        critical_modulus,
        minor_signs: minor_signs.clone(),
        tilde_sign,
    };

    if minor_signs.iter().all(|&s| s == Sign::Positive) {
        return Ok(verdict(VerdictTag::Stable, None));
    }
    if n >= 2 && minor_signs[n - 1] == Sign::Zero {
        if m.sign(n - 1, tol) == Sign::Zero {
            return Err(FrhError::DegenerateMinor {
                nabla_n: m.last(),
                nabla_prev: m.nabla_at(n - 1),
            });
        }
        if m.side_conditions_hold(tol) {
            let r0 = -m.nabla_tilde.expect("n >= 2") / m.nabla_at(n - 1);
            return Ok(verdict(VerdictTag::HopfCandidate, Some(r0)));
        }
    }
    Ok(verdict(VerdictTag::Indeterminate, None))
}

pub fn classify(
    p: &CharPoly,
    alpha: f64,
    tol: &TolerancePolicy,
) -> Result<StabilityVerdict, FrhError> {
    verdict_from_minors(&minors_of(p, alpha)?, tol)
}

/// The conjugate pair `r_0 * exp(±i*alpha*pi/2)` of a Hopf candidate, upper root first.
pub fn critical_roots(v: &StabilityVerdict, alpha: f64) -> Result<[ComplexRoot; 2], FrhError> {
    if !check_alpha(alpha) {
        return Err(FrhError::AlphaOutOfRange(alpha));
    }
    match (v.tag, v.critical_modulus) {
        (VerdictTag::HopfCandidate, Some(r0)) => {
            let half = alpha * PI / 2.0;
            Ok([
                ComplexRoot::from_polar(r0, half),
                ComplexRoot::from_polar(r0, -half),
            ])
        }
        (tag, _) => Err(FrhError::NotCritical(tag)),
    }
}

/// Sign relating the matrix to the standard Sylvester layout: the interleaved
/// rows are a permutation of parity `n(n-1)/2`, so `det H = (-1)^{n(n-1)/2} Res(f1, f2)`.
pub fn resultant_sign(n: usize) -> f64 {
    if (n * (n.saturating_sub(1)) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Res(f1, f2)` by the root-product formula, both read as formal degree-`n` polynomials.
///
/// Uses the roots of whichever of `f1`, `f2` has the larger leading coefficient;
/// `sin² + cos² = 1` keeps that one at least `1/√2` times `|a_0|`.
pub fn resultant_check(rp: &RotatedPair) -> Result<f64, FrhError> {
    let n = rp.n;
    let (lead_poly, other, flip) = if rp.abar[0].abs() >= rp.bbar[0].abs() {
        (&rp.abar, &rp.bbar, 1.0)
    } else {
        (&rp.bbar, &rp.abar, if n.is_multiple_of(2) { 1.0 } else { -1.0 })
    };
    let lead = lead_poly[0];
    let tail: Vec<f64> = lead_poly[1..].iter().map(|c| c / lead).collect();
    let roots = RootFinder::default().raw_roots(&tail)?;
    let eval = |z: Complex64| {
        other
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    let prod: Complex64 = roots.into_iter().map(eval).product();
    Ok(flip * lead.powi(n as i32) * prod.re)
}
