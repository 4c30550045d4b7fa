//! Reference computations shared by the integration and acceptance tests.
//! None of these go through the library's matrix or root-finding code.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

pub const ALPHAS: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        let pivot = m[c].clone();
        for row in m.iter_mut().skip(c + 1) {
            let f = row[c] / pivot[c];
            for (v, p) in row.iter_mut().zip(&pivot).skip(c) {
                *v -= f * p;
            }
        }
    }
    d
}

/// Real and imaginary parts of `exp(i k alpha pi / 2)` through complex powers.
fn rotation(k: usize, alpha: f64) -> Complex64 {
    Complex64::from_polar(1.0, alpha * PI / 2.0).powu(k as u32)
}

/// `(abar, bbar)` for `f = λ^n + a_1 λ^{n-1} + ... + a_n` with `a` excluding the leading 1.
pub fn rotated(a: &[f64], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let full: Vec<f64> = std::iter::once(1.0).chain(a.iter().copied()).collect();
    full.iter()
        .enumerate()
        .map(|(j, &c)| {
            let w = rotation(n - j, alpha);
            (c * w.im, c * w.re)
        })
        .unzip()
}

/// Standard Sylvester matrix of two formal degree-`n` polynomials (highest coefficient first).
pub fn sylvester(f: &[f64], g: &[f64]) -> Vec<Vec<f64>> {
    let n = f.len() - 1;
    let mut m = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for (j, (&fc, &gc)) in f.iter().zip(g).enumerate() {
            m[i][i + j] = fc;
            m[n + i][i + j] = gc;
        }
    }
    m
}

pub fn hadamard(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product()
}

/// Characteristic coefficients of a 3x3 matrix from trace, principal minors and determinant.
pub fn charpoly3(j: &[[f64; 3]; 3]) -> [f64; 3] {
    let tr = j[0][0] + j[1][1] + j[2][2];
    let m2 = j[0][0] * j[1][1] - j[0][1] * j[1][0] + j[0][0] * j[2][2] - j[0][2] * j[2][0]
        + j[1][1] * j[2][2]
        - j[1][2] * j[2][1];
    let d = det(j.iter().map(|r| r.to_vec()).collect());
    [-tr, m2, -d]
}

/// Minors of the three-neuron demo at order 1.1, as printed for that system.
pub struct ClosedForm {
    pub nabla: [f64; 3],
    pub tilde: f64,
}

pub fn closed_form(a: [f64; 3]) -> ClosedForm {
    let [a1, a2, a3] = a;
    let s = |k: f64| (k * PI / 20.0).sin();
    let c = |k: f64| (k * PI / 20.0).cos();
    let r2 = 2f64.sqrt();
    let n1 = a1 * s(9.0);
    let n2 = (a1 * a1 * a2 / 2.0 - a3 * a1 / 2.0) * (PI / 10.0).cos()
        + (a2 * a2 / 2.0 - a1 * a3 / 2.0) * (PI / 5.0).cos()
        + a1 * a1 * a2 / 2.0
        - a2 * a2 / 2.0;
    let n3 = a3 / 8.0
        * (2.0 * a3 * a3 * s(1.0)
            + 2.0 * a1 * a2 * a3 * s(3.0)
            + (2.0 * a1.powi(3) * a3 + 2.0 * a1 * a1 * a2 * a2 - 12.0 * a1 * a2 * a3
                + 2.0 * a2.powi(3)
                + 6.0 * a3 * a3)
                * s(7.0)
            + (6.0 * a1 * a1 * a2 * a2 - 4.0 * a1.powi(3) * a3 - 2.0 * a2 * a1 * a3
                - 4.0 * a2.powi(3))
                * s(9.0)
            + r2 * a1.powi(3) * a3
            - 2.0 * r2 * a1 * a2 * a3
            + r2 * a2.powi(3));
    let tilde = -0.25
        * a3
        * (2.0 * a1 * a1 * c(7.0) + (2.0 * a1 * a1 - 2.0 * a2) * c(9.0) + r2 * a2);
    ClosedForm {
        nabla: [n1, n2, n3],
        tilde,
    }
}

/// `E_{α,1}(-t^α)` by its power series, summed in log space for the large gamma values.
pub fn mittag_leffler_neg(alpha: f64, t: f64) -> f64 {
    let z = t.powf(alpha);
    if z == 0.0 {
        return 1.0;
    }
    (0..200)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (k as f64 * z.ln() - ln_gamma(alpha * k as f64 + 1.0)).exp()
        })
        .sum()
}

/// Coefficients `a_1..a_n` of `∏ (λ - r)` by direct multiplication.
pub fn expand(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * r;
        }
        c = next;
    }
    c[1..].iter().map(|v| v.re).collect()
}

/// `k` roots strictly inside the stable sector of order `alpha`, closed under conjugation.
pub fn stable_roots(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Vec<Complex64> {
    let edge = alpha * PI / 2.0;
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let modulus = rng.gen_range(0.3..4.0);
        if k - out.len() >= 2 && rng.gen_bool(0.6) {
            let arg = rng.gen_range(edge + 0.05..PI - 0.05);
            let z = Complex64::from_polar(modulus, arg);
            out.push(z);
            out.push(z.conj());
        } else {
            out.push(Complex64::new(-modulus, 0.0));
        }
    }
    out
}

pub fn random_coeffs(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-range..range)).collect()
}
