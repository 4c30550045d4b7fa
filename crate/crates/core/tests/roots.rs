mod common;

use hopf_core::polycore::{CharPoly, ComplexRoot};
use num_complex::Complex64;
use proptest::prelude::*;

fn poly() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=8).prop_flat_map(|n| prop::collection::vec(-10.0..10.0f64, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sum_and_product_of_roots(a in poly()) {
        let p = CharPoly::new(a.clone()).unwrap();
        let roots: Vec<Complex64> = p.roots().unwrap().iter().map(ComplexRoot::value).collect();
        let n = a.len();
        let sum: Complex64 = roots.iter().sum();
        let prod: Complex64 = roots.iter().product();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        prop_assert!((sum.re + a[0]).abs() <= 1e-6 * a[0].abs().max(scale), "sum {sum} vs {}", -a[0]);
        prop_assert!(sum.im.abs() <= 1e-9 * scale);
        let pmag: f64 = roots.iter().map(|r| r.norm().max(1.0)).product();
        prop_assert!((prod.re - sign * a[n - 1]).abs() <= 1e-6 * a[n - 1].abs().max(1e-6 * pmag),
            "prod {prod} vs {}", sign * a[n - 1]);
    }

    #[test]
    fn conjugate_closure_and_residuals(a in poly()) {
        let p = CharPoly::new(a).unwrap();
        let roots = p.roots().unwrap();
        prop_assert_eq!(roots.len(), p.degree());
        for r in &roots {
            let z = r.value();
            prop_assert!(p.evaluate(z).unwrap().norm() <= p.residual_bound(z));
            prop_assert!(((r.modulus * r.modulus) - (r.re * r.re + r.im * r.im)).abs()
                <= 1e-12 * r.modulus.powi(2).max(f64::MIN_POSITIVE));
            if r.im != 0.0 {
                prop_assert!(roots.iter().any(|s| s.re == r.re && s.im == -r.im));
            }
        }
    }
}

#[test]
fn planted_roots_are_recovered() {
    let planted = [
        Complex64::new(-1.0, 0.0),
        Complex64::from_polar(1.0, 0.55 * std::f64::consts::PI),
        Complex64::from_polar(1.0, -0.55 * std::f64::consts::PI),
    ];
    let p = CharPoly::new(common::expand(&planted)).unwrap();
    let found = p.roots().unwrap();
    for z in planted {
        let best = found.iter().map(|r| (r.value() - z).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-12, "{z}: {best}");
    }
}
