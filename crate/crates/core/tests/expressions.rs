use std::collections::HashMap;

use hopf_core::exprdsl::{parse, EvalError, Expr, ParseError};
use proptest::prelude::*;

const FUNCS: [&str; 7] = ["sin", "cos", "tan", "tanh", "exp", "sqrt", "abs"];
const NAMES: [&str; 4] = ["mu1", "mu2", "alpha", "k32"];

/// Source text with minimal parentheses and random spacing, built independently
/// of the library's printer. Precedence levels: 0 sum, 1 product, 2 unary, 3 power base.
#[derive(Debug, Clone)]
enum Src {
    Num(u32, u32),
    Name(usize),
    Pi,
    Neg(Box<Src>),
    Bin(char, Box<Src>, Box<Src>),
    Pow(Box<Src>, i32),
    Call(usize, Box<Src>),
}

fn src() -> impl Strategy<Value = Src> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, d)| Src::Num(m, d)),
        (0usize..NAMES.len()).prop_map(Src::Name),
        Just(Src::Pi),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Src::Neg(Box::new(e))),
            (prop::sample::select(vec!['+', '-', '*', '/']), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Src::Bin(op, Box::new(l), Box::new(r))),
            (inner.clone(), -3i32..6).prop_map(|(b, k)| Src::Pow(Box::new(b), k)),
            (0usize..FUNCS.len(), inner).prop_map(|(f, e)| Src::Call(f, Box::new(e))),
        ]
    })
}

fn level(s: &Src) -> u8 {
    match s {
        Src::Bin('+' | '-', ..) => 0,
        Src::Bin(..) => 1,
        Src::Neg(_) => 2,
        Src::Pow(..) => 3,
        _ => 4,
    }
}

fn render(s: &Src, pad: &mut impl FnMut() -> &'static str) -> String {
    let wrap = |s: &Src, min: u8, pad: &mut dyn FnMut() -> &'static str| {
        let mut f = || pad();
        let text = render_dyn(s, &mut f);
        if level(s) < min {
            format!("({text})")
        } else {
            text
        }
    };
    match s {
        Src::Num(m, d) => format!("{}", *m as f64 / 10f64.powi(*d as i32)),
        Src::Name(i) => NAMES[*i].to_string(),
        Src::Pi => "pi".into(),
        Src::Neg(e) => format!("-{}{}", pad(), wrap(e, 2, pad)),
        Src::Bin(op, l, r) => {
            let lmin = if matches!(op, '+' | '-') { 0 } else { 1 };
            let lhs = wrap(l, lmin, pad);
            let (p1, p2) = (pad(), pad());
            format!("{lhs}{p1}{op}{p2}{}", wrap(r, lmin + 1, pad))
        }
        Src::Pow(b, k) => format!("{}^{k}", wrap(b, 4, pad)),
        Src::Call(f, e) => format!("{}({}{})", FUNCS[*f], pad(), render_dyn(e, &mut || pad())),
    }
}

fn render_dyn(s: &Src, pad: &mut dyn FnMut() -> &'static str) -> String {
    render(s, &mut || pad())
}

fn spacing(seed: u64) -> impl FnMut() -> &'static str {
    let mut state = seed;
    move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        [" ", "", "", "  "][(state >> 62) as usize]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printed_form_reparses_to_the_same_tree(s in src(), seed in any::<u64>()) {
        let text = render(&s, &mut spacing(seed));
        let tree = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        let printed = tree.to_string();
        let again = parse(&printed).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(&again, &tree, "{} -> {}", text, printed);
    }
}

fn eval(src: &str, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
    let b: HashMap<String, f64> = bindings.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    parse(src).unwrap().eval(&b)
}

#[test]
fn precedence_and_errors() {
    assert_eq!(eval("2*sin(pi/2) - -1^2", &[]), Ok(3.0));
    assert_eq!(eval("pi", &[]), Ok(std::f64::consts::PI));
    assert_eq!(eval("1/(mu1-2)", &[("mu1", 2.0)]), Err(EvalError::DivByZero));
    assert_eq!(eval("sqrt(mu1)", &[("mu1", -1.0)]), Err(EvalError::NonFinite));
    assert_eq!(eval("mu1 + k", &[("mu1", 1.0)]), Err(EvalError::Unbound("k".into())));
    assert!(matches!(parse("sin(mu1"), Err(ParseError::Syntax { offset: 8, .. })));
    assert!(matches!(parse("foo(1)"), Err(ParseError::UnknownFunction { .. })));
    assert!(matches!(parse("mu1^1.5"), Err(ParseError::Syntax { .. })));
    let a1 = parse("mu2 - k33 + 2*mu1 - k22 - k11").unwrap();
    let mut terms = 0;
    let mut e = &a1;
    while let Expr::Binary(_, l, _) = e {
        terms += 1;
        e = l;
    }
    assert_eq!(terms + 1, 5);
}
