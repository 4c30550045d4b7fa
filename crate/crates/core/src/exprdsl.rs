//! Coefficient expressions `a_i(alpha, mu)` and the built-in three-neuron demo.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := base ('^' '-'? integer)?
//! base   := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus applies outside a power, so `-1^2` is `-(1^2)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::bifurcate::ParamPoint;
use crate::check_alpha;
use crate::polycore::{CharPoly, PolyError};

/// Name always available to expressions; bound to the fractional order.
pub const ALPHA: &str = "alpha";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    Pi,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    /// `offset` is the one-based byte position of the offending token.
    #[error("syntax error at offset {offset}: found {found}, expected one of {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("`{0}` is reserved and cannot be declared as a parameter")]
    ReservedName(String),
    #[error("parameter `{0}` declared twice")]
    DuplicateName(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivByZero,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("unbound identifier `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    AlphaOutOfRange(f64),
    #[error("unknown coupling weight `{0}` (expected k11..k33)")]
    UnknownWeight(String),
    #[error("expected {expected} parameter values, got {got}")]
    ParamCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(offset: usize, found: String, expected: &[&str]) -> ParseError {
    ParseError::Syntax {
        offset: offset + 1,
        found,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    integral &= bytes[i] != b'.';
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`"), &["number"]))?;
                out.push((Tok::Num(v, integral), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(syntax(
                    start,
                    format!("character `{ch}`"),
                    &["number", "identifier", "operator", "`(`", "`)`"],
                ));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const OPERAND: &[&str] = &["number", "identifier", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        syntax(self.offset(), self.peek().describe(), expected)
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v, true) if v <= i32::MAX as f64 => {
                self.bump();
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => Err(self.error(&["integer exponent"])),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownFunction {
                        name: name.clone(),
                        offset: offset + 1,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if Func::from_name(&name).is_some() {
                    return Err(self.error(&["`(`"]));
                }
                Ok(if name == "pi" {
                    Expr::Pi
                } else {
                    Expr::Ident(name)
                })
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

impl Expr {
    /// Free identifiers, sorted.
    pub fn identifiers(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Ident(s) => {
                out.insert(s);
            }
            Expr::Num(_) | Expr::Pi => {}
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_idents(out),
            Expr::Binary(_, l, r) => {
                l.collect_idents(out);
                r.collect_idents(out);
            }
        }
    }

    /// Evaluates with named bindings.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Ident(name) => lookup(name).ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Binary(op, l, r) => binary(*op, l.eval_with(lookup)?, r.eval_with(lookup)?)?,
            Expr::Pow(b, k) => power(b.eval_with(lookup)?, *k)?,
            Expr::Call(f, e) => f.apply(e.eval_with(lookup)?),
        };
        finite(v)
    }

    /// Resolves identifiers to positions in `slots`, or to values in `constants`.
    pub fn bind(
        &self,
        slots: &[String],
        constants: &HashMap<String, f64>,
    ) -> Result<BoundExpr, BindError> {
        Ok(BoundExpr {
            root: self.bind_node(slots, constants)?,
        })
    }

    fn bind_node(
        &self,
        slots: &[String],
        constants: &HashMap<String, f64>,
    ) -> Result<Node, BindError> {
        Ok(match self {
            Expr::Num(v) => Node::Const(*v),
            Expr::Pi => Node::Const(std::f64::consts::PI),
            Expr::Ident(name) => match slots.iter().position(|s| s == name) {
                Some(i) => Node::Slot(i),
                None => match constants.get(name) {
                    Some(&v) => Node::Const(v),
                    None => return Err(BindError::UnboundIdentifier(name.clone())),
                },
            },
            Expr::Neg(e) => Node::Neg(Box::new(e.bind_node(slots, constants)?)),
            Expr::Binary(op, l, r) => Node::Binary(
                *op,
                Box::new(l.bind_node(slots, constants)?),
                Box::new(r.bind_node(slots, constants)?),
            ),
            Expr::Pow(b, k) => Node::Pow(Box::new(b.bind_node(slots, constants)?), *k),
            Expr::Call(f, e) => Node::Call(*f, Box::new(e.bind_node(slots, constants)?)),
        })
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(_) | Expr::Ident(_) | Expr::Pi | Expr::Call(..) => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

fn binary(op: BinOp, l: f64, r: f64) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => Ok(l + r),
        BinOp::Sub => Ok(l - r),
        BinOp::Mul => Ok(l * r),
        BinOp::Div if r == 0.0 => Err(EvalError::DivByZero),
        BinOp::Div => Ok(l / r),
    }
}

fn power(b: f64, k: i32) -> Result<f64, EvalError> {
    if k < 0 && b == 0.0 {
        Err(EvalError::DivByZero)
    } else {
        Ok(b.powi(k))
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

/// Prints a form that reparses to the same tree: every binary node is
/// parenthesized, and power bases that are not atoms are wrapped.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Ident(s) => write!(f, "{s}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(e) => match **e {
                Expr::Binary(..) => write!(f, "-({e})"),
                _ => write!(f, "-{e}"),
            },
            Expr::Binary(op, l, r) => {
                l.fmt_operand(f)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_operand(f)
            }
            Expr::Pow(b, k) => {
                b.fmt_operand(f)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// An expression with identifiers resolved to slot indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    root: Node,
}

impl BoundExpr {
    pub fn eval(&self, slots: &[f64]) -> Result<f64, EvalError> {
        eval_node(&self.root, slots)
    }
}

fn eval_node(node: &Node, slots: &[f64]) -> Result<f64, EvalError> {
    let v = match node {
        Node::Const(v) => *v,
        Node::Slot(i) => slots[*i],
        Node::Neg(e) => -eval_node(e, slots)?,
        Node::Binary(op, l, r) => binary(*op, eval_node(l, slots)?, eval_node(r, slots)?)?,
        Node::Pow(b, k) => power(eval_node(b, slots)?, *k)?,
        Node::Call(f, e) => f.apply(eval_node(e, slots)?),
    };
    finite(v)
}

/// Checks the identifier pattern `[a-zA-Z][a-zA-Z0-9_]*` and the reserved names.
pub fn validate_param_names(names: &[String]) -> Result<(), BindError> {
    let mut seen = BTreeSet::new();
    for name in names {
        let mut chars = name.chars();
        let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(BindError::InvalidName(name.clone()));
        }
        if name == ALPHA || name == "pi" || Func::from_name(name).is_some() {
            return Err(BindError::ReservedName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(BindError::DuplicateName(name.clone()));
        }
    }
    Ok(())
}

/// Coupling weights `k_ij` of the three-neuron network, row-major.
pub type Weights = [[f64; 3]; 3];

/// Default weights: `k11=k12=k13=k23=2`, `k21=k22=k31=k33=-2`, `k32=1`.
pub const DEFAULT_WEIGHTS: Weights = [[2.0, 2.0, 2.0], [-2.0, -2.0, 2.0], [-2.0, 1.0, -2.0]];

pub const DEMO_PARAMS: [&str; 2] = ["mu1", "mu2"];

/// Characteristic coefficients of the demo Jacobian at the origin, as printed.
pub const DEMO_COEFFICIENTS: [&str; 3] = [
    "mu2 - k33 + 2*mu1 - k22 - k11",
    "k11*k22 + k11*k33 - k11*mu1 - k11*mu2 - k12*k21 - k13*k31 \
     + k22*k33 - k22*mu1 - k22*mu2 - k23*k32 - 2*k33*mu1 + mu1^2 + 2*mu1*mu2",
    "-k11*k22*k33 + k11*k22*mu2 + k11*k23*k32 + k11*k33*mu1 - k11*mu1*mu2 \
     + k12*k21*k33 - k12*k21*mu2 - k12*k23*k31 - k13*k21*k32 + k13*k22*k31 \
     - k13*k31*mu1 + k22*k33*mu1 - k22*mu1*mu2 - k23*k32*mu1 - k33*mu1^2 + mu1^2*mu2",
];

fn demo_asts() -> &'static [Expr; 3] {
    static ASTS: OnceLock<[Expr; 3]> = OnceLock::new();
    ASTS.get_or_init(|| DEMO_COEFFICIENTS.map(|s| parse(s).expect("built-in formula parses")))
}

/// The three-neuron fractional network
/// `D^α x_i = -μ x_i + Σ_j k_ij tanh(x_j)`, with `μ = μ1` for neurons 1, 2 and `μ2` for neuron 3.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSystem {
    pub weights: Weights,
    pub alpha: f64,
}

impl Default for DemoSystem {
    fn default() -> Self {
        Self {
            weights: DEFAULT_WEIGHTS,
            alpha: 1.1,
        }
    }
}

/// `"k12"` -> `(0, 1)`.
pub fn weight_index(name: &str) -> Option<(usize, usize)> {
    let b = name.as_bytes();
    if b.len() != 3 || b[0] != b'k' {
        return None;
    }
    let i = (b[1] as char).to_digit(10)?;
    let j = (b[2] as char).to_digit(10)?;
    ((1..=3).contains(&i) && (1..=3).contains(&j)).then(|| (i as usize - 1, j as usize - 1))
}

impl DemoSystem {
    pub fn with_overrides(
        overrides: &HashMap<String, f64>,
        alpha: f64,
    ) -> Result<Self, ExprError> {
        if !check_alpha(alpha) {
            return Err(ExprError::AlphaOutOfRange(alpha));
        }
        let mut weights = DEFAULT_WEIGHTS;
        for (name, &v) in overrides {
            let (i, j) = weight_index(name).ok_or_else(|| ExprError::UnknownWeight(name.clone()))?;
            weights[i][j] = v;
        }
        Ok(Self { weights, alpha })
    }

    /// `k11..k33` as named constants.
    pub fn weight_bindings(&self) -> HashMap<String, f64> {
        let mut m = HashMap::new();
        for i in 0..3 {
            for j in 0..3 {
                m.insert(format!("k{}{}", i + 1, j + 1), self.weights[i][j]);
            }
        }
        m
    }

    /// Coefficients from the printed formulas.
    pub fn charpoly(&self, mu: [f64; 2]) -> Result<CharPoly, ExprError> {
        let mut bindings = self.weight_bindings();
        bindings.insert("mu1".into(), mu[0]);
        bindings.insert("mu2".into(), mu[1]);
        let coeffs = demo_asts()
            .iter()
            .map(|e| e.eval(&bindings))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CharPoly::new(coeffs)?)
    }

    /// Jacobian at the origin (`tanh'(0) = 1`).
    pub fn jacobian(&self, mu: [f64; 2]) -> [[f64; 3]; 3] {
        let mut j = self.weights;
        j[0][0] -= mu[0];
        j[1][1] -= mu[0];
        j[2][2] -= mu[1];
        j
    }

    /// `g(x, μ)`.
    pub fn vector_field(&self, mu: [f64; 2], x: &[f64], out: &mut [f64]) {
        let decay = [mu[0], mu[0], mu[1]];
        let act = [x[0].tanh(), x[1].tanh(), x[2].tanh()];
        for i in 0..3 {
            out[i] = -decay[i] * x[i]
                + self.weights[i][0] * act[0]
                + self.weights[i][1] * act[1]
                + self.weights[i][2] * act[2];
        }
    }
}

/// Demo characteristic polynomial at `mu = (mu1, mu2)` with optional weight overrides.
pub fn demo_charpoly(
    mu: &ParamPoint,
    overrides: Option<&HashMap<String, f64>>,
    alpha: f64,
) -> Result<CharPoly, ExprError> {
    let empty = HashMap::new();
    let sys = DemoSystem::with_overrides(overrides.unwrap_or(&empty), alpha)?;
    let values = mu.values();
    if values.len() != 2 {
        return Err(ExprError::ParamCount {
            expected: 2,
            got: values.len(),
        });
    }
    sys.charpoly([values[0], values[1]])
}
