//! Scalar-expression DSL over points of R^3.
//!
//! Grammar: expressions over the variables `u1 u2 u3`, the derived radius
//! `r` (= |u|), numeric literals, `+ - * / ^`, parentheses, the functions
//! `sin cos exp tanh sqrt atan`, and free identifiers acting as named
//! parameters. Gradients are produced by symbolic differentiation at parse
//! time; `d r / d u_i = u_i / r`, with the convention that the gradient of
//! pure r-terms is 0 at the origin.

use crate::error::ExprError;
use crate::vec3::Vec3;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    U1,
    U2,
    U3,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fun {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
    Atan,
    /// Natural log; internal only (produced when differentiating a general
    /// power), not part of the surface grammar.
    Ln,
}

impl Fun {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Fun::Sin => "sin",
            Fun::Cos => "cos",
            Fun::Exp => "exp",
            Fun::Tanh => "tanh",
            Fun::Sqrt => "sqrt",
            Fun::Atan => "atan",
            Fun::Ln => "ln",
        }
    }

    fn from_name(s: &str) -> Option<Fun> {
        Some(match s {
            "sin" => Fun::Sin,
            "cos" => Fun::Cos,
            "exp" => Fun::Exp,
            "tanh" => Fun::Tanh,
            "sqrt" => Fun::Sqrt,
            "atan" => Fun::Atan,
            _ => return None,
        })
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Fun::Sin => x.sin(),
            Fun::Cos => x.cos(),
            Fun::Exp => x.exp(),
            Fun::Tanh => x.tanh(),
            Fun::Sqrt => x.sqrt(),
            Fun::Atan => x.atan(),
            Fun::Ln => x.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    /// Named parameter, index into the expression's parameter table.
    Param(usize),
    /// u_i / r with the convention 0 at the origin. Only produced by
    /// differentiation, never by the parser.
    DirCos(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Fun(Fun, Box<Expr>),
}

/// A parsed expression together with its parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExpr {
    pub expr: Expr,
    /// Parameter names in first-appearance order.
    pub params: Vec<String>,
    /// Byte offset of the first occurrence of each parameter.
    pub param_offsets: Vec<usize>,
}

pub fn parse(text: &str) -> Result<ParsedExpr, ExprError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        text_len: text.len(),
        params: Vec::new(),
        param_offsets: Vec::new(),
    };
    let expr = p.parse_expr()?;
    if p.pos < p.tokens.len() {
        return Err(ExprError::Syntax {
            offset: p.tokens[p.pos].offset,
            message: format!("unexpected `{}`", p.tokens[p.pos].kind.describe()),
        });
    }
    Ok(ParsedExpr {
        expr,
        params: p.params,
        param_offsets: p.param_offsets,
    })
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("{v}"),
            TokKind::Ident(s) => s.clone(),
            TokKind::Plus => "+".into(),
            TokKind::Minus => "-".into(),
            TokKind::Star => "*".into(),
            TokKind::Slash => "/".into(),
            TokKind::Caret => "^".into(),
            TokKind::LParen => "(".into(),
            TokKind::RParen => ")".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Tok>, ExprError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => {
                let kind = match c {
                    b'+' => TokKind::Plus,
                    b'-' => TokKind::Minus,
                    b'*' => TokKind::Star,
                    b'/' => TokKind::Slash,
                    b'^' => TokKind::Caret,
                    b'(' => TokKind::LParen,
                    _ => TokKind::RParen,
                };
                out.push(Tok { kind, offset: i });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("bad numeric literal `{s}`"),
                })?;
                out.push(Tok {
                    kind: TokKind::Num(v),
                    offset: start,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok {
                    kind: TokKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", &text[i..i + 1]),
                })
            }
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- parser

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    text_len: usize,
    params: Vec<String>,
    param_offsets: Vec<usize>,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn eof_err(&self) -> ExprError {
        ExprError::Syntax {
            offset: self.text_len,
            message: "unexpected end of expression".into(),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(TokKind::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(TokKind::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(TokKind::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(TokKind::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, ExprError> {
        if let Some(TokKind::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.parse_factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if let Some(TokKind::Caret) = self.peek() {
            self.pos += 1;
            // Right-associative; exponent may carry a sign.
            let exp = self.parse_factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| self.eof_err())?;
        match tok.kind {
            TokKind::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            TokKind::LParen => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                match self.peek() {
                    Some(TokKind::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(_) => Err(ExprError::Syntax {
                        offset: self.tokens[self.pos].offset,
                        message: "expected `)`".into(),
                    }),
                    None => Err(self.eof_err()),
                }
            }
            TokKind::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "u1" => return Ok(Expr::Var(Var::U1)),
                    "u2" => return Ok(Expr::Var(Var::U2)),
                    "u3" => return Ok(Expr::Var(Var::U3)),
                    "r" => return Ok(Expr::Var(Var::R)),
                    _ => {}
                }
                if let Some(f) = Fun::from_name(&name) {
                    match self.peek() {
                        Some(TokKind::LParen) => {
                            self.pos += 1;
                            let arg = self.parse_expr()?;
                            match self.peek() {
                                Some(TokKind::RParen) => {
                                    self.pos += 1;
                                    return Ok(Expr::Fun(f, Box::new(arg)));
                                }
                                Some(_) => {
                                    return Err(ExprError::Syntax {
                                        offset: self.tokens[self.pos].offset,
                                        message: "expected `)`".into(),
                                    })
                                }
                                None => return Err(self.eof_err()),
                            }
                        }
                        _ => {
                            return Err(ExprError::Syntax {
                                offset: tok.offset,
                                message: format!("function `{name}` needs an argument list"),
                            })
                        }
                    }
                }
                // Free identifier: a named parameter.
                let idx = match self.params.iter().position(|p| p == &name) {
                    Some(i) => i,
                    None => {
                        self.params.push(name);
                        self.param_offsets.push(tok.offset);
                        self.params.len() - 1
                    }
                };
                Ok(Expr::Param(idx))
            }
            other => Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected `{}`", other.describe()),
            }),
        }
    }
}

// ----------------------------------------------------------- evaluation

/// Evaluation context: the point and bound parameter values.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx<'a> {
    pub u: Vec3,
    pub r: f64,
    pub params: &'a [f64],
}

impl<'a> EvalCtx<'a> {
    pub fn new(u: Vec3, params: &'a [f64]) -> Self {
        let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        EvalCtx { u, r, params }
    }
}

impl Expr {
    pub fn eval(&self, ctx: &EvalCtx) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::U1) => ctx.u[0],
            Expr::Var(Var::U2) => ctx.u[1],
            Expr::Var(Var::U3) => ctx.u[2],
            Expr::Var(Var::R) => ctx.r,
            Expr::Param(i) => ctx.params[*i],
            Expr::DirCos(i) => {
                if ctx.r == 0.0 {
                    0.0
                } else {
                    ctx.u[*i] / ctx.r
                }
            }
            Expr::Neg(a) => -a.eval(ctx),
            Expr::Add(a, b) => a.eval(ctx) + b.eval(ctx),
            Expr::Sub(a, b) => a.eval(ctx) - b.eval(ctx),
            Expr::Mul(a, b) => a.eval(ctx) * b.eval(ctx),
            Expr::Div(a, b) => a.eval(ctx) / b.eval(ctx),
            Expr::Pow(a, b) => {
                let base = a.eval(ctx);
                let e = b.eval(ctx);
                if e == e.trunc() && e.abs() < 64.0 {
                    base.powi(e as i32)
                } else {
                    base.powf(e)
                }
            }
            Expr::Fun(f, a) => f.apply(a.eval(ctx)),
        }
    }

    /// True when the expression references any of u1, u2, u3 directly
    /// (an r-only expression is radial by construction).
    pub fn uses_cartesian_vars(&self) -> bool {
        match self {
            Expr::Var(Var::U1) | Expr::Var(Var::U2) | Expr::Var(Var::U3) | Expr::DirCos(_) => true,
            Expr::Num(_) | Expr::Var(Var::R) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Fun(_, a) => a.uses_cartesian_vars(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_cartesian_vars() || b.uses_cartesian_vars()
            }
        }
    }

    pub fn uses_any_var(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::DirCos(_) => true,
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Fun(_, a) => a.uses_any_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_any_var() || b.uses_any_var()
            }
        }
    }
}

// ------------------------------------------------------ differentiation

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn mk_neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn mk_add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn mk_sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return mk_neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mk_mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x * y);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn mk_div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        if *y != 0.0 {
            return num(x / y);
        }
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn mk_pow(a: Expr, b: Expr) -> Expr {
    if let Expr::Num(e) = &b {
        if *e == 0.0 {
            return num(1.0);
        }
        if *e == 1.0 {
            return a;
        }
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

/// Symbolic partial derivative with respect to u_i (i in 0..3).
///
/// `non_smooth` is set when a construct whose gradient is not continuous
/// everywhere (bare `r`, fractional powers of `r` below 2, `sqrt`) had to
/// be differentiated; evaluation still works with the one-sided
/// convention `DirCos = 0` at the origin.
pub fn differentiate(e: &Expr, i: usize, non_smooth: &mut bool) -> Expr {
    match e {
        Expr::Num(_) | Expr::Param(_) => num(0.0),
        Expr::Var(Var::U1) => num(if i == 0 { 1.0 } else { 0.0 }),
        Expr::Var(Var::U2) => num(if i == 1 { 1.0 } else { 0.0 }),
        Expr::Var(Var::U3) => num(if i == 2 { 1.0 } else { 0.0 }),
        Expr::Var(Var::R) => {
            *non_smooth = true;
            Expr::DirCos(i)
        }
        Expr::DirCos(j) => {
            // d(u_j/r)/du_i = (delta_ij - (u_i/r)(u_j/r)) / r
            *non_smooth = true;
            let delta = num(if i == *j { 1.0 } else { 0.0 });
            mk_div(
                mk_sub(delta, mk_mul(Expr::DirCos(i), Expr::DirCos(*j))),
                Expr::Var(Var::R),
            )
        }
        Expr::Neg(a) => mk_neg(differentiate(a, i, non_smooth)),
        Expr::Add(a, b) => mk_add(
            differentiate(a, i, non_smooth),
            differentiate(b, i, non_smooth),
        ),
        Expr::Sub(a, b) => mk_sub(
            differentiate(a, i, non_smooth),
            differentiate(b, i, non_smooth),
        ),
        Expr::Mul(a, b) => {
            let da = differentiate(a, i, non_smooth);
            let db = differentiate(b, i, non_smooth);
            mk_add(mk_mul(da, (**b).clone()), mk_mul((**a).clone(), db))
        }
        Expr::Div(a, b) => {
            let da = differentiate(a, i, non_smooth);
            let db = differentiate(b, i, non_smooth);
            mk_div(
                mk_sub(mk_mul(da, (**b).clone()), mk_mul((**a).clone(), db)),
                mk_pow((**b).clone(), num(2.0)),
            )
        }
        Expr::Pow(base, exp) => {
            if let Expr::Num(c) = &**exp {
                // d(r^c) = c r^(c-2) u_i, exactly; even integer powers of r
                // stay polynomial and are smooth through the origin.
                if matches!(**base, Expr::Var(Var::R)) {
                    if *c < 2.0 && *c != 0.0 {
                        *non_smooth = true;
                    }
                    let ui = match i {
                        0 => Expr::Var(Var::U1),
                        1 => Expr::Var(Var::U2),
                        _ => Expr::Var(Var::U3),
                    };
                    return mk_mul(num(*c), mk_mul(mk_pow(Expr::Var(Var::R), num(c - 2.0)), ui));
                }
                let db = differentiate(base, i, non_smooth);
                return mk_mul(
                    num(*c),
                    mk_mul(mk_pow((**base).clone(), num(c - 1.0)), db),
                );
            }
            // General f^g: d(f^g) = f^(g-1) * (f ln(f) dg + g df).
            *non_smooth = true;
            let df = differentiate(base, i, non_smooth);
            let dg = differentiate(exp, i, non_smooth);
            let f = (**base).clone();
            let g = (**exp).clone();
            let lnf = Expr::Fun(Fun::Ln, Box::new(f.clone()));
            mk_mul(
                mk_pow(f.clone(), mk_sub(g.clone(), num(1.0))),
                mk_add(mk_mul(mk_mul(f, lnf), dg), mk_mul(g, df)),
            )
        }
        Expr::Fun(f, a) => {
            let da = differentiate(a, i, non_smooth);
            if is_zero(&da) {
                return num(0.0);
            }
            let arg = (**a).clone();
            let outer = match f {
                Fun::Sin => Expr::Fun(Fun::Cos, Box::new(arg)),
                Fun::Cos => mk_neg(Expr::Fun(Fun::Sin, Box::new(arg))),
                Fun::Exp => Expr::Fun(Fun::Exp, Box::new(arg)),
                Fun::Tanh => {
                    // 1 - tanh^2
                    let t = Expr::Fun(Fun::Tanh, Box::new(arg));
                    mk_sub(num(1.0), mk_pow(t, num(2.0)))
                }
                Fun::Sqrt => {
                    *non_smooth = true;
                    mk_div(num(0.5), Expr::Fun(Fun::Sqrt, Box::new(arg)))
                }
                Fun::Atan => mk_div(num(1.0), mk_add(num(1.0), mk_pow(arg, num(2.0)))),
                Fun::Ln => mk_div(num(1.0), arg),
            };
            mk_mul(outer, da)
        }
    }
}

// ---------------------------------------------------------- pretty print

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, params: &[String]) -> fmt::Result {
        let prec = self.precedence();
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "(")?;
                e.fmt_with(f, params)?;
                write!(f, ")")
            } else {
                e.fmt_with(f, params)
            }
        };
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::U1) => write!(f, "u1"),
            Expr::Var(Var::U2) => write!(f, "u2"),
            Expr::Var(Var::U3) => write!(f, "u3"),
            Expr::Var(Var::R) => write!(f, "r"),
            Expr::Param(i) => write!(f, "{}", params.get(*i).map(String::as_str).unwrap_or("?")),
            Expr::DirCos(i) => write!(f, "(u{}/r)", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, prec)
            }
            Expr::Add(a, b) => {
                child(f, a, prec)?;
                write!(f, " + ")?;
                child(f, b, prec + 1)
            }
            Expr::Sub(a, b) => {
                child(f, a, prec)?;
                write!(f, " - ")?;
                child(f, b, prec + 1)
            }
            Expr::Mul(a, b) => {
                child(f, a, prec)?;
                write!(f, "*")?;
                child(f, b, prec + 1)
            }
            Expr::Div(a, b) => {
                child(f, a, prec)?;
                write!(f, "/")?;
                child(f, b, prec + 1)
            }
            Expr::Pow(a, b) => {
                child(f, a, prec + 1)?;
                write!(f, "^")?;
                child(f, b, prec)
            }
            Expr::Fun(fun, a) => {
                write!(f, "{}(", fun.name())?;
                a.fmt_with(f, params)?;
                write!(f, ")")
            }
        }
    }
}

/// Display adapter carrying the parameter name table.
pub struct ExprDisplay<'a> {
    pub expr: &'a Expr,
    pub params: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt_with(f, self.params)
    }
}

impl ParsedExpr {
    pub fn to_text(&self) -> String {
        format!(
            "{}",
            ExprDisplay {
                expr: &self.expr,
                params: &self.params
            }
        )
    }
}
