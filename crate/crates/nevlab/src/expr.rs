//! Expression trees and their text form.
//!
//! The grammar is plain infix: variables (`z`, `w1`, `x`, ...), the imaginary
//! unit `i`, decimal literals, `+ - * /`, integer powers `^`, `exp(...)`,
//! `log(...)` (principal branch), and parentheses. The printer emits a
//! canonical rendering: any string accepted by the parser reparses from its
//! printed form to the identical tree.
//!
//! Evaluation happens in jet arithmetic against a caller-supplied variable
//! binding, so the same tree serves value computation (order 0), derivative
//! extraction, and composition with other jets (bind `w_k` to curve jets).

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSingular};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(Complex64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power of a subexpression; negative exponents allowed.
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    pub fn constant(c: Complex64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    /// Parse an expression from text. Errors carry a 1-based column.
    pub fn parse(src: &str) -> Result<Expr> {
        Parser::new(src).parse_full()
    }

    /// Collect the distinct variable names appearing in the tree.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_vars(&mut out);
        out
    }

    fn walk_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk_vars(out);
                b.walk_vars(out);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) => a.walk_vars(out),
        }
    }

    /// Evaluate in jet arithmetic. `bind` resolves variable names to jets;
    /// `at` is only used to annotate singular-point errors.
    pub fn eval_jet<F>(&self, bind: &F, at: Complex64) -> Result<Jet>
    where
        F: Fn(&str) -> Option<Jet>,
    {
        let lift = |r: std::result::Result<Jet, JetSingular>, node: &Expr| {
            r.map_err(|_| Error::singular(node.to_string(), at))
        };
        match self {
            Expr::Var(v) => bind(v).ok_or_else(|| Error::Domain(format!("unbound variable `{v}`"))),
            Expr::Const(c) => Ok(Jet::from_coeffs(vec![*c])),
            Expr::Add(a, b) => Ok(a.eval_jet(bind, at)? + b.eval_jet(bind, at)?),
            Expr::Sub(a, b) => Ok(a.eval_jet(bind, at)? - b.eval_jet(bind, at)?),
            Expr::Mul(a, b) => Ok(a.eval_jet(bind, at)? * b.eval_jet(bind, at)?),
            Expr::Div(a, b) => {
                let num = a.eval_jet(bind, at)?;
                let den = b.eval_jet(bind, at)?;
                lift(num.try_div(&den), self)
            }
            Expr::Pow(a, k) => {
                let base = a.eval_jet(bind, at)?;
                lift(base.powi(*k), self)
            }
            Expr::Neg(a) => Ok(-a.eval_jet(bind, at)?),
            Expr::Exp(a) => Ok(a.eval_jet(bind, at)?.exp()),
            Expr::Log(a) => {
                let arg = a.eval_jet(bind, at)?;
                lift(arg.ln(), self)
            }
        }
    }

    /// Jet of a single-variable expression in `z` at `z0`, to order `order`.
    pub fn jet_at(&self, z0: Complex64, order: usize) -> Result<Jet> {
        let bind = |name: &str| (name == "z").then(|| Jet::variable(z0, order));
        self.eval_jet(&bind, z0)
    }

    /// Plain value of a single-variable expression in `z`.
    pub fn value_at(&self, z0: Complex64) -> Result<Complex64> {
        Ok(self.jet_at(z0, 0)?.value())
    }

    /// Constant value when the tree contains no variables at all.
    pub fn as_constant(&self) -> Option<Complex64> {
        match self {
            Expr::Var(_) => None,
            Expr::Const(c) => Some(*c),
            Expr::Add(a, b) => Some(a.as_constant()? + b.as_constant()?),
            Expr::Sub(a, b) => Some(a.as_constant()? - b.as_constant()?),
            Expr::Mul(a, b) => Some(a.as_constant()? * b.as_constant()?),
            Expr::Div(a, b) => {
                let d = b.as_constant()?;
                if d.norm() < crate::jet::SINGULARITY_TOLERANCE {
                    return None;
                }
                Some(a.as_constant()? / d)
            }
            Expr::Pow(a, k) => Some(a.as_constant()?.powi(*k)),
            Expr::Neg(a) => Some(-a.as_constant()?),
            Expr::Exp(a) => Some(a.as_constant()?.exp()),
            Expr::Log(a) => Some(a.as_constant()?.ln()),
        }
    }

    /// Symbolic derivative with respect to `var`, lightly simplified
    /// (zero/one folding only, so the result stays readable).
    pub fn derivative(&self, var: &str) -> Expr {
        match self {
            Expr::Var(v) => {
                if v == var {
                    Expr::Const(Complex64::ONE)
                } else {
                    Expr::Const(Complex64::ZERO)
                }
            }
            Expr::Const(_) => Expr::Const(Complex64::ZERO),
            Expr::Add(a, b) => smart_add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => smart_sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => smart_add(
                smart_mul(a.derivative(var), (**b).clone()),
                smart_mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let num = smart_sub(
                    smart_mul(a.derivative(var), (**b).clone()),
                    smart_mul((**a).clone(), b.derivative(var)),
                );
                smart_div(num, Expr::Pow(b.clone(), 2))
            }
            Expr::Pow(a, k) => {
                if *k == 0 {
                    return Expr::Const(Complex64::ZERO);
                }
                let factor = smart_mul(
                    Expr::Const(Complex64::new(*k as f64, 0.0)),
                    if *k == 1 {
                        Expr::Const(Complex64::ONE)
                    } else {
                        Expr::Pow(a.clone(), k - 1)
                    },
                );
                smart_mul(factor, a.derivative(var))
            }
            Expr::Neg(a) => smart_neg(a.derivative(var)),
            Expr::Exp(a) => smart_mul(a.derivative(var), Expr::Exp(a.clone())),
            Expr::Log(a) => smart_div(a.derivative(var), (**a).clone()),
        }
    }

    /// Replace variables by whole subtrees (used to compose chart
    /// expressions with a curve).
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Expr::Const(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(a.substitute(map).into(), b.substitute(map).into()),
            Expr::Sub(a, b) => Expr::Sub(a.substitute(map).into(), b.substitute(map).into()),
            Expr::Mul(a, b) => Expr::Mul(a.substitute(map).into(), b.substitute(map).into()),
            Expr::Div(a, b) => Expr::Div(a.substitute(map).into(), b.substitute(map).into()),
            Expr::Pow(a, k) => Expr::Pow(a.substitute(map).into(), *k),
            Expr::Neg(a) => Expr::Neg(a.substitute(map).into()),
            Expr::Exp(a) => Expr::Exp(a.substitute(map).into()),
            Expr::Log(a) => Expr::Log(a.substitute(map).into()),
        }
    }

    /// Coefficients (low order first) when the tree is a polynomial in `var`
    /// of degree at most `cap` whose other leaves are constants. Trailing
    /// exact zeros are trimmed; a zero polynomial yields an empty vector.
    pub fn as_polynomial(&self, var: &str, cap: usize) -> Option<Vec<Complex64>> {
        let mut coeffs = self.poly_rec(var, cap)?;
        while coeffs.last() == Some(&Complex64::ZERO) {
            coeffs.pop();
        }
        Some(coeffs)
    }

    fn poly_rec(&self, var: &str, cap: usize) -> Option<Vec<Complex64>> {
        match self {
            Expr::Var(v) => {
                if v == var {
                    Some(vec![Complex64::ZERO, Complex64::ONE])
                } else {
                    None
                }
            }
            Expr::Const(c) => Some(vec![*c]),
            Expr::Add(a, b) => Some(poly_add(
                &a.poly_rec(var, cap)?,
                &b.poly_rec(var, cap)?,
                1.0,
            )),
            Expr::Sub(a, b) => Some(poly_add(
                &a.poly_rec(var, cap)?,
                &b.poly_rec(var, cap)?,
                -1.0,
            )),
            Expr::Mul(a, b) => poly_mul(&a.poly_rec(var, cap)?, &b.poly_rec(var, cap)?, cap),
            Expr::Div(a, b) => {
                let den = b.as_constant()?;
                if den.norm() < crate::jet::SINGULARITY_TOLERANCE {
                    return None;
                }
                let num = a.poly_rec(var, cap)?;
                Some(num.into_iter().map(|c| c / den).collect())
            }
            Expr::Pow(a, k) => {
                if *k < 0 {
                    return Some(vec![self.as_constant()?]);
                }
                let base = a.poly_rec(var, cap)?;
                let mut acc = vec![Complex64::ONE];
                for _ in 0..*k {
                    acc = poly_mul(&acc, &base, cap)?;
                }
                Some(acc)
            }
            Expr::Neg(a) => Some(
                a.poly_rec(var, cap)?
                    .into_iter()
                    .map(|c| -c)
                    .collect::<Vec<_>>(),
            ),
            Expr::Exp(_) | Expr::Log(_) => Some(vec![self.as_constant()?]),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Var(_) | Expr::Const(_) | Expr::Exp(_) | Expr::Log(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, min: u8) -> std::fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Var(v) => write!(f, "{v}")?,
            Expr::Const(c) => fmt_const(f, *c)?,
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 4)?;
            }
            Expr::Pow(a, k) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^{k}")?;
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.fmt_prec(f, 1)?;
                write!(f, ")")?;
            }
            Expr::Log(a) => {
                write!(f, "log(")?;
                a.fmt_prec(f, 1)?;
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn fmt_const(f: &mut std::fmt::Formatter<'_>, c: Complex64) -> std::fmt::Result {
    // Parsed trees only ever hold nonnegative reals or the literal `i`;
    // programmatic constants fall back to an evaluation-equivalent form.
    if c.im == 0.0 && c.re >= 0.0 {
        write!(f, "{}", c.re)
    } else if c.re == 0.0 && c.im == 1.0 {
        write!(f, "i")
    } else if c.im == 0.0 {
        write!(f, "(0 - {})", -c.re)
    } else {
        write!(f, "({} + {}*i)", c.re, c.im)
    }
}

// Smart constructors used by `derivative` to fold zeros and ones.

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == Complex64::ZERO)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == Complex64::ONE)
}

fn smart_add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(a.into(), b.into())
    }
}

fn smart_sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        smart_neg(b)
    } else {
        Expr::Sub(a.into(), b.into())
    }
}

fn smart_mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(Complex64::ZERO)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::Mul(a.into(), b.into())
    }
}

fn smart_div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(Complex64::ZERO)
    } else if is_one(&b) {
        a
    } else {
        Expr::Div(a.into(), b.into())
    }
}

fn smart_neg(a: Expr) -> Expr {
    if is_zero(&a) {
        a
    } else {
        Expr::Neg(a.into())
    }
}

fn poly_add(a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or(Complex64::ZERO);
            let y = b.get(k).copied().unwrap_or(Complex64::ZERO);
            x + y * sign
        })
        .collect()
}

fn poly_mul(a: &[Complex64], b: &[Complex64], cap: usize) -> Option<Vec<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Some(Vec::new());
    }
    let deg = a.len() + b.len() - 2;
    if deg > cap {
        // Respect the cap only when the dropped coefficients are nonzero.
        let tail_nonzero = a.iter().skip(cap + 1).any(|c| *c != Complex64::ZERO)
            || b.iter().skip(cap + 1).any(|c| *c != Complex64::ZERO);
        if deg > 4 * cap || tail_nonzero {
            return None;
        }
    }
    let mut out = vec![Complex64::ZERO; deg + 1];
    for (i, x) in a.iter().enumerate() {
        if *x == Complex64::ZERO {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    if out.len() > cap + 1 && out.iter().skip(cap + 1).any(|c| *c != Complex64::ZERO) {
        return None;
    }
    out.truncate((cap + 1).min(out.len()));
    Some(out)
}

// ─── parser ──────────────────────────────────────────────────────────

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            col: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn parse_full(mut self) -> Result<Expr> {
        let e = self.parse_expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(lhs.into(), rhs.into());
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Mul(lhs.into(), rhs.into());
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Div(lhs.into(), rhs.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_factor()?;
            return Ok(Expr::Neg(inner.into()));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.parse_int_exponent()?;
            return Ok(Expr::Pow(base.into(), exp));
        }
        Ok(base)
    }

    fn parse_int_exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let neg = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| (*c as char).is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent after `^`"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let mag: i32 = text
            .parse()
            .map_err(|_| self.error("integer exponent out of range"))?;
        Ok(if neg { -mag } else { mag })
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                if self.bump() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if (c as char).is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn parse_number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| (*c as char).is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // Optional exponent part: e or E, optional sign, digits.
        if self
            .src
            .get(self.pos)
            .is_some_and(|c| *c == b'e' || *c == b'E')
        {
            let mut look = self.pos + 1;
            if self
                .src
                .get(look)
                .is_some_and(|c| *c == b'+' || *c == b'-')
            {
                look += 1;
            }
            if self
                .src
                .get(look)
                .is_some_and(|c| (*c as char).is_ascii_digit())
            {
                self.pos = look;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| (*c as char).is_ascii_digit())
                {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .map_err(|_| self.error("invalid number"))?;
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("invalid numeric literal `{text}`")))?;
        Ok(Expr::Const(Complex64::new(value, 0.0)))
    }

    fn parse_ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| (*c as char).is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii ident")
            .to_string();
        match name.as_str() {
            "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            "exp" | "log" => {
                if self.peek() != Some(b'(') {
                    return Err(self.error(format!("`{name}` must be called as `{name}(...)`")));
                }
                self.pos += 1;
                let inner = self.parse_expr()?;
                if self.bump() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                if name == "exp" {
                    Ok(Expr::Exp(inner.into()))
                } else {
                    Ok(Expr::Log(inner.into()))
                }
            }
            _ => Ok(Expr::Var(name)),
        }
    }
}
