//! Scalar coordinate expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)*
//! exponent:= ['-'] integer | '(' ['-'] integer ')'
//! primary := number | 'x' index | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sin | cos | sqrt
//! ```
//!
//! Variables are `x1 ..= xn`. Literals are decimal with an optional
//! exponent; there is no implicit multiplication.

mod jet;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use jet::{Jet1, Jet2, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{index} at byte {offset} exceeds dimension {dim}")]
    VariableOutOfRange {
        index: usize,
        dim: usize,
        offset: usize,
    },
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("expected {expected} coordinates, got {got}")]
    PointDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    fn function(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression AST. Variables are stored zero-based (`Var(0)` prints as `x1`).
///
/// Constants are never negative: [`Expr::constant`] wraps negative values in
/// a negation so that printing and re-parsing reproduces the same tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        assert!(c.is_finite(), "non-finite constant");
        if c < 0.0 {
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Const(-c)))
        } else {
            Expr::Const(c)
        }
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    /// The compile-time constant this expression denotes, if it is a bare
    /// (possibly negated) literal.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Unary(UnaryOp::Neg, e) => e.as_constant().map(|c| -c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        if op == UnaryOp::Neg {
            if let Some(c) = e.as_constant() {
                return Expr::constant(-c);
            }
        }
        Expr::Unary(op, Box::new(e))
    }

    pub fn exp(self) -> Expr {
        if self.is_zero() {
            return Expr::Const(1.0);
        }
        Expr::unary(UnaryOp::Exp, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self)
    }

    pub fn powi(self, k: i32) -> Expr {
        match k {
            0 => Expr::Const(1.0),
            1 => self,
            _ => Expr::Pow(Box::new(self), k),
        }
    }

    /// Largest zero-based variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, e) | Expr::Pow(e, _) => e.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, e) | Expr::Pow(e, _) => 1 + e.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates over any [`Real`] scalar; `vars[i]` is the value of `x{i+1}`.
    pub fn eval_with<T: Real>(&self, vars: &[T]) -> Result<T, ExprError> {
        match self {
            Expr::Const(c) => Ok(vars[0].lift(*c)),
            Expr::Var(i) => vars.get(*i).cloned().ok_or(ExprError::PointDimension {
                expected: i + 1,
                got: vars.len(),
            }),
            Expr::Unary(op, e) => {
                let a = e.eval_with(vars)?;
                let v = a.value();
                let domain = |reason: &str| ExprError::Domain {
                    node: self.to_string(),
                    reason: format!("{reason} (argument {v})"),
                };
                Ok(match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Log => {
                        if !(v > 0.0) {
                            return Err(domain("log of a nonpositive value"));
                        }
                        a.ln()
                    }
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Sqrt => {
                        if !(v > 0.0) {
                            return Err(domain("sqrt is not differentiable at nonpositive values"));
                        }
                        a.sqrt()
                    }
                })
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval_with(vars)?;
                let b = r.eval_with(vars)?;
                Ok(match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b.value() == 0.0 {
                            return Err(ExprError::Domain {
                                node: self.to_string(),
                                reason: "division by zero".into(),
                            });
                        }
                        a / b
                    }
                })
            }
            Expr::Pow(e, k) => {
                let a = e.eval_with(vars)?;
                if *k < 0 && a.value() == 0.0 {
                    return Err(ExprError::Domain {
                        node: self.to_string(),
                        reason: "negative power of zero".into(),
                    });
                }
                Ok(a.powi(*k))
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, ExprError> {
        if p.is_empty() {
            return self.eval_with(&[0.0]);
        }
        self.eval_with(p)
    }

    /// Value, gradient and Hessian at `p` by second-order forward mode.
    pub fn eval_jet(&self, p: &[f64]) -> Result<Jet2, ExprError> {
        if let Some(i) = self.max_var() {
            if i >= p.len() {
                return Err(ExprError::PointDimension {
                    expected: i + 1,
                    got: p.len(),
                });
            }
        }
        self.eval_with(&Jet2::coordinates(p))
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(z), _) if z == 0.0 => rhs,
            (_, Some(z)) if z == 0.0 => self,
            _ => Expr::Binary(BinaryOp::Add, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(z), _) if z == 0.0 => -rhs,
            (_, Some(z)) if z == 0.0 => self,
            _ => Expr::Binary(BinaryOp::Sub, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(z), _) | (_, Some(z)) if z == 0.0 => Expr::zero(),
            (Some(o), _) if o == 1.0 => rhs,
            (_, Some(o)) if o == 1.0 => self,
            (Some(m), _) if m == -1.0 => -rhs,
            (_, Some(m)) if m == -1.0 => -self,
            _ => Expr::Binary(BinaryOp::Mul, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match rhs.as_constant() {
            Some(o) if o == 1.0 => self,
            _ if self.is_zero() => Expr::zero(),
            _ => Expr::Binary(BinaryOp::Div, Box::new(self), Box::new(rhs)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if let Expr::Unary(UnaryOp::Neg, inner) = self {
            return *inner;
        }
        Expr::unary(UnaryOp::Neg, self)
    }
}

fn format_constant(c: f64) -> String {
    let plain = format!("{c}");
    if plain.len() <= 24 {
        plain
    } else {
        format!("{c:e}")
    }
}

/// Fully parenthesized rendering; re-parsing yields a structurally identical AST.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", format_constant(*c)),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, k) if *k < 0 => write!(f, "({e}^({k}))"),
            Expr::Pow(e, k) => write!(f, "({e}^{k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Ident(rest[..len].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - s
        };
        let mut integer = true;
        let int_digits = digits(&mut i);
        let mut frac_digits = 0;
        if i < bytes.len() && bytes[i] == b'.' {
            integer = false;
            i += 1;
            frac_digits = digits(&mut i);
        }
        if int_digits + frac_digits == 0 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                return Err(ExprError::Syntax {
                    offset: i,
                    message: "malformed exponent in number".into(),
                });
            }
            integer = false;
            i = j;
        }
        let text = &self.src[start..i];
        self.pos = i;
        let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        Ok((Tok::Num(v, integer), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (t, o) = self.lexer.next()?;
        self.tok = t;
        self.offset = o;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while self.tok == Tok::Op('^') {
            self.bump()?;
            let k = self.exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.tok == Tok::LParen;
        if paren {
            self.bump()?;
        }
        let negative = self.tok == Tok::Op('-');
        if negative {
            self.bump()?;
        }
        let k = match self.tok {
            Tok::Num(v, true) if v <= i32::MAX as f64 => v as i32,
            _ => return self.error("exponent must be an integer constant"),
        };
        self.bump()?;
        if paren {
            if self.tok != Tok::RParen {
                return self.error("expected `)`");
            }
            self.bump()?;
        }
        Ok(if negative { -k } else { k })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset;
        match self.tok.clone() {
            Tok::Num(v, _) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.error("expected `)`");
                }
                self.bump()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(op) = UnaryOp::function(&name) {
                    if self.tok != Tok::LParen {
                        return self.error(format!("expected `(` after `{name}`"));
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    if self.tok != Tok::RParen {
                        return self.error("expected `)`");
                    }
                    self.bump()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                if let Some(index) = variable_index(&name) {
                    if index == 0 || index > self.dim {
                        return Err(ExprError::VariableOutOfRange {
                            index,
                            dim: self.dim,
                            offset,
                        });
                    }
                    return Ok(Expr::Var(index - 1));
                }
                Err(ExprError::UnknownIdentifier { name, offset })
            }
            Tok::End => self.error("unexpected end of input"),
            Tok::Op(_) | Tok::RParen => self.error("expected an operand"),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses `text` as an expression in the coordinates `x1 ..= x{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        offset: 0,
        dim,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

/// Convenience wrapper: value, gradient and Hessian of `e` at `p`.
pub fn eval_jet(e: &Expr, p: &[f64]) -> Result<Jet2, ExprError> {
    e.eval_jet(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exp_of_product() {
        let e = parse("exp(x1*x3)", 4).unwrap();
        let want = Expr::Unary(
            UnaryOp::Exp,
            Box::new(Expr::Binary(
                BinaryOp::Mul,
                Box::new(Expr::Var(0)),
                Box::new(Expr::Var(2)),
            )),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn syntax_error_offset() {
        match parse("x1 + * 2", 4) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_out_of_range() {
        assert!(matches!(
            parse("x5", 4),
            Err(ExprError::VariableOutOfRange { index: 5, dim: 4, .. })
        ));
        assert!(matches!(
            parse("x0", 4),
            Err(ExprError::VariableOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            parse("tan(x1)", 2),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
    }

    #[test]
    fn precedence() {
        // -x1^2 is -(x1^2); unary minus binds tighter than *
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse("2 - 3 * -x1 / 2", 1).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 5.0);
        let e = parse("x1^-2", 1).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.25);
        assert!(parse("x1^2.5", 1).is_err());
        assert!(parse("x1^x1", 1).is_err());
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(parse("2 x1", 2).is_err());
        assert!(parse("2(x1)", 2).is_err());
    }

    #[test]
    fn literal_forms() {
        let e = parse("1.5e-3 + .5 + 2E2", 1).unwrap();
        assert!((e.eval(&[0.0]).unwrap() - 200.5015).abs() < 1e-12);
        assert!(parse("1e", 1).is_err());
    }

    #[test]
    fn jet_of_exp_product() {
        let e = parse("exp(x1*x3)", 4).unwrap();
        let j = e.eval_jet(&[1.0, 0.0, 2.0, 0.0]).unwrap();
        let e2 = 2f64.exp();
        assert!((j.value - e2).abs() < 1e-14);
        assert!((j.grad[0] - 2.0 * e2).abs() < 1e-13);
        assert!((j.grad[2] - e2).abs() < 1e-13);
    }

    #[test]
    fn bilinear_hessian() {
        let e = parse("x1*x2", 3).unwrap();
        let j = e.eval_jet(&[0.3, -1.2, 5.0]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = if (a, b) == (0, 1) || (a, b) == (1, 0) { 1.0 } else { 0.0 };
                assert_eq!(j.hess_at(a, b), want);
            }
        }
    }

    #[test]
    fn pole_is_domain_error() {
        let e = parse("1/x1", 2).unwrap();
        match e.eval_jet(&[0.0, 1.0]) {
            Err(ExprError::Domain { node, .. }) => assert_eq!(node, "(1 / x1)"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("log(x1)", 1).unwrap().eval_jet(&[-1.0]).is_err());
    }

    #[test]
    fn printing_reparses_identically() {
        for src in ["exp(x1*x3)", "-x1^2 + 3/(x2 - 1)", "sqrt(1 + x1^2)^-3", "--x1"] {
            let e = parse(src, 3).unwrap();
            assert_eq!(parse(&e.to_string(), 3).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn combinators_fold_trivial_constants() {
        let x = Expr::var(0);
        assert_eq!(x.clone() * Expr::zero(), Expr::zero());
        assert_eq!(x.clone() * Expr::constant(1.0), x);
        assert_eq!(Expr::zero().exp(), Expr::Const(1.0));
        let neg = Expr::constant(-2.5);
        assert_eq!(parse(&neg.to_string(), 1).unwrap(), neg);
    }
}
