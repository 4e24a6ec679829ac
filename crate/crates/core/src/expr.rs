//! Arithmetic expressions over graded coordinates, with symbolic differentiation.
//!
//! Grammar (whitespace-insensitive, `^` binds tightest and is right associative;
//! unary minus binds looser than `^`, so `-x1^2 = -(x1^2)`):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | variable | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | abs | exp | sqrt
//! variable:= x1 … xq, and x, y, z as aliases of x1, x2, x3
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Abs,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `sign(u)`, produced only by differentiating `abs`.
    Sign(Box<Expr>),
}

impl Expr {
    /// Parses `src` with variables `x1 … x{nvars}`.
    pub fn parse(src: &str, nvars: usize) -> Result<Self> {
        let mut p = Parser { src: src.as_bytes(), pos: 0, nvars };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            Expr::Num(v) => T::lit(*v),
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Expr::Num(k) if k.fract() == 0.0 && k.abs() < 64.0 => base.powi(k as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Abs => v.abs(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                }
            }
            Expr::Sign(a) => {
                let v = a.eval(x);
                if v > T::zero() {
                    T::one()
                } else if v < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    fn is_const(&self, v: f64) -> bool {
        matches!(self, Expr::Num(c) if *c == v)
    }

    fn depends_on_vars(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Sign(a) => a.depends_on_vars(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_vars() || b.depends_on_vars()
            }
        }
    }

    /// Partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == k { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(k)),
            Add(a, b) => add(a.derivative(k), b.derivative(k)),
            Sub(a, b) => sub(a.derivative(k), b.derivative(k)),
            Mul(a, b) => add(mul(a.derivative(k), (**b).clone()), mul((**a).clone(), b.derivative(k))),
            Div(a, b) => div(sub(mul(a.derivative(k), (**b).clone()), mul((**a).clone(), b.derivative(k))), pow((**b).clone(), Num(2.0))),
            Pow(a, b) => {
                // exponents are constant (enforced by the parser): d(u^c) = c u^(c-1) u'
                let c = (**b).clone();
                let cm1 = match &c {
                    Num(v) => Num(v - 1.0),
                    _ => sub(c.clone(), Num(1.0)),
                };
                mul(mul(c, pow((**a).clone(), cm1)), a.derivative(k))
            }
            Call(f, a) => {
                let da = a.derivative(k);
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, Box::new(inner)),
                    Func::Cos => neg(Call(Func::Sin, Box::new(inner))),
                    Func::Abs => Sign(Box::new(inner)),
                    Func::Exp => self.clone(),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                };
                mul(outer, da)
            }
            Sign(_) => Num(0.0),
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_const(0.0) {
        b
    } else if b.is_const(0.0) {
        a
    } else if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        Expr::Num(x + y)
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_const(0.0) {
        a
    } else if a.is_const(0.0) {
        neg(b)
    } else if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        Expr::Num(x - y)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_const(0.0) || b.is_const(0.0) {
        Expr::Num(0.0)
    } else if a.is_const(1.0) {
        b
    } else if b.is_const(1.0) {
        a
    } else if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        Expr::Num(x * y)
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_const(0.0) {
        Expr::Num(0.0)
    } else if b.is_const(1.0) {
        a
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if b.is_const(1.0) {
        a
    } else if b.is_const(0.0) {
        Expr::Num(1.0)
    } else {
        Expr::Pow(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Abs => "abs",
                    Func::Exp => "exp",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({a})")
            }
            Expr::Sign(a) => write!(f, "sign({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Expression { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let at = self.pos;
            let exp = self.unary()?;
            if exp.depends_on_vars() {
                return Err(Error::Expression { pos: at, msg: "exponents must be constant".into() });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Expression { pos: start, msg: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "abs" => Some(Func::Abs),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        };
        if let Some(func) = func {
            if !self.eat(b'(') {
                return Err(self.err(format!("expected `(` after `{name}`")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        let var = match name {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()).filter(|&i| i >= 1).map(|i| i - 1),
        };
        match var {
            Some(i) if i < self.nvars => Ok(Expr::Var(i)),
            Some(i) => {
                Err(Error::Expression { pos: start, msg: format!("variable `{name}` (index {}) exceeds dimension {}", i + 1, self.nvars) })
            }
            None => Err(Error::Expression { pos: start, msg: format!("unknown identifier `{name}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        Expr::parse(s, x.len()).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        let x = [2.0, 3.0, 0.5];
        assert_eq!(ev("1 + 2 * 3", &x), 7.0);
        assert_eq!(ev("-x1^2", &x), -4.0);
        assert_eq!(ev("2^3^2", &x), 512.0);
        assert_eq!(ev("x1 - x2 - 1", &x), -2.0);
        assert_eq!(ev("x / y / z", &x), 2.0 / 3.0 / 0.5);
        assert_eq!(ev("2^-1", &x), 0.5);
        assert_eq!(ev("abs(x2 - 5) * cos(0)", &x), 2.0);
        assert!((ev("sin(pi/2) + 1e-3", &x) - 1.001).abs() < 1e-15);
        assert_eq!(ev("(x^2 + y^2)^2 + 16*z^2", &x), 169.0 + 4.0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(Expr::parse("x1 + ", 3).unwrap_err(), Error::Expression { pos: 5, msg: "unexpected end of input".into() });
        assert!(matches!(Expr::parse("x4", 3), Err(Error::Expression { pos: 0, .. })));
        assert!(matches!(Expr::parse("foo(x1)", 3), Err(Error::Expression { .. })));
        assert!(matches!(Expr::parse("x1^x2", 3), Err(Error::Expression { pos: 3, .. })));
        assert!(matches!(Expr::parse("(x1", 3), Err(Error::Expression { .. })));
        assert!(matches!(Expr::parse("x1 x2", 3), Err(Error::Expression { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let exprs = [
            "x1^2 * x2 - 3*x3",
            "sin(x1*x2) + cos(x3)^2",
            "sqrt(1 + x1^2 + x2^2) / (2 + x3)",
            "((x1^2 + x2^2)^2 + 16*x3^2)^0.25",
            "exp(-x1^2) * abs(x2 + 0.3)",
        ];
        let p = [0.4, -0.7, 0.9];
        for s in exprs {
            let e = Expr::parse(s, 3).unwrap();
            for k in 0..3 {
                let d: f64 = e.derivative(k).eval(&p);
                let h = 1e-6;
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let fd: f64 = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{s} d/dx{} {d} vs {fd}", k + 1);
            }
        }
    }
}
