//! Closed-form scalar expressions in `x` and `y` for configuration files.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | 'r' | 'theta' | 'pi' | 'e'
//!         | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | exp | log | sqrt | abs | tanh | atan
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    R,
    Theta,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Atan,
}

/// A parsed expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    src: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { src: src.to_string(), root })
    }

    pub fn constant(v: f64) -> Self {
        Self { src: format!("{v}"), root: Node::Num(v) }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        eval(&self.root, x, y)
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

fn eval(n: &Node, x: f64, y: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::X => x,
        Node::Y => y,
        Node::R => x.hypot(y),
        Node::Theta => y.atan2(x),
        Node::Neg(a) => -eval(a, x, y),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, y), eval(b, x, y));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, x, y);
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Abs => v.abs(),
                Func::Tanh => v.tanh(),
                Func::Atan => v.atan(),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{s}' at column {} in '{src}'", start + 1)))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Config(format!(
                "unexpected character '{c}' at column {} in '{src}'",
                i + 1
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        let col = self.tokens.get(self.pos).map_or(self.src.len(), |t| t.1) + 1;
        Error::Config(format!("{msg} at column {col} in expression '{}'", self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op(_) => {
                self.pos -= 1;
                Err(self.error("expected a value"))
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Node::X),
                    "y" => return Ok(Node::Y),
                    "r" => return Ok(Node::R),
                    "theta" => return Ok(Node::Theta),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "tanh" => Func::Tanh,
                    "atan" => Func::Atan,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error(&format!("unknown identifier '{name}'")));
                    }
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Node::Call(func, Box::new(arg)))
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2*x^2 - y/4").unwrap();
        assert_eq!(e.eval(3.0, 8.0), 1.0 + 18.0 - 2.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0, 0.0), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0, 0.0), 512.0);
        assert_eq!(Expr::parse("1.5e-1*4").unwrap().eval(0.0, 0.0), 0.15 * 4.0);
        assert!((Expr::parse("sin(pi/2) + exp(0) + sqrt(r)").unwrap().eval(3.0, 4.0) - (2.0 + 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_column() {
        let e = Expr::parse("1 + foo(x)").unwrap_err().to_string();
        assert!(e.contains("column 5"), "{e}");
        assert!(Expr::parse("(1 + x").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("2 $ 3").is_err());
        assert!(Expr::parse("x y").is_err());
    }
}
