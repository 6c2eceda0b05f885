use std::fmt;

use super::ScenarioError;

/// A signal expression over hybrid time `(t, j)` from a fixed basis:
/// arithmetic, `sin`, `cos`, `exp`, powers, and right-continuous step tables
/// over `t`. Scenarios are restricted to this basis so they stay portable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    J,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    /// `table(t0: v0, t1: v1, ...)`: the value `v_k` of the latest `t_k <= t`
    /// (and `v0` before `t0`).
    Table(Vec<(f64, f64)>),
}

impl Expr {
    pub fn eval(&self, t: f64, j: u32) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::T => t,
            Expr::J => f64::from(j),
            Expr::Neg(e) => -e.eval(t, j),
            Expr::Add(a, b) => a.eval(t, j) + b.eval(t, j),
            Expr::Sub(a, b) => a.eval(t, j) - b.eval(t, j),
            Expr::Mul(a, b) => a.eval(t, j) * b.eval(t, j),
            Expr::Div(a, b) => a.eval(t, j) / b.eval(t, j),
            Expr::Pow(a, b) => a.eval(t, j).powf(b.eval(t, j)),
            Expr::Sin(e) => e.eval(t, j).sin(),
            Expr::Cos(e) => e.eval(t, j).cos(),
            Expr::Exp(e) => e.eval(t, j).exp(),
            Expr::Table(rows) => {
                let mut value = rows.first().map_or(0.0, |r| r.1);
                for (tk, vk) in rows {
                    if t >= *tk {
                        value = *vk;
                    }
                }
                value
            }
        }
    }

    pub fn parse(src: &str) -> Result<Expr, ScenarioError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src: src.to_string() };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("trailing input after expression"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    /// Canonical, fully parenthesised form; parsing it back yields the same
    /// tree, which is what scenario round-trips rely on.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::T => write!(f, "t"),
            Expr::J => write!(f, "j"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Table(rows) => {
                write!(f, "table(")?;
                for (i, (t, v)) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t:?}: {v:?}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ScenarioError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            ':' => {
                out.push(Token::Colon);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let num = text.parse::<f64>().map_err(|_| ScenarioError::Parse {
                    line: 0,
                    msg: format!("bad number {text:?} in expression {src:?}"),
                })?;
                out.push(Token::Num(num));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(ScenarioError::Parse {
                    line: 0,
                    msg: format!("unexpected character {other:?} in expression {src:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    src: String,
}

impl Parser {
    fn error(&self, msg: &str) -> ScenarioError {
        ScenarioError::Parse { line: 0, msg: format!("{msg} in expression {:?}", self.src) }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Token) -> Result<(), ScenarioError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            _ => Err(self.error(&format!("expected {tok:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ScenarioError> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ScenarioError> {
        let mut lhs = self.factor()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Star => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ScenarioError> {
        let base = self.unary()?;
        if let Some(Token::Caret) = self.peek() {
            self.next();
            let exp = self.factor()?; // right-associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ScenarioError> {
        if let Some(Token::Minus) = self.peek() {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ScenarioError> {
        match self.next() {
            Some(Token::Num(x)) => Ok(Expr::Num(x)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::T),
                "j" => Ok(Expr::J),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    self.expect(Token::LParen)?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    })
                }
                "table" => {
                    self.expect(Token::LParen)?;
                    let mut rows = Vec::new();
                    loop {
                        let t = match self.next() {
                            Some(Token::Num(x)) => x,
                            Some(Token::Minus) => match self.next() {
                                Some(Token::Num(x)) => -x,
                                _ => return Err(self.error("expected number after '-'")),
                            },
                            _ => return Err(self.error("expected table time")),
                        };
                        self.expect(Token::Colon)?;
                        let v = match self.next() {
                            Some(Token::Num(x)) => x,
                            Some(Token::Minus) => match self.next() {
                                Some(Token::Num(x)) => -x,
                                _ => return Err(self.error("expected number after '-'")),
                            },
                            _ => return Err(self.error("expected table value")),
                        };
                        rows.push((t, v));
                        match self.next() {
                            Some(Token::Comma) => continue,
                            Some(Token::RParen) => break,
                            _ => return Err(self.error("expected ',' or ')' in table")),
                        }
                    }
                    Ok(Expr::Table(rows))
                }
                other => Err(self.error(&format!("unknown identifier {other:?}"))),
            },
            _ => Err(self.error("unexpected end of expression")),
        }
    }
}
