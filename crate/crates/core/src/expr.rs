//! Coordinate expressions: parsing, printing and evaluation.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers resolve to chart coordinates or bound parameters; `pi` is the
//! only builtin constant.

use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }

    fn apply_jet(self, x: &ScalarJet) -> ScalarJet {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
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
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    Coord { index: usize, name: String },
    Param { name: String, value: f64 },
    Pi,
    Neg(Box<Expression>),
    Binary {
        op: BinOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Call { func: Func, arg: Box<Expression> },
}

/// Names an expression may refer to.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub coordinates: &'a [String],
    pub parameters: &'a BTreeMap<String, f64>,
}

impl Expression {
    pub fn zero() -> Self {
        Expression::Num(0.0)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expression::Num(v) if *v == 0.0)
    }

    /// Parses a standalone expression (line 1, column 1).
    pub fn parse(text: &str, scope: Scope<'_>) -> Result<Self> {
        Self::parse_at(text, scope, 1, 1)
    }

    /// Parses an expression embedded in a document; `line`/`column` locate
    /// the first character of `text` for error reporting.
    pub fn parse_at(text: &str, scope: Scope<'_>, line: usize, column: usize) -> Result<Self> {
        let tokens = tokenize(text, line, column)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            scope,
            line,
            end_column: column + text.chars().count(),
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                line,
                column: tok.column,
                message: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(expr)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expression::Num(v) => *v,
            Expression::Coord { index, .. } => x[*index],
            Expression::Param { value, .. } => *value,
            Expression::Pi => std::f64::consts::PI,
            Expression::Neg(e) => -e.eval(x),
            Expression::Binary { op, lhs, rhs } => {
                let (a, b) = (lhs.eval(x), rhs.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow_f64(a, b),
                }
            }
            Expression::Call { func, arg } => func.apply(arg.eval(x)),
        }
    }

    /// Evaluates with jet-valued coordinates, propagating first and second
    /// derivatives through the chain rule. Passing `ScalarJet::variable`
    /// seeds gives partials with respect to the chart coordinates; passing
    /// composed jets gives partials with respect to another chart.
    pub fn eval_jet(&self, x: &[ScalarJet]) -> ScalarJet {
        let n = x.first().map_or(0, ScalarJet::dim);
        match self {
            Expression::Num(v) => ScalarJet::constant(*v, n),
            Expression::Coord { index, .. } => x[*index].clone(),
            Expression::Param { value, .. } => ScalarJet::constant(*value, n),
            Expression::Pi => ScalarJet::constant(std::f64::consts::PI, n),
            Expression::Neg(e) => -&e.eval_jet(x),
            Expression::Binary { op, lhs, rhs } => {
                let a = lhs.eval_jet(x);
                match op {
                    BinOp::Pow => {
                        if let Some(k) = rhs.constant_value() {
                            a.powf(k)
                        } else {
                            a.pow(&rhs.eval_jet(x))
                        }
                    }
                    _ => {
                        let b = rhs.eval_jet(x);
                        match op {
                            BinOp::Add => &a + &b,
                            BinOp::Sub => &a - &b,
                            BinOp::Mul => &a * &b,
                            BinOp::Div => &a / &b,
                            BinOp::Pow => unreachable!(),
                        }
                    }
                }
            }
            Expression::Call { func, arg } => func.apply_jet(&arg.eval_jet(x)),
        }
    }

    /// Value of a coordinate-free subexpression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.depends_on_coordinates() {
            None
        } else {
            Some(self.eval(&[]))
        }
    }

    pub fn depends_on_coordinates(&self) -> bool {
        match self {
            Expression::Coord { .. } => true,
            Expression::Num(_) | Expression::Param { .. } | Expression::Pi => false,
            Expression::Neg(e) => e.depends_on_coordinates(),
            Expression::Binary { lhs, rhs, .. } => {
                lhs.depends_on_coordinates() || rhs.depends_on_coordinates()
            }
            Expression::Call { arg, .. } => arg.depends_on_coordinates(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Binary { op, .. } => op.precedence(),
            Expression::Neg(_) => 3,
            Expression::Num(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn pow_f64(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Num(v) => write!(f, "{v:?}"),
            Expression::Coord { name, .. } | Expression::Param { name, .. } => f.write_str(name),
            Expression::Pi => f.write_str("pi"),
            Expression::Neg(e) => {
                f.write_str("-")?;
                e.write_child(f, 3)
            }
            Expression::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                match op {
                    BinOp::Pow => {
                        lhs.write_child(f, 5)?;
                        f.write_str(op.symbol())?;
                        rhs.write_child(f, 3)
                    }
                    _ => {
                        lhs.write_child(f, p)?;
                        f.write_str(op.symbol())?;
                        rhs.write_child(f, p + 1)
                    }
                }
            }
            Expression::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => f.write_str(s),
            TokenKind::Op(c) => write!(f, "{c}"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(text: &str, line: usize, column: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = column + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let value = lit.parse::<f64>().map_err(|_| Error::Syntax {
                line,
                column: col,
                message: format!("malformed number `{lit}`"),
            })?;
            tokens.push(Token {
                kind: TokenKind::Num(value),
                column: col,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                column: col,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                _ => {
                    return Err(Error::Syntax {
                        line,
                        column: col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            tokens.push(Token { kind, column: col });
            i += 1;
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    scope: Scope<'a>,
    line: usize,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn error_here(&self, message: &str) -> Error {
        let column = self.peek().map_or(self.end_column, |t| t.column);
        Error::Syntax {
            line: self.line,
            column,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expression::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expression::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression> {
        let Some(tok) = self.next() else {
            self.pos -= 1;
            return Err(self.error_here("unexpected end of expression"));
        };
        match tok.kind {
            TokenKind::Num(v) => Ok(Expression::Num(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
                    let func = Func::from_name(&name).ok_or_else(|| Error::Syntax {
                        line: self.line,
                        column: tok.column,
                        message: format!("unknown function `{name}`"),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expression::Call {
                        func,
                        arg: Box::new(arg),
                    });
                }
                self.resolve(name, tok.column)
            }
            TokenKind::Op(c) => Err(Error::Syntax {
                line: self.line,
                column: tok.column,
                message: format!("unexpected operator `{c}`"),
            }),
            TokenKind::RParen => Err(Error::Syntax {
                line: self.line,
                column: tok.column,
                message: "unexpected `)`".to_string(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here("expected `)`")),
        }
    }

    fn resolve(&self, name: String, column: usize) -> Result<Expression> {
        if let Some(index) = self.scope.coordinates.iter().position(|c| *c == name) {
            return Ok(Expression::Coord { index, name });
        }
        if let Some(value) = self.scope.parameters.get(&name) {
            return Ok(Expression::Param {
                value: *value,
                name,
            });
        }
        if name == "pi" {
            return Ok(Expression::Pi);
        }
        if Func::from_name(&name).is_some() {
            return Err(Error::Syntax {
                line: self.line,
                column,
                message: format!("function `{name}` used without an argument"),
            });
        }
        Err(Error::UnknownIdentifier {
            name,
            line: self.line,
            column,
        })
    }
}
