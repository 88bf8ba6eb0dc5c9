use std::fmt;

use serde::Serialize;

use super::ast::{BinOp, Expr, ExprKind, Func};
use super::lexer::{tokenize, Tok, Token};
use crate::jet::{Coord, Dims};

const MAX_DEPTH: usize = 200;

/// Syntax or semantic error with its byte offset and the tokens that would
/// have been accepted there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseDiagnostic {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseDiagnostic {}

impl ParseDiagnostic {
    fn new(src: &str, offset: usize, message: String, expected: &[&str]) -> Self {
        let offset = offset.min(src.len());
        let before = &src.as_bytes()[..offset];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        let col = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
        ParseDiagnostic {
            offset,
            line,
            col,
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Parses `source` against the given dimensions.
pub fn parse(source: &str, dims: Dims) -> Result<Expr, ParseDiagnostic> {
    if source.trim().is_empty() {
        return Err(ParseDiagnostic::new(
            source,
            0,
            "empty expression".into(),
            &["expression"],
        ));
    }
    let tokens = tokenize(source)
        .map_err(|(off, msg)| ParseDiagnostic::new(source, off, msg, &[]))?;
    let mut p = Parser {
        src: source,
        tokens,
        pos: 0,
        dims,
        depth: 0,
    };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    dims: Dims,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseDiagnostic {
        ParseDiagnostic::new(
            self.src,
            self.offset(),
            format!("unexpected {}", self.peek().describe()),
            expected,
        )
    }

    fn enter(&mut self) -> Result<(), ParseDiagnostic> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseDiagnostic::new(
                self.src,
                self.offset(),
                "expression nested too deeply".into(),
                &[],
            ));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseDiagnostic> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let off = self.bump().offset;
            let rhs = self.term()?;
            lhs = node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), off);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let off = self.bump().offset;
            let rhs = self.unary()?;
            lhs = node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), off);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseDiagnostic> {
        if self.peek() == &Tok::Minus {
            let off = self.bump().offset;
            self.enter()?;
            let inner = self.power()?;
            self.depth -= 1;
            return Ok(node(ExprKind::Neg(Box::new(inner)), off));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseDiagnostic> {
        let base = self.atom()?;
        if self.peek() == &Tok::Caret {
            let off = self.bump().offset;
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(node(
                ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exp)),
                off,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseDiagnostic> {
        const ATOM: &[&str] = &["number", "variable", "function", "`(`"];
        match self.peek().clone() {
            Tok::Num(v) => {
                let off = self.bump().offset;
                Ok(node(ExprKind::Const(v), off))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if self.peek() != &Tok::RParen {
                    return Err(self.unexpected(&["`)`"]));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let off = self.offset();
                if self.tokens[self.pos + 1].tok == Tok::LParen {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseDiagnostic::new(
                            self.src,
                            off,
                            format!("`{name}` is not a function"),
                            &["sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "abs"],
                        ));
                    };
                    self.bump();
                    self.bump();
                    let arg = self.expr()?;
                    if self.peek() != &Tok::RParen {
                        return Err(self.unexpected(&["`)`"]));
                    }
                    self.bump();
                    return Ok(node(ExprKind::Call(func, Box::new(arg)), off));
                }
                let coord = self.variable(&name, off)?;
                self.bump();
                Ok(node(ExprKind::Var(coord), off))
            }
            _ => Err(self.unexpected(ATOM)),
        }
    }

    fn variable(&self, name: &str, off: usize) -> Result<Coord, ParseDiagnostic> {
        let Some(coord) = parse_variable(name) else {
            let msg = if Func::from_name(name).is_some() {
                format!("function `{name}` needs an argument")
            } else {
                format!("unknown identifier `{name}`")
            };
            return Err(ParseDiagnostic::new(
                self.src,
                off,
                msg,
                &["t<α>", "x<i>", "v<i>_<α>"],
            ));
        };
        self.dims.check(coord).map_err(|_| {
            ParseDiagnostic::new(
                self.src,
                off,
                format!(
                    "variable `{name}` out of range for p={}, n={}",
                    self.dims.p, self.dims.n
                ),
                &[],
            )
        })?;
        Ok(coord)
    }
}

fn node(kind: ExprKind, offset: usize) -> Expr {
    Expr { kind, offset }
}

fn digit(c: u8) -> Option<usize> {
    matches!(c, b'1'..=b'9').then(|| (c - b'0') as usize - 1)
}

fn parse_variable(name: &str) -> Option<Coord> {
    let b = name.as_bytes();
    match b {
        [b't', d] => Some(Coord::T(digit(*d)?)),
        [b'x', d] => Some(Coord::X(digit(*d)?)),
        [b'v', i, b'_', a] => Some(Coord::V(digit(*i)?, digit(*a)?)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: usize, n: usize) -> Dims {
        Dims::new(p, n).unwrap()
    }

    #[test]
    fn kinetic_term() {
        let e = parse("v1_1*v1_1 + v2_1*v2_1", d(1, 2)).unwrap();
        let ExprKind::Binary(BinOp::Add, l, _) = &e.kind else {
            panic!("expected a sum, got {e:?}");
        };
        assert!(matches!(l.kind, ExprKind::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn h_is_not_a_function() {
        let err = parse("h(1,1)", d(1, 1)).unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.message.contains("not a function"));
    }

    #[test]
    fn out_of_range_variable() {
        let err = parse("x3 + 1", d(1, 2)).unwrap_err();
        assert!(err.message.contains("out of range"));
        assert!(parse("v1_3", d(2, 1)).is_err());
    }

    #[test]
    fn right_associative_power() {
        let a = parse("x1^2^3", d(1, 1)).unwrap();
        let b = parse("x1^(2^3)", d(1, 1)).unwrap();
        assert_eq!(a, b);
        let c = parse("-x1^2", d(1, 1)).unwrap();
        assert!(matches!(c.kind, ExprKind::Neg(_)));
    }

    #[test]
    fn diagnostics_report_line_and_column() {
        let err = parse("1 +\n  * 2", d(1, 1)).unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(err.to_string().starts_with("2:3: "));
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn rejects_garbage() {
        for src in ["", "   ", "1 2", "(1", "sin", "sin(", "2*", "--x1", "x0", "v1_", "1)"] {
            assert!(parse(src, d(2, 2)).is_err(), "{src:?} should not parse");
        }
    }

    #[test]
    fn deep_nesting_is_a_diagnostic() {
        let src = "(".repeat(5000) + "1" + &")".repeat(5000);
        assert!(parse(&src, d(1, 1)).is_err());
        let src = "-1^".repeat(3000) + "2";
        assert!(parse(&src, d(1, 1)).is_err());
    }
}
