use std::collections::HashMap;

use thiserror::Error;

use super::ast::{BinOp, Expr, UnaryOp};

/// Parse failure with the byte offset into the source where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unbalanced parenthesis")]
    UnbalancedParen,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("function `{name}` takes 1 argument, found {found}")]
    ArityMismatch { name: String, found: usize },
    #[error("invalid number literal")]
    InvalidNumber,
    #[error("trailing input")]
    TrailingInput,
}

/// Maps coordinate names to variable indices. `x0..x{n-1}` are always
/// accepted; a metric file may add aliases such as `t,x,y,z`.
#[derive(Debug, Clone, Default)]
pub struct CoordTable {
    aliases: HashMap<String, usize>,
}

impl CoordTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from a list of coordinate names; name `k` maps to
    /// variable index `k`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut t = Self::new();
        for (i, name) in names.iter().enumerate() {
            t.alias(name.as_ref(), i);
        }
        t
    }

    pub fn alias(&mut self, name: &str, index: usize) {
        self.aliases.insert(name.to_string(), index);
    }

    fn resolve(&self, name: &str, dim: usize) -> Option<usize> {
        if let Some(&i) = self.aliases.get(name) {
            return (i < dim).then_some(i);
        }
        let digits = name.strip_prefix('x')?;
        if digits.is_empty() || digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        let i: usize = digits.parse().ok()?;
        (i < dim).then_some(i)
    }
}

/// Parses `src` into an expression over `dim` coordinates named
/// `x0..x{dim-1}`.
///
/// Operator precedence, tightest first: `^`, unary `-`, `*` `/`, `+` `-`.
/// `^` is right-associative. Functions are call-style: `sin(expr)`.
pub fn parse_expr(src: &str, dim: usize) -> Result<Expr, ParseError> {
    parse_expr_with(src, dim, &CoordTable::new())
}

/// As [`parse_expr`] but with coordinate name aliases.
pub fn parse_expr_with(src: &str, dim: usize, coords: &CoordTable) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        dim,
        coords,
    };
    p.skip_ws();
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(ParseErrorKind::TrailingInput));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    coords: &'a CoordTable,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(acc),
            };
            self.pos += 1;
            self.skip_ws();
            let rhs = self.term()?;
            acc = Expr::binary(op, acc, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(acc),
            };
            self.pos += 1;
            self.skip_ws();
            let rhs = self.unary()?;
            acc = Expr::binary(op, acc, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            self.skip_ws();
            // A minus directly in front of a literal folds into the
            // constant, so `-2` round-trips as a single node.
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::unary(UnaryOp::Neg, other),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            // Right-associative; the exponent may carry a unary minus.
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err(ParseErrorKind::UnbalancedParen));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.err(ParseErrorKind::UnexpectedChar(c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // `2e` followed by something else: the `e` was not an
                // exponent marker after all.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::InvalidNumber,
        })?;
        Ok(Expr::Const(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let func = match name.as_str() {
                "sin" => UnaryOp::Sin,
                "cos" => UnaryOp::Cos,
                "exp" => UnaryOp::Exp,
                "sqrt" => UnaryOp::Sqrt,
                "abs" => UnaryOp::Abs,
                _ => {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    })
                }
            };
            self.pos += 1;
            let mut args = vec![self.expr()?];
            self.skip_ws();
            while self.eat(b',') {
                args.push(self.expr()?);
                self.skip_ws();
            }
            if !self.eat(b')') {
                return Err(self.err(ParseErrorKind::UnbalancedParen));
            }
            if args.len() != 1 {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::ArityMismatch {
                        name,
                        found: args.len(),
                    },
                });
            }
            return Ok(Expr::unary(func, args.pop().unwrap()));
        }
        match self.coords.resolve(&name, self.dim) {
            Some(i) => Ok(Expr::Var(i)),
            None => Err(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownIdentifier(name),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_construction() {
        assert_eq!(
            parse_expr("x0*x0", 2).unwrap(),
            Expr::mul(Expr::var(0), Expr::var(0))
        );
    }

    #[test]
    fn precedence_pow_over_neg() {
        // -x^2 must parse as -(x^2)
        assert_eq!(
            parse_expr("-x0^2", 1).unwrap(),
            Expr::unary(
                UnaryOp::Neg,
                Expr::binary(BinOp::Pow, Expr::var(0), Expr::constant(2.0))
            )
        );
    }

    #[test]
    fn precedence_mul_over_add() {
        assert_eq!(
            parse_expr("1 + 2*x0", 1).unwrap(),
            Expr::add(
                Expr::constant(1.0),
                Expr::mul(Expr::constant(2.0), Expr::var(0))
            )
        );
    }

    #[test]
    fn pow_right_associative() {
        assert_eq!(
            parse_expr("x0^2^3", 1).unwrap(),
            Expr::binary(
                BinOp::Pow,
                Expr::var(0),
                Expr::binary(BinOp::Pow, Expr::constant(2.0), Expr::constant(3.0))
            )
        );
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse_expr("1/(x0", 1).unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.kind, ParseErrorKind::UnbalancedParen);
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expr("x0 + y", 1).unwrap_err();
        assert_eq!(err.offset, 5);
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(ref s) if s == "y"));
    }

    #[test]
    fn variable_out_of_dimension() {
        let err = parse_expr("x3", 2).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn arity_mismatch() {
        let err = parse_expr("sin(x0, x0)", 1).unwrap_err();
        assert!(
            matches!(err.kind, ParseErrorKind::ArityMismatch { ref name, found: 2 } if name == "sin")
        );
    }

    #[test]
    fn aliases() {
        let coords = CoordTable::from_names(&["t", "x", "y", "z"]);
        let e = parse_expr_with("-(t^2) + x*z", 4, &coords).unwrap();
        assert_eq!(e.min_dimension(), 4);
    }

    #[test]
    fn negative_literal_folds() {
        assert_eq!(parse_expr("-2", 1).unwrap(), Expr::constant(-2.0));
        assert_eq!(
            parse_expr("x0^-2", 1).unwrap(),
            Expr::binary(BinOp::Pow, Expr::var(0), Expr::constant(-2.0))
        );
    }

    #[test]
    fn display_round_trip() {
        for src in [
            "x0*x0",
            "-x0^2",
            "(x0 + 1)*(x0 - 1)",
            "sin(x1)^2 + cos(x1)^2",
            "1/(1 + exp(-x0))",
            "sqrt(abs(x0)) * 2.5e-3",
            "x0 - -2",
            "-(x0*x1)",
            "(x0^2)^3",
        ] {
            let ast = parse_expr(src, 2).unwrap();
            let printed = ast.to_string();
            let reparsed = parse_expr(&printed, 2).unwrap();
            assert_eq!(ast, reparsed, "round trip failed for `{src}` -> `{printed}`");
        }
    }
}
