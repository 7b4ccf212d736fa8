use std::fmt;

/// Built-in unary functions and negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
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
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    /// Binding strength used by the parser and printer.
    /// `pow` binds tighter than unary negation, which binds tighter
    /// than `mul`/`div`, which bind tighter than `add`/`sub`.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Parsed symbolic expression for one metric or vector-field component.
///
/// Variables are coordinate indices `0..n`; the parser maps coordinate
/// names (`x0..x{n-1}` plus aliases) to indices, so the tree itself is
/// name-free. Trees are immutable after parsing and evaluation is pure,
/// so they can be shared across threads freely.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::binary(BinOp::Mul, a, b)
    }

    /// Largest variable index plus one, i.e. the smallest dimension this
    /// expression is valid for. Constants report 0.
    pub fn min_dimension(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Unary(_, e) => e.min_dimension(),
            Expr::Binary(_, a, b) => a.min_dimension().max(b.min_dimension()),
        }
    }

    fn precedence_level(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 => 3, // prints with a leading minus
            Expr::Const(_) | Expr::Var(_) => 5,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Unary(_, _) => 5, // function call carries its own parens
            Expr::Binary(op, _, _) => op.precedence(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let level = self.precedence_level();
        let parens = level < min;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(c) => {
                if *c == c.trunc() && c.abs() < 1e15 {
                    write!(f, "{}", *c as i64)?;
                } else {
                    write!(f, "{c:?}")?;
                }
            }
            Expr::Var(i) => write!(f, "x{i}")?,
            Expr::Unary(UnaryOp::Neg, e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 4)?;
            }
            Expr::Unary(op, e) => {
                write!(f, "{}(", op.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Binary(op, a, b) => {
                // Left-associative chains reuse the operator level on the
                // left; the right side must bind strictly tighter. `^` is
                // right-associative so the roles flip.
                let (lmin, rmin) = match op {
                    BinOp::Pow => (op.precedence() + 1, op.precedence()),
                    _ => (op.precedence(), op.precedence() + 1),
                };
                a.fmt_prec(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, rmin)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
