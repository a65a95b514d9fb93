//! Expression trees over `x1..xd`.

use super::dual::Scalar;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Abs,
    Max,
    Min,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Max => "max",
            Func::Min => "min",
        }
    }

    pub fn is_variadic(self) -> bool {
        matches!(self, Func::Max | Func::Min)
    }
}

/// Expression node. Variables are stored zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Largest variable index used, zero-based.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Interprets the tree. `var(i)` supplies the value of `x_{i+1}`.
    pub fn eval<S: Scalar>(&self, var: &impl Fn(usize) -> S) -> S {
        match self {
            Expr::Const(c) => S::constant(*c),
            Expr::Var(i) => var(*i),
            Expr::Neg(e) => -e.eval(var),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(var), b.eval(var));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.pow(b),
                }
            }
            Expr::Call(f, args) => match f {
                Func::Max | Func::Min => {
                    // first argument wins ties
                    let mut best = args[0].eval(var);
                    for a in &args[1..] {
                        let v = a.eval(var);
                        let better = if *f == Func::Max { v.value() > best.value() } else { v.value() < best.value() };
                        if better {
                            best = v;
                        }
                    }
                    best
                }
                _ => {
                    let a = args[0].eval(var);
                    match f {
                        Func::Exp => a.exp(),
                        Func::Log => a.ln(),
                        Func::Sqrt => a.sqrt(),
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Tanh => a.tanh(),
                        Func::Abs => a.abs(),
                        Func::Max | Func::Min => unreachable!(),
                    }
                }
            },
        }
    }

    /// Coefficients `(a, c)` when the tree is structurally affine, `<a, x> + c`.
    pub fn affine(&self, dim: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            Expr::Const(c) => Some((vec![0.0; dim], *c)),
            Expr::Var(i) => {
                let mut a = vec![0.0; dim];
                a[*i] = 1.0;
                Some((a, 0.0))
            }
            Expr::Neg(e) => e.affine(dim).map(|(a, c)| (a.iter().map(|v| -v).collect(), -c)),
            Expr::Binary(op, l, r) => {
                let (la, lc) = l.affine(dim)?;
                let (ra, rc) = r.affine(dim)?;
                let l_const = la.iter().all(|v| *v == 0.0);
                let r_const = ra.iter().all(|v| *v == 0.0);
                match op {
                    BinOp::Add => Some((la.iter().zip(&ra).map(|(a, b)| a + b).collect(), lc + rc)),
                    BinOp::Sub => Some((la.iter().zip(&ra).map(|(a, b)| a - b).collect(), lc - rc)),
                    BinOp::Mul if r_const => Some((la.iter().map(|v| v * rc).collect(), lc * rc)),
                    BinOp::Mul if l_const => Some((ra.iter().map(|v| v * lc).collect(), lc * rc)),
                    BinOp::Div if r_const && rc != 0.0 => Some((la.iter().map(|v| v / rc).collect(), lc / rc)),
                    BinOp::Pow if l_const && r_const => Some((vec![0.0; dim], lc.powf(rc))),
                    _ => None,
                }
            }
            Expr::Call(_, args) => {
                let parts: Option<Vec<_>> = args.iter().map(|a| a.affine(dim)).collect();
                let parts = parts?;
                if !parts.iter().all(|(a, _)| a.iter().all(|v| *v == 0.0)) {
                    return None;
                }
                let v = self.eval::<f64>(&|_| 0.0);
                Some((vec![0.0; dim], v))
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
