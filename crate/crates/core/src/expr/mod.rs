//! Scalar expressions for user-supplied functions such as `f(t)`, `f(t,u)`,
//! `ψ(t)`, `α(t)` and `M(alpha)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right associative
//! atom    := number | 'pi' | variable | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | ln | sqrt | abs
//! ```
//!
//! A literal directly preceded by unary minus is folded into a negative
//! constant so that printing and re-parsing is structurally stable.

mod deriv;
mod parse;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use parse::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` (byte {offset}) is not allowed here; allowed: {allowed}")]
    DisallowedVariable {
        name: String,
        offset: usize,
        allowed: String,
    },
    #[error("domain fault at byte {offset}: {message}")]
    DomainFault { offset: usize, message: String },
    #[error("variable `{name}` is not bound")]
    UnboundVariable { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    U,
    Alpha,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::Alpha => "alpha",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "t" => Some(Var::T),
            "u" => Some(Var::U),
            "alpha" => Some(Var::Alpha),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryFn {
    pub const BUILTINS: [UnaryFn; 6] = [
        UnaryFn::Sin,
        UnaryFn::Cos,
        UnaryFn::Exp,
        UnaryFn::Ln,
        UnaryFn::Sqrt,
        UnaryFn::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "-",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<UnaryFn> {
        UnaryFn::BUILTINS.into_iter().find(|f| f.name() == name)
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
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// An expression tree node with the byte offset it was parsed from.
/// Equality is structural and ignores offsets.
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    pub fn new(node: Node, offset: usize) -> Self {
        Expr { node, offset }
    }

    pub fn constant(c: f64) -> Self {
        Expr::new(Node::Const(c), 0)
    }

    pub fn var(v: Var) -> Self {
        Expr::new(Node::Var(v), 0)
    }

    pub fn unary(f: UnaryFn, arg: Expr) -> Self {
        let offset = arg.offset;
        Expr::new(Node::Unary(f, Box::new(arg)), offset)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let offset = lhs.offset;
        Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset)
    }

    /// Variables referenced anywhere in the tree.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match &self.node {
            Node::Const(_) => {}
            Node::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Node::Unary(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Evaluates with the given bindings; domain faults become errors.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        let fault = |message: String| ExprError::DomainFault {
            offset: self.offset,
            message,
        };
        let v = match &self.node {
            Node::Const(c) => *c,
            Node::Var(v) => bindings.get(*v).ok_or_else(|| ExprError::UnboundVariable {
                name: v.name().to_string(),
            })?,
            Node::Unary(f, a) => {
                let x = a.eval(bindings)?;
                match f {
                    UnaryFn::Neg => -x,
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Ln => {
                        if x <= 0.0 {
                            return Err(fault(format!("ln of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    UnaryFn::Sqrt => {
                        if x < 0.0 {
                            return Err(fault(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    UnaryFn::Abs => x.abs(),
                }
            }
            Node::Binary(op, a, b) => {
                let x = a.eval(bindings)?;
                let y = b.eval(bindings)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(fault("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => pow(x, y).map_err(fault)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fault(format!("non-finite result {v}")))
        }
    }

    /// Symbolic derivative with respect to `var`.
    pub fn derivative(&self, var: Var) -> Expr {
        deriv::derivative(self, var)
    }
}

fn pow(x: f64, y: f64) -> Result<f64, String> {
    if y == y.trunc() && y.abs() <= i32::MAX as f64 {
        if x == 0.0 && y < 0.0 {
            return Err("zero raised to a negative power".into());
        }
        return Ok(x.powi(y as i32));
    }
    if x < 0.0 {
        return Err(format!("negative base {x} with non-integer exponent {y}"));
    }
    if x == 0.0 && y < 0.0 {
        return Err("zero raised to a negative power".into());
    }
    Ok(x.powf(y))
}

/// Printing yields text that re-parses to a structurally identical tree:
/// binary nodes, negations and negative constants are parenthesised.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(v) => f.write_str(v.name()),
            // a bare literal after '-' would re-parse as a negative constant
            Node::Unary(UnaryFn::Neg, a) => match a.node {
                Node::Const(_) => write!(f, "(-({a}))"),
                _ => write!(f, "(-{a})"),
            },
            Node::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// Values for the expression variables.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings {
    values: [Option<f64>; 3],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(var: Var) -> usize {
        match var {
            Var::T => 0,
            Var::U => 1,
            Var::Alpha => 2,
        }
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.values[Self::slot(var)] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[Self::slot(var)]
    }

    pub fn t(t: f64) -> Self {
        Self::new().with(Var::T, t)
    }

    pub fn tu(t: f64, u: f64) -> Self {
        Self::new().with(Var::T, t).with(Var::U, u)
    }
}

/// Free-function form of [`Expr::eval`].
pub fn eval(ast: &Expr, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
    let mut b = Bindings::new();
    for (k, v) in bindings {
        if let Some(var) = Var::from_name(k) {
            b.set(var, *v);
        }
    }
    ast.eval(&b)
}

/// Free-function form of [`Expr::derivative`].
pub fn derivative(ast: &Expr, var: Var) -> Expr {
    ast.derivative(var)
}
