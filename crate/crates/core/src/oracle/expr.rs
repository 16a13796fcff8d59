//! Integer mechanism expressions for the `scm` block.

use std::fmt;

use thiserror::Error;

use crate::graph::VarName;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Min,
    Max,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }

    fn apply(self, l: i64, r: i64) -> Result<i64, ExprError> {
        let b = |x: bool| x as i64;
        match self {
            BinOp::Add => l.checked_add(r).ok_or(ExprError::Overflow),
            BinOp::Sub => l.checked_sub(r).ok_or(ExprError::Overflow),
            BinOp::Mul => l.checked_mul(r).ok_or(ExprError::Overflow),
            BinOp::Div | BinOp::Rem if r == 0 => Err(ExprError::DivisionByZero),
            BinOp::Div => l.checked_div_euclid(r).ok_or(ExprError::Overflow),
            BinOp::Rem => l.checked_rem_euclid(r).ok_or(ExprError::Overflow),
            BinOp::Eq => Ok(b(l == r)),
            BinOp::Ne => Ok(b(l != r)),
            BinOp::Lt => Ok(b(l < r)),
            BinOp::Le => Ok(b(l <= r)),
            BinOp::Gt => Ok(b(l > r)),
            BinOp::Ge => Ok(b(l >= r)),
            BinOp::And => Ok(b(l != 0 && r != 0)),
            BinOp::Or => Ok(b(l != 0 || r != 0)),
            BinOp::Min => Ok(l.min(r)),
            BinOp::Max => Ok(l.max(r)),
        }
    }
}

/// Booleans are integers: comparisons yield 0/1 and any non-zero is true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Var(VarName),
    Noise,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(
        &self,
        env: &dyn Fn(&VarName) -> Option<i64>,
        noise: i64,
    ) -> Result<i64, ExprError> {
        match self {
            Expr::Int(v) => Ok(*v),
            Expr::Var(name) => env(name).ok_or_else(|| ExprError::Unbound(name.to_string())),
            Expr::Noise => Ok(noise),
            Expr::Unary(UnOp::Neg, e) => {
                e.eval(env, noise)?.checked_neg().ok_or(ExprError::Overflow)
            }
            Expr::Unary(UnOp::Not, e) => Ok((e.eval(env, noise)? == 0) as i64),
            Expr::Binary(BinOp::And, l, r) => {
                Ok((l.eval(env, noise)? != 0 && r.eval(env, noise)? != 0) as i64)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                Ok((l.eval(env, noise)? != 0 || r.eval(env, noise)? != 0) as i64)
            }
            Expr::Binary(op, l, r) => op.apply(l.eval(env, noise)?, r.eval(env, noise)?),
            Expr::If(c, t, e) => {
                if c.eval(env, noise)? != 0 {
                    t.eval(env, noise)
                } else {
                    e.eval(env, noise)
                }
            }
        }
    }

    /// Variables referenced anywhere in the expression.
    pub fn variables(&self, out: &mut Vec<VarName>) {
        match self {
            Expr::Int(_) | Expr::Noise => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Unary(_, e) => e.variables(out),
            Expr::Binary(_, l, r) => {
                l.variables(out);
                r.variables(out);
            }
            Expr::If(c, t, e) => {
                c.variables(out);
                t.variables(out);
                e.variables(out);
            }
        }
    }

    pub fn uses_noise(&self) -> bool {
        match self {
            Expr::Noise => true,
            Expr::Int(_) | Expr::Var(_) => false,
            Expr::Unary(_, e) => e.uses_noise(),
            Expr::Binary(_, l, r) => l.uses_noise() || r.uses_noise(),
            Expr::If(c, t, e) => c.uses_noise() || t.uses_noise() || e.uses_noise(),
        }
    }
}

/// Fully parenthesized, so printing and re-parsing is the identity.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) if *v < 0 => write!(f, "-({})", v.unsigned_abs()),
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Noise => f.write_str("noise"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            Expr::Binary(op @ (BinOp::Min | BinOp::Max), l, r) => {
                write!(f, "{}({l}, {r})", op.symbol())
            }
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::If(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
        }
    }
}
