//! Momentum-space phase expressions φ(p) with exact gradients.
//!
//! Expressions are written over `p_x`, `p_y`, `p_z`, `p_perp` (= sqrt(p_x² + p_y²))
//! and `phi_p` (= atan2(p_y, p_x)), numeric literals and named parameters, with
//! `+ - * /`, integer powers `^n` and the functions `sin`, `cos`, `sqrt`, `atan2`.
//! Gradients are computed by forward-mode differentiation of the tree.

mod ad;
mod ast;
mod classify;
mod parser;

use std::collections::HashMap;
use std::fmt;

pub use ad::{Dual3, AXIS_EPS};
pub use ast::{Expr, Func, Var};
pub use classify::Singularity;

use crate::error::Result;
use crate::units::Vec3;

/// A parsed phase with all parameters bound. Immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseExpr {
    root: Expr,
    tape: Vec<ad::Inst>,
}

/// Phase value and ∂φ/∂p at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGradient {
    pub value: f64,
    pub grad: Vec3,
}

impl PhaseExpr {
    pub fn parse(source: &str, params: &HashMap<String, f64>) -> Result<Self> {
        Ok(Self::from_expr(parser::parse_expr(source, params)?))
    }

    /// Parses with no named parameters.
    pub fn parse_plain(source: &str) -> Result<Self> {
        Self::parse(source, &HashMap::new())
    }

    pub fn from_expr(root: Expr) -> Self {
        let mut tape = Vec::new();
        ad::compile(&root, &mut tape);
        Self { root, tape }
    }

    pub fn zero() -> Self {
        Self::from_expr(Expr::Num(0.0))
    }

    pub fn expr(&self) -> &Expr {
        &self.root
    }

    pub fn eval_grad(&self, p: Vec3) -> Result<PhaseGradient> {
        let d = ad::run(&self.tape, p)?;
        Ok(PhaseGradient {
            value: d.v,
            grad: Vec3::from_array(d.d),
        })
    }

    pub fn eval(&self, p: Vec3) -> Result<f64> {
        Ok(ad::run(&self.tape, p)?.v)
    }

    /// Gradient by central differences with step `h`; cross-check mode.
    pub fn central_grad(&self, p: Vec3, h: f64) -> Result<Vec3> {
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut e = [0.0; 3];
            e[i] = h;
            let step = Vec3::from_array(e);
            *gi = (self.eval(p + step)? - self.eval(p - step)?) / (2.0 * h);
        }
        Ok(Vec3::from_array(g))
    }

    pub fn classify_singularity(&self) -> Singularity {
        classify::classify(&self.root)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.root.contains_var(&|v| v == var)
    }

    /// True when the expression is a literal constant (the plain Gaussian).
    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }
}

impl fmt::Display for PhaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
