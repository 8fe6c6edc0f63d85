use std::fmt;

/// Momentum-space variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Px,
    Py,
    Pz,
    /// sqrt(p_x² + p_y²)
    PPerp,
    /// atan2(p_y, p_x)
    PhiP,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Px => "p_x",
            Var::Py => "p_y",
            Var::Pz => "p_z",
            Var::PPerp => "p_perp",
            Var::PhiP => "phi_p",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Some(match s {
            "p_x" => Var::Px,
            "p_y" => Var::Py,
            "p_z" => Var::Pz,
            "p_perp" => Var::PPerp,
            "phi_p" => Var::PhiP,
            _ => return None,
        })
    }

    /// Depends on the transverse momentum.
    pub fn is_transverse(self) -> bool {
        !matches!(self, Var::Pz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Atan2,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Named parameter, bound to its value at parse time.
    Param {
        name: String,
        value: f64,
    },
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn contains_var(&self, pred: &impl Fn(Var) -> bool) -> bool {
        match self {
            Expr::Num(_) | Expr::Param { .. } => false,
            Expr::Var(v) => pred(*v),
            Expr::Neg(a) | Expr::Pow(a, _) => a.contains_var(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_var(pred) || b.contains_var(pred)
            }
            Expr::Call(_, args) => args.iter().any(|a| a.contains_var(pred)),
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.contains_var(&|_| true)
    }

    /// Value of a variable-free subexpression.
    pub fn constant_value(&self) -> Option<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Param { value, .. } => *value,
            Expr::Var(_) => return None,
            Expr::Neg(a) => -a.constant_value()?,
            Expr::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expr::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expr::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expr::Div(a, b) => a.constant_value()? / b.constant_value()?,
            Expr::Pow(a, n) => a.constant_value()?.powi(*n),
            Expr::Call(f, args) => {
                let x = args[0].constant_value()?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => x.sqrt(),
                    Func::Atan2 => x.atan2(args[1].constant_value()?),
                }
            }
        };
        v.is_finite().then_some(v)
    }

    fn is_atomic(&self) -> bool {
        matches!(
            self,
            Expr::Num(_) | Expr::Param { .. } | Expr::Var(_) | Expr::Call(..)
        )
    }
}

// Printing parenthesizes every compound node, so re-parsing the output yields
// the same tree regardless of precedence.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Param { name, .. } => f.write_str(name),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) if a.is_atomic() => write!(f, "{a}^{n}"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
