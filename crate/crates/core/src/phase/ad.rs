//! Forward-mode differentiation with a fixed three-component tangent.

use std::ops::{Add, Mul, Neg, Sub};

use super::ast::{Expr, Func, Var};
use crate::error::{Error, Result};
use crate::units::Vec3;

/// Smallest transverse momentum at which phi_p and p_perp are differentiated.
pub const AXIS_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 3] }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Self {
            v,
            d: self.d.map(|x| dv * x),
        }
    }
}

impl Add for Dual3 {
    type Output = Dual3;
    fn add(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
        }
    }
}

impl Sub for Dual3 {
    type Output = Dual3;
    fn sub(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
        }
    }
}

impl Mul for Dual3 {
    type Output = Dual3;
    fn mul(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl Neg for Dual3 {
    type Output = Dual3;
    fn neg(self) -> Dual3 {
        self.chain(-self.v, -1.0)
    }
}

/// Postfix instruction of a compiled expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Inst {
    Const(f64),
    Var(Var),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Call(Func),
}

pub(crate) fn compile(e: &Expr, out: &mut Vec<Inst>) {
    match e {
        Expr::Num(v) | Expr::Param { value: v, .. } => out.push(Inst::Const(*v)),
        Expr::Var(v) => out.push(Inst::Var(*v)),
        Expr::Neg(a) => {
            compile(a, out);
            out.push(Inst::Neg);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(match e {
                Expr::Add(..) => Inst::Add,
                Expr::Sub(..) => Inst::Sub,
                Expr::Mul(..) => Inst::Mul,
                _ => Inst::Div,
            });
        }
        Expr::Pow(a, n) => {
            compile(a, out);
            out.push(Inst::Pow(*n));
        }
        Expr::Call(f, args) => {
            for a in args {
                compile(a, out);
            }
            out.push(Inst::Call(*f));
        }
    }
}

fn variable(var: Var, p: Vec3) -> std::result::Result<Dual3, &'static str> {
    Ok(match var {
        Var::Px => Dual3 {
            v: p.x,
            d: [1.0, 0.0, 0.0],
        },
        Var::Py => Dual3 {
            v: p.y,
            d: [0.0, 1.0, 0.0],
        },
        Var::Pz => Dual3 {
            v: p.z,
            d: [0.0, 0.0, 1.0],
        },
        Var::PPerp => {
            let r = p.perp();
            if r < AXIS_EPS {
                return Err("p_perp differentiated on the axis");
            }
            Dual3 {
                v: r,
                d: [p.x / r, p.y / r, 0.0],
            }
        }
        Var::PhiP => {
            let r = p.perp();
            if r < AXIS_EPS {
                return Err("phi_p undefined on the axis");
            }
            Dual3 {
                v: p.y.atan2(p.x),
                d: [-(p.y / r) / r, (p.x / r) / r, 0.0],
            }
        }
    })
}

fn unary(f: Func, x: Dual3) -> std::result::Result<Dual3, &'static str> {
    Ok(match f {
        Func::Sin => x.chain(x.v.sin(), x.v.cos()),
        Func::Cos => x.chain(x.v.cos(), -x.v.sin()),
        Func::Sqrt => {
            if x.v < 0.0 {
                return Err("sqrt of a negative number");
            }
            if x.v == 0.0 {
                return Err("sqrt differentiated at zero");
            }
            let s = x.v.sqrt();
            x.chain(s, 0.5 / s)
        }
        Func::Atan2 => unreachable!("atan2 is binary"),
    })
}

fn step(inst: Inst, stack: &mut Vec<Dual3>, p: Vec3) -> std::result::Result<(), &'static str> {
    let out = match inst {
        Inst::Const(v) => Dual3::constant(v),
        Inst::Var(var) => variable(var, p)?,
        Inst::Neg => -stack.pop().expect("operand"),
        Inst::Pow(n) => {
            let a = stack.pop().expect("operand");
            match n {
                0 => Dual3::constant(1.0),
                n if n < 0 && a.v == 0.0 => return Err("negative power of zero"),
                n => a.chain(a.v.powi(n), f64::from(n) * a.v.powi(n - 1)),
            }
        }
        Inst::Call(Func::Atan2) => {
            let x = stack.pop().expect("operand");
            let y = stack.pop().expect("operand");
            let r2 = y.v * y.v + x.v * x.v;
            if r2 == 0.0 {
                return Err("atan2(0, 0)");
            }
            Dual3 {
                v: y.v.atan2(x.v),
                d: std::array::from_fn(|i| (x.v * y.d[i] - y.v * x.d[i]) / r2),
            }
        }
        Inst::Call(f) => unary(f, stack.pop().expect("operand"))?,
        Inst::Add | Inst::Sub | Inst::Mul | Inst::Div => {
            let b = stack.pop().expect("operand");
            let a = stack.pop().expect("operand");
            match inst {
                Inst::Add => a + b,
                Inst::Sub => a - b,
                Inst::Mul => a * b,
                _ => {
                    if b.v == 0.0 {
                        return Err("division by zero");
                    }
                    let q = a.v / b.v;
                    Dual3 {
                        v: q,
                        d: std::array::from_fn(|i| (a.d[i] - q * b.d[i]) / b.v),
                    }
                }
            }
        }
    };
    if out.v.is_finite() && out.d.iter().all(|d| d.is_finite()) {
        stack.push(out);
        Ok(())
    } else {
        Err("non-finite result")
    }
}

thread_local! {
    static STACK: std::cell::RefCell<Vec<Dual3>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Runs a compiled tape at `p`.
pub(crate) fn run(tape: &[Inst], p: Vec3) -> Result<Dual3> {
    STACK.with(|cell| {
        let mut stack = cell.borrow_mut();
        stack.clear();
        for &inst in tape {
            if let Err(reason) = step(inst, &mut stack, p) {
                return Err(Error::SingularPoint {
                    p: p.to_array(),
                    reason,
                });
            }
        }
        Ok(stack.pop().expect("tape leaves one value"))
    })
}
