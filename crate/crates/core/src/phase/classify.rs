use super::ast::{Expr, Func, Var};

/// Behaviour of a phase near the beam axis p_⊥ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    Smooth,
    /// Additive integer multiple of phi_p.
    Vortex(i64),
    Unknown,
}

fn additive_terms<'a>(e: &'a Expr, sign: f64, out: &mut Vec<(f64, &'a Expr)>) {
    match e {
        Expr::Add(a, b) => {
            additive_terms(a, sign, out);
            additive_terms(b, sign, out);
        }
        Expr::Sub(a, b) => {
            additive_terms(a, sign, out);
            additive_terms(b, -sign, out);
        }
        Expr::Neg(a) => additive_terms(a, -sign, out),
        _ => out.push((sign, e)),
    }
}

/// Coefficient c when `e` has the form c·phi_p with constant c.
fn vortex_coefficient(e: &Expr) -> Option<f64> {
    match e {
        Expr::Var(Var::PhiP) => Some(1.0),
        Expr::Neg(a) => vortex_coefficient(a).map(|c| -c),
        Expr::Mul(a, b) => {
            if let Some(k) = a.constant_value() {
                vortex_coefficient(b).map(|c| k * c)
            } else if let Some(k) = b.constant_value() {
                vortex_coefficient(a).map(|c| k * c)
            } else {
                None
            }
        }
        Expr::Div(a, b) => {
            let k = b.constant_value()?;
            vortex_coefficient(a).map(|c| c / k)
        }
        Expr::Add(..) | Expr::Sub(..) => {
            // (a·phi_p + b·phi_p) inside a product
            let mut terms = Vec::new();
            additive_terms(e, 1.0, &mut terms);
            terms
                .iter()
                .map(|(s, t)| vortex_coefficient(t).map(|c| s * c))
                .sum()
        }
        _ => None,
    }
}

fn involves_axis(e: &Expr) -> bool {
    e.contains_var(&|v| matches!(v, Var::PPerp | Var::PhiP))
}

/// True when the subexpression stays regular on the axis (no phi_p, no p_perp in
/// a denominator, no atan2 of two transverse quantities).
fn is_regular(e: &Expr) -> bool {
    match e {
        Expr::Num(_) | Expr::Param { .. } => true,
        Expr::Var(v) => *v != Var::PhiP,
        Expr::Neg(a) => is_regular(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => is_regular(a) && is_regular(b),
        Expr::Div(a, b) => is_regular(a) && is_regular(b) && !involves_axis(b),
        Expr::Pow(a, n) => is_regular(a) && (*n >= 0 || !involves_axis(a)),
        Expr::Call(Func::Atan2, args) => {
            let transverse = |x: &Expr| x.contains_var(&Var::is_transverse);
            args.iter().all(is_regular) && !(transverse(&args[0]) && transverse(&args[1]))
        }
        Expr::Call(_, args) => args.iter().all(is_regular),
    }
}

pub(crate) fn classify(e: &Expr) -> Singularity {
    let mut terms = Vec::new();
    additive_terms(e, 1.0, &mut terms);
    let mut winding = 0.0;
    let mut saw_vortex = false;
    for (sign, t) in terms {
        if let Some(c) = vortex_coefficient(t) {
            winding += sign * c;
            saw_vortex = true;
        } else if !is_regular(t) {
            return Singularity::Unknown;
        }
    }
    if !saw_vortex {
        return Singularity::Smooth;
    }
    let rounded = winding.round();
    if (winding - rounded).abs() > 1e-12 * rounded.abs().max(1.0) {
        return Singularity::Unknown;
    }
    match rounded as i64 {
        0 => Singularity::Smooth,
        l => Singularity::Vortex(l),
    }
}
