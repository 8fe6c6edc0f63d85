//! Built-in invariant suite behind `packet-moments selfcheck`.

use std::f64::consts::PI;
use std::io::Write;

use packet_moments::analytic::{airy_moments, cat_moments, vortex_moments};
use packet_moments::fields::{airy_field_components, fig1_curve, quadrupole_field, spherical, to_cylindrical, vortex_field_components};
use packet_moments::grid::{grid_moments, GridConfig};
use packet_moments::numeric::{moments_general, moments_phase_formula, shift_invariance_check};
use packet_moments::quadrature::Scheme;
use packet_moments::{Error, Family, MomentSet, PacketSpec, Parity, PhaseExpr, QuadratureConfig, Vec3};

use crate::commands::estimate_values;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn within(name: &'static str, value: f64, tol: f64) -> Check {
    Check {
        name,
        passed: value <= tol,
        detail: format!("max deviation {value:.3e} (tolerance {tol:.0e})"),
    }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> Check {
    Check {
        name,
        passed: false,
        detail: format!("error: {e}"),
    }
}

fn relative_delta(a: &MomentSet, b: &MomentSet) -> f64 {
    let scale = b.components().iter().fold(1.0f64, |m, c| m.max(c.abs()));
    a.max_delta(b).0 / scale
}

type Outcome = Result<f64, Error>;

fn worst(values: impl IntoIterator<Item = Outcome>) -> Outcome {
    values.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

fn vortex_quadrature() -> Outcome {
    let polar = QuadratureConfig::with_scheme(Scheme::PolarLg);
    worst([(1i64, 1.0, 1.0), (-2, 0.5, 2.0), (5, 2.0, 1.0)].map(|(l, s, m)| {
        let spec = PacketSpec::lg(l, s, m)?;
        Ok(moments_general(&spec, &polar)?.max_delta(&vortex_moments(l, s, m)?).0)
    }))
}

fn airy_paths() -> Outcome {
    let quad = QuadratureConfig::default();
    worst([(1.0, 0.5, 1.0), (-0.3, 0.8, 1.2)].map(|(x, y, s)| {
        let spec = PacketSpec::airy(x, y, s)?;
        let exact = airy_moments(x, y, s)?;
        let a = moments_phase_formula(&spec, &quad)?.max_delta(&exact).0;
        let b = moments_general(&spec, &quad)?.max_delta(&exact).0;
        Ok(a.max(b))
    }))
}

fn cat_quadrature() -> Outcome {
    let quad = QuadratureConfig::default();
    worst([(Parity::Even, 1.0), (Parity::Odd, 1.0), (Parity::Odd, 0.3)].map(|(parity, s)| {
        let r0 = Vec3::new(s, 0.0, 0.0);
        let spec = PacketSpec::cat(r0, parity, 1.0)?;
        Ok(moments_general(&spec, &quad)?.max_delta(&cat_moments(r0, parity, 1.0)?).0)
    }))
}

fn grid_oracle() -> Outcome {
    let g = GridConfig::with_points(64);
    let r0 = Vec3::new(0.8, 0.6, 0.0);
    worst([
        PacketSpec::lg(1, 1.0, 1.0).and_then(|s| Ok(relative_delta(&grid_moments(&s, &g)?, &vortex_moments(1, 1.0, 1.0)?))),
        PacketSpec::airy(0.5, 0.3, 1.0)
            .and_then(|s| Ok(relative_delta(&grid_moments(&s, &g)?, &airy_moments(0.5, 0.3, 1.0)?))),
        PacketSpec::cat(r0, Parity::Odd, 1.0)
            .and_then(|s| Ok(relative_delta(&grid_moments(&s, &g)?, &cat_moments(r0, Parity::Odd, 1.0)?))),
    ])
}

fn shift_invariance() -> Outcome {
    let polar = QuadratureConfig::with_scheme(Scheme::PolarLg);
    let lg = shift_invariance_check(&PacketSpec::lg(1, 1.0, 1.0)?, Vec3::new(5.0, -3.0, 0.0), &polar)?;
    let airy = shift_invariance_check(
        &PacketSpec::airy(0.4, 0.2, 1.0)?,
        Vec3::new(0.0, 0.0, 7.0),
        &QuadratureConfig::default(),
    )?;
    Ok([lg, airy]
        .iter()
        .map(|r| r.delta_mu.max(r.delta_q).max(r.d_shift_error))
        .fold(0.0, f64::max))
}

fn divergence_guard() -> Check {
    let name = "vortex phase on a Gaussian is refused";
    let run = || -> Result<MomentSet, Error> {
        let spec = PacketSpec::new(
            Family::GaussPhase(PhaseExpr::parse_plain("3*phi_p")?),
            1.0,
            Vec3::ZERO,
            1.0,
        )?;
        moments_general(&spec, &QuadratureConfig::default())
    };
    match run() {
        Err(Error::VortexDivergence { l: 3 }) => Check {
            name,
            passed: true,
            detail: "VortexDivergence".into(),
        },
        Err(e) => failed(name, e),
        Ok(_) => failed(name, "returned a number"),
    }
}

fn field_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let t = k as f64;
        let (r, theta, phi) = (1.0 + (t * 0.37).fract() * 20.0, PI * (t * 0.61).fract(), 2.0 * PI * (t * 0.13).fract());
        let at = spherical(r, theta, phi);
        let l = 1 + k % 7;
        let q = vortex_moments(l, 1.3, 1.0)?.q;
        let e = to_cylindrical(quadrupole_field(&q, at)?, at);
        let (er, ez) = vortex_field_components(l as f64 / 1.69, r, theta)?;
        worst = worst.max((e.x - er).abs().max(e.y.abs()).max((e.z - ez).abs()) / e.norm());
        let eta = 2.0 * PI * (t * 0.29).fract();
        let q = airy_moments(0.7 * eta.cos(), 0.7 * eta.sin(), 1.1)?.q;
        let e = to_cylindrical(quadrupole_field(&q, at)?, at);
        let (er, ep, ez) = airy_field_components(1.1, 0.7, eta, r, theta, phi)?;
        worst = worst.max((e - Vec3::new(er, ep, ez)).max_abs() / e.norm());
    }
    Ok(worst)
}

fn fig1_zero() -> Outcome {
    let curve = fig1_curve(1.0, 1.0, 10.0, 360)?;
    let target = (1.0 / 3f64.sqrt()).acos();
    let first = curve.zeros.first().copied().unwrap_or(f64::INFINITY);
    Ok((first - target).abs())
}

/// Runs every check in order.
pub fn checks() -> Vec<Check> {
    let numeric: [(&'static str, fn() -> Outcome, f64); 7] = [
        ("vortex quadrature vs closed form", vortex_quadrature, 1e-6),
        ("airy phase formula and general vs closed form", airy_paths, 1e-8),
        ("cat quadrature vs closed form", cat_quadrature, 1e-6),
        ("grid oracle (64^3) relative to closed forms", grid_oracle, 1e-3),
        ("intrinsic moments under shifts", shift_invariance, 1e-8),
        ("quadrupole field vs component formulas", field_identities, 1e-12),
        ("equatorial airy field zero at acos(1/sqrt 3)", fig1_zero, 1e-9),
    ];
    let mut out: Vec<Check> = numeric
        .iter()
        .map(|&(name, f, tol)| match f() {
            Ok(v) => within(name, v, tol),
            Err(e) => failed(name, e),
        })
        .collect();
    out.push(divergence_guard());
    let est = ["0.1nm", "10um"].map(|s| estimate_values(s, None).map(|e| e.abs_q_e_cm2));
    out.push(match est {
        [Ok(a), Ok(b)] => Check {
            name: "SI estimate endpoints",
            passed: a == 1e-16 && b == 1e-6,
            detail: format!("{a:.3e}, {b:.3e} e·cm²"),
        },
        _ => failed("SI estimate endpoints", "unit parsing failed"),
    });
    out
}

pub fn run(out: &mut dyn Write) -> Result<(), CliError> {
    let results = checks();
    for c in &results {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    let bad = results.iter().filter(|c| !c.passed).count();
    if bad == 0 {
        Ok(())
    } else {
        Err(CliError::Disagreement(format!("{bad} self-check(s) failed")))
    }
}
