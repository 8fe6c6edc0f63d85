use std::io::Write;

use packet_moments::analytic::closed_form;
use packet_moments::fields::{field_map, fig1_curve, FieldGrid, FieldSample, Fig1Curve, Span};
use packet_moments::grid::grid_moments;
use packet_moments::numeric::{moments_general, moments_phase_formula};
use packet_moments::units::{parse_length_m, q_to_si};
use packet_moments::{Error, Family, MomentSet, PacketSpec};
use serde::Serialize;

use crate::config::{Config, Overrides};
use crate::report::{num, PacketEcho, PathDelta, PathResult, RunReport, SCHEMA_VERSION};
use crate::{CliError, Format, PacketArgs, PathKind};

/// Cross-path tolerance without the grid.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
/// Relative cross-path tolerance once the grid is involved.
pub const GRID_TOLERANCE: f64 = 1e-3;

fn load(args: &PacketArgs) -> Result<(Config, PacketSpec), CliError> {
    let cfg = Config::load(&args.config)?;
    let spec = cfg.packet_spec(Overrides {
        sigma: args.sigma,
        mass: args.mass,
    })?;
    Ok((cfg, spec))
}

fn is_pure_phase(spec: &PacketSpec) -> bool {
    matches!(spec.family(), Family::GaussPhase(_) | Family::Airy { .. })
}

/// Every path that applies to the family.
pub fn default_paths(spec: &PacketSpec) -> Vec<PathKind> {
    let mut paths = Vec::new();
    if closed_form(spec).is_some() {
        paths.push(PathKind::Analytic);
    }
    paths.push(PathKind::Quadrature);
    if is_pure_phase(spec) {
        paths.push(PathKind::PhaseFormula);
    }
    paths.push(PathKind::Grid);
    paths
}

pub fn compute(cfg: &Config, spec: &PacketSpec, path: PathKind) -> Result<MomentSet, CliError> {
    Ok(match path {
        PathKind::Analytic => closed_form(spec).ok_or_else(|| {
            CliError::Config(format!("family {} has no closed form", spec.family().tag()))
        })??,
        PathKind::Quadrature => moments_general(spec, &cfg.quadrature()?)?,
        PathKind::PhaseFormula => moments_phase_formula(spec, &cfg.quadrature()?)?,
        PathKind::Grid => grid_moments(spec, &cfg.grid()?)?,
    })
}

fn tolerance(a: &PathResult, b: &PathResult) -> f64 {
    if a.path == PathKind::Grid || b.path == PathKind::Grid {
        let scale = a
            .moments
            .components()
            .iter()
            .chain(b.moments.components().iter())
            .fold(1.0f64, |m, c| m.max(c.abs()));
        return GRID_TOLERANCE * scale;
    }
    // Monte Carlo results carry their own error bars
    let spread = [&a.moments, &b.moments]
        .iter()
        .filter_map(|m| m.diagnostics.std_err)
        .map(|e| e.d.max_abs().max(e.mu.max_abs()).max(e.q.max_abs()))
        .fold(0.0f64, f64::max);
    QUADRATURE_TOLERANCE + 5.0 * spread
}

pub fn build_report(
    cfg: &Config,
    spec: &PacketSpec,
    paths: &[PathKind],
    si: Option<&packet_moments::UnitContext>,
) -> Result<RunReport, CliError> {
    let mut wanted = if paths.is_empty() {
        default_paths(spec)
    } else {
        paths.to_vec()
    };
    wanted.sort();
    wanted.dedup();
    let mut results = Vec::with_capacity(wanted.len());
    for &path in &wanted {
        let moments = compute(cfg, spec, path)?;
        let q_si = si.map(|u| q_to_si(moments.q, u)).transpose()?;
        results.push(PathResult { path, moments, q_si });
    }
    let mut deltas = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let (a, b) = (&results[i], &results[j]);
            let (max_delta, component) = a.moments.max_delta(&b.moments);
            let tol = tolerance(a, b);
            deltas.push(PathDelta {
                a: a.path,
                b: b.path,
                max_delta,
                component,
                tolerance: tol,
                ok: max_delta <= tol,
            });
        }
    }
    let agreement = deltas.iter().all(|d| d.ok);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        packet: PacketEcho::new(spec),
        paths: results,
        deltas,
        agreement,
    })
}

pub fn moments(
    args: &PacketArgs,
    paths: &[PathKind],
    format: Format,
    si: bool,
    sigma_perp: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (cfg, spec) = load(args)?;
    let units = if si {
        let u = cfg.units(spec.mass(), sigma_perp)?;
        if u.sigma_perp_m().is_none() {
            return Err(Error::MissingScale.into());
        }
        Some(u)
    } else {
        None
    };
    let report = build_report(&cfg, &spec, paths, units.as_ref())?;
    for p in &report.paths {
        for w in &p.moments.diagnostics.warnings {
            eprintln!("warning ({}): {w}", p.path.name());
        }
    }
    match format {
        Format::Json => report.write_json(out)?,
        Format::Csv => report.write_csv(out)?,
    }
    match report.deltas.iter().find(|d| !d.ok) {
        None => Ok(()),
        Some(d) => Err(CliError::Disagreement(format!(
            "{} vs {}: {} differs by {:e} (tolerance {:e})",
            d.a.name(),
            d.b.name(),
            d.component,
            d.max_delta,
            d.tolerance
        ))),
    }
}

const FIELD_COLUMNS: [&str; 14] = [
    "r", "theta", "phi", "rho", "z", "E_rho", "E_phi", "E_z", "EQ_rho", "EQ_phi", "EQ_z", "H_rho", "H_phi", "H_z",
];

fn field_row(s: &FieldSample) -> [f64; 14] {
    [
        s.r, s.theta, s.phi, s.rho, s.z, s.e.x, s.e.y, s.e.z, s.e_q.x, s.e_q.y, s.e_q.z, s.h.x, s.h.y, s.h.z,
    ]
}

#[derive(Serialize)]
struct FieldMapJson<'a> {
    source: PathKind,
    moments: &'a MomentSet,
    samples: &'a [FieldSample],
}

pub fn fieldmap(
    args: &PacketArgs,
    source: Option<PathKind>,
    spans: [Span; 3],
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let [r, theta, phi] = spans;
    let grid = FieldGrid { r, theta, phi };
    grid.validate()?;
    let (cfg, spec) = load(args)?;
    let source = source.unwrap_or(if closed_form(&spec).is_some() {
        PathKind::Analytic
    } else {
        PathKind::Quadrature
    });
    let ms = compute(&cfg, &spec, source)?;
    let samples = field_map(&ms, &grid)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(FIELD_COLUMNS)?;
            for s in &samples {
                w.write_record(field_row(s).iter().map(|&v| num(v)))?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut *out,
                &FieldMapJson {
                    source,
                    moments: &ms,
                    samples: &samples,
                },
            )?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Fig1Json<'a> {
    xi3: f64,
    sigma: f64,
    r: f64,
    #[serde(flatten)]
    curve: &'a Fig1Curve,
}

pub fn fig1(xi3: f64, sigma: f64, r: f64, samples: usize, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let curve = fig1_curve(xi3, sigma, r, samples)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["phi", "E_rho", "E_rho_norm"])?;
            for row in &curve.rows {
                w.write_record([num(row.phi), num(row.e_rho), num(row.e_rho_norm)])?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut *out,
                &Fig1Json {
                    xi3,
                    sigma,
                    r,
                    curve: &curve,
                },
            )?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub sigma_perp_m: f64,
    /// |Q| ~ σ_⊥², times |ℓ| when given, in e·cm².
    pub abs_q_e_cm2: f64,
    /// Magnetic moment in Bohr magnetons (ℓ for a vortex electron).
    pub mu_bohr: i64,
}

/// Rounds to the four significant digits that are printed.
fn printed(v: f64) -> f64 {
    format!("{v:.3e}").parse().unwrap_or(v)
}

pub fn estimate_values(sigma_perp: &str, l: Option<i64>) -> Result<Estimate, CliError> {
    let m = parse_length_m(sigma_perp)?;
    let cm = m * 100.0;
    let factor = l.map_or(1.0, |l| l.unsigned_abs() as f64);
    Ok(Estimate {
        sigma_perp_m: printed(m),
        abs_q_e_cm2: printed(cm * cm * factor),
        mu_bohr: l.unwrap_or(0),
    })
}

pub fn estimate(sigma_perp: &str, l: Option<i64>, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let e = estimate_values(sigma_perp, l)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["sigma_perp_m", "abs_q_e_cm2", "mu_bohr"])?;
            w.write_record([
                format!("{:.3e}", e.sigma_perp_m),
                format!("{:.3e}", e.abs_q_e_cm2),
                e.mu_bohr.to_string(),
            ])?;
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &e)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_endpoints() {
        assert_eq!(estimate_values("0.1nm", None).unwrap().abs_q_e_cm2, 1e-16);
        assert_eq!(estimate_values("10um", None).unwrap().abs_q_e_cm2, 1e-6);
        let e = estimate_values("0.1nm", Some(1000)).unwrap();
        assert_eq!((e.abs_q_e_cm2, e.mu_bohr), (1e-13, 1000));
        assert!(estimate_values("0.1 parsec", None).is_err());
    }

    #[test]
    fn default_paths_by_family() {
        let lg = PacketSpec::lg(1, 1.0, 1.0).unwrap();
        assert_eq!(default_paths(&lg), [PathKind::Analytic, PathKind::Quadrature, PathKind::Grid]);
        let airy = PacketSpec::airy(0.1, 0.2, 1.0).unwrap();
        assert_eq!(default_paths(&airy).len(), 4);
    }
}
