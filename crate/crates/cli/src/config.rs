//! Packet config files (TOML).
//!
//! ```toml
//! [packet]
//! family = "lg_vortex"      # gaussian | gauss_phase | lg_vortex | airy | cat
//! sigma = 1.0
//! mass = 1.0
//! mean_p = [0.0, 0.0, 0.5]
//! l = 3
//!
//! [units]
//! sigma_perp = "0.1nm"
//!
//! [quadrature]
//! nodes_per_axis = 48
//! scheme = { kind = "polar_lg" }
//!
//! [grid]
//! points_per_axis = 128
//! ```

use std::collections::HashMap;
use std::path::Path;

use packet_moments::grid::{GridConfig, PsiSource};
use packet_moments::quadrature::{DerivativeMode, Scheme};
use packet_moments::units::parse_length_m;
use packet_moments::{Family, PacketSpec, Parity, PhaseExpr, QuadratureConfig, UnitContext, Vec3};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Gaussian,
    GaussPhase,
    LgVortex,
    Airy,
    Cat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub family: FamilyTag,
    pub sigma: f64,
    #[serde(default = "unit_mass")]
    pub mass: f64,
    #[serde(default)]
    pub mean_p: [f64; 3],
    pub l: Option<i64>,
    pub xi_x3: Option<f64>,
    pub xi_y3: Option<f64>,
    pub r0: Option<[f64; 3]>,
    pub parity: Option<Parity>,
    pub phase: Option<String>,
    #[serde(default)]
    pub params: HashMap<String, f64>,
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    /// Physical transverse width with unit, e.g. "0.1nm", "10um".
    pub sigma_perp: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub nodes_per_axis: Option<usize>,
    pub scheme: Option<Scheme>,
    pub derivative_mode: Option<DerivativeMode>,
    pub norm_tolerance: Option<f64>,
    pub convergence_tolerance: Option<f64>,
    pub check_convergence: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points_per_axis: Option<usize>,
    pub box_half_width: Option<f64>,
    pub source: Option<PsiSource>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub packet: PacketSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub grid: GridSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub mass: Option<f64>,
}

fn need<T>(v: Option<T>, field: &str, family: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("packet.{field} is required for family {family}")))
}

fn reject(present: bool, field: &str, family: &str) -> Result<(), CliError> {
    if present {
        Err(CliError::Config(format!("packet.{field} does not apply to family {family}")))
    } else {
        Ok(())
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn packet_spec(&self, ov: Overrides) -> Result<PacketSpec, CliError> {
        let p = &self.packet;
        let sigma = ov.sigma.unwrap_or(p.sigma);
        let mass = ov.mass.unwrap_or(p.mass);
        let tag = match p.family {
            FamilyTag::Gaussian => "gaussian",
            FamilyTag::GaussPhase => "gauss_phase",
            FamilyTag::LgVortex => "lg_vortex",
            FamilyTag::Airy => "airy",
            FamilyTag::Cat => "cat",
        };
        let uses = |field: &str| -> bool {
            match field {
                "l" => p.l.is_some(),
                "xi" => p.xi_x3.is_some() || p.xi_y3.is_some(),
                "r0" => p.r0.is_some() || p.parity.is_some(),
                "phase" => p.phase.is_some(),
                _ => false,
            }
        };
        let allowed: &[&str] = match p.family {
            FamilyTag::Gaussian => &[],
            FamilyTag::GaussPhase => &["phase"],
            FamilyTag::LgVortex => &["l"],
            FamilyTag::Airy => &["xi"],
            FamilyTag::Cat => &["r0"],
        };
        for field in ["l", "xi", "r0", "phase"] {
            reject(uses(field) && !allowed.contains(&field), field, tag)?;
        }
        if !p.params.is_empty() && p.family != FamilyTag::GaussPhase {
            return Err(CliError::Config(format!("packet.params does not apply to family {tag}")));
        }
        let family = match p.family {
            FamilyTag::Gaussian => Family::GaussPhase(PhaseExpr::zero()),
            FamilyTag::GaussPhase => {
                let src = need(p.phase.as_deref(), "phase", tag)?;
                Family::GaussPhase(PhaseExpr::parse(src, &p.params)?)
            }
            FamilyTag::LgVortex => Family::LgVortex { l: need(p.l, "l", tag)? },
            FamilyTag::Airy => Family::Airy {
                xi_x3: p.xi_x3.unwrap_or(0.0),
                xi_y3: p.xi_y3.unwrap_or(0.0),
            },
            FamilyTag::Cat => Family::Cat {
                r0: Vec3::from_array(need(p.r0, "r0", tag)?),
                parity: need(p.parity, "parity", tag)?,
            },
        };
        Ok(PacketSpec::new(family, sigma, Vec3::from_array(p.mean_p), mass)?)
    }

    /// Quadrature settings; LG packets default to the polar scheme.
    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let q = &self.quadrature;
        let d = QuadratureConfig::default();
        let default_scheme = match self.packet.family {
            FamilyTag::LgVortex => Scheme::PolarLg,
            _ => d.scheme,
        };
        let cfg = QuadratureConfig {
            nodes_per_axis: q.nodes_per_axis.unwrap_or(d.nodes_per_axis),
            scheme: q.scheme.unwrap_or(default_scheme),
            derivative_mode: q.derivative_mode.unwrap_or(d.derivative_mode),
            norm_tolerance: q.norm_tolerance.unwrap_or(d.norm_tolerance),
            convergence_tolerance: q.convergence_tolerance.unwrap_or(d.convergence_tolerance),
            check_convergence: q.check_convergence.unwrap_or(d.check_convergence),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<GridConfig, CliError> {
        let d = GridConfig::default();
        let cfg = GridConfig {
            points_per_axis: self.grid.points_per_axis.unwrap_or(d.points_per_axis),
            box_half_width: self.grid.box_half_width.or(d.box_half_width),
            source: self.grid.source.unwrap_or(d.source),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit context; `sigma_perp` from the command line wins over the file.
    pub fn units(&self, mass: f64, sigma_perp: Option<&str>) -> Result<UnitContext, CliError> {
        let width = match sigma_perp.or(self.units.sigma_perp.as_deref()) {
            Some(s) => Some(parse_length_m(s)?),
            None => None,
        };
        Ok(UnitContext::new(mass, width)?)
    }
}
