//! Serialized results of `moments`.

use std::collections::BTreeMap;
use std::io::Write;

use packet_moments::{Family, MomentSet, PacketSpec, SymTensor3, Vec3};
use serde::Serialize;

use crate::{CliError, PathKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed-width scientific notation with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct PacketEcho {
    pub family: &'static str,
    pub sigma: f64,
    pub mean_p: Vec3,
    pub mass: f64,
    pub parameters: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
}

impl PacketEcho {
    pub fn new(spec: &PacketSpec) -> Self {
        let mut parameters = BTreeMap::new();
        let mut phase = None;
        match spec.family() {
            Family::GaussPhase(p) => phase = Some(p.to_string()),
            Family::LgVortex { l } => {
                parameters.insert("l", *l as f64);
            }
            Family::Airy { xi_x3, xi_y3 } => {
                parameters.insert("xi_x3", *xi_x3);
                parameters.insert("xi_y3", *xi_y3);
            }
            Family::Cat { r0, parity } => {
                parameters.insert("r0_x", r0.x);
                parameters.insert("r0_y", r0.y);
                parameters.insert("parity_sign", parity.sign());
            }
        }
        Self {
            family: spec.family().tag(),
            sigma: spec.sigma(),
            mean_p: spec.mean_p(),
            mass: spec.mass(),
            parameters,
            phase,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub path: PathKind,
    pub moments: MomentSet,
    /// Quadrupole in e·cm².
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_si: Option<SymTensor3>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathDelta {
    pub a: PathKind,
    pub b: PathKind,
    pub max_delta: f64,
    pub component: &'static str,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub packet: PacketEcho,
    pub paths: Vec<PathResult>,
    pub deltas: Vec<PathDelta>,
    pub agreement: bool,
}

const Q_SI_COLUMNS: [&str; 6] = ["q_si_xx", "q_si_yy", "q_si_zz", "q_si_xy", "q_si_xz", "q_si_yz"];

impl RunReport {
    pub fn write_json(&self, out: &mut dyn Write) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// One row per path; SI columns appear when any path carries them.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let si = self.paths.iter().any(|p| p.q_si.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["path"];
        header.extend(MomentSet::COMPONENT_NAMES);
        if si {
            header.extend(Q_SI_COLUMNS);
        }
        w.write_record(&header)?;
        for p in &self.paths {
            let mut row = vec![p.path.name().to_string()];
            row.extend(p.moments.components().iter().map(|&v| num(v)));
            if let Some(q) = p.q_si {
                row.extend(q.components().iter().map(|&v| num(v)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
