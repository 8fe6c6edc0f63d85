//! Closed-form intrinsic moments and the dipole boost.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::packets::{Family, PacketSpec, Parity};
use crate::units::{SymTensor3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Quadrature,
    Grid,
}

/// Frame in which `d` and `mu` are expressed. `q` is always a rest-frame value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Frame {
    Rest,
    Boosted { beta: [f64; 3] },
}

/// One-sigma statistical errors for Monte Carlo results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentErrors {
    pub d: Vec3,
    pub mu: Vec3,
    pub q: SymTensor3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// ∫|ψ|² as seen by the numeric path.
    pub norm: Option<f64>,
    /// Mean position before the intrinsic subtraction.
    pub extrinsic_d: Option<Vec3>,
    /// ⟨r²⟩ − d².
    pub centered_r2: Option<f64>,
    /// Largest component change under node doubling.
    pub convergence_delta: Option<f64>,
    pub std_err: Option<MomentErrors>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub d: Vec3,
    pub mu: Vec3,
    pub q: SymTensor3,
    pub provenance: Provenance,
    pub frame: Frame,
    pub diagnostics: Diagnostics,
}

impl MomentSet {
    pub fn new(d: Vec3, mu: Vec3, q: SymTensor3, provenance: Provenance) -> Self {
        Self {
            d,
            mu,
            q,
            provenance,
            frame: Frame::Rest,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn zero(provenance: Provenance) -> Self {
        Self::new(Vec3::ZERO, Vec3::ZERO, SymTensor3::ZERO, provenance)
    }

    /// Components in a fixed order: d (3), mu (3), q (xx, yy, zz, xy, xz, yz).
    pub fn components(&self) -> [f64; 12] {
        let q = self.q.components();
        [
            self.d.x, self.d.y, self.d.z, self.mu.x, self.mu.y, self.mu.z, q[0], q[1], q[2], q[3],
            q[4], q[5],
        ]
    }

    pub const COMPONENT_NAMES: [&'static str; 12] = [
        "d_x", "d_y", "d_z", "mu_x", "mu_y", "mu_z", "q_xx", "q_yy", "q_zz", "q_xy", "q_xz", "q_yz",
    ];

    /// Largest absolute componentwise difference and the name of that component.
    pub fn max_delta(&self, other: &MomentSet) -> (f64, &'static str) {
        let (a, b) = (self.components(), other.components());
        (0..12)
            .map(|i| ((a[i] - b[i]).abs(), Self::COMPONENT_NAMES[i]))
            .fold((0.0, Self::COMPONENT_NAMES[0]), |acc, x| {
                if x.0 > acc.0 || x.0.is_nan() {
                    x
                } else {
                    acc
                }
            })
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

/// LG vortex: μ = ℓ/(2m) ẑ, Q = (|ℓ|/σ²) diag(½, ½, −1).
pub fn vortex_moments(l: i64, sigma: f64, mass: f64) -> Result<MomentSet> {
    check_positive("σ", sigma)?;
    check_positive("mass", mass)?;
    let rho2 = l.unsigned_abs() as f64 / (sigma * sigma);
    Ok(MomentSet::new(
        Vec3::ZERO,
        Vec3::new(0.0, 0.0, l as f64 / (2.0 * mass)),
        SymTensor3::diag(0.5 * rho2, 0.5 * rho2, -rho2),
        Provenance::Analytic,
    ))
}

/// Airy packet with phase (ξ_x³p_x³ + ξ_y³p_y³)/3. Only the quadrupole survives.
pub fn airy_moments(xi_x3: f64, xi_y3: f64, sigma: f64) -> Result<MomentSet> {
    check_positive("σ", sigma)?;
    if !(xi_x3.is_finite() && xi_y3.is_finite()) {
        return Err(Error::NonFinite("Airy parameter"));
    }
    let (a, b) = (xi_x3 * xi_x3, xi_y3 * xi_y3);
    let k = 0.5 * sigma.powi(4);
    let mut ms = MomentSet::new(
        Vec3::ZERO,
        Vec3::ZERO,
        SymTensor3::diag(k * (2.0 * a - b), k * (2.0 * b - a), -k * (a + b)),
        Provenance::Analytic,
    );
    if let Some(w) = airy_bound_warning(xi_x3, xi_y3, sigma) {
        log::warn!("{w}");
        ms.diagnostics.warnings.push(w);
    }
    Ok(ms)
}

/// Warns when |ξ| exceeds the transverse width σ_⊥ = 1/σ.
pub fn airy_bound_warning(xi_x3: f64, xi_y3: f64, sigma: f64) -> Option<String> {
    let xi = xi_x3.abs().max(xi_y3.abs()).cbrt();
    (xi * sigma > 1.0).then(|| {
        format!(
            "Airy length |ξ| = {xi:.4} exceeds the packet width σ_⊥ = {:.4}; \
             the packet is outside the regime where the moments are physically meaningful",
            1.0 / sigma
        )
    })
}

/// Cat state: Q = (3r₀r₀ − r₀²δ)/(1 ± e^{−σ²r₀²}).
pub fn cat_moments(r0: Vec3, parity: Parity, sigma: f64) -> Result<MomentSet> {
    check_positive("σ", sigma)?;
    if !r0.is_finite() {
        return Err(Error::NonFinite("cat displacement"));
    }
    if r0.z != 0.0 {
        return Err(Error::InvalidParameter(
            "cat displacement r0 must lie in the transverse plane".into(),
        ));
    }
    let s = sigma * r0.norm();
    if parity == Parity::Odd && s < 1e-6 {
        return Err(Error::DegenerateCat(s));
    }
    let denom = match parity {
        Parity::Even => 1.0 + (-s * s).exp(),
        // 1 − e^{−x} without cancellation for small x
        Parity::Odd => -(-s * s).exp_m1(),
    };
    let q = (Vec3::outer(r0, r0) * 3.0 - SymTensor3::IDENTITY * r0.norm_sq()) * (1.0 / denom);
    Ok(MomentSet::new(Vec3::ZERO, Vec3::ZERO, q, Provenance::Analytic))
}

/// Closed-form moments for the packet, or `None` when the family has none.
///
/// A gauss_phase packet qualifies only with a constant phase (the plain Gaussian).
pub fn closed_form(spec: &PacketSpec) -> Option<Result<MomentSet>> {
    match spec.family() {
        Family::LgVortex { l } => Some(vortex_moments(*l, spec.sigma(), spec.mass())),
        Family::Airy { xi_x3, xi_y3 } => Some(airy_moments(*xi_x3, *xi_y3, spec.sigma())),
        Family::Cat { r0, parity } => Some(cat_moments(*r0, *parity, spec.sigma())),
        Family::GaussPhase(phase) if phase.is_constant() => Some(Ok(MomentSet::zero(Provenance::Analytic))),
        Family::GaussPhase(_) => None,
    }
}

/// Transforms (d, μ) to a frame in which the packet moves with velocity β.
///
/// ```text
/// d' = d_∥/γ + (d + β×μ)_⊥
/// μ' = μ_∥/γ + (μ − β×d)_⊥
/// ```
///
/// The quadrupole is carried over unchanged and stays a rest-frame value.
pub fn boost_dipoles(ms: &MomentSet, beta: Vec3) -> Result<MomentSet> {
    if !beta.is_finite() {
        return Err(Error::NonFinite("boost velocity"));
    }
    let b = beta.norm();
    if b >= 1.0 {
        return Err(Error::SuperluminalBoost(b));
    }
    if ms.frame != Frame::Rest {
        return Err(Error::InvalidParameter("moments are already boosted".into()));
    }
    let mut out = ms.clone();
    if b == 0.0 {
        return Ok(out);
    }
    let gamma = 1.0 / (1.0 - b * b).sqrt();
    let n = beta / b;
    let split = |v: Vec3, w: Vec3| {
        let par = n * v.dot(n);
        let perp = w - n * w.dot(n);
        par / gamma + perp
    };
    out.d = split(ms.d, ms.d + beta.cross(ms.mu));
    out.mu = split(ms.mu, ms.mu - beta.cross(ms.d));
    out.frame = Frame::Boosted {
        beta: beta.to_array(),
    };
    Ok(out)
}
