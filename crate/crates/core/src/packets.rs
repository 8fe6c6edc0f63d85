//! Packet families and their normalized wave functions.
//!
//! Every family shares the same Gaussian envelope in momentum space,
//!
//! ```text
//! ψ(p) = (2√π/σ)^{3/2} · exp(−(p − ⟨p⟩)²/(2σ²)) · F(p)
//! ```
//!
//! and differs in the factor F: a pure phase e^{iφ(p)}, the vortex factor
//! (p_x ± i p_y)^{|ℓ|}/(σ^{|ℓ|}√|ℓ|!), or the cat superposition of two shifted
//! copies. Wave functions are taken at t = 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::phase::PhaseExpr;
use crate::units::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Gaussian envelope with an arbitrary phase.
    GaussPhase(PhaseExpr),
    /// Laguerre–Gaussian vortex with radial index 0.
    LgVortex { l: i64 },
    /// Cubic phase (ξ_x³ p_x³ + ξ_y³ p_y³)/3; parameters are the ξ³ values.
    Airy { xi_x3: f64, xi_y3: f64 },
    /// Superposition of two Gaussians centred at ±r₀.
    Cat { r0: Vec3, parity: Parity },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::GaussPhase(_) => "gauss_phase",
            Family::LgVortex { .. } => "lg_vortex",
            Family::Airy { .. } => "airy",
            Family::Cat { .. } => "cat",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    family: Family,
    sigma: f64,
    mean_p: Vec3,
    mass: f64,
}

impl PacketSpec {
    pub fn new(family: Family, sigma: f64, mean_p: Vec3, mass: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ must be > 0, got {sigma}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if !mean_p.is_finite() {
            return Err(Error::NonFinite("mean momentum"));
        }
        if mean_p.x != 0.0 || mean_p.y != 0.0 {
            return Err(Error::InvalidParameter(
                "mean momentum must be along z (zero transverse part)".into(),
            ));
        }
        match &family {
            Family::Cat { r0, .. } => {
                if !r0.is_finite() {
                    return Err(Error::NonFinite("cat displacement"));
                }
                if r0.z != 0.0 {
                    return Err(Error::InvalidParameter(
                        "cat displacement r0 must lie in the transverse plane".into(),
                    ));
                }
            }
            Family::Airy { xi_x3, xi_y3 } => {
                if !(xi_x3.is_finite() && xi_y3.is_finite()) {
                    return Err(Error::NonFinite("Airy parameter"));
                }
            }
            _ => {}
        }
        Ok(Self {
            family,
            sigma,
            mean_p,
            mass,
        })
    }

    pub fn gaussian(sigma: f64, mean_pz: f64, mass: f64) -> Result<Self> {
        Self::new(
            Family::GaussPhase(PhaseExpr::zero()),
            sigma,
            Vec3::new(0.0, 0.0, mean_pz),
            mass,
        )
    }

    pub fn lg(l: i64, sigma: f64, mass: f64) -> Result<Self> {
        Self::new(Family::LgVortex { l }, sigma, Vec3::ZERO, mass)
    }

    pub fn airy(xi_x3: f64, xi_y3: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Airy { xi_x3, xi_y3 }, sigma, Vec3::ZERO, 1.0)
    }

    pub fn cat(r0: Vec3, parity: Parity, sigma: f64) -> Result<Self> {
        Self::new(Family::Cat { r0, parity }, sigma, Vec3::ZERO, 1.0)
    }

    pub fn with_mean_pz(mut self, pz: f64) -> Result<Self> {
        if !pz.is_finite() {
            return Err(Error::NonFinite("mean momentum"));
        }
        self.mean_p = Vec3::new(0.0, 0.0, pz);
        Ok(self)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(self.family, self.sigma, self.mean_p, mass)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.family, sigma, self.mean_p, self.mass)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Transverse width σ_⊥ = 1/σ.
    pub fn sigma_perp(&self) -> f64 {
        1.0 / self.sigma
    }

    pub fn mean_p(&self) -> Vec3 {
        self.mean_p
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Evaluates the family factor F(p) and, when requested, ∂F/∂p.
    pub(crate) fn factor(&self, p: Vec3, with_grad: bool) -> Result<(Complex64, [Complex64; 3])> {
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::i();
        Ok(match &self.family {
            Family::GaussPhase(phase) => {
                if with_grad {
                    let g = phase.eval_grad(p)?;
                    let f = Complex64::from_polar(1.0, g.value);
                    (f, [0, 1, 2].map(|k| i * g.grad[k] * f))
                } else {
                    (Complex64::from_polar(1.0, phase.eval(p)?), [zero; 3])
                }
            }
            Family::Airy { xi_x3, xi_y3 } => {
                let phi = (xi_x3 * p.x.powi(3) + xi_y3 * p.y.powi(3)) / 3.0;
                let f = Complex64::from_polar(1.0, phi);
                let g = [xi_x3 * p.x * p.x, xi_y3 * p.y * p.y, 0.0];
                (f, g.map(|gk| i * gk * f))
            }
            Family::LgVortex { l } => {
                let big_l = l.unsigned_abs();
                let s = if *l >= 0 { 1.0 } else { -1.0 };
                let z = Complex64::new(p.x, s * p.y) / self.sigma;
                let f = lg_power(z, big_l);
                if big_l == 0 {
                    (f, [zero; 3])
                } else {
                    // d/dz z^L/√L! = √L · z^{L−1}/√(L−1)!
                    let df = lg_power(z, big_l - 1) * ((big_l as f64).sqrt() / self.sigma);
                    (f, [df, i * s * df, zero])
                }
            }
            Family::Cat { r0, parity } => {
                let a = r0.dot(p);
                let norm = cat_norm(*r0, *parity, self.sigma)?;
                let minus = Complex64::from_polar(1.0, -a);
                let plus = Complex64::from_polar(1.0, a);
                let sgn = parity.sign();
                let f = (minus + sgn * plus) * norm;
                let df = (-minus + sgn * plus) * i * norm;
                (f, [df * r0.x, df * r0.y, df * r0.z])
            }
        })
    }

    /// Gaussian envelope with the (2√π/σ)^{3/2} normalization.
    pub(crate) fn envelope(&self, p: Vec3) -> f64 {
        let d = p - self.mean_p;
        envelope_prefactor(self.sigma) * (-d.norm_sq() / (2.0 * self.sigma * self.sigma)).exp()
    }
}

pub(crate) fn envelope_prefactor(sigma: f64) -> f64 {
    (2.0 * PI.sqrt() / sigma).powf(1.5)
}

/// z^L/√(L!) without overflow for large L.
pub(crate) fn lg_power(z: Complex64, big_l: u64) -> Complex64 {
    if big_l == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let lf = big_l as f64;
    let log_mag = lf * r.ln() - 0.5 * ln_gamma(lf + 1.0);
    if big_l <= 64 && r.powi(big_l as i32).is_finite() {
        // exact integer power keeps the phase free of accumulated rounding
        return z.powi(big_l as i32) * (-0.5 * ln_gamma(lf + 1.0)).exp();
    }
    Complex64::from_polar(log_mag.exp(), lf * z.arg())
}

/// 1/√(2(1 ± e^{−σ²r₀²})).
pub(crate) fn cat_norm(r0: Vec3, parity: Parity, sigma: f64) -> Result<f64> {
    let overlap = (-(sigma * sigma) * r0.norm_sq()).exp();
    if parity == Parity::Odd && sigma * r0.norm() < 1e-6 {
        return Err(Error::DegenerateCat(sigma * r0.norm()));
    }
    Ok(1.0 / (2.0 * (1.0 + parity.sign() * overlap)).sqrt())
}

pub use crate::numeric::norm_check;

/// Normalized momentum-space amplitude ψ(p).
pub fn psi_p(spec: &PacketSpec, p: Vec3) -> Result<Complex64> {
    let (f, _) = spec.factor(p, false)?;
    Ok(f * spec.envelope(p))
}

/// Closed-form position-space wave function at t = 0, where one exists:
/// Gaussians with a constant phase, LG vortices and cat states.
pub fn psi_r_closed(spec: &PacketSpec, r: Vec3) -> Option<Complex64> {
    closed_position(spec, r, true)
}

/// Same as [`psi_r_closed`] with the plane-wave carrier e^{i⟨p⟩z} stripped.
pub(crate) fn closed_position(spec: &PacketSpec, r: Vec3, carrier: bool) -> Option<Complex64> {
    let sigma = spec.sigma;
    let gauss = |c: Vec3| sigma.powf(1.5) / PI.powf(0.75) * (-0.5 * sigma * sigma * c.norm_sq()).exp();
    let wave = if carrier {
        Complex64::from_polar(1.0, spec.mean_p.z * r.z)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let amp = match &spec.family {
        Family::GaussPhase(phase) if phase.is_constant() => {
            let c = phase.eval(Vec3::ZERO).ok()?;
            Complex64::from_polar(gauss(r), c)
        }
        Family::GaussPhase(_) | Family::Airy { .. } => return None,
        Family::LgVortex { l } => {
            let big_l = l.unsigned_abs();
            let s = if *l >= 0 { 1.0 } else { -1.0 };
            // (iρ)^L e^{iℓφ_r} = i^L (x ± i y)^L
            let w = Complex64::new(r.x, s * r.y) * sigma;
            let i_pow = Complex64::i().powu((big_l % 4) as u32);
            i_pow * lg_power(w, big_l) * gauss(r)
        }
        Family::Cat { r0, parity } => {
            let norm = cat_norm(*r0, *parity, sigma).ok()?;
            let val = gauss(r - *r0) + parity.sign() * gauss(r + *r0);
            Complex64::new(val * norm, 0.0)
        }
    };
    Some(amp * wave)
}
