//! Far-zone static fields of a packet: Coulomb term, quadrupole field and
//! magnetic-dipole field, plus the component formulas for vortex and Airy packets.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::MomentSet;
use crate::error::{Error, Result};
use crate::units::{SymTensor3, Vec3};

/// Point from spherical coordinates.
pub fn spherical(r: f64, theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        r * theta.sin() * phi.cos(),
        r * theta.sin() * phi.sin(),
        r * theta.cos(),
    )
}

/// Azimuth of `at`, taken as 0 on the z axis.
fn azimuth(at: Vec3) -> f64 {
    if at.x == 0.0 && at.y == 0.0 {
        0.0
    } else {
        at.y.atan2(at.x)
    }
}

/// Components (v_ρ, v_φ, v_z) of a Cartesian vector at the point `at`.
pub fn to_cylindrical(v: Vec3, at: Vec3) -> Vec3 {
    let (s, c) = azimuth(at).sin_cos();
    Vec3::new(v.x * c + v.y * s, -v.x * s + v.y * c, v.z)
}

fn radius(r: Vec3) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::NonFinite("field point"));
    }
    let n = r.norm();
    if n == 0.0 {
        Err(Error::OriginSingularity)
    } else {
        Ok(n)
    }
}

/// E_α = (5/2) r_α (r·Q·r)/r⁷ − Q_αβ r_β/r⁵, Cartesian.
pub fn quadrupole_field(q: &SymTensor3, r: Vec3) -> Result<Vec3> {
    let d = radius(r)?;
    let r5 = d.powi(5);
    Ok(r * (2.5 * q.contract(r) / (r5 * d * d)) - q.apply(r) / r5)
}

/// Unit-charge Coulomb field n̂/r².
pub fn coulomb_field(r: Vec3) -> Result<Vec3> {
    let d = radius(r)?;
    Ok(r / (d * d * d))
}

/// H = (3n̂(n̂·μ) − μ)/r³.
pub fn dipole_field(mu: Vec3, r: Vec3) -> Result<Vec3> {
    let d = radius(r)?;
    let n = r / d;
    Ok((n * (3.0 * n.dot(mu)) - mu) / (d * d * d))
}

/// Vortex packet field (E_ρ, E_z) for mean radius squared `rho2`; E_φ vanishes.
pub fn vortex_field_components(rho2: f64, r: f64, theta: f64) -> Result<(f64, f64)> {
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let (s, c) = theta.sin_cos();
    let k = 0.75 * rho2 / r.powi(4);
    Ok((k * s * (1.0 - 5.0 * c * c), k * c * (3.0 - 5.0 * c * c)))
}

/// Airy packet field (E_ρ, E_φ, E_z) for ξ = ξ³(cos η, sin η).
///
/// ```text
/// E_ρ = k sinθ/(4r⁴) [(3 − 5cos²θ)F − 5cos²θ],  F = 2 − 3cos²η + 3cos²φ(2cos²η − 1)
/// E_φ = (3/2) k/r⁴ sinθ cosφ sinφ cos2η
/// E_z = k cosθ/(4r⁴) [5(3sin²θ cos²η cos2φ + sin²θ(2 − 3cos²φ) − cos²θ) + 2]
/// ```
///
/// with k = σ⁴ξ⁶. E_ρ carries a −5cos²θ term that vanishes in the equatorial plane.
pub fn airy_field_components(
    sigma: f64,
    xi3: f64,
    eta: f64,
    r: f64,
    theta: f64,
    phi: f64,
) -> Result<(f64, f64, f64)> {
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let k = sigma.powi(4) * xi3 * xi3 / r.powi(4);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let ce2 = eta.cos().powi(2);
    let f = 2.0 - 3.0 * ce2 + 3.0 * cp * cp * (2.0 * ce2 - 1.0);
    let e_rho = 0.25 * k * st * ((3.0 - 5.0 * ct * ct) * f - 5.0 * ct * ct);
    let e_phi = 1.5 * k * st * cp * sp * (2.0 * eta).cos();
    let e_z = 0.25
        * k
        * ct
        * (5.0 * (3.0 * st * st * ce2 * (2.0 * phi).cos() + st * st * (2.0 - 3.0 * cp * cp) - ct * ct) + 2.0);
    Ok((e_rho, e_phi, e_z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub position: Vec3,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub rho: f64,
    pub z: f64,
    /// Total E = Coulomb + quadrupole, cylindrical (E_ρ, E_φ, E_z).
    pub e: Vec3,
    /// Quadrupole part of E, cylindrical.
    pub e_q: Vec3,
    /// H of the magnetic dipole, cylindrical.
    pub h: Vec3,
}

/// E = n̂/r² + E_Q and H = H_μ at `r`.
pub fn total_field(ms: &MomentSet, r: Vec3) -> Result<FieldSample> {
    let d = radius(r)?;
    let e_q = quadrupole_field(&ms.q, r)?;
    let e = coulomb_field(r)? + e_q;
    let h = dipole_field(ms.mu, r)?;
    Ok(FieldSample {
        position: r,
        r: d,
        theta: (r.z / d).clamp(-1.0, 1.0).acos(),
        phi: azimuth(r),
        rho: r.perp(),
        z: r.z,
        e: to_cylindrical(e, r),
        e_q: to_cylindrical(e_q, r),
        h: to_cylindrical(h, r),
    })
}

/// Inclusive range of `count` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Span {
    pub fn single(v: f64) -> Self {
        Self {
            min: v,
            max: v,
            count: 1,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidGrid(format!("{name} has no points")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::InvalidGrid(format!(
                "{name} range [{}, {}] is not valid",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Spherical sampling grid for field maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub r: Span,
    pub theta: Span,
    pub phi: Span,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        self.r.validate("r")?;
        self.theta.validate("theta")?;
        self.phi.validate("phi")?;
        if !(self.r.min > 0.0) {
            return Err(Error::InvalidGrid(format!("r_min must be > 0, got {}", self.r.min)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.r.count * self.theta.count * self.phi.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (r, θ, φ) of sample `i`, ordered by r, then θ, then φ.
    pub fn point(&self, i: usize) -> (f64, f64, f64) {
        let (nt, np) = (self.theta.count, self.phi.count);
        (
            self.r.value(i / (nt * np)),
            self.theta.value((i / np) % nt),
            self.phi.value(i % np),
        )
    }
}

/// Field samples over the grid, in grid order.
pub fn field_map(ms: &MomentSet, grid: &FieldGrid) -> Result<Vec<FieldSample>> {
    grid.validate()?;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (r, t, p) = grid.point(i);
            let mut s = total_field(ms, spherical(r, t, p))?;
            // keep the requested angles rather than the ones recovered from the point
            s.theta = t;
            s.phi = p;
            Ok(s)
        })
        .collect()
}

/// One row of the equatorial Airy radial-field curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    pub phi: f64,
    pub e_rho: f64,
    /// E_ρ·r⁴/(σ⁴ξ⁶).
    pub e_rho_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Curve {
    pub rows: Vec<Fig1Row>,
    /// Sign changes of E_ρ in [0, 2π), refined by bisection.
    pub zeros: Vec<f64>,
}

/// Radial field of an Airy packet with η = 0 in the plane θ = π/2, φ ∈ [0, 2π).
pub fn fig1_curve(xi3: f64, sigma: f64, r: f64, samples: usize) -> Result<Fig1Curve> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must be > 0, got {r}")));
    }
    if samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 samples, got {samples}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !xi3.is_finite() || xi3 == 0.0 {
        return Err(Error::InvalidParameter("σ must be > 0 and ξ³ nonzero".into()));
    }
    let scale = r.powi(4) / (sigma.powi(4) * xi3 * xi3);
    let e_rho = |phi: f64| -> f64 {
        airy_field_components(sigma, xi3, 0.0, r, PI / 2.0, phi)
            .map(|c| c.0)
            .unwrap_or(f64::NAN)
    };
    let rows: Vec<Fig1Row> = (0..samples)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / samples as f64;
            let e = e_rho(phi);
            Fig1Row {
                phi,
                e_rho: e,
                e_rho_norm: e * scale,
            }
        })
        .collect();
    let mut zeros = Vec::new();
    for k in 0..samples {
        let (a, b) = (
            2.0 * PI * k as f64 / samples as f64,
            2.0 * PI * (k + 1) as f64 / samples as f64,
        );
        let (fa, fb) = (e_rho(a), e_rho(b));
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(bisect(&e_rho, a, b));
        }
    }
    Ok(Fig1Curve { rows, zeros })
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
