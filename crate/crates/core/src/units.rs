//! Vector and symmetric-tensor algebra in natural units (ħ = c = e = 1),
//! plus the conversion of quadrupole moments to e·cm² at the reporting boundary.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian 3-vector. Momentum, position or moment depending on context.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Checked constructor for values that cross an API boundary.
    pub fn finite(x: f64, y: f64, z: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Self { x, y, z })
        } else {
            Err(Error::NonFinite("vector component"))
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Length of the transverse (x, y) part.
    pub fn perp(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn outer(self, o: Vec3) -> SymTensor3 {
        // symmetrized a⊗b
        SymTensor3::new(
            self.x * o.x,
            self.y * o.y,
            self.z * o.z,
            0.5 * (self.x * o.y + self.y * o.x),
            0.5 * (self.x * o.z + self.z * o.x),
            0.5 * (self.y * o.z + self.z * o.y),
        )
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Symmetric 3×3 tensor stored as its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: SymTensor3 = SymTensor3::diag(1.0, 1.0, 1.0);

    pub const fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Self {
            xx,
            yy,
            zz,
            xy,
            xz,
            yz,
        }
    }

    pub const fn diag(xx: f64, yy: f64, zz: f64) -> Self {
        Self::new(xx, yy, zz, 0.0, 0.0, 0.0)
    }

    /// Builds a tensor that must already be traceless (to 1e-12 relative).
    pub fn traceless(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Result<Self> {
        let t = Self::new(xx, yy, zz, xy, xz, yz);
        if t.trace().abs() > 1e-12 * t.frobenius().max(f64::MIN_POSITIVE) {
            return Err(Error::NotTraceless(t.trace()));
        }
        Ok(t)
    }

    /// Row-major component access, `i, j ∈ 0..3`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (2, 2) => self.zz,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 2) => self.yz,
            _ => panic!("SymTensor3 index ({i}, {j}) out of range"),
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::new(f(0, 0), f(1, 1), f(2, 2), f(0, 1), f(0, 2), f(1, 2))
    }

    /// Components in the fixed report order xx, yy, zz, xy, xz, yz.
    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }

    /// Quadratic form vᵀ T v.
    pub fn contract(&self, v: Vec3) -> f64 {
        v.dot(self.apply(v))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| s * self.get(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, o: SymTensor3) -> SymTensor3 {
        SymTensor3::from_fn(|i, j| self.get(i, j) + o.get(i, j))
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, o: SymTensor3) -> SymTensor3 {
        SymTensor3::from_fn(|i, j| self.get(i, j) - o.get(i, j))
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, s: f64) -> SymTensor3 {
        self.scale(s)
    }
}

/// Removes the isotropic part: t − (tr t / 3)·I.
pub fn traceless_part(t: SymTensor3) -> SymTensor3 {
    let third = t.trace() / 3.0;
    let mut out = SymTensor3::new(
        t.xx - third,
        t.yy - third,
        t.zz - third,
        t.xy,
        t.xz,
        t.yz,
    );
    // Push the rounding residue of the trace into zz so the result is
    // traceless to the last bit and a second pass is a no-op.
    out.zz = -(out.xx + out.yy);
    out
}

/// Builds the quadrupole-type tensor 3·S − tr(S)·I from a second-moment tensor S.
pub fn quadrupole_from_second_moment(s: SymTensor3) -> SymTensor3 {
    traceless_part(s * 3.0)
}

const CM_PER_M: f64 = 100.0;

/// Mass of the particle and an optional physical transverse width used for SI reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitContext {
    mass: f64,
    sigma_perp_m: Option<f64>,
}

impl Default for UnitContext {
    fn default() -> Self {
        Self {
            mass: 1.0,
            sigma_perp_m: None,
        }
    }
}

impl UnitContext {
    pub fn new(mass: f64, sigma_perp_m: Option<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if let Some(s) = sigma_perp_m {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "physical width must be > 0, got {s} m"
                )));
            }
        }
        Ok(Self { mass, sigma_perp_m })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sigma_perp_m(&self) -> Option<f64> {
        self.sigma_perp_m
    }

    pub fn sigma_perp_cm(&self) -> Option<f64> {
        self.sigma_perp_m.map(|s| s * CM_PER_M)
    }
}

/// Converts a natural-unit quadrupole (lengths in σ_⊥) to e·cm².
pub fn q_to_si(q: SymTensor3, ctx: &UnitContext) -> Result<SymTensor3> {
    let cm = ctx.sigma_perp_cm().ok_or(Error::MissingScale)?;
    Ok(q.scale(cm * cm))
}

/// Length with a unit suffix, e.g. `0.1nm`, `10 um`, `2e-6 m`.
pub fn parse_length_m(s: &str) -> Result<f64> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .or_else(|| {
            // a bare "m" suffix after an exponent-free number
            s.rfind(|c: char| c.is_ascii_digit() || c == '.').map(|i| i + 1)
        })
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::UnitParse(s.to_string()))?;
    let scale = match unit.trim() {
        "nm" => 1e-9,
        "um" | "µm" | "μm" => 1e-6,
        "m" => 1.0,
        _ => return Err(Error::UnitParse(s.to_string())),
    };
    let v = value * scale;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::UnitParse(s.to_string()))
    }
}
