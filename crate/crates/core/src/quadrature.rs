//! One-dimensional Gaussian rules and the quadrature configuration.
//!
//! Nodes come from the eigenvalues of the Jacobi matrix (implicit QL), polished
//! with Newton steps on the three-term recurrence; weights use the closed-form
//! derivative expressions so small tail weights keep full relative accuracy.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Gauss–Hermite rule for ∫ e^{-x²} f(x) dx.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Generalized Gauss–Laguerre rule for ∫₀^∞ t^α e^{-t} f(t) dt, with weights
/// divided by Γ(α+1) so they sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreRule {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

// Eigenvalues of a symmetric tridiagonal matrix (NR tqli without vectors).
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

impl HermiteRule {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Gauss-Hermite needs n ≥ 1".into()));
        }
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n).map(|i| (i as f64 / 2.0).sqrt()).collect();
        let guesses = if n == 1 {
            vec![0.0]
        } else {
            tridiagonal_eigenvalues(&diag, &off)
        };
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &z0 in &guesses {
            let mut z = z0;
            let mut pp = 0.0;
            let mut scale_sq = 0.0;
            for _ in 0..8 {
                // orthonormal Hermite functions (polynomial × e^{-z²/2}) stay bounded
                let mut p1 = std::f64::consts::PI.powf(-0.25) * (-0.5 * z * z).exp();
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                scale_sq = (-z * z).exp();
                if pp == 0.0 {
                    break;
                }
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes.push(z);
            weights.push(if pp == 0.0 {
                0.0
            } else {
                2.0 * scale_sq / (pp * pp)
            });
        }
        // enforce exact symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl LaguerreRule {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 || !(alpha > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Laguerre needs n ≥ 1 and α > -1 (n = {n}, α = {alpha})"
            )));
        }
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 + alpha + 1.0).collect();
        let off: Vec<f64> = (1..n)
            .map(|i| (i as f64 * (i as f64 + alpha)).sqrt())
            .collect();
        let guesses = if n == 1 {
            vec![alpha + 1.0]
        } else {
            tridiagonal_eigenvalues(&diag, &off)
        };
        let log_norm = ln_gamma(alpha + n as f64) - ln_gamma(n as f64) - ln_gamma(alpha + 1.0);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &z0 in &guesses {
            let mut z = z0;
            let (mut pp, mut p2) = (1.0, 1.0);
            for _ in 0..8 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
                }
                pp = (n as f64 * p1 - (n as f64 + alpha) * p2) / z;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes.push(z);
            weights.push(-log_norm.exp() / (pp * n as f64 * p2));
        }
        Ok(Self {
            alpha,
            nodes,
            weights,
        })
    }
}

/// How the momentum-space average is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    /// Tensor Gauss–Hermite in (p − ⟨p⟩)/σ.
    TensorHermite,
    /// LG only: generalized Gauss–Laguerre in p_⊥²/σ², trapezoid in φ_p, Hermite in p_z.
    PolarLg,
    MonteCarlo { samples: usize, seed: u64 },
}

/// How ∂ψ/∂p is obtained at the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DerivativeMode {
    AnalyticAd,
    CentralDiff { h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub nodes_per_axis: usize,
    pub scheme: Scheme,
    pub derivative_mode: DerivativeMode,
    /// Largest tolerated |∫|ψ|² − 1|.
    pub norm_tolerance: f64,
    /// Largest tolerated change of any moment component when the node count doubles.
    pub convergence_tolerance: f64,
    pub check_convergence: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_axis: 48,
            scheme: Scheme::TensorHermite,
            derivative_mode: DerivativeMode::AnalyticAd,
            norm_tolerance: 1e-8,
            convergence_tolerance: 1e-6,
            check_convergence: true,
        }
    }
}

impl QuadratureConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 8 {
            return Err(Error::InvalidParameter(format!(
                "nodes_per_axis must be ≥ 8, got {}",
                self.nodes_per_axis
            )));
        }
        if let DerivativeMode::CentralDiff { h } = self.derivative_mode {
            if !(1e-8..=1e-3).contains(&h) {
                return Err(Error::InvalidParameter(format!(
                    "central-difference step must lie in [1e-8, 1e-3], got {h}"
                )));
            }
        }
        if let Scheme::MonteCarlo { samples, .. } = self.scheme {
            if samples < 64 {
                return Err(Error::InvalidParameter(format!(
                    "Monte Carlo needs at least 64 samples, got {samples}"
                )));
            }
        }
        if !(self.norm_tolerance > 0.0 && self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    // ∫ x^{2k} e^{-x²} dx = Γ(k + 1/2)
    #[test]
    fn hermite_moments_exact() {
        for n in [1, 2, 7, 8, 48, 97, 200] {
            let rule = HermiteRule::new(n).unwrap();
            for k in 0..n.min(20) {
                let exact = gamma(k as f64 + 0.5);
                let got = rule.integrate(|x| x.powi(2 * k as i32));
                assert_relative_eq!(got, exact, max_relative = 1e-12);
                let odd = rule.integrate(|x| x.powi(2 * k as i32 + 1));
                assert!(odd.abs() < 1e-12 * exact.max(1.0), "n={n} k={k} odd={odd}");
            }
        }
    }

    #[test]
    fn hermite_even_rules_avoid_zero() {
        let rule = HermiteRule::new(48).unwrap();
        assert!(rule.nodes.iter().all(|x| x.abs() > 1e-3));
        assert_eq!(HermiteRule::new(9).unwrap().nodes[4], 0.0);
    }

    #[test]
    fn hermite_resolves_oscillation() {
        // ∫ cos(kx) e^{-x²} dx = √π e^{-k²/4}
        let rule = HermiteRule::new(120).unwrap();
        let k = 10.0;
        let got = rule.integrate(|x| (k * x).cos());
        assert!((got - PI.sqrt() * (-k * k / 4.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn laguerre_moments_exact() {
        for alpha in [0.0, 1.0, 4.0, 19.0, 99.0] {
            for n in [1, 5, 48] {
                let rule = LaguerreRule::new(n, alpha).unwrap();
                let mut exact = 1.0;
                for k in 0..(2 * n).min(24) {
                    let got: f64 = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(t, w)| w * t.powi(k as i32))
                        .sum();
                    assert_relative_eq!(got, exact, max_relative = 1e-11);
                    exact *= alpha + k as f64 + 1.0;
                }
            }
        }
    }

    #[test]
    fn laguerre_large_alpha_is_finite() {
        let rule = LaguerreRule::new(48, 999.0).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-10);
        let mean: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| t * w).sum();
        assert_relative_eq!(mean, 1000.0, max_relative = 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            nodes_per_axis: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad_h = QuadratureConfig {
            derivative_mode: DerivativeMode::CentralDiff { h: 1e-2 },
            ..Default::default()
        };
        assert!(bad_h.validate().is_err());
    }
}
