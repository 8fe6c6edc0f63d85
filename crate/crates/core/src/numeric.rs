//! Intrinsic moments from momentum-space quadrature.
//!
//! Position acts as r = i∂/∂p, so every moment is a bilinear form in ψ and ∂ψ.
//! Writing ψ = E·F with the normalized Gaussian envelope E, each node carries
//! a = F and b = ∂F + F·∂ln E, and the Gaussian weight of the rule absorbs |E|².
//!
//! ```text
//! n      = Σ w |a|²
//! d      = −Σ w Im(a* b) / n
//! ⟨rr⟩−dd = Σ w Re(b* b) / n − d d
//! ⟨L⟩    = Σ w p × Im(a* b) / n
//! ```

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::analytic::{MomentErrors, MomentSet, Provenance};
use crate::error::{Error, Result};
use crate::packets::{Family, PacketSpec};
use crate::phase::{Singularity, Var};
use crate::quadrature::{DerivativeMode, HermiteRule, LaguerreRule, QuadratureConfig, Scheme};
use crate::sum::try_par_sum;
use crate::units::{quadrupole_from_second_moment, SymTensor3, Vec3};

const MC_BATCHES: usize = 32;
/// π^{-3/2}, the Gaussian normalization in scaled momenta.
const GAUSS_NORM: f64 = 0.179_587_122_125_166_56;
const LANES: usize = 16;

type C64 = Complex64;

/// Which bilinear forms the nodes feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Amplitude {
    /// Full ψ and ∂ψ.
    Full,
    /// Only ∂φ of a pure-phase packet (a = 1, b = i∂φ).
    PhaseOnly,
}

enum Rule {
    Tensor {
        axes: [Vec3; 3],
        rules: [HermiteRule; 3],
    },
    Polar {
        lag: LaguerreRule,
        nphi: usize,
        herm: HermiteRule,
    },
    MonteCarlo {
        points: Vec<Vec3>,
        /// (t, φ_p) per point when LG samples are drawn in polar form.
        polar: Option<Vec<(f64, f64)>>,
    },
}

struct Node {
    w: f64,
    p: Vec3,
    /// (t = q_⊥², φ_p) for polar nodes.
    polar: Option<(f64, f64)>,
}

impl Rule {
    fn len(&self) -> usize {
        match self {
            Rule::Tensor { rules, .. } => rules.iter().map(HermiteRule::len).product(),
            Rule::Polar { lag, nphi, herm } => lag.nodes.len() * nphi * herm.len(),
            Rule::MonteCarlo { points, .. } => points.len(),
        }
    }

    fn node(&self, spec: &PacketSpec, i: usize) -> Node {
        let sigma = spec.sigma();
        let centre = spec.mean_p();
        match self {
            Rule::Tensor { axes, rules } => {
                let n2 = rules[2].len();
                let n1 = rules[1].len();
                let (i0, i1, i2) = (i / (n1 * n2), (i / n2) % n1, i % n2);
                let q = [rules[0].nodes[i0], rules[1].nodes[i1], rules[2].nodes[i2]];
                let w = rules[0].weights[i0] * rules[1].weights[i1] * rules[2].weights[i2];
                let p = centre + (axes[0] * q[0] + axes[1] * q[1] + axes[2] * q[2]) * sigma;
                Node {
                    w: w * GAUSS_NORM,
                    p,
                    polar: None,
                }
            }
            Rule::Polar { lag, nphi, herm } => {
                let nz = herm.len();
                let (ik, rest) = (i / (nphi * nz), i % (nphi * nz));
                let (ip, iz) = (rest / nz, rest % nz);
                let t = lag.nodes[ik];
                let phi = 2.0 * PI * (ip as f64 + 0.5) / *nphi as f64;
                let rho = sigma * t.sqrt();
                let p = Vec3::new(rho * phi.cos(), rho * phi.sin(), centre.z + sigma * herm.nodes[iz]);
                // ½ dt dφ from d²q, π^{-3/2} from the Gaussian normalization
                let w = lag.weights[ik] * herm.weights[iz] * PI / (*nphi as f64) * GAUSS_NORM;
                Node {
                    w,
                    p,
                    polar: Some((t, phi)),
                }
            }
            Rule::MonteCarlo { points, polar } => Node {
                w: 1.0 / points.len() as f64,
                p: centre + points[i] * sigma,
                polar: polar.as_ref().map(|v| v[i]),
            },
        }
    }
}

fn hermite_even(n: usize) -> Result<HermiteRule> {
    HermiteRule::new(n + n % 2)
}

/// Nodes needed along r̂₀ for a cat with σ|r₀| = s.
fn cat_axis_nodes(s: f64) -> usize {
    (s * s + 4.0 * s + 16.0).ceil() as usize
}

/// Node count on axes along which F is constant: the integrand there is a
/// polynomial of degree ≤ 2 times the Gaussian, so this rule is exact.
const FLAT_AXIS_NODES: usize = 8;

/// Whether F varies along each axis of the frame.
fn axis_dependence(spec: &PacketSpec, axes: &[Vec3; 3]) -> [bool; 3] {
    match spec.family() {
        Family::GaussPhase(phase) => axes.map(|e| {
            let transverse = phase.depends_on(Var::PPerp) || phase.depends_on(Var::PhiP);
            (e.x != 0.0 && (phase.depends_on(Var::Px) || transverse))
                || (e.y != 0.0 && (phase.depends_on(Var::Py) || transverse))
                || (e.z != 0.0 && phase.depends_on(Var::Pz))
        }),
        Family::Airy { xi_x3, xi_y3 } => axes.map(|e| (e.x != 0.0 && *xi_x3 != 0.0) || (e.y != 0.0 && *xi_y3 != 0.0)),
        Family::LgVortex { l } => axes.map(|e| *l != 0 && (e.x != 0.0 || e.y != 0.0)),
        Family::Cat { r0, .. } => axes.map(|e| e.dot(*r0) != 0.0),
    }
}

fn build_rule(spec: &PacketSpec, quad: &QuadratureConfig, n: usize) -> Result<Rule> {
    match quad.scheme {
        Scheme::TensorHermite => {
            let (axes, mut counts) = match spec.family() {
                Family::Cat { r0, .. } if r0.norm() > 0.0 => {
                    let e0 = *r0 / r0.norm();
                    let e1 = Vec3::Z.cross(e0);
                    let n0 = n.max(cat_axis_nodes(spec.sigma() * r0.norm()));
                    ([e0, e1, Vec3::Z], [n0, n, n])
                }
                Family::LgVortex { l } => {
                    let nt = n.max(l.unsigned_abs() as usize + 4);
                    ([Vec3::X, Vec3::Y, Vec3::Z], [nt, nt, n])
                }
                _ => ([Vec3::X, Vec3::Y, Vec3::Z], [n, n, n]),
            };
            for (c, dep) in counts.iter_mut().zip(axis_dependence(spec, &axes)) {
                if !dep {
                    *c = FLAT_AXIS_NODES;
                }
            }
            Ok(Rule::Tensor {
                axes,
                rules: [
                    hermite_even(counts[0])?,
                    hermite_even(counts[1])?,
                    hermite_even(counts[2])?,
                ],
            })
        }
        Scheme::PolarLg => {
            let Family::LgVortex { l } = spec.family() else {
                return Err(Error::InvalidParameter(
                    "the polar_lg scheme applies only to the lg_vortex family".into(),
                ));
            };
            let big_l = l.unsigned_abs();
            let alpha = if big_l == 0 { 0.0 } else { (big_l - 1) as f64 };
            Ok(Rule::Polar {
                lag: LaguerreRule::new(n, alpha)?,
                nphi: n,
                herm: hermite_even(FLAT_AXIS_NODES)?,
            })
        }
        Scheme::MonteCarlo { samples, seed } => {
            let per_batch = samples.div_ceil(MC_BATCHES);
            // LG samples t = q_⊥² from the Laguerre weight t^{L−1}e^{−t}, as in the polar rule
            let shape = match spec.family() {
                Family::LgVortex { l } => Some((l.unsigned_abs().max(1)) as f64),
                _ => None,
            };
            let gamma = shape
                .map(|k| Gamma::new(k, 1.0).map_err(|e| Error::InvalidParameter(e.to_string())))
                .transpose()?;
            let mut points = Vec::with_capacity(per_batch * MC_BATCHES);
            let mut polar = gamma.map(|_| Vec::with_capacity(per_batch * MC_BATCHES));
            for b in 0..MC_BATCHES {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                for _ in 0..per_batch {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    let z = g * std::f64::consts::FRAC_1_SQRT_2;
                    match (&gamma, polar.as_mut()) {
                        (Some(dist), Some(polar)) => {
                            let t = dist.sample(&mut rng);
                            let phi = 2.0 * PI * rng.gen::<f64>();
                            let rho = t.sqrt();
                            points.push(Vec3::new(rho * phi.cos(), rho * phi.sin(), z));
                            polar.push((t, phi));
                        }
                        _ => {
                            let mut next = || -> f64 { StandardNormal.sample(&mut rng) };
                            let (y, z) = (next(), next());
                            points.push(Vec3::new(g, y, z) * std::f64::consts::FRAC_1_SQRT_2);
                        }
                    }
                }
            }
            Ok(Rule::MonteCarlo { points, polar })
        }
    }
}

fn check_phase(spec: &PacketSpec) -> Result<()> {
    if let Family::GaussPhase(phase) = spec.family() {
        match phase.classify_singularity() {
            Singularity::Smooth => {}
            Singularity::Vortex(l) => return Err(Error::VortexDivergence { l }),
            Singularity::Unknown => return Err(Error::SingularPhase),
        }
    }
    Ok(())
}

/// Phase of a pure-phase packet, for central differences.
fn pure_phase(spec: &PacketSpec, p: Vec3) -> Result<f64> {
    match spec.family() {
        Family::GaussPhase(phase) => phase.eval(p),
        Family::Airy { xi_x3, xi_y3 } => Ok((xi_x3 * p.x.powi(3) + xi_y3 * p.y.powi(3)) / 3.0),
        _ => Err(Error::InvalidParameter(
            "the phase formula needs a pure-phase packet (gauss_phase or airy)".into(),
        )),
    }
}

fn phase_gradient(spec: &PacketSpec, mode: DerivativeMode, p: Vec3) -> Result<Vec3> {
    match (mode, spec.family()) {
        (DerivativeMode::AnalyticAd, Family::GaussPhase(phase)) => Ok(phase.eval_grad(p)?.grad),
        (DerivativeMode::AnalyticAd, Family::Airy { xi_x3, xi_y3 }) => {
            Ok(Vec3::new(xi_x3 * p.x * p.x, xi_y3 * p.y * p.y, 0.0))
        }
        (DerivativeMode::CentralDiff { h }, _) => {
            let step = h * spec.sigma();
            let mut g = [0.0; 3];
            for (k, gk) in g.iter_mut().enumerate() {
                let e = Vec3::from_array(std::array::from_fn(|j| if j == k { step } else { 0.0 }));
                *gk = (pure_phase(spec, p + e)? - pure_phase(spec, p - e)?) / (2.0 * step);
            }
            Ok(Vec3::from_array(g))
        }
        _ => Err(Error::InvalidParameter(
            "the phase formula needs a pure-phase packet (gauss_phase or airy)".into(),
        )),
    }
}

fn unit(k: usize, h: f64) -> Vec3 {
    Vec3::from_array(std::array::from_fn(|j| if j == k { h } else { 0.0 }))
}

/// (a, b) for the full amplitude at one node.
fn full_amplitude(spec: &PacketSpec, mode: DerivativeMode, node: &Node) -> Result<(C64, [C64; 3])> {
    let sigma = spec.sigma();
    let hvec = (node.p - spec.mean_p()) * (-1.0 / (sigma * sigma));
    if let (Some((t, phi)), Family::LgVortex { l }) = (node.polar, spec.family()) {
        let big_l = l.unsigned_abs();
        if big_l == 0 {
            return Ok((C64::new(1.0, 0.0), [0, 1, 2].map(|k| C64::new(hvec[k], 0.0))));
        }
        let s = l.signum() as f64;
        let lf = big_l as f64;
        // reduced amplitude on the generalized Laguerre rule with α = |ℓ| − 1
        let a = C64::from_polar((t / lf).sqrt(), *l as f64 * phi);
        let z = C64::new(node.p.x, s * node.p.y);
        let dlog = match mode {
            DerivativeMode::AnalyticAd => {
                let inv = lf / z;
                [inv, C64::i() * s * inv, C64::new(0.0, 0.0)]
            }
            DerivativeMode::CentralDiff { h } => {
                let step = h * sigma;
                let zs = |p: Vec3| C64::new(p.x, s * p.y);
                std::array::from_fn(|k| {
                    let e = unit(k, step);
                    let up = (zs(node.p + e) / z).ln();
                    let dn = (zs(node.p - e) / z).ln();
                    (up - dn) * (lf / (2.0 * step))
                })
            }
        };
        return Ok((a, std::array::from_fn(|k| a * (dlog[k] + hvec[k]))));
    }
    let (f, df) = match mode {
        DerivativeMode::AnalyticAd => spec.factor(node.p, true)?,
        DerivativeMode::CentralDiff { h } => {
            let step = h * sigma;
            let (f, _) = spec.factor(node.p, false)?;
            let mut df = [C64::new(0.0, 0.0); 3];
            for (k, dk) in df.iter_mut().enumerate() {
                let e = unit(k, step);
                let up = spec.factor(node.p + e, false)?.0;
                let dn = spec.factor(node.p - e, false)?.0;
                *dk = (up - dn) / (2.0 * step);
            }
            (f, df)
        }
    };
    Ok((f, std::array::from_fn(|k| df[k] + f * hvec[k])))
}

struct Pass<'a> {
    spec: &'a PacketSpec,
    mode: DerivativeMode,
    amplitude: Amplitude,
    shift: Option<Vec3>,
}

impl Pass<'_> {
    fn sample(&self, rule: &Rule, i: usize) -> Result<[f64; LANES]> {
        let node = rule.node(self.spec, i);
        let (mut a, mut b) = match self.amplitude {
            Amplitude::Full => full_amplitude(self.spec, self.mode, &node)?,
            Amplitude::PhaseOnly => {
                let g = phase_gradient(self.spec, self.mode, node.p)?;
                (C64::new(1.0, 0.0), [0, 1, 2].map(|k| C64::new(0.0, g[k])))
            }
        };
        if let Some(r0) = self.shift {
            // ψ → e^{−i r₀·p} ψ
            let ph = C64::from_polar(1.0, -r0.dot(node.p));
            b = std::array::from_fn(|k| (b[k] - C64::i() * r0[k] * a) * ph);
            a *= ph;
        }
        let w = node.w;
        let aa = a.norm_sqr();
        let im = Vec3::from_array([0, 1, 2].map(|k| (a.conj() * b[k]).im));
        let re = |i: usize, j: usize| (b[i].conj() * b[j]).re;
        let l = node.p.cross(im);
        Ok([
            w * aa,
            w * im.x,
            w * im.y,
            w * im.z,
            w * re(0, 0),
            w * re(1, 1),
            w * re(2, 2),
            w * re(0, 1),
            w * re(0, 2),
            w * re(1, 2),
            w * l.x,
            w * l.y,
            w * l.z,
            w * aa * node.p.x,
            w * aa * node.p.y,
            w * aa * node.p.z,
        ])
    }

    fn sums(&self, rule: &Rule, range: Range<usize>) -> Result<[f64; LANES]> {
        let start = range.start;
        try_par_sum(range.len(), |i| self.sample(rule, start + i))
    }
}

/// Intrinsic moments from node sums.
fn finish(s: &[f64; LANES], mass: f64) -> MomentSet {
    let n = s[0];
    let d = Vec3::new(-s[1], -s[2], -s[3]) / n;
    let raw = SymTensor3::new(s[4], s[5], s[6], s[7], s[8], s[9]) * (1.0 / n);
    let centred = raw - d.outer(d);
    let l = Vec3::new(s[10], s[11], s[12]) / n;
    let mean_p = Vec3::new(s[13], s[14], s[15]) / n;
    let mu = (l - d.cross(mean_p)) / (2.0 * mass);
    let mut ms = MomentSet::new(
        Vec3::ZERO,
        mu,
        quadrupole_from_second_moment(centred),
        Provenance::Quadrature,
    );
    ms.diagnostics.norm = Some(n);
    ms.diagnostics.extrinsic_d = Some(d);
    ms.diagnostics.centered_r2 = Some(centred.trace());
    ms
}

fn mean_and_err(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn run_monte_carlo(pass: &Pass, rule: &Rule) -> Result<MomentSet> {
    let total = rule.len();
    let per = total / MC_BATCHES;
    let mut all = [0.0; LANES];
    let mut batch_sets = Vec::with_capacity(MC_BATCHES);
    for b in 0..MC_BATCHES {
        let s = pass.sums(rule, b * per..(b + 1) * per)?;
        for (acc, v) in all.iter_mut().zip(&s) {
            *acc += v;
        }
        // node weights are 1/total; rescale so each batch is a full estimate
        let scaled = s.map(|v| v * MC_BATCHES as f64);
        batch_sets.push(finish(&scaled, pass.spec.mass()));
    }
    let mut ms = finish(&all, pass.spec.mass());
    let comps: Vec<[f64; 12]> = batch_sets.iter().map(MomentSet::components).collect();
    let err: [f64; 12] = std::array::from_fn(|c| {
        let xs: Vec<f64> = comps.iter().map(|v| v[c]).collect();
        mean_and_err(&xs).1
    });
    ms.diagnostics.std_err = Some(MomentErrors {
        d: Vec3::new(err[0], err[1], err[2]),
        mu: Vec3::new(err[3], err[4], err[5]),
        q: SymTensor3::new(err[6], err[7], err[8], err[9], err[10], err[11]),
    });
    Ok(ms)
}

fn evaluate(spec: &PacketSpec, quad: &QuadratureConfig, pass: &Pass) -> Result<MomentSet> {
    quad.validate()?;
    check_phase(spec)?;
    let run = |n: usize| -> Result<MomentSet> {
        let rule = build_rule(spec, quad, n)?;
        if matches!(rule, Rule::MonteCarlo { .. }) {
            return run_monte_carlo(pass, &rule);
        }
        let ms = finish(&pass.sums(&rule, 0..rule.len())?, spec.mass());
        let norm = ms.diagnostics.norm.unwrap_or(f64::NAN);
        if !((norm - 1.0).abs() <= quad.norm_tolerance) {
            return Err(Error::NormalizationDrift {
                value: norm,
                tolerance: quad.norm_tolerance,
            });
        }
        Ok(ms)
    };
    let base = run(quad.nodes_per_axis)?;
    if matches!(quad.scheme, Scheme::MonteCarlo { .. }) || !quad.check_convergence {
        return Ok(base);
    }
    let mut fine = run(2 * quad.nodes_per_axis)?;
    let (delta, component) = fine.max_delta(&base);
    if !(delta <= quad.convergence_tolerance) {
        return Err(Error::QuadratureNonConvergence {
            component: component.to_string(),
            delta,
            tolerance: quad.convergence_tolerance,
        });
    }
    fine.diagnostics.convergence_delta = Some(delta);
    Ok(fine)
}

/// Moments of a pure-phase packet from the covariance of ∂φ/∂p.
///
/// μ = ½(⟨u×∂φ⟩ − ⟨u⟩×⟨∂φ⟩), Q = 3·Cov(∂φ) − δ·tr Cov(∂φ). The extrinsic dipole
/// −⟨∂φ⟩ is reported in the diagnostics; `centered_r2` holds tr Cov(∂φ) only.
pub fn moments_phase_formula(spec: &PacketSpec, quad: &QuadratureConfig) -> Result<MomentSet> {
    if !matches!(spec.family(), Family::GaussPhase(_) | Family::Airy { .. }) {
        return Err(Error::InvalidParameter(
            "the phase formula needs a pure-phase packet (gauss_phase or airy)".into(),
        ));
    }
    evaluate(
        spec,
        quad,
        &Pass {
            spec,
            mode: quad.derivative_mode,
            amplitude: Amplitude::PhaseOnly,
            shift: None,
        },
    )
}

/// Moments of any packet from ψ and ∂ψ at the quadrature nodes.
pub fn moments_general(spec: &PacketSpec, quad: &QuadratureConfig) -> Result<MomentSet> {
    moments_shifted(spec, quad, None)
}

fn moments_shifted(spec: &PacketSpec, quad: &QuadratureConfig, shift: Option<Vec3>) -> Result<MomentSet> {
    evaluate(
        spec,
        quad,
        &Pass {
            spec,
            mode: quad.derivative_mode,
            amplitude: Amplitude::Full,
            shift,
        },
    )
}

/// ∫ d³p/(2π)³ |ψ|² on the configured rule (no node doubling).
pub fn norm_check(spec: &PacketSpec, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    let rule = build_rule(spec, quad, quad.nodes_per_axis)?;
    let pass = Pass {
        spec,
        mode: DerivativeMode::AnalyticAd,
        amplitude: Amplitude::Full,
        shift: None,
    };
    let norm_only = |range: Range<usize>| -> Result<f64> {
        let start = range.start;
        let [n] = try_par_sum::<1, _, _>(range.len(), |i| {
            let node = rule.node(spec, start + i);
            let a = if matches!(node.polar, Some(_)) {
                full_amplitude(spec, pass.mode, &node)?.0
            } else {
                spec.factor(node.p, false)?.0
            };
            Ok([node.w * a.norm_sqr()])
        })?;
        Ok(n)
    };
    let (value, tolerance) = if matches!(rule, Rule::MonteCarlo { .. }) {
        let per = rule.len() / MC_BATCHES;
        let batches: Vec<f64> = (0..MC_BATCHES)
            .map(|b| norm_only(b * per..(b + 1) * per).map(|v| v * MC_BATCHES as f64))
            .collect::<Result<_>>()?;
        let (mean, err) = mean_and_err(&batches);
        (mean, quad.norm_tolerance.max(5.0 * err))
    } else {
        (norm_only(0..rule.len())?, quad.norm_tolerance)
    };
    if (value - 1.0).abs() <= tolerance {
        Ok(value)
    } else {
        Err(Error::NormalizationDrift { value, tolerance })
    }
}

/// Moments before and after ψ(p) → e^{−i r₀·p} ψ(p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub shift: Vec3,
    pub base: MomentSet,
    pub shifted: MomentSet,
    /// Largest |Δμ_int| component.
    pub delta_mu: f64,
    /// Largest |ΔQ_int| component.
    pub delta_q: f64,
    /// |d_shifted − d_base − r₀| (max component).
    pub d_shift_error: f64,
}

impl ShiftReport {
    pub fn within(&self, tol: f64) -> bool {
        self.delta_mu <= tol && self.delta_q <= tol && self.d_shift_error <= tol
    }
}

pub fn shift_invariance_check(
    spec: &PacketSpec,
    r0: Vec3,
    quad: &QuadratureConfig,
) -> Result<ShiftReport> {
    if !r0.is_finite() {
        return Err(Error::NonFinite("shift"));
    }
    let base = moments_general(spec, quad)?;
    let shifted = moments_shifted(spec, quad, Some(r0))?;
    let ext = |m: &MomentSet| m.diagnostics.extrinsic_d.unwrap_or(Vec3::ZERO);
    let d_shift_error = (ext(&shifted) - ext(&base) - r0).max_abs();
    Ok(ShiftReport {
        shift: r0,
        delta_mu: (shifted.mu - base.mu).max_abs(),
        delta_q: (shifted.q - base.q).max_abs(),
        d_shift_error,
        base,
        shifted,
    })
}
