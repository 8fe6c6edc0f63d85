//! Position-space oracle: ψ(r) on a cubic grid, charge and current densities,
//! and direct integration of the multipole definitions.
//!
//! The plane-wave carrier e^{i⟨p⟩z} is factored out before sampling, so the grid
//! only has to resolve the envelope; its current ⟨p⟩/m·j⁰ is added back exactly.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::analytic::{MomentSet, Provenance};
use crate::error::{Error, Result};
use crate::packets::{closed_position, psi_p, Family, PacketSpec};
use crate::phase::Singularity;
use crate::quadrature::HermiteRule;
use crate::sum::par_sum;
use crate::units::{quadrupole_from_second_moment, SymTensor3, Vec3};

type C64 = Complex64;

/// Relative density allowed on the box faces.
const EDGE_TOLERANCE: f64 = 1e-12;
/// Relative |ψ(p)|² allowed at the momentum cutoff of the grid.
const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Where ψ(r) comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSource {
    /// Closed form when the family has one, discrete Fourier transform otherwise.
    #[default]
    Auto,
    /// Always transform the sampled ψ(p).
    Dft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub points_per_axis: usize,
    /// Half the box edge in units of σ_⊥ = 1/σ; `None` picks a family default.
    pub box_half_width: Option<f64>,
    pub source: PsiSource,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points_per_axis: 128,
            box_half_width: None,
            source: PsiSource::Auto,
        }
    }
}

impl GridConfig {
    pub fn with_points(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points_per_axis;
        if n < 32 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be a power of two ≥ 32, got {n}"
            )));
        }
        if let Some(w) = self.box_half_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidGrid(format!("box_half_width must be > 0, got {w}")));
            }
        }
        Ok(())
    }

    /// Half-width in units of σ_⊥ for this packet.
    pub fn half_width(&self, spec: &PacketSpec) -> f64 {
        self.box_half_width.unwrap_or_else(|| default_half_width(spec))
    }
}

/// Family default box: 6σ_⊥ plus the reach of the phase gradient.
pub fn default_half_width(spec: &PacketSpec) -> f64 {
    let sigma = spec.sigma();
    match spec.family() {
        Family::LgVortex { l } => 6.0 + (l.unsigned_abs() as f64).sqrt(),
        Family::Cat { r0, .. } => 6.0 + sigma * r0.norm(),
        Family::GaussPhase(_) | Family::Airy { .. } => 6.0 + sigma * gradient_reach(spec),
    }
}

/// Largest |∂φ/∂p| over a Gauss–Hermite patch reaching |q| ≈ 5.5.
fn gradient_reach(spec: &PacketSpec) -> f64 {
    let rule = HermiteRule::new(16).expect("fixed rule");
    let mut reach: f64 = 0.0;
    for &x in &rule.nodes {
        for &y in &rule.nodes {
            for &z in &rule.nodes {
                let p = spec.mean_p() + Vec3::new(x, y, z) * spec.sigma();
                let g = match spec.family() {
                    Family::GaussPhase(phase) => phase.eval_grad(p).map(|g| g.grad).unwrap_or(Vec3::ZERO),
                    Family::Airy { xi_x3, xi_y3 } => Vec3::new(xi_x3 * p.x * p.x, xi_y3 * p.y * p.y, 0.0),
                    _ => Vec3::ZERO,
                };
                reach = reach.max(g.norm());
            }
        }
    }
    reach
}

/// Charge density j⁰ = |ψ|² and current j = Im(ψ*∇ψ)/m on the grid.
#[derive(Debug, Clone)]
pub struct DensityField {
    n: usize,
    half_width: f64,
    spacing: f64,
    pub j0: Vec<f64>,
    pub j: Vec<[f64; 3]>,
}

impl DensityField {
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Physical half-width of the box.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn position(&self, i: usize) -> Vec3 {
        let n = self.n;
        Vec3::new(
            self.coordinate(i / (n * n)),
            self.coordinate((i / n) % n),
            self.coordinate(i % n),
        )
    }

    fn cell(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// ∫ j⁰ d³r.
    pub fn total_charge(&self) -> f64 {
        let [q] = par_sum::<1, _>(self.j0.len(), |i| [self.j0[i]]);
        q * self.cell()
    }

    /// ∫ j d³r, equal to ⟨p⟩/m for a normalized packet.
    pub fn total_current(&self) -> Vec3 {
        let s = par_sum::<3, _>(self.j.len(), |i| self.j[i]);
        Vec3::from_array(s) * self.cell()
    }

    /// Writes the plane `axis = index` (0 = x, 1 = y, 2 = z) as CSV.
    pub fn write_slice_csv(&self, out: &mut impl Write, axis: usize, index: usize) -> Result<()> {
        if axis > 2 || index >= self.n {
            return Err(Error::InvalidGrid(format!("no slice {index} along axis {axis}")));
        }
        let io = |e: std::io::Error| Error::InvalidGrid(format!("write failed: {e}"));
        writeln!(out, "x,y,z,j0,jx,jy,jz").map_err(io)?;
        for a in 0..self.n {
            for b in 0..self.n {
                let ijk = match axis {
                    0 => [index, a, b],
                    1 => [a, index, b],
                    _ => [a, b, index],
                };
                let i = self.index(ijk[0], ijk[1], ijk[2]);
                let r = self.position(i);
                let j = self.j[i];
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.x, r.y, r.z, self.j0[i], j[0], j[1], j[2]
                )
                .map_err(io)?;
            }
        }
        Ok(())
    }
}

struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized 3-D transform in place.
    fn process(&self, data: &mut [C64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // z: contiguous lines
        fft.process_with_scratch(data, &mut scratch);
        let mut block = vec![C64::new(0.0, 0.0); n * n];
        // y: transpose each x-slab
        for slab in data.chunks_exact_mut(n * n) {
            transpose(slab, &mut block, n);
            fft.process_with_scratch(&mut block, &mut scratch);
            transpose(&block, slab, n);
        }
        // x: gather (x, z) planes at fixed y
        for iy in 0..n {
            for ix in 0..n {
                for iz in 0..n {
                    block[iz * n + ix] = data[(ix * n + iy) * n + iz];
                }
            }
            fft.process_with_scratch(&mut block, &mut scratch);
            for ix in 0..n {
                for iz in 0..n {
                    data[(ix * n + iy) * n + iz] = block[iz * n + ix];
                }
            }
        }
    }
}

fn transpose(src: &[C64], dst: &mut [C64], n: usize) {
    for a in 0..n {
        for b in 0..n {
            dst[b * n + a] = src[a * n + b];
        }
    }
}

/// Angular wavenumber of FFT bin `m` on a grid of spacing `h`.
fn wavenumber(m: usize, n: usize, h: f64) -> f64 {
    let signed = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * h)
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

/// Envelope ψ(r)·e^{−i⟨p⟩z} on the grid, with its spectrum in the convention
/// ψ = IDFT_unnormalized(spectrum).
fn sample_envelope(spec: &PacketSpec, g: &GridConfig, fft: &Fft3, half: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = g.points_per_axis;
    let h = 2.0 * half / n as f64;
    let coord = |k: usize| -half + k as f64 * h;
    let total = n * n * n;
    let closed = g.source == PsiSource::Auto && closed_position(spec, Vec3::ZERO, false).is_some();
    if closed {
        let mut psi = vec![C64::new(0.0, 0.0); total];
        for (i, v) in psi.iter_mut().enumerate() {
            let r = Vec3::new(coord(i / (n * n)), coord((i / n) % n), coord(i % n));
            *v = closed_position(spec, r, false).unwrap_or_default();
        }
        let mut spectrum = psi.clone();
        fft.process(&mut spectrum, false);
        let scale = 1.0 / total as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);
        return Ok((psi, spectrum));
    }
    // ψ(x_j) = (1/(N h))³ Σ_m ψ(k_m) e^{i k_m x_j}, x_j = −L + j h, e^{−i k_m L} = (−1)^m
    let mut spectrum = vec![C64::new(0.0, 0.0); total];
    let scale = (1.0 / (n as f64 * h)).powi(3);
    let mut peak: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for (i, v) in spectrum.iter_mut().enumerate() {
        let m = [i / (n * n), (i / n) % n, i % n];
        let k = Vec3::new(wavenumber(m[0], n, h), wavenumber(m[1], n, h), wavenumber(m[2], n, h));
        let amp = psi_p(spec, k + spec.mean_p())?;
        let dens = amp.norm_sqr();
        peak = peak.max(dens);
        if m.iter().any(|&mk| mk == n / 2) {
            edge = edge.max(dens);
        }
        let sign = if (m[0] + m[1] + m[2]) % 2 == 0 { 1.0 } else { -1.0 };
        *v = amp * (sign * scale);
    }
    if edge > SPECTRAL_TOLERANCE * peak {
        return Err(Error::InvalidGrid(format!(
            "momentum cutoff too low: |ψ|² at the cutoff is {:.2e} of the peak; \
             use more points or a smaller box",
            edge / peak
        )));
    }
    let mut psi = spectrum.clone();
    fft.process(&mut psi, true);
    Ok((psi, spectrum))
}

/// Samples ψ(r) and forms j⁰ and j with spectral gradients.
pub fn build_densities(spec: &PacketSpec, g: &GridConfig) -> Result<DensityField> {
    g.validate()?;
    check_phase(spec)?;
    let n = g.points_per_axis;
    let half = g.half_width(spec) / spec.sigma();
    let h = 2.0 * half / n as f64;
    let fft = Fft3::new(n);
    let (psi, spectrum) = sample_envelope(spec, g, &fft, half)?;

    let j0: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
    let peak = j0.iter().cloned().fold(0.0, f64::max);
    let mut edge: f64 = 0.0;
    for (i, &v) in j0.iter().enumerate() {
        let m = [i / (n * n), (i / n) % n, i % n];
        if m.iter().any(|&mk| mk == 0 || mk == n - 1) {
            edge = edge.max(v);
        }
    }
    if !(peak > 0.0) || edge > EDGE_TOLERANCE * peak {
        return Err(Error::BoxTooSmall(if peak > 0.0 { edge / peak } else { f64::INFINITY }));
    }

    let inv_mass = 1.0 / spec.mass();
    let mut j = vec![[0.0; 3]; n * n * n];
    let mut work = vec![C64::new(0.0, 0.0); n * n * n];
    for axis in 0..3 {
        for (i, (w, s)) in work.iter_mut().zip(&spectrum).enumerate() {
            let m = [i / (n * n), (i / n) % n, i % n][axis];
            // the Nyquist bin carries no odd derivative
            let k = if m == n / 2 { 0.0 } else { wavenumber(m, n, h) };
            *w = s * C64::new(0.0, k);
        }
        fft.process(&mut work, true);
        for ((ji, p), d) in j.iter_mut().zip(&psi).zip(&work) {
            ji[axis] = (p.conj() * d).im * inv_mass;
        }
    }
    let vz = spec.mean_p().z * inv_mass;
    if vz != 0.0 {
        for (ji, &rho) in j.iter_mut().zip(&j0) {
            ji[2] += vz * rho;
        }
    }
    let field = DensityField {
        n,
        half_width: half,
        spacing: h,
        j0,
        j,
    };
    let norm = field.total_charge();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NormalizationDrift {
            value: norm,
            tolerance: 1e-6,
        });
    }
    Ok(field)
}

/// Integrates d, μ = ½∫r×j and Q and subtracts to intrinsic values.
pub fn integrate_moments(df: &DensityField) -> MomentSet {
    let s = par_sum::<16, _>(df.j0.len(), |i| {
        let r = df.position(i);
        let rho = df.j0[i];
        let j = Vec3::from_array(df.j[i]);
        let l = r.cross(j);
        [
            rho,
            rho * r.x,
            rho * r.y,
            rho * r.z,
            rho * r.x * r.x,
            rho * r.y * r.y,
            rho * r.z * r.z,
            rho * r.x * r.y,
            rho * r.x * r.z,
            rho * r.y * r.z,
            l.x,
            l.y,
            l.z,
            j.x,
            j.y,
            j.z,
        ]
    });
    let n = s[0];
    let d = Vec3::new(s[1], s[2], s[3]) / n;
    let second = SymTensor3::new(s[4], s[5], s[6], s[7], s[8], s[9]) * (1.0 / n);
    let centred = second - d.outer(d);
    let mu_raw = Vec3::new(s[10], s[11], s[12]) * (0.5 / n);
    let current = Vec3::new(s[13], s[14], s[15]) / n;
    let mu = mu_raw - d.cross(current) * 0.5;
    let mut ms = MomentSet::new(Vec3::ZERO, mu, quadrupole_from_second_moment(centred), Provenance::Grid);
    ms.diagnostics.norm = Some(n * df.cell());
    ms.diagnostics.extrinsic_d = Some(d);
    ms.diagnostics.centered_r2 = Some(centred.trace());
    ms
}

/// Builds the densities and integrates them.
pub fn grid_moments(spec: &PacketSpec, g: &GridConfig) -> Result<MomentSet> {
    Ok(integrate_moments(&build_densities(spec, g)?))
}

/// √(−Q_zz) of an LG packet from the grid, to compare with √|ℓ|/σ.
pub fn lg_mean_radius(spec: &PacketSpec, g: &GridConfig) -> Result<f64> {
    match spec.family() {
        Family::LgVortex { l } if *l != 0 => {}
        Family::LgVortex { .. } => {
            return Err(Error::InvalidParameter("mean radius needs ℓ ≠ 0".into()));
        }
        _ => return Err(Error::InvalidParameter("mean radius needs an lg_vortex packet".into())),
    }
    let ms = grid_moments(spec, g)?;
    Ok((-ms.q.zz).sqrt())
}

/// ψ envelope on the grid, mainly for cross-checking closed forms against the transform.
pub fn envelope_on_grid(spec: &PacketSpec, g: &GridConfig) -> Result<Vec<C64>> {
    g.validate()?;
    let half = g.half_width(spec) / spec.sigma();
    let fft = Fft3::new(g.points_per_axis);
    Ok(sample_envelope(spec, g, &fft, half)?.0)
}
