use approx::assert_abs_diff_eq;
use packet_moments::analytic::{airy_moments, boost_dipoles, cat_moments, vortex_moments};
use packet_moments::packets::psi_r_closed;
use packet_moments::{PacketSpec, Parity, SymTensor3, Vec3};
use proptest::prelude::*;

/// Trapezoid rule on [a, b] with n panels.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

#[test]
fn vortex_quadrupole_from_radial_integrals() {
    // |ψ|² ∝ ρ^{2L} e^{−σ²(ρ² + z²)}; Q_zz = ⟨2z² − ρ²⟩
    for (l, sigma) in [(1i64, 1.0), (3, 0.7), (-5, 2.0)] {
        let big = l.unsigned_abs() as i32;
        let radial = |k: i32| trapezoid(|r| r.powi(2 * big + 1 + k) * (-sigma * sigma * r * r).exp(), 0.0, 40.0 / sigma, 40_000);
        let axial = |k: i32| trapezoid(|z| z.powi(k) * (-sigma * sigma * z * z).exp(), -40.0 / sigma, 40.0 / sigma, 40_000);
        let rho2 = radial(2) / radial(0);
        let z2 = axial(2) / axial(0);
        let q = vortex_moments(l, sigma, 1.0).unwrap().q;
        assert_abs_diff_eq!(q.zz, 2.0 * z2 - rho2, epsilon = 1e-9);
        assert_abs_diff_eq!(q.xx, 1.5 * rho2 - (rho2 + z2), epsilon = 1e-9);
    }
}

#[test]
fn airy_quadrupole_from_momentum_integrals() {
    // Cov(ξ³p²) under the weight e^{−p²/σ²}
    let (xx3, xy3, sigma) = (0.9, -0.4, 1.3);
    let w = |p: f64| (-p * p / (sigma * sigma)).exp();
    let m = |k: i32| trapezoid(|p| p.powi(k) * w(p), -30.0, 30.0, 60_000) / trapezoid(w, -30.0, 30.0, 60_000);
    let var_p2 = m(4) - m(2) * m(2);
    let (cx, cy) = (xx3 * xx3 * var_p2, xy3 * xy3 * var_p2);
    let q = airy_moments(xx3, xy3, sigma).unwrap().q;
    let tr = cx + cy;
    assert_abs_diff_eq!(q.xx, 3.0 * cx - tr, epsilon = 1e-10);
    assert_abs_diff_eq!(q.yy, 3.0 * cy - tr, epsilon = 1e-10);
    assert_abs_diff_eq!(q.zz, -tr, epsilon = 1e-10);
}

#[test]
fn cat_quadrupole_from_position_density() {
    for parity in [Parity::Even, Parity::Odd] {
        let sigma = 1.1;
        let r0 = Vec3::new(0.8, 0.0, 0.0);
        let spec = PacketSpec::cat(r0, parity, sigma).unwrap();
        // ⟨x²⟩ and ⟨y²⟩ from a 2-D trapezoid over the z = 0 plane; z separates
        let dens = |x: f64, y: f64| psi_r_closed(&spec, Vec3::new(x, y, 0.0)).unwrap().norm_sqr();
        let (mut n, mut xx, mut yy) = (0.0, 0.0, 0.0);
        let h = 0.02;
        for i in -600..=600 {
            for j in -600..=600 {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let d = dens(x, y);
                n += d;
                xx += d * x * x;
                yy += d * y * y;
            }
        }
        let (xx, yy) = (xx / n, yy / n);
        let zz = 1.0 / (2.0 * sigma * sigma);
        let tr = xx + yy + zz;
        let q = cat_moments(r0, parity, sigma).unwrap().q;
        assert_abs_diff_eq!(q.xx, 3.0 * xx - tr, epsilon = 1e-9);
        assert_abs_diff_eq!(q.yy, 3.0 * yy - tr, epsilon = 1e-9);
    }
}

fn max_abs(t: &SymTensor3) -> f64 {
    t.max_abs()
}

proptest! {
    #[test]
    fn traces_vanish(l in -1000i64..=1000, sigma in 0.05f64..20.0, a in -3.0f64..3.0, b in -3.0f64..3.0,
                     s in 0.01f64..8.0, angle in 0.0f64..6.3) {
        let v = vortex_moments(l, sigma, 1.0).unwrap().q;
        prop_assert!(v.trace().abs() <= 1e-14 * max_abs(&v).max(1.0));
        let q = airy_moments(a, b, sigma).unwrap().q;
        prop_assert!(q.trace().abs() <= 1e-14 * max_abs(&q).max(1.0));
        let r0 = Vec3::new(angle.cos(), angle.sin(), 0.0) * (s / sigma);
        for parity in [Parity::Even, Parity::Odd] {
            let c = cat_moments(r0, parity, sigma).unwrap().q;
            prop_assert!(c.trace().abs() <= 1e-14 * max_abs(&c).max(1.0));
        }
    }

    #[test]
    fn parity_and_linearity(l in 1i64..500, sigma in 0.1f64..10.0, m in 0.1f64..10.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let plus = vortex_moments(l, sigma, m).unwrap();
        let minus = vortex_moments(-l, sigma, m).unwrap();
        prop_assert_eq!(plus.q, minus.q);
        prop_assert_eq!(plus.mu, minus.mu * -1.0);
        let double = vortex_moments(2 * l, sigma, m).unwrap();
        prop_assert!((double.q - plus.q * 2.0).max_abs() <= 1e-14 * double.q.max_abs());
        prop_assert_eq!(airy_moments(a, b, sigma).unwrap().q, airy_moments(-a, -b, sigma).unwrap().q);
    }

    #[test]
    fn cat_parities_converge(s in 0.5f64..6.0, sigma in 0.2f64..5.0, angle in 0.0f64..6.3) {
        let r0 = Vec3::new(angle.cos(), angle.sin(), 0.0) * (s / sigma);
        let even = cat_moments(r0, Parity::Even, sigma).unwrap().q;
        let odd = cat_moments(r0, Parity::Odd, sigma).unwrap().q;
        let rel = (even - odd).max_abs() / odd.max_abs();
        prop_assert!(rel <= 2.0 * (-s * s).exp() + 1e-12, "rel {rel:e} at σ|r₀| = {s}");
    }

    #[test]
    fn boost_is_invertible_for_parallel_velocity(l in -50i64..50, beta in -0.99f64..0.99) {
        let ms = vortex_moments(l, 1.0, 1.0).unwrap();
        let b = boost_dipoles(&ms, Vec3::new(0.0, 0.0, beta)).unwrap();
        let gamma = 1.0 / (1.0 - beta * beta).sqrt();
        prop_assert!((b.mu.z * gamma - ms.mu.z).abs() <= 1e-13 * ms.mu.z.abs().max(1.0));
        prop_assert_eq!(b.d, Vec3::ZERO);
    }
}
