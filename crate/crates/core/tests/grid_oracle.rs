use packet_moments::analytic::{airy_moments, cat_moments, vortex_moments};
use packet_moments::grid::{build_densities, envelope_on_grid, grid_moments, lg_mean_radius, GridConfig, PsiSource};
use packet_moments::{Family, MomentSet, PacketSpec, Parity, PhaseExpr, Vec3};

fn relative_errors(grid: &MomentSet, exact: &MomentSet) -> [f64; 12] {
    let scale = exact.components().iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let (g, e) = (grid.components(), exact.components());
    std::array::from_fn(|i| (g[i] - e[i]).abs() / scale)
}

fn assert_close(grid: &MomentSet, exact: &MomentSet, tol: f64) {
    for (i, err) in relative_errors(grid, exact).iter().enumerate() {
        assert!(*err <= tol, "{} off by {err:e}", MomentSet::COMPONENT_NAMES[i]);
    }
}

#[test]
fn lg_example_at_default_grid() {
    let spec = PacketSpec::lg(1, 1.0, 1.0).unwrap();
    let ms = grid_moments(&spec, &GridConfig::default()).unwrap();
    assert!((ms.mu.z - 0.5).abs() <= 1e-3);
    assert!((ms.q.xx - 0.5).abs() <= 1e-3 && (ms.q.yy - 0.5).abs() <= 1e-3 && (ms.q.zz + 1.0).abs() <= 1e-3);
    assert!(ms.mu.x.abs() <= 1e-6 && ms.mu.y.abs() <= 1e-6);
}

#[test]
fn families_match_closed_forms() {
    let g = GridConfig::with_points(64);
    for (l, sigma, m) in [(3i64, 0.7, 2.0), (-5, 1.5, 1.0)] {
        let spec = PacketSpec::lg(l, sigma, m).unwrap();
        let ms = grid_moments(&spec, &g).unwrap();
        assert_close(&ms, &vortex_moments(l, sigma, m).unwrap(), 1e-3);
        assert!(ms.mu.x.abs() <= 1e-6 && ms.mu.y.abs() <= 1e-6);
    }
    let airy = PacketSpec::airy(0.6, -0.3, 1.0).unwrap();
    assert_close(&grid_moments(&airy, &g).unwrap(), &airy_moments(0.6, -0.3, 1.0).unwrap(), 1e-3);
    for parity in [Parity::Even, Parity::Odd] {
        let r0 = Vec3::new(0.9, -0.6, 0.0);
        let spec = PacketSpec::cat(r0, parity, 1.2).unwrap();
        assert_close(&grid_moments(&spec, &g).unwrap(), &cat_moments(r0, parity, 1.2).unwrap(), 1e-3);
    }
}

#[test]
fn refinement_reduces_error() {
    let r0 = Vec3::new(1.0, 0.5, 0.0);
    let specs = [
        (PacketSpec::lg(4, 1.0, 1.0).unwrap(), vortex_moments(4, 1.0, 1.0).unwrap(), 32),
        (PacketSpec::cat(r0, Parity::Odd, 1.0).unwrap(), cat_moments(r0, Parity::Odd, 1.0).unwrap(), 32),
        // the transformed Airy spectrum needs 64 points before the cutoff check passes
        (PacketSpec::airy(0.5, 0.3, 1.0).unwrap(), airy_moments(0.5, 0.3, 1.0).unwrap(), 64),
    ];
    for (spec, exact, n) in specs {
        let (coarse, fine) = (GridConfig::with_points(n), GridConfig::with_points(2 * n));
        let ec = relative_errors(&grid_moments(&spec, &coarse).unwrap(), &exact);
        let ef = relative_errors(&grid_moments(&spec, &fine).unwrap(), &exact);
        for i in 0..12 {
            // components already at round-off on the coarse grid cannot improve
            if ec[i] > 1e-12 {
                assert!(ef[i] < ec[i], "{}: {:e} → {:e}", MomentSet::COMPONENT_NAMES[i], ec[i], ef[i]);
            }
        }
    }
}

#[test]
fn total_current_is_group_velocity() {
    let g = GridConfig::with_points(64);
    let specs = [
        PacketSpec::lg(2, 1.0, 2.0).unwrap().with_mean_pz(1.5).unwrap(),
        PacketSpec::cat(Vec3::new(1.0, 1.0, 0.0), Parity::Odd, 1.0).unwrap().with_mean_pz(-0.7).unwrap(),
        PacketSpec::airy(0.4, 0.4, 1.0).unwrap().with_mass(3.0).unwrap().with_mean_pz(2.0).unwrap(),
    ];
    for spec in specs {
        let df = build_densities(&spec, &g).unwrap();
        let v = spec.mean_p() / spec.mass();
        let c = df.total_current();
        assert!((c - v).max_abs() <= 1e-6, "{c:?} vs {v:?}");
        assert!((df.total_charge() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn mean_radius_examples() {
    let g = GridConfig::default();
    let r = lg_mean_radius(&PacketSpec::lg(4, 1.0, 1.0).unwrap(), &g).unwrap();
    assert!((r - 2.0).abs() <= 1e-3);
    let r = lg_mean_radius(&PacketSpec::lg(1, 2.0, 1.0).unwrap(), &g).unwrap();
    assert!((r - 0.5).abs() <= 1e-3);
    assert!(lg_mean_radius(&PacketSpec::airy(0.1, 0.1, 1.0).unwrap(), &g).is_err());
}

#[test]
fn cat_closed_form_matches_transform_on_default_grid() {
    for parity in [Parity::Even, Parity::Odd] {
        let spec = PacketSpec::cat(Vec3::new(2.0, 1.0, 0.0), parity, 1.0).unwrap();
        let g = GridConfig::default();
        let closed = envelope_on_grid(&spec, &g).unwrap();
        let dft = envelope_on_grid(&spec, &GridConfig { source: PsiSource::Dft, ..g }).unwrap();
        let worst = closed.iter().zip(&dft).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{worst:e}");
    }
}

#[test]
fn linear_phase_moves_centre_only() {
    let r0 = Vec3::new(1.5, -2.0, 0.5);
    let phase = PhaseExpr::parse_plain("-(1.5*p_x - 2*p_y + 0.5*p_z)").unwrap();
    let spec = PacketSpec::new(Family::GaussPhase(phase), 1.0, Vec3::ZERO, 1.0).unwrap();
    let ms = grid_moments(&spec, &GridConfig::with_points(64)).unwrap();
    assert!((ms.diagnostics.extrinsic_d.unwrap() - r0).max_abs() <= 1e-8);
    assert!(ms.components().iter().all(|c| c.abs() <= 1e-8));
    // ⟨r²⟩ − d² of the Gaussian
    assert!((ms.diagnostics.centered_r2.unwrap() - 1.5).abs() <= 1e-8);
}

#[test]
fn vortex_phase_is_refused() {
    let phase = PhaseExpr::parse_plain("2*phi_p").unwrap();
    let spec = PacketSpec::new(Family::GaussPhase(phase), 1.0, Vec3::ZERO, 1.0).unwrap();
    assert!(grid_moments(&spec, &GridConfig::with_points(32)).is_err());
}
