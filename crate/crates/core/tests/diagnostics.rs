use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, TAU};

use oam_core::diagnostics::*;
use oam_core::imaging::{analytic_pattern, PatternKind, RadialProfile};
use oam_core::{Complex64, Error, Grid2D, ImagePlane, TransverseField};
use proptest::prelude::*;

fn grid() -> std::sync::Arc<Grid2D> {
    Grid2D::new(128, 128, 64.0, 64.0).unwrap()
}

/// `f₀ = f₁` on the ring ρ = 8: f₀ ∝ e^{−ρ²/100}, f₁ ∝ (ρ/8)e^{−ρ²/100}.
fn profiles() -> (RadialProfile, RadialProfile) {
    let f0 = RadialProfile::from_fn(0.25, 160, |r| (-r * r / 100.0).exp()).unwrap();
    let f1 = RadialProfile::from_fn(0.25, 160, |r| r / 8.0 * (-r * r / 100.0).exp()).unwrap();
    (f0, f1)
}

fn rot_vs_nonrot(theta: f64) -> ImagePlane {
    let (f0, f1) = profiles();
    analytic_pattern(PatternKind::RotVsNonrot { theta }, &f0, &f1, &grid()).unwrap()
}

const ANNULUS: (f64, f64) = (5.0, 11.0);

#[test]
fn analytic_hole_at_pi_minus_theta() {
    let h = hole_angle_detail(&rot_vs_nonrot(0.0), ANNULUS).unwrap();
    assert!(wrap_angle(h.angle - PI).abs() < h.pixel_angle, "{}", h.angle);
    assert!(h.contrast > 0.2);
    // the exact zero of the pattern sits on the equal-amplitude ring
    let img = rot_vs_nonrot(0.0);
    assert!(img.sample(-8.0, 0.0).unwrap() < 1e-3 * img.max());
}

#[test]
fn counter_rotating_pattern_is_rejected() {
    let (_, f1) = profiles();
    let img = analytic_pattern(PatternKind::CounterRotating { relative_phase: 0.0 }, &f1, &f1, &grid()).unwrap();
    assert!(matches!(hole_angle(&img, ANNULUS), Err(Error::LowContrast { .. })));
}

#[test]
fn doubly_charged_pattern_has_two_opposite_minima() {
    let (f0, f1) = profiles();
    let f2 = f1.scaled(1.0);
    let img = analytic_pattern(PatternKind::DoublyVsNonrot { theta: 0.7 }, &f0, &f2, &grid()).unwrap();
    let minima = angular_minima(&img, ANNULUS, 2).unwrap();
    assert_eq!(minima.len(), 2);
    assert!((wrap_angle(minima[0] - minima[1]).abs() - PI).abs() < 0.05, "{minima:?}");
    // 2φ + θ = π  →  φ = (π − θ)/2 (mod π)
    for m in minima {
        assert!(wrap_angle(2.0 * m + 0.7 - PI).abs() < 0.05);
    }
}

#[test]
fn hole_angle_is_reproducible() {
    let img = rot_vs_nonrot(1.234);
    assert_eq!(hole_angle(&img, ANNULUS).unwrap(), hole_angle(&img, ANNULUS).unwrap());
}

#[test]
fn analytic_phase_study() {
    let closure = |theta: f64| -> oam_core::Result<(f64, f64)> {
        Ok(((-theta).rem_euclid(TAU), hole_angle(&rot_vs_nonrot(theta), ANNULUS)?))
    };
    let phases: Vec<f64> = (0..18).map(|i| TAU * i as f64 / 18.0).collect();
    let study = phase_correlation_study(&phases, closure).unwrap();
    let fit = study.hole_vs_phase.as_ref().unwrap();
    assert!((fit.slope + 1.0).abs() < 0.05);
    assert!(fit.max_abs_residual() < 5f64.to_radians());
    assert!((study.hole_vs_readout.as_ref().unwrap().slope - 1.0).abs() < 0.05);
    assert_eq!(study.rows.len(), 18);
    assert!(study.rows.iter().enumerate().all(|(i, r)| r.trial == i));

    let three = phase_correlation_study(&[0.0, FRAC_PI_2, PI], closure).unwrap();
    for (row, expect) in three.rows.iter().zip([PI, FRAC_PI_2, 0.0]) {
        assert!(wrap_angle(row.hole_angle - expect).abs() < 5f64.to_radians());
    }

    let constant = phase_correlation_study(&[0.4; 5], closure).unwrap();
    assert!(constant.hole_spread < 1e-12);
    assert!(constant.hole_vs_phase.is_none());
}

#[test]
fn vortex_report_for_pure_charges() {
    let g = grid();
    for l in [-2i32, -1, 1, 2] {
        let mut f = TransverseField::from_fn(g.clone(), move |y, z| {
            let r2 = y * y + z * z;
            Complex64::from_polar(r2.sqrt().powi(l.abs()) * (-r2 / 60.0).exp(), l as f64 * z.atan2(y))
        });
        f.normalize().unwrap();
        let rep = vortex_report(&f, 6.0, None).unwrap();
        assert_eq!(rep.winding, l);
        assert!((rep.l_z_expect - l as f64).abs() < 0.02);
        assert!(rep.core_location.0.abs() < 1e-9 && rep.core_location.1.abs() < 1e-9);
        assert!(rep.confidence < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn hole_angle_rotates_with_image(theta in 0.0f64..TAU, which in 0usize..2) {
        let alpha = [FRAC_PI_6, FRAC_PI_2][which];
        let img = rot_vs_nonrot(theta);
        let base = hole_angle_detail(&img, ANNULUS).unwrap();
        let turned = hole_angle(&img.rotated(alpha), ANNULUS).unwrap();
        prop_assert!(wrap_angle(turned - base.angle - alpha).abs() < base.pixel_angle);
    }
}
