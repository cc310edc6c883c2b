use std::f64::consts::{PI, TAU};

use oam_core::diagnostics::{circular_mean, fit_circular_linear, winding_number, wrap_angle};
use oam_core::optics::{corkscrew_potential, coupling_map, mode_field, phase_readout_pattern, BeamSpec};
use oam_core::{Complex64, Grid2D};
use proptest::prelude::*;

fn grid() -> std::sync::Arc<Grid2D> {
    Grid2D::new(128, 128, 60.0, 60.0).unwrap()
}

/// Azimuth of the brightest direction on a ring of one slice.
fn ring_max(slice: &[f64], g: &Grid2D, radius: f64) -> f64 {
    let n = 720;
    let (a, w): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let phi = TAU * i as f64 / n as f64;
            (phi, g.sample_real(slice, radius * phi.cos(), radius * phi.sin()).unwrap())
        })
        .unzip();
    circular_mean(&a, &w).0
}

#[test]
fn corkscrew_turns_once_per_lattice_period() {
    let g = grid();
    let lg = BeamSpec::laguerre_gauss(1, 10.0);
    let gs = BeamSpec::gaussian(20.0);
    let vol = corkscrew_potential(&lg, &gs, 4.0, 0.0, 32, &g).unwrap();
    let r = lg.ring_radius();
    let angles: Vec<f64> = vol.slices.iter().map(|s| ring_max(s, &g, r)).collect();
    let steps: Vec<f64> = angles.windows(2).map(|w| wrap_angle(w[1] - w[0])).collect();
    assert!(steps.iter().all(|d| *d < 0.0), "monotonic helix");
    let closing = wrap_angle(angles[0] - angles[angles.len() - 1]);
    let total: f64 = steps.iter().sum::<f64>() + closing;
    assert!((total + TAU).abs() < 1e-6, "total advance {total}");
    // the analytic locus is φ = −2x
    for (x, a) in vol.x.iter().zip(&angles) {
        assert!(wrap_angle(a + 2.0 * x).abs() < 1e-3);
    }
}

#[test]
fn corkscrew_translates_at_half_the_frequency_difference() {
    let g = grid();
    let lg = BeamSpec::laguerre_gauss(1, 10.0);
    let gs = BeamSpec::gaussian(20.0);
    let probe = (lg.ring_radius(), 0.0);
    let idx = {
        let (iy, iz, _, _) = g.locate(probe.0, probe.1).unwrap();
        iz * g.n_y() + iy
    };
    // position of the intensity maximum along x at a fixed transverse point
    let crest = |t: f64| {
        let vol = corkscrew_potential(&lg, &gs, 4.0, t, 64, &g).unwrap();
        let (a, w): (Vec<f64>, Vec<f64>) = vol.x.iter().zip(&vol.slices).map(|(x, s)| (2.0 * x, s[idx])).unzip();
        circular_mean(&a, &w).0 / 2.0
    };
    let t = 0.1;
    let shift = wrap_angle(2.0 * (crest(t) - crest(0.0))) / 2.0;
    assert!((shift - 4.0 * t / 2.0).abs() < 1e-9, "{shift}");
}

#[test]
fn corkscrew_is_sinusoidal_in_azimuth() {
    let g = grid();
    let lg = BeamSpec::laguerre_gauss(1, 10.0);
    let gs = BeamSpec::gaussian(20.0);
    let vol = corkscrew_potential(&lg, &gs, 0.0, 0.0, 8, &g).unwrap();
    let r = lg.ring_radius();
    let s = &vol.slices[3];
    let n = 256;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let phi = TAU * i as f64 / n as f64;
            g.sample_real(s, r * phi.cos(), r * phi.sin()).unwrap()
        })
        .collect();
    // power beyond the first harmonic comes only from bilinear interpolation
    let harmonic = |m: usize| -> f64 {
        let c: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(i, v)| Complex64::from_polar(*v, -(m as f64) * TAU * i as f64 / n as f64))
            .sum();
        c.norm() / n as f64
    };
    assert!(harmonic(1) > 0.2 * harmonic(0));
    assert!(harmonic(2) < 1e-2 * harmonic(1));
}

#[test]
fn readout_sweep_has_unit_negative_slope() {
    let g = Grid2D::new(256, 256, 60.0, 60.0).unwrap();
    let lg = BeamSpec::laguerre_gauss(1, 10.0);
    let gs = BeamSpec::gaussian(24.0);
    let phases: Vec<f64> = (0..18).map(|i| TAU * i as f64 / 18.0).collect();
    let angles: Vec<f64> = phases.iter().map(|p| phase_readout_pattern(&lg, &gs, *p, &g).unwrap().1).collect();
    let fit = fit_circular_linear(&phases, &angles).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-6);
    let pixel = g.dy() / lg.ring_radius();
    assert!(fit.max_abs_residual() < 2.0 * pixel);
    for (p, a) in phases.iter().zip(&angles) {
        assert!(wrap_angle(a + p).abs() < pixel);
    }
}

#[test]
fn lg_peak_to_peak_diameter() {
    let lg = BeamSpec::laguerre_gauss(1, 10.0);
    let g = Grid2D::new(1024, 4, 60.0, 60.0).unwrap();
    let f = mode_field(&lg, &g).unwrap();
    // scan the z = 0 row for the two intensity maxima
    let row = &f.values()[2 * 1024..3 * 1024];
    let peak = |range: std::ops::Range<usize>| {
        range.max_by(|a, b| row[*a].norm().total_cmp(&row[*b].norm())).unwrap()
    };
    let (l, r) = (peak(0..512), peak(512..1024));
    let d = g.y(r) - g.y(l);
    assert!((d - 2f64.sqrt() * 10.0).abs() <= 2.0 * g.dy());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn winding_independent_of_loop_radius(frac in 0.3f64..1.5, l in prop_oneof![Just(-2), Just(-1), Just(1), Just(2)]) {
        let g = grid();
        let w = 10.0;
        let f = mode_field(&BeamSpec::laguerre_gauss(l, w), &g).unwrap();
        prop_assert_eq!(winding_number(&f, frac * w, (0.0, 0.0)).unwrap(), l);
    }

    #[test]
    fn coupling_modulus_invariant_under_phase(theta in -PI..PI, rate in 0.01f64..10.0) {
        let g = Grid2D::new(64, 64, 60.0, 60.0).unwrap();
        let lg = BeamSpec::laguerre_gauss(1, 10.0);
        let gs = BeamSpec::gaussian(20.0);
        let a = coupling_map(&lg, &gs, rate, 0.0, &g).unwrap();
        let b = coupling_map(&lg, &gs, rate, theta, &g).unwrap();
        let max = b.omega.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!((max - rate).abs() <= 1e-12 * rate);
        for (x, y) in a.omega.values().iter().zip(b.omega.values()) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-12 * rate);
            if x.norm() > 1e-6 * rate {
                prop_assert!(wrap_angle(y.arg() - x.arg() - theta).abs() < 1e-9);
            }
        }
    }
}
