mod common;

use oam_core::condensate::*;
use oam_core::units::{make_recoil_units, PhysicalParams};
use oam_core::Grid2D;

#[test]
fn non_interacting_limit_is_oscillator_ground_state() {
    let p = PhysicalParams::sodium();
    let u = make_recoil_units(&p).unwrap();
    let trap = TrapSpec::from_hz(p.trap_freqs[1], p.trap_freqs[2], &u).unwrap();
    let grid = Grid2D::new(64, 64, common::um(&u, 40.0), common::um(&u, 40.0)).unwrap();
    // start from a Thomas-Fermi shape so relaxation has real work to do
    let seed = thomas_fermi_profile(&trap, g2d_for_radius(&trap, common::um(&u, 12.0)).unwrap(), &grid).unwrap();
    let opts = RelaxOptions { tol: 1e-13, ..Default::default() };
    let (gs, report) = relax_ground_state(&seed, &trap, 0.0, &opts).unwrap();
    let exact = 0.5 * (trap.omega_y + trap.omega_z);
    assert!((gs.energy / exact - 1.0).abs() < 1e-3, "{} vs {exact}", gs.energy);
    assert!(report.monotonic);
    assert!((gs.field.norm_sq() - 1.0).abs() < 1e-9);
}

#[test]
fn radius_ratios_follow_trap_ratios() {
    let p = PhysicalParams::sodium();
    let u = make_recoil_units(&p).unwrap();
    let trap = TrapSpec::from_hz(p.trap_freqs[1], p.trap_freqs[2], &u).unwrap();
    let g = g2d_for_radius(&trap, common::um(&u, 30.0)).unwrap();
    let mu = tf_chemical_potential(&trap, g);
    let (ry, rz) = trap.tf_radii(mu);
    let (ry, rz) = (u.length_to_si(ry) * 1e6, u.length_to_si(rz) * 1e6);
    assert!((ry - 30.0).abs() < 1e-9);
    // tight axis: 30/√2 ≈ 21 μm
    assert!((rz - 21.0).abs() / 21.0 < 0.02, "{rz}");
    // the axial radius for the same μ
    let axial = TrapSpec::from_hz(p.trap_freqs[0], p.trap_freqs[0], &u).unwrap();
    let rx = u.length_to_si(axial.tf_radii(mu).0) * 1e6;
    assert!((rx - 42.0).abs() / 42.0 < 0.02, "{rx}");
}

#[test]
fn doubling_interaction_scales_mu_by_root_two() {
    let grid = Grid2D::new(256, 256, 400.0, 400.0).unwrap();
    let trap = TrapSpec::new(0.02, 0.03).unwrap();
    let a = thomas_fermi_profile(&trap, 600.0, &grid).unwrap();
    let b = thomas_fermi_profile(&trap, 1200.0, &grid).unwrap();
    // the discrete μ comes from quadrature of the profile on the grid
    assert!((b.chemical_potential / a.chemical_potential - 2f64.sqrt()).abs() < 1e-3);
    assert!((a.chemical_potential / tf_chemical_potential(&trap, 600.0) - 1.0).abs() < 2e-3);
}

#[test]
fn radii_scale_inversely_with_frequency() {
    let mu = 0.03;
    let a = TrapSpec::new(0.001, 0.002).unwrap().tf_radii(mu);
    let b = TrapSpec::new(0.003, 0.005).unwrap().tf_radii(mu);
    assert!((a.0 * 0.001 - b.0 * 0.003).abs() < 1e-12);
    assert!((a.1 * 0.002 - b.1 * 0.005).abs() < 1e-12);
}

#[test]
fn relaxed_sodium_condensate() {
    let s = common::small();
    let seed = thomas_fermi_profile(&s.trap, s.g2d, &s.grid).unwrap();
    let (gs, report) = relax_ground_state(&seed, &s.trap, s.g2d, &RelaxOptions::default()).unwrap();
    assert!(report.monotonic, "{:?}", report.energy_history);
    assert!(gs.energy <= seed.energy);
    assert!((gs.field.norm_sq() - 1.0).abs() < 1e-9);
    let mu_tf = tf_chemical_potential(&s.trap, s.g2d);
    assert!((gs.chemical_potential / mu_tf - 1.0).abs() < 0.05);
    // stationary under real-time evolution
    let stepped = real_time_step(&gs.field, &s.trap, s.g2d, common::us(&s.units, 1.0));
    let (d0, d1) = (gs.field.density(), stepped.density());
    let num: f64 = d0.iter().zip(&d1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = d0.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(num / den < 1e-6, "{}", num / den);
    // real, positive at the peak
    let peak = gs.field.values().iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    assert!(peak.im.abs() < 1e-15 && peak.re > 0.0);
}

#[test]
fn step_guard_and_budget() {
    let s = common::small();
    let seed = thomas_fermi_profile(&s.trap, s.g2d, &s.grid).unwrap();
    let big = RelaxOptions { dt: 50.0, ..Default::default() };
    assert!(matches!(relax_ground_state(&seed, &s.trap, s.g2d, &big), Err(oam_core::Error::StepSize { .. })));
    let short = RelaxOptions { max_steps: 10, check_every: 5, tol: 1e-30, ..Default::default() };
    assert!(matches!(
        relax_ground_state(&seed, &s.trap, s.g2d, &short),
        Err(oam_core::Error::NonConvergence { .. })
    ));
}
