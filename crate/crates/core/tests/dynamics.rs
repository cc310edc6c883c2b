mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use oam_core::condensate::{energy, TrapSpec};
use oam_core::diagnostics::{oam_expectation, winding_number};
use oam_core::dynamics::*;
use oam_core::optics::{coupling_map, BeamSpec, CouplingMap};
use oam_core::{Complex64, Error, Grid2D, LadderState, TransverseField};

fn plane_wave_two_level() -> (LadderState, Arc<Grid2D>) {
    let g = Grid2D::new(8, 8, 400.0, 400.0).unwrap();
    let f = TransverseField::from_fn(g.clone(), |_, _| Complex64::new(1.0 / 400.0, 0.0));
    let mut s = LadderState::new(g.clone(), 0..=1).unwrap();
    s.set_component(0, f).unwrap();
    (s, g)
}

fn free_evolution_settings() -> Evolution {
    Evolution::new(TrapSpec::off(), 0.0, 0.5).unwrap().with_edge_limit(None)
}

#[test]
fn resonant_rabi_over_two_cycles() {
    let (s, g) = plane_wave_two_level();
    let rate = 0.2;
    let c = Arc::new(CouplingMap::uniform(g, rate, 0.3).unwrap());
    let ev = free_evolution_settings();
    let period = 2.0 * PI / rate;
    for i in 1..=40 {
        let t = 2.0 * period * i as f64 / 40.0;
        let out = evolve_pulse(&s, &PulseSpec::new(c.clone(), 4.0, t).unwrap(), &ev).unwrap();
        let p1 = out.populations().get(1);
        assert!((p1 - (rate * t / 2.0).sin().powi(2)).abs() < 1e-6, "t={t}: {p1}");
    }
}

#[test]
fn detuned_rabi_follows_generalized_frequency() {
    let (s, g) = plane_wave_two_level();
    let rate = 0.2;
    let c = Arc::new(CouplingMap::uniform(g, rate, 0.0).unwrap());
    let ev = free_evolution_settings();
    // Δ_1 = 4 − δν = Ω
    let delta_nu = 4.0 - rate;
    let general = (2.0f64).sqrt() * rate;
    let mut max = 0.0f64;
    for i in 1..=60 {
        let t = 2.0 * (2.0 * PI / general) * i as f64 / 60.0;
        let p1 = evolve_pulse(&s, &PulseSpec::new(c.clone(), delta_nu, t).unwrap(), &ev).unwrap().populations().get(1);
        let expect = 0.5 * (general * t / 2.0).sin().powi(2);
        assert!((p1 - expect).abs() < 1e-4);
        max = max.max(p1);
    }
    assert!((max - 0.5).abs() < 1e-4);
}

#[test]
fn calibration_finds_pi_pulse_in_plane_wave_limit() {
    let (s, g) = plane_wave_two_level();
    let shape = CouplingMap::uniform(g, 1.0, 0.0).unwrap();
    let ev = free_evolution_settings();
    let duration = 20.0;
    let cal = calibrate_pi_pulse(&s, &shape, 4.0, duration, 1, &ev, &ScanOptions::default()).unwrap();
    assert!((cal.peak_rate * duration / PI - 1.0).abs() < 2e-3, "{}", cal.peak_rate * duration / PI);
    assert!(cal.population > 0.99999);
    let narrow = ScanOptions { lo: 0.1, hi: 0.5, ..Default::default() };
    assert!(matches!(
        calibrate_pi_pulse(&s, &shape, 4.0, duration, 1, &ev, &narrow),
        Err(Error::NoInteriorMaximum { .. })
    ));
    let part = calibrate_transfer_fraction(&s, &shape, 4.0, duration, 1, 0.2, &ev).unwrap();
    assert!((part.population - 0.2).abs() < 1e-4);
    assert!((part.peak_rate * duration / 2.0 - 0.2f64.sqrt().asin()).abs() < 1e-3);
}

#[test]
fn lg_pulse_on_condensate() {
    let s = common::small();
    let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, 1.0)).unwrap();
    let lg = BeamSpec::laguerre_gauss(1, common::um(&s.units, 85.0));
    let gb = BeamSpec::gaussian(common::um(&s.units, 175.0));
    let t = common::us(&s.units, 130.0);
    let shape = coupling_map(&lg, &gb, PI / t, 0.0, &s.grid).unwrap();
    let state = LadderState::from_rest(s.ground.clone(), 3).unwrap();
    let out = evolve_pulse(&state, &PulseSpec::new(Arc::new(shape), 4.0, t).unwrap(), &ev).unwrap();
    let pops = out.populations();
    assert!((pops.total - 1.0).abs() < 1e-9, "norm drift {}", pops.total - 1.0);
    let p1 = pops.get(1);
    assert!(p1 > 0.2 && p1 < 1.0);
    let others: f64 = pops.entries.iter().filter(|e| e.0 != 1).map(|e| e.1).sum();
    assert!((p1 - (1.0 - others)).abs() < 1e-9);
    let psi1 = out.component(1).unwrap();
    let r = common::um(&s.units, 8.0);
    assert_eq!(winding_number(psi1, r, (0.0, 0.0)).unwrap(), 1);
    let mut normed = psi1.clone();
    normed.normalize().unwrap();
    assert!((oam_expectation(&normed, (0.0, 0.0)).unwrap() - 1.0).abs() < 0.02);
}

#[test]
fn resonance_peaks_at_four_recoil_frequencies() {
    let s = common::small();
    let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, 1.0)).unwrap();
    let lg = BeamSpec::laguerre_gauss(1, common::um(&s.units, 85.0));
    let gb = BeamSpec::gaussian(common::um(&s.units, 175.0));
    let t = common::us(&s.units, 130.0);
    let shape = Arc::new(coupling_map(&lg, &gb, PI / t, 0.0, &s.grid).unwrap());
    let state = LadderState::from_rest(s.ground.clone(), 3).unwrap();
    let sweep: Vec<(f64, f64)> = (0..=16)
        .map(|i| {
            let dn = 2.0 + 0.25 * i as f64;
            let out = evolve_pulse(&state, &PulseSpec::new(shape.clone(), dn, t).unwrap(), &ev).unwrap();
            (dn, out.populations().get(1))
        })
        .collect();
    let peak = sweep.iter().cloned().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    // Fourier width 1/duration in units of the recoil frequency
    let width = 1.0 / (t * s.units.time) / s.units.recoil_frequency;
    assert!((peak.0 - 4.0).abs() <= width, "{sweep:?}");
}

#[test]
fn free_evolution_conserves_norm_and_energy() {
    let s = common::small();
    let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, 1.0)).unwrap();
    let state = LadderState::from_rest(s.ground.clone(), 1).unwrap();
    let out = free_evolution(&state, common::us(&s.units, 200.0), false, &ev).unwrap();
    let f0 = state.component(0).unwrap();
    let f1 = out.component(0).unwrap();
    assert!((out.populations().total - 1.0).abs() < 1e-9);
    let (e0, e1) = (energy(f0, &TrapSpec::off(), s.g2d), energy(f1, &TrapSpec::off(), s.g2d));
    assert!((e1 / e0 - 1.0).abs() < 1e-6, "{}", e1 / e0 - 1.0);
}

#[test]
fn halving_the_step_converges() {
    let s = common::small();
    let lg = BeamSpec::laguerre_gauss(1, common::um(&s.units, 85.0));
    let gb = BeamSpec::gaussian(common::um(&s.units, 175.0));
    let t = common::us(&s.units, 130.0);
    let pulse = PulseSpec::new(Arc::new(coupling_map(&lg, &gb, 2.1 * PI / t, 0.0, &s.grid).unwrap()), 4.0, t).unwrap();
    let state = LadderState::from_rest(s.ground.clone(), 3).unwrap();
    let run = |dt_us: f64| {
        let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, dt_us)).unwrap();
        evolve_pulse(&state, &pulse, &ev).unwrap()
    };
    let (a, b) = (run(1.0), run(0.5));
    let diff: f64 = a.components().iter().zip(b.components()).map(|(x, y)| {
        x.values().iter().zip(y.values()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>()
    }).sum::<f64>() * s.grid.cell_area();
    assert!(diff.sqrt() < 1e-6, "{}", diff.sqrt());
}

#[test]
fn guards_trip() {
    let s = common::small();
    let lg = BeamSpec::laguerre_gauss(1, common::um(&s.units, 85.0));
    let gb = BeamSpec::gaussian(common::um(&s.units, 175.0));
    let t = common::us(&s.units, 130.0);
    let shape = Arc::new(coupling_map(&lg, &gb, 2.0 * PI / t, 0.0, &s.grid).unwrap());
    let narrow = LadderState::from_rest(s.ground.clone(), 1).unwrap();
    let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, 1.0)).unwrap();
    let pulse = PulseSpec::new(shape.clone(), 4.0, t).unwrap();
    assert!(matches!(evolve_pulse(&narrow, &pulse, &ev), Err(Error::EdgePopulation { order: 1, .. })));
    let coarse = ev.with_dt(common::us(&s.units, 100.0));
    let wide = LadderState::from_rest(s.ground.clone(), 3).unwrap();
    let weak = PulseSpec::new(Arc::new(shape.with_peak_rate(0.01 * PI / t).unwrap()), 4.0, t).unwrap();
    assert!(matches!(evolve_pulse(&wide, &weak, &coarse), Err(Error::StepSize { term: "kinetic", .. })));
}

#[test]
fn sequence_logs_every_pulse() {
    let s = common::small();
    let ev = Evolution::new(s.trap, s.g2d, common::us(&s.units, 1.0)).unwrap();
    let lg = BeamSpec::laguerre_gauss(1, common::um(&s.units, 85.0));
    let gb = BeamSpec::gaussian(common::um(&s.units, 175.0));
    let t1 = common::us(&s.units, 30.0);
    let t2 = common::us(&s.units, 70.0);
    let shape = Arc::new(coupling_map(&lg, &gb, 0.6 * PI / t1, 0.0, &s.grid).unwrap());
    let second = Arc::new(shape.with_peak_rate(PI / t2).unwrap());
    let seq = SequenceSpec::new(vec![
        PulseSpec::new(shape, 4.0, t1).unwrap().with_label("first"),
        PulseSpec::new(second, 12.0, t2).unwrap().with_label("second"),
    ])
    .with_delays(vec![common::us(&s.units, 5.0), 0.0])
    .unwrap();
    let state = LadderState::from_rest(s.ground.clone(), 3).unwrap();
    let mut seen = Vec::new();
    let (out, log) = run_sequence(&state, &seq, &ev, |i, st| seen.push((i, st.populations().get(2)))).unwrap();
    assert_eq!(log.rows.len(), 2);
    assert_eq!(seen.len(), 2);
    assert_eq!(log.rows[1].label, "second");
    assert!(log.rows[0].populations.get(1) > 0.05);
    assert!(log.rows[1].populations.get(2) > 0.5 * log.rows[0].populations.get(1));
    assert!((out.populations().total - 1.0).abs() < 1e-9);
    let r = common::um(&s.units, 10.0);
    assert_eq!(winding_number(out.component(2).unwrap(), r, (0.0, 0.0)).unwrap(), 2);
}
