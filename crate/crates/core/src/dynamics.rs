//! Real-time evolution of the momentum ladder under square Raman pulses.
//!
//! Order `n` obeys
//!
//! ```text
//! i∂ψ_n/∂t = [−∇² + V + g·Σ_m|ψ_m|² + Δ_n] ψ_n + ½Ω ψ_{n−1} + ½Ω* ψ_{n+1}
//! ```
//!
//! with the rotating-frame detuning `Δ_n = 4n² − n·δν` (`δν` in units of the
//! recoil frequency). A step is Strang split into a spectral kinetic half
//! step, an exact point-local step and another kinetic half step. The local
//! part `exp(−i·h·(V + gρ + D + C(y,z)))` is exponentiated exactly: the
//! scalar `V + gρ` commutes with everything local (and `ρ` is unchanged by a
//! local unitary), while `D + C` is a Hermitian tridiagonal matrix.
//!
//! Writing `Ω = a·e^{iθ}`, the ladder matrix is `G·T(a)·G†` with
//! `G = diag(e^{ijθ})` and `T` real symmetric, so only `a` needs an
//! eigendecomposition. The phase of `Ω` is what winds the upper orders.

use std::collections::HashMap;
use std::ops::RangeInclusive;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::condensate::TrapSpec;
use crate::field::{LadderState, Populations};
use crate::optics::CouplingMap;
use crate::par;
use crate::spectral::{apply_diagonal_in_k, kinetic_factors};
use crate::{Error, Result};

/// Largest ladder handled by the local propagator.
pub const MAX_DIM: usize = 16;

/// Rotating-frame energies `Δ_n = 4n² − n·δν` for `n = −n_max..=n_max`.
/// `delta_nu` is in units of the recoil frequency, energies in `E_r`.
pub fn detuning_ladder(delta_nu: f64, n_max: u32) -> Result<Vec<(i32, f64)>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be >= 1"));
    }
    let n = n_max as i32;
    Ok(detunings(delta_nu, -n..=n))
}

pub fn detunings(delta_nu: f64, orders: RangeInclusive<i32>) -> Vec<(i32, f64)> {
    orders
        .map(|n| {
            let nf = n as f64;
            (n, 4.0 * nf * nf - nf * delta_nu)
        })
        .collect()
}

/// One square Raman pulse.
#[derive(Clone, Debug)]
pub struct PulseSpec {
    pub coupling: Arc<CouplingMap>,
    /// Beam frequency difference in units of `ν_r`.
    pub delta_nu: f64,
    /// Internal time units.
    pub duration: f64,
    pub trap_on: bool,
    pub label: String,
}

impl PulseSpec {
    pub fn new(coupling: Arc<CouplingMap>, delta_nu: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if !delta_nu.is_finite() {
            return Err(Error::invalid("delta_nu", "must be finite"));
        }
        Ok(Self { coupling, delta_nu, duration, trap_on: true, label: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_trap(mut self, on: bool) -> Self {
        self.trap_on = on;
        self
    }
}

/// Pulses applied back to back; `delays[i]` is free evolution after pulse `i`.
#[derive(Clone, Debug, Default)]
pub struct SequenceSpec {
    pub pulses: Vec<PulseSpec>,
    pub delays: Vec<f64>,
}

impl SequenceSpec {
    pub fn new(pulses: Vec<PulseSpec>) -> Self {
        let delays = vec![0.0; pulses.len()];
        Self { pulses, delays }
    }

    pub fn with_delays(mut self, delays: Vec<f64>) -> Result<Self> {
        if delays.len() != self.pulses.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} delays", self.pulses.len()),
                found: format!("{}", delays.len()),
            });
        }
        if delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::invalid("delays", "must be finite and >= 0"));
        }
        self.delays = delays;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(first) = self.pulses.first() {
            let g = first.coupling.omega.grid();
            if self.pulses.iter().any(|p| p.coupling.omega.grid() != g) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{g:?}"),
                    found: "pulses on different grids".into(),
                });
            }
        }
        if self.delays.len() != self.pulses.len() {
            return Err(Error::invalid("delays", "one delay per pulse"));
        }
        Ok(())
    }
}

/// Integrator settings shared by all pulses of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evolution {
    pub trap: TrapSpec,
    pub g2d: f64,
    /// Target time step (internal units); each segment uses the largest step
    /// not exceeding it that divides the segment evenly.
    pub dt: f64,
    /// Maximum phase per step of the split terms (kinetic at the grid Nyquist
    /// wavenumber, peak meanfield) and of the peak coupling; the latter only
    /// adds substeps.
    pub step_limit: f64,
    /// Largest population allowed in the outermost orders after a pulse.
    pub edge_limit: Option<f64>,
}

impl Evolution {
    pub fn new(trap: TrapSpec, g2d: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(g2d >= 0.0 && g2d.is_finite()) {
            return Err(Error::invalid("g2d", "must be finite and >= 0"));
        }
        Ok(Self { trap, g2d, dt, step_limit: 0.1, edge_limit: Some(1e-3) })
    }

    pub fn with_edge_limit(mut self, limit: Option<f64>) -> Self {
        self.edge_limit = limit;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// Point-local propagator: per grid point an index into the cache of
/// `exp(−i·h·T(a))` matrices plus the unit phase `e^{iθ}` of `Ω`.
struct LocalPropagator {
    keys: Vec<u32>,
    units: Vec<Complex64>,
    mats: Vec<Vec<Complex64>>,
}

impl LocalPropagator {
    fn new(omega: Option<&[Complex64]>, len: usize, diag: &[f64], h: f64) -> Self {
        let (keys, units, amps) = match omega {
            Some(om) => {
                let mut index: HashMap<u64, u32> = HashMap::new();
                let mut amps = Vec::new();
                let mut keys = Vec::with_capacity(om.len());
                let mut units = Vec::with_capacity(om.len());
                for w in om {
                    let a = w.norm();
                    units.push(if a > 0.0 { w / a } else { Complex64::new(1.0, 0.0) });
                    let next = amps.len() as u32;
                    let k = *index.entry(a.to_bits()).or_insert_with(|| {
                        amps.push(a);
                        next
                    });
                    keys.push(k);
                }
                (keys, units, amps)
            }
            None => (vec![0; len], vec![Complex64::new(1.0, 0.0); len], vec![0.0]),
        };
        let mats = par::map_indexed(amps.len(), |i| ladder_exponential(diag, amps[i], h));
        Self { keys, units, mats }
    }
}

/// `exp(−i·h·T)` for the real symmetric tridiagonal `T` with diagonal `diag`
/// and off-diagonal `a/2`, row-major.
fn ladder_exponential(diag: &[f64], a: f64, h: f64) -> Vec<Complex64> {
    let d = diag.len();
    if a == 0.0 {
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for (j, e) in diag.iter().enumerate() {
            m[j * d + j] = Complex64::from_polar(1.0, -h * e);
        }
        return m;
    }
    let t = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            diag[r]
        } else if r.abs_diff(c) == 1 {
            0.5 * a
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let phases: Vec<Complex64> = eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, -h * l)).collect();
    let v = &eig.eigenvectors;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for c in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, p) in phases.iter().enumerate() {
                acc += p * (v[(r, k)] * v[(c, k)]);
            }
            m[r * d + c] = acc;
        }
    }
    m
}

/// One segment of constant Hamiltonian.
struct Segment<'a> {
    omega: Option<&'a [Complex64]>,
    peak_rate: f64,
    delta_nu: f64,
    duration: f64,
    trap_on: bool,
}

fn evolve_segment(state: &LadderState, seg: &Segment, ev: &Evolution) -> Result<LadderState> {
    let dim = state.dim();
    if dim > MAX_DIM {
        return Err(Error::invalid("n_max", format!("ladder of {dim} orders exceeds {MAX_DIM}")));
    }
    let grid = state.grid_ref().clone();
    // the coupling is exponentiated exactly, but it does not commute with the
    // kinetic term; strong pulses get extra substeps instead of an error
    let by_dt = (seg.duration / ev.dt - 1e-9).ceil().max(1.0);
    let by_rate = (seg.peak_rate * seg.duration / ev.step_limit * (1.0 + 1e-9)).ceil();
    let steps = by_dt.max(by_rate) as usize;
    let h = seg.duration / steps as f64;

    // guarded at the configured step: substeps exist for the coupling only
    let h_dt = seg.duration / by_dt;
    let rho0 = state.total_density();
    let rho_peak = rho0.iter().cloned().fold(0.0, f64::max);
    for (term, phase) in [
        ("kinetic", grid.nyquist_kinetic() * h_dt),
        ("meanfield", ev.g2d * rho_peak * h_dt),
    ] {
        if phase >= ev.step_limit {
            return Err(Error::StepSize { term, phase, limit: ev.step_limit });
        }
    }

    let diag: Vec<f64> = detunings(seg.delta_nu, state.orders()).into_iter().map(|(_, e)| e).collect();
    let local = LocalPropagator::new(seg.omega, grid.len(), &diag, h);
    let trap = if seg.trap_on { ev.trap } else { TrapSpec::off() };
    let v = trap.potential_map(&grid);
    let half = kinetic_factors(&grid, Complex64::new(0.0, 0.5 * h));
    let full = kinetic_factors(&grid, Complex64::new(0.0, h));
    let g2d = ev.g2d;

    let mut out = state.clone();
    let mut cols = out.raw_columns();
    let kinetic = |cols: &mut Vec<Vec<Complex64>>, f: &[Complex64]| {
        for c in cols.iter_mut() {
            apply_diagonal_in_k(&grid, c, f);
        }
    };
    kinetic(&mut cols, &half);
    for s in 0..steps {
        par::for_each_chunk_group_mut(&mut cols, par::CHUNK, |off, group| {
            let mut w = [Complex64::new(0.0, 0.0); MAX_DIM];
            let mut u = [Complex64::new(0.0, 0.0); MAX_DIM];
            let len = group[0].len();
            for i in 0..len {
                let p = off + i;
                let z = local.units[p];
                let m = &local.mats[local.keys[p] as usize];
                let mut rho = 0.0;
                let mut g = Complex64::new(1.0, 0.0);
                for j in 0..dim {
                    let x = group[j][i];
                    rho += x.norm_sqr();
                    w[j] = x * g.conj();
                    g *= z;
                }
                let scalar = Complex64::from_polar(1.0, -h * (v[p] + g2d * rho));
                let mut g = scalar;
                for r in 0..dim {
                    let row = &m[r * dim..(r + 1) * dim];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..dim {
                        acc += row[c] * w[c];
                    }
                    u[r] = acc * g;
                    g *= z;
                }
                for j in 0..dim {
                    group[j][i] = u[j];
                }
            }
        });
        kinetic(&mut cols, if s + 1 == steps { &half } else { &full });
    }
    out.restore_columns(cols);
    if !out.is_finite() {
        return Err(Error::NonFinite("ladder evolution"));
    }
    Ok(out)
}

/// Applies one pulse; fails if the outermost orders end up populated above
/// the edge limit.
pub fn evolve_pulse(state: &LadderState, pulse: &PulseSpec, ev: &Evolution) -> Result<LadderState> {
    if pulse.coupling.omega.grid() != state.grid() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", state.grid()),
            found: format!("{:?}", pulse.coupling.omega.grid()),
        });
    }
    let seg = Segment {
        omega: Some(pulse.coupling.omega.values()),
        peak_rate: pulse.coupling.peak_rate,
        delta_nu: pulse.delta_nu,
        duration: pulse.duration,
        trap_on: pulse.trap_on,
    };
    let out = evolve_segment(state, &seg, ev)?;
    check_edges(&out, ev)?;
    Ok(out)
}

/// Evolution without light for `duration`; each order keeps its axial
/// kinetic energy `4n²`.
pub fn free_evolution(state: &LadderState, duration: f64, trap_on: bool, ev: &Evolution) -> Result<LadderState> {
    if duration == 0.0 {
        return Ok(state.clone());
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", "must be >= 0"));
    }
    let seg = Segment { omega: None, peak_rate: 0.0, delta_nu: 0.0, duration, trap_on };
    evolve_segment(state, &seg, ev)
}

fn check_edges(state: &LadderState, ev: &Evolution) -> Result<()> {
    if let Some(limit) = ev.edge_limit {
        let pops = state.populations();
        for order in [state.min_order(), state.max_order()] {
            let p = pops.get(order);
            if p > limit {
                return Err(Error::EdgePopulation { order, population: p, limit });
            }
        }
    }
    Ok(())
}

/// Result of a peak-rate calibration.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub peak_rate: f64,
    /// Population reached in the target order.
    pub population: f64,
    /// Every `(peak_rate, population)` evaluated, in evaluation order.
    pub scan: Vec<(f64, f64)>,
}

/// Range and resolution of the calibration scan, in units of `π/duration`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    /// Relative bracket width at which refinement stops.
    pub rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { lo: 0.25, hi: 4.0, coarse_points: 16, rel_tol: 1e-3 }
    }
}

fn transferred(
    state: &LadderState,
    shape: &CouplingMap,
    rate: f64,
    delta_nu: f64,
    duration: f64,
    target: i32,
    ev: &Evolution,
) -> Result<f64> {
    let pulse = PulseSpec::new(Arc::new(shape.with_peak_rate(rate)?), delta_nu, duration)?;
    Ok(evolve_pulse(state, &pulse, ev)?.populations().get(target))
}

/// Finds the peak rate maximizing the population of `target_order` after a
/// single pulse: coarse scan, then golden-section refinement around the best
/// interior point.
pub fn calibrate_pi_pulse(
    state: &LadderState,
    shape: &CouplingMap,
    delta_nu: f64,
    duration: f64,
    target_order: i32,
    ev: &Evolution,
    scan: &ScanOptions,
) -> Result<Calibration> {
    if !(duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    if scan.coarse_points < 3 || !(scan.hi > scan.lo && scan.lo > 0.0) {
        return Err(Error::invalid("scan", "need lo > 0, hi > lo and at least 3 points"));
    }
    let unit = std::f64::consts::PI / duration;
    let mut log = Vec::new();
    let eval = |rate: f64, log: &mut Vec<(f64, f64)>| -> Result<f64> {
        let p = transferred(state, shape, rate, delta_nu, duration, target_order, ev)?;
        log.push((rate, p));
        Ok(p)
    };
    let n = scan.coarse_points;
    let rates: Vec<f64> =
        (0..n).map(|i| unit * (scan.lo + (scan.hi - scan.lo) * i as f64 / (n - 1) as f64)).collect();
    let mut pops = Vec::with_capacity(n);
    for &r in &rates {
        pops.push(eval(r, &mut log)?);
    }
    let best = (0..n).max_by(|&a, &b| pops[a].total_cmp(&pops[b])).unwrap_or(0);
    if best == 0 || best == n - 1 {
        return Err(Error::NoInteriorMaximum { lo: rates[0], hi: rates[n - 1] });
    }
    let (mut a, mut b) = (rates[best - 1], rates[best + 1]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c, &mut log)?;
    let mut fd = eval(d, &mut log)?;
    while b - a > scan.rel_tol * rates[best] {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c, &mut log)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d, &mut log)?;
        }
    }
    let (peak_rate, population) = log
        .iter()
        .cloned()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("scan evaluated at least once");
    Ok(Calibration { peak_rate, population, scan: log })
}

/// Smallest peak rate transferring `fraction` into `target_order`: upward
/// scan in steps of `π/(8·duration)` up to `8π/duration`, then regula falsi
/// to `1e-5` in population.
pub fn calibrate_transfer_fraction(
    state: &LadderState,
    shape: &CouplingMap,
    delta_nu: f64,
    duration: f64,
    target_order: i32,
    fraction: f64,
    ev: &Evolution,
) -> Result<Calibration> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("transfer_fraction", "must lie in (0, 1)"));
    }
    if !(duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    let unit = std::f64::consts::PI / duration;
    let mut log = Vec::new();
    let (mut lo, mut p_lo) = (0.0, state.populations().get(target_order));
    let mut hi = None;
    for i in 1..=64 {
        let r = 0.125 * unit * i as f64;
        let p = transferred(state, shape, r, delta_nu, duration, target_order, ev)?;
        log.push((r, p));
        if p >= fraction {
            hi = Some((r, p));
            break;
        }
        (lo, p_lo) = (r, p);
    }
    let (mut hi, p_hi) = hi.ok_or_else(|| {
        Error::Degenerate(format!("transfer fraction {fraction} not reached below {} rad/unit", 8.0 * unit))
    })?;
    // Illinois regula falsi on p(rate) − fraction
    let mut side = 0i8;
    let (mut f_lo, mut f_hi) = (p_lo - fraction, p_hi - fraction);
    let mut best = (hi, p_hi);
    for _ in 0..60 {
        if (best.1 - fraction).abs() <= 1e-5 || hi - lo <= 1e-12 * hi {
            break;
        }
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let p = transferred(state, shape, mid, delta_nu, duration, target_order, ev)?;
        log.push((mid, p));
        if (p - fraction).abs() < (best.1 - fraction).abs() {
            best = (mid, p);
        }
        if p >= fraction {
            (hi, f_hi) = (mid, p - fraction);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            (lo, f_lo) = (mid, p - fraction);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    let (hi, p_hi) = best;
    Ok(Calibration { peak_rate: hi, population: p_hi, scan: log })
}

/// Populations after one pulse of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub pulse: usize,
    pub label: String,
    pub delta_nu: f64,
    pub duration: f64,
    pub populations: Populations,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PopulationLog {
    pub rows: Vec<LogRow>,
}

/// Applies the pulses in order with their delays; `observer` sees the state
/// after every pulse (before its delay).
pub fn run_sequence<F>(state: &LadderState, seq: &SequenceSpec, ev: &Evolution, mut observer: F) -> Result<(LadderState, PopulationLog)>
where
    F: FnMut(usize, &LadderState),
{
    seq.validate()?;
    let mut current = state.clone();
    let mut log = PopulationLog::default();
    for (i, (pulse, delay)) in seq.pulses.iter().zip(&seq.delays).enumerate() {
        current = evolve_pulse(&current, pulse, ev)?;
        observer(i, &current);
        log.rows.push(LogRow {
            pulse: i,
            label: pulse.label.clone(),
            delta_nu: pulse.delta_nu,
            duration: pulse.duration,
            populations: current.populations(),
        });
        if *delay > 0.0 {
            current = free_evolution(&current, *delay, pulse.trap_on, ev)?;
        }
    }
    Ok((current, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TransverseField;
    use crate::grid::Grid2D;

    #[test]
    fn ladder_resonances_are_exact() {
        let at = |dn: f64, n: i32| detuning_ladder(dn, 3).unwrap().into_iter().find(|e| e.0 == n).unwrap().1;
        assert_eq!(at(4.0, 1), 0.0);
        assert_eq!(at(8.0, 2), 0.0);
        assert_eq!(at(12.0, 2) - at(12.0, 1), 0.0);
        assert_eq!(at(0.0, -1), at(0.0, 1));
        assert!(detuning_ladder(4.0, 0).is_err());
    }

    #[test]
    fn exponential_is_unitary() {
        let m = ladder_exponential(&[0.0, 0.0, 16.0, -3.0], 0.7, 0.3);
        let d = 4;
        for r in 0..d {
            for c in 0..d {
                let dot: Complex64 = (0..d).map(|k| m[r * d + k] * m[c * d + k].conj()).sum();
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((dot - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn resonant_rabi_two_level() {
        let g = Grid2D::new(8, 8, 200.0, 200.0).unwrap();
        let f = TransverseField::from_fn(g.clone(), |_, _| Complex64::new(0.005, 0.0));
        let mut s = LadderState::new(g.clone(), 0..=1).unwrap();
        s.set_component(0, f).unwrap();
        let rate = 0.05;
        let c = Arc::new(CouplingMap::uniform(g, rate, 0.0).unwrap());
        let ev = Evolution::new(TrapSpec::off(), 0.0, 0.5).unwrap().with_edge_limit(None);
        let t = 17.0;
        let out = evolve_pulse(&s, &PulseSpec::new(c, 4.0, t).unwrap(), &ev).unwrap();
        let p1 = out.populations().get(1);
        assert!((p1 - (rate * t / 2.0).sin().powi(2)).abs() < 1e-12);
    }
}
