//! Scenario runner: prepares the condensate, calibrates and applies the pulse
//! sequence, expands and images the result, and runs the scenario's analysis.
//!
//! Every scenario writes the same core bundle (normalized config, ground and
//! final fields, population log, vortex reports, time-of-flight images, a
//! `key,value` summary) plus its figure analogs and tables.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use log::{debug, info};
use oam_core::condensate::{g2d_for_radius, prepare_ground_state, RelaxOptions, RelaxReport};
use oam_core::diagnostics::{
    angular_minima, hole_angle, phase_correlation_study, vortex_report, wrap_angle, PhaseStudy, VortexReport,
};
use oam_core::dynamics::{
    calibrate_pi_pulse, calibrate_transfer_fraction, evolve_pulse, run_sequence, Evolution, PopulationLog,
    ScanOptions,
};
use oam_core::imaging::{
    absorption_image, analytic_pattern, cloud_radius, fit_pattern_angle, time_of_flight, Colocation, PatternKind,
    RadialProfile, TofOptions,
};
use oam_core::optics::{corkscrew_potential, coupling_map, phase_readout_pattern};
use oam_core::units::{make_recoil_units, PhysicalParams, UnitSystem};
use oam_core::{io, par};
use oam_core::{BeamSpec, CouplingMap, GroundState, Grid2D, ImagePlane, LadderState, PulseSpec, SequenceSpec, TrapSpec};

use crate::config::{BeamConfig, Config, ConfigErrors, PulseConfig, Scenario};

/// Populations below this are not analysed for vortices.
const REPORT_FLOOR: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(ConfigErrors),
    #[error(transparent)]
    Core(#[from] oam_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// guards and failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        use oam_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Io { .. } => 4,
            RunError::Core(E::Io(_) | E::Format { .. }) => 4,
            RunError::Core(E::InvalidParameter { .. } | E::UnsupportedMode { .. } | E::BeamTooLarge { .. }) => 2,
            RunError::Core(_) => 3,
        }
    }

    pub fn guard_name(&self) -> Option<&'static str> {
        match self {
            RunError::Core(e) => e.guard_name(),
            _ => None,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// A summary value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:.17e}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Ordered `key → (value, unit)` table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, Value, &'static str)>,
}

impl Summary {
    pub fn float(&mut self, key: impl Into<String>, v: f64, unit: &'static str) {
        self.entries.push((key.into(), Value::Float(v), unit));
    }

    pub fn int(&mut self, key: impl Into<String>, v: i64, unit: &'static str) {
        self.entries.push((key.into(), Value::Int(v), unit));
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) {
        self.entries.push((key.into(), Value::Text(v.into()), ""));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|e| e.0 == key).map(|e| &e.1)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            Value::Text(_) => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v, _) in &self.entries {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }
}

/// Vortex diagnostics of one order after one pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub pulse: usize,
    pub order: i32,
    pub population: f64,
    pub report: Result<VortexReport, String>,
}

/// Result of one pulse's calibration.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseCalibration {
    /// Internal units.
    pub peak_rate: f64,
    /// Target population the calibration achieved on its calibration state.
    pub population: f64,
    /// Largest target population seen anywhere in the scan.
    pub scan_max: f64,
    pub evaluations: usize,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub config: Config,
    pub units: UnitSystem,
    pub ground: GroundState,
    pub relax: RelaxReport,
    pub calibrations: Vec<PulseCalibration>,
    pub log: PopulationLog,
    /// Pre-expansion state after the whole sequence.
    pub final_state: LadderState,
    pub reports: Vec<ReportRow>,
    pub study: Option<PhaseStudy>,
    pub sweep: Option<SweepTable>,
    pub images: BTreeMap<String, ImagePlane>,
    pub summary: Summary,
    pub out_dir: Option<PathBuf>,
}

/// Physical setup shared by every stage of a run.
pub struct Setup {
    pub config: Config,
    pub units: UnitSystem,
    pub grid: Arc<Grid2D>,
    pub trap: TrapSpec,
    pub g2d: f64,
    pub ev: Evolution,
    pub lg: BeamSpec,
    pub g_counter: BeamSpec,
    pub g_second: BeamSpec,
    pub g_copropagating: BeamSpec,
}

fn beam(b: &BeamConfig, units: &UnitSystem) -> BeamSpec {
    let waist = units.length_to_internal(b.waist_m);
    let mut spec = if b.kind == "laguerre_gauss" {
        BeamSpec::laguerre_gauss(b.l as i32, waist)
    } else {
        BeamSpec::gaussian(waist)
    };
    spec.power = b.power_w;
    spec.center = (units.length_to_internal(b.center_m[0]), units.length_to_internal(b.center_m[1]));
    spec.phase = b.phase_rad;
    spec
}

impl Setup {
    pub fn new(config: &Config) -> RunResult<Self> {
        let c = config;
        let params = PhysicalParams {
            atomic_mass: c.physical.atomic_mass_kg,
            wavelength: c.physical.wavelength_m,
            atom_number: c.physical.atom_number,
            s_wave_coupling: (c.condensate.s_wave_coupling_j_m2 > 0.0).then_some(c.condensate.s_wave_coupling_j_m2),
            trap_freqs: c.physical.trap_freqs_hz,
            raman_detuning_from_line: c.physical.raman_detuning_hz,
        };
        let units = make_recoil_units(&params)?;
        let grid = Grid2D::new(
            c.grid.n_y as usize,
            c.grid.n_z as usize,
            units.length_to_internal(c.grid.extent_y_m),
            units.length_to_internal(c.grid.extent_z_m),
        )?;
        let trap = TrapSpec::from_hz(params.trap_freqs[1], params.trap_freqs[2], &units)?;
        let g2d = match params.s_wave_coupling {
            Some(g) => units.coupling_to_internal(g),
            None => g2d_for_radius(&trap, units.length_to_internal(c.condensate.tf_radius_y_m))?,
        };
        let mut ev = Evolution::new(trap, g2d, units.time_to_internal(c.dynamics.dt_s))?
            .with_edge_limit((c.dynamics.edge_limit > 0.0).then_some(c.dynamics.edge_limit));
        ev.step_limit = c.dynamics.step_limit_rad;
        Ok(Self {
            config: c.clone(),
            lg: beam(&c.beams.lg, &units),
            g_counter: beam(&c.beams.g_counter, &units),
            g_second: beam(&c.beams.g_second, &units),
            g_copropagating: beam(&c.beams.g_copropagating, &units),
            units,
            grid,
            trap,
            g2d,
            ev,
        })
    }

    pub fn ground_state(&self) -> RunResult<(GroundState, RelaxReport)> {
        let c = &self.config.condensate;
        let opts = RelaxOptions {
            dt: self.units.time_to_internal(c.relax_dt_s),
            tol: c.relax_tol,
            max_steps: c.relax_max_steps as usize,
            ..RelaxOptions::default()
        };
        Ok(prepare_ground_state(&self.trap, self.g2d, &self.grid, &opts)?)
    }

    pub fn initial_state(&self, ground: &GroundState) -> RunResult<LadderState> {
        Ok(LadderState::from_rest(ground.field.clone(), self.config.grid.n_max as u32)?)
    }

    fn beams_for(&self, p: &PulseConfig) -> (&BeamSpec, &BeamSpec) {
        if p.coupling == "g_g" {
            (&self.g_second, &self.g_counter)
        } else {
            (&self.lg, &self.g_counter)
        }
    }

    /// Coupling of pulse `p` at `peak_rate` with `extra_phase` added.
    pub fn coupling(&self, p: &PulseConfig, peak_rate: f64, extra_phase: f64) -> RunResult<CouplingMap> {
        let (a, b) = self.beams_for(p);
        Ok(coupling_map(a, b, peak_rate, p.phase_rad + extra_phase, &self.grid)?)
    }

    pub fn pulse(&self, index: usize, peak_rate: f64, extra_phase: f64) -> RunResult<PulseSpec> {
        let p = &self.config.sequence.pulses[index];
        let label = if p.label.is_empty() { format!("pulse{index}") } else { p.label.clone() };
        Ok(PulseSpec::new(
            Arc::new(self.coupling(p, peak_rate, extra_phase)?),
            p.delta_nu_over_nu_r,
            self.units.time_to_internal(p.duration_s),
        )?
        .with_label(label)
        .with_trap(p.trap_on))
    }

    /// The configured sequence at the given peak rates, with `phase` added to
    /// pulse `phase.0`.
    pub fn sequence(&self, rates: &[f64], phase: Option<(usize, f64)>) -> RunResult<SequenceSpec> {
        let pulses = (0..rates.len())
            .map(|i| {
                let extra = phase.filter(|p| p.0 == i).map_or(0.0, |p| p.1);
                self.pulse(i, rates[i], extra)
            })
            .collect::<RunResult<Vec<_>>>()?;
        let delays =
            self.config.sequence.pulses.iter().map(|p| self.units.time_to_internal(p.delay_after_s)).collect();
        Ok(SequenceSpec::new(pulses).with_delays(delays)?)
    }

    /// Calibrates the pulses in order, each on the state left by its
    /// predecessors (or on the ground state, if so configured).
    pub fn calibrate(&self, ground: &GroundState, start: &LadderState) -> RunResult<Vec<PulseCalibration>> {
        let mut state = start.clone();
        let mut out = Vec::new();
        for (i, p) in self.config.sequence.pulses.iter().enumerate() {
            let duration = self.units.time_to_internal(p.duration_s);
            let cal_state = if p.calibrate_on == "ground" {
                let mut s = LadderState::new(self.grid.clone(), state.orders())?;
                s.set_component(p.source_order as i32, ground.field.clone())?;
                s
            } else {
                state.clone()
            };
            let shape = self.coupling(p, 1.0, 0.0)?;
            let target = p.target_order as i32;
            let cal = match p.calibrate.as_str() {
                "fixed" => PulseCalibration {
                    peak_rate: self.units.rate_to_internal(p.peak_rabi_rad_s),
                    population: f64::NAN,
                    scan_max: f64::NAN,
                    evaluations: 0,
                },
                "fraction" => {
                    let pops = cal_state.populations();
                    let goal = pops.get(target) + p.transfer_fraction * pops.get(p.source_order as i32);
                    let c = calibrate_transfer_fraction(&cal_state, &shape, p.delta_nu_over_nu_r, duration, target, goal, &self.ev)?;
                    let scan_max = c.scan.iter().map(|s| s.1).fold(0.0, f64::max);
                    PulseCalibration { peak_rate: c.peak_rate, population: c.population, scan_max, evaluations: c.scan.len() }
                }
                _ => {
                    let c = calibrate_pi_pulse(&cal_state, &shape, p.delta_nu_over_nu_r, duration, target, &self.ev, &ScanOptions::default())?;
                    let scan_max = c.scan.iter().map(|s| s.1).fold(0.0, f64::max);
                    PulseCalibration { peak_rate: c.peak_rate, population: c.population, scan_max, evaluations: c.scan.len() }
                }
            };
            info!(
                "pulse {i}: peak rate {:.6e} rad/s ({:.4} π/T), target population {:.4}",
                self.units.rate_to_si(cal.peak_rate),
                cal.peak_rate * duration / PI,
                cal.population
            );
            state = evolve_pulse(&state, &self.pulse(i, cal.peak_rate, 0.0)?, &self.ev)?;
            if p.delay_after_s > 0.0 {
                state = oam_core::dynamics::free_evolution(
                    &state,
                    self.units.time_to_internal(p.delay_after_s),
                    p.trap_on,
                    &self.ev,
                )?;
            }
            out.push(cal);
        }
        Ok(out)
    }

    pub fn tof_options(&self) -> TofOptions {
        let im = &self.config.imaging;
        TofOptions {
            meanfield_window: self.units.time_to_internal(im.meanfield_window_s),
            g2d: self.g2d,
            pad_factor: im.pad_factor as usize,
            ..TofOptions::default()
        }
    }

    pub fn expand(&self, state: &LadderState) -> RunResult<LadderState> {
        let t = self.units.time_to_internal(self.config.imaging.tof_s);
        Ok(time_of_flight(state, t, &self.tof_options())?)
    }

    /// Absorption image of `orders` with the configured resampling, blur and
    /// noise.
    pub fn image(&self, state: &LadderState, orders: &[i32]) -> RunResult<ImagePlane> {
        let im = &self.config.imaging;
        let mode = match im.colocation.as_str() {
            "coherent" => Colocation::Coherent,
            "separated" => Colocation::Separated,
            _ => Colocation::Auto,
        };
        let pitch = (im.pixel_pitch_m > 0.0).then(|| self.units.length_to_internal(im.pixel_pitch_m));
        let mut img = absorption_image(state, orders, pitch, mode)?;
        if im.blur_m > 0.0 {
            img = img.blurred(self.units.length_to_internal(im.blur_m));
        }
        if im.noise_relative > 0.0 {
            img = img.with_noise(self.config.seed, im.noise_relative);
        }
        Ok(img)
    }

    /// Search annulus for holes in the image of `order`, scaled to that
    /// order's cloud radius.
    pub fn annulus(&self, state: &LadderState, order: i32) -> (f64, f64) {
        let r = state.component(order).map_or(0.0, |f| cloud_radius(state.grid(), &f.density()));
        let a = self.config.analysis.hole_annulus;
        (a[0] * r, a[1] * r)
    }

    fn loop_radius(&self) -> f64 {
        self.units.length_to_internal(self.config.analysis.loop_radius_m)
    }
}

fn order_name(n: i32) -> String {
    format!("order{n}")
}

/// Runs the configured scenario. With `out_dir` set, writes the bundle there.
pub fn run_scenario(config: &Config, out_dir: Option<&Path>) -> RunResult<Bundle> {
    let errors = crate::config::check(config);
    if !errors.is_empty() {
        return Err(RunError::Config(ConfigErrors(errors)));
    }
    let setup = Setup::new(config)?;
    let u = &setup.units;
    info!("scenario {}: g2d = {:.6e} (recoil units)", config.scenario.name(), setup.g2d);
    let (ground, relax) = setup.ground_state()?;
    info!("ground state: {} relaxation steps, μ = {:.6e} E_r", relax.steps, ground.chemical_potential);
    let start = setup.initial_state(&ground)?;
    let calibrations = setup.calibrate(&ground, &start)?;
    let rates: Vec<f64> = calibrations.iter().map(|c| c.peak_rate).collect();
    let seq = setup.sequence(&rates, None)?;
    let mut after = Vec::new();
    let (final_state, log) = run_sequence(&start, &seq, &setup.ev, |_, s| after.push(s.clone()))?;

    let mut reports = Vec::new();
    for (i, s) in after.iter().enumerate() {
        for (n, p) in s.populations().entries {
            if n != 0 && p > REPORT_FLOOR {
                let report = vortex_report(s.component(n).expect("listed order"), setup.loop_radius(), None)
                    .map_err(|e| e.guard_name().unwrap_or("error").to_string());
                reports.push(ReportRow { pulse: i, order: n, population: p, report });
            }
        }
    }

    let mut summary = Summary::default();
    summary.text("scenario", config.scenario.name());
    summary.int("schema_version", config.schema_version, "");
    summary.float("recoil_frequency", u.recoil_frequency, "Hz");
    summary.float("g2d", u.coupling_to_si(setup.g2d), "J m^2");
    summary.float("chemical_potential", u.energy_to_si(ground.chemical_potential), "J");
    summary.float("tf_radius_y", u.length_to_si(ground.tf_radii.0), "m");
    summary.float("tf_radius_z", u.length_to_si(ground.tf_radii.1), "m");
    summary.int("relax_steps", relax.steps as i64, "");
    for (i, c) in calibrations.iter().enumerate() {
        summary.float(format!("pulse{i}_peak_rabi"), u.rate_to_si(c.peak_rate), "rad/s");
        summary.float(format!("pulse{i}_calibrated_population"), c.population, "");
        summary.float(format!("pulse{i}_scan_max_population"), c.scan_max, "");
    }
    for (n, p) in final_state.populations().entries {
        summary.float(format!("P_{n}"), p, "");
    }
    summary.float("norm_drift", (final_state.populations().total - start.populations().total).abs(), "");

    let mut images = BTreeMap::new();
    let expanded = setup.expand(&final_state)?;
    for &n in &config.imaging.orders {
        let n = n as i32;
        images.insert(format!("tof_{}", order_name(n)), setup.image(&expanded, &[n])?);
    }

    let mut bundle = Bundle {
        config: config.clone(),
        units: *u,
        ground,
        relax,
        calibrations,
        log,
        final_state,
        reports,
        study: None,
        sweep: None,
        images,
        summary,
        out_dir: out_dir.map(Path::to_path_buf),
    };
    let analysis = Analysis { setup: &setup, after: &after, expanded: &expanded, rates: &rates };
    match config.scenario {
        Scenario::SingleVortex => analysis.single_vortex(&mut bundle)?,
        Scenario::CounterRotating => analysis.counter_rotating(&mut bundle)?,
        Scenario::PhaseCoherence => analysis.phase_coherence(&mut bundle)?,
        Scenario::DoubleCharge => analysis.double_charge(&mut bundle)?,
        Scenario::ResonanceSweep => analysis.resonance_sweep(&mut bundle)?,
        Scenario::Custom => {}
    }
    if let Some(dir) = out_dir {
        write_bundle(&bundle, &setup, dir)?;
    }
    Ok(bundle)
}

struct Analysis<'a> {
    setup: &'a Setup,
    after: &'a [LadderState],
    expanded: &'a LadderState,
    rates: &'a [f64],
}

fn report_summary(summary: &mut Summary, rows: &[ReportRow], pulse: usize, order: i32, units: &UnitSystem) {
    let tag = order_name(order);
    match rows.iter().find(|r| r.pulse == pulse && r.order == order).map(|r| &r.report) {
        Some(Ok(r)) => {
            summary.int(format!("winding_{tag}"), r.winding as i64, "");
            summary.float(format!("lz_{tag}"), r.l_z_expect, "hbar");
            summary.float(format!("core_y_{tag}"), units.length_to_si(r.core_location.0), "m");
            summary.float(format!("core_z_{tag}"), units.length_to_si(r.core_location.1), "m");
            summary.float(format!("winding_confidence_{tag}"), r.confidence, "");
        }
        Some(Err(g)) => summary.text(format!("winding_{tag}"), format!("failed:{g}")),
        None => summary.text(format!("winding_{tag}"), "not_populated"),
    }
}

impl Analysis<'_> {
    fn single_vortex(&self, b: &mut Bundle) -> RunResult<()> {
        let last = self.after.len() - 1;
        report_summary(&mut b.summary, &b.reports, last, 1, &b.units);
        let img = self.setup.image(self.expanded, &[1])?;
        let centre = img.sample(0.0, 0.0).unwrap_or(0.0);
        b.summary.float("vortex_center_fill", centre / img.max().max(f64::MIN_POSITIVE), "");
        b.images.insert("vortex_hole".into(), img);
        Ok(())
    }

    fn counter_rotating(&self, b: &mut Bundle) -> RunResult<()> {
        let s = self.expanded;
        for n in [-1, 1] {
            let img = self.setup.image(s, &[n])?;
            let f = RadialProfile::from_field(s.component(n).expect("ladder holds ±1"), (0.0, 0.0))?;
            let (chi, corr) = fit_pattern_angle(&img, 36, |x| {
                analytic_pattern(PatternKind::CounterRotating { relative_phase: x }, &f, &f, s.grid())
            })?;
            let tag = order_name(n);
            b.summary.float(format!("lobes_corr_{tag}"), corr, "");
            b.summary.float(format!("lobes_axis_{tag}"), 0.5 * chi, "rad");
            let model = analytic_pattern(PatternKind::CounterRotating { relative_phase: chi }, &f, &f, s.grid())?;
            b.images.insert(format!("lobes_{tag}"), img);
            b.images.insert(format!("lobes_model_{tag}"), model);
        }
        Ok(())
    }

    fn phase_coherence(&self, b: &mut Bundle) -> RunResult<()> {
        let setup = self.setup;
        let a = &setup.config.analysis;
        let which = a.phase_pulse as usize;
        let start = setup.initial_state(&b.ground)?;
        let phases: Vec<f64> = (0..a.phase_steps).map(|k| TAU * k as f64 / a.phase_steps as f64).collect();
        let pre_tof = Mutex::new(Vec::new());
        let study = phase_correlation_study(&phases, |theta| {
            let seq = setup.sequence(self.rates, Some((which, theta))).map_err(core_error)?;
            let (s, _) = run_sequence(&start, &seq, &setup.ev, |_, _| {})?;
            let pre = hole_angle(&setup.image(&s, &[1]).map_err(core_error)?, setup.annulus(&s, 1))?;
            let t = setup.expand(&s).map_err(core_error)?;
            let hole = hole_angle(&setup.image(&t, &[1]).map_err(core_error)?, setup.annulus(&t, 1))?;
            let (_, readout) = phase_readout_pattern(&setup.lg, &setup.g_copropagating, theta, &setup.grid)?;
            pre_tof.lock().expect("no panics while held").push((theta, pre));
            debug!("phase {theta:.4}: readout {readout:.4}, hole {hole:.4} (in trap {pre:.4})");
            Ok((readout, hole))
        })?;
        let pre_dev = pre_tof
            .into_inner()
            .expect("no panics while held")
            .iter()
            .map(|(theta, pre)| wrap_angle(pre - (PI - theta)).abs())
            .fold(0.0, f64::max);
        let s = &mut b.summary;
        s.int("phase_trials", study.rows.len() as i64, "");
        if let Some(f) = &study.hole_vs_phase {
            s.float("hole_slope", f.slope, "");
            s.float("hole_intercept", f.intercept.rem_euclid(TAU), "rad");
            s.float("hole_max_residual", f.max_abs_residual(), "rad");
        }
        if let Some(f) = &study.readout_vs_phase {
            s.float("readout_slope", f.slope, "");
        }
        if let Some(f) = &study.hole_vs_readout {
            s.float("hole_vs_readout_slope", f.slope, "");
        }
        s.float("hole_spread", study.hole_spread, "rad");
        s.float("in_trap_hole_max_deviation", pre_dev, "rad");

        // figure analogs for the configured phase
        let img = setup.image(self.expanded, &[1])?;
        let f = RadialProfile::from_field(self.expanded.component(1).expect("ladder holds 1"), (0.0, 0.0))?;
        let (theta, corr) = fit_pattern_angle(&img, 36, |x| {
            analytic_pattern(PatternKind::RotVsNonrot { theta: x }, &f, &f, self.expanded.grid())
        })?;
        s.float("offset_hole_model_theta", theta, "rad");
        s.float("offset_hole_model_corr", corr, "");
        b.images.insert("offset_hole_model".into(), analytic_pattern(PatternKind::RotVsNonrot { theta }, &f, &f, self.expanded.grid())?);
        b.images.insert("offset_hole".into(), img);
        let phase0 = setup.config.sequence.pulses[which].phase_rad;
        let (readout, _) = phase_readout_pattern(&setup.lg, &setup.g_copropagating, phase0, &setup.grid)?;
        b.images.insert("readout".into(), readout);
        b.study = Some(study);
        Ok(())
    }

    fn double_charge(&self, b: &mut Bundle) -> RunResult<()> {
        report_summary(&mut b.summary, &b.reports, 0, 1, &b.units);
        if self.after.len() < 2 {
            return Ok(());
        }
        report_summary(&mut b.summary, &b.reports, 1, 2, &b.units);
        let p1 = self.after[0].populations().get(1);
        let p2 = self.after[1].populations().get(2);
        b.summary.float("second_pulse_transfer", p2 / p1, "");
        let charged = self.setup.expand(&self.after[1])?;
        b.images.insert("double_hole".into(), self.setup.image(&charged, &[2])?);
        if self.after.len() < 3 {
            return Ok(());
        }
        let s = self.expanded;
        let img = self.setup.image(s, &[2])?;
        let minima = angular_minima(&img, self.setup.annulus(s, 2), 2)?;
        if minima.len() == 2 {
            b.summary.float("minima_separation", wrap_angle(minima[0] - minima[1]).abs(), "rad");
            b.summary.float("minimum_a", minima[0], "rad");
            b.summary.float("minimum_b", minima[1], "rad");
        }
        let f = RadialProfile::from_field(s.component(2).expect("ladder holds 2"), (0.0, 0.0))?;
        let (theta, corr) =
            fit_pattern_angle(&img, 36, |x| analytic_pattern(PatternKind::DoublyVsNonrot { theta: x }, &f, &f, s.grid()))?;
        b.summary.float("double_model_theta", theta, "rad");
        b.summary.float("double_model_corr", corr, "");
        b.images.insert("double_interference_model".into(), analytic_pattern(PatternKind::DoublyVsNonrot { theta }, &f, &f, s.grid())?);
        b.images.insert("double_interference".into(), img);
        Ok(())
    }

    fn resonance_sweep(&self, b: &mut Bundle) -> RunResult<()> {
        let setup = self.setup;
        let a = &setup.config.analysis;
        let k = a.sweep_pulse as usize;
        let before = if k == 0 { setup.initial_state(&b.ground)? } else { self.after[k - 1].clone() };
        let base = setup.pulse(k, self.rates[k], 0.0)?;
        let target = setup.config.sequence.pulses[k].target_order as i32;
        let n = a.sweep_points as usize;
        let detunings: Vec<f64> = (0..n)
            .map(|i| a.sweep_min_over_nu_r + (a.sweep_max_over_nu_r - a.sweep_min_over_nu_r) * i as f64 / (n - 1) as f64)
            .collect();
        let rows = par::map_indexed(n, |i| {
            let mut p = base.clone();
            p.delta_nu = detunings[i];
            evolve_pulse(&before, &p, &setup.ev).map(|s| s.populations())
        })
        .into_iter()
        .collect::<oam_core::Result<Vec<_>>>()?;
        let (best, peak) = rows
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.get(target)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("at least two points");
        // parabolic refinement of the peak position
        let mut peak_at = detunings[best];
        if best > 0 && best + 1 < n {
            let (ym, y0, yp) = (rows[best - 1].get(target), peak, rows[best + 1].get(target));
            let curv = ym + yp - 2.0 * y0;
            if curv < 0.0 {
                peak_at += 0.5 * (ym - yp) / curv * (detunings[1] - detunings[0]);
            }
        }
        let duration = setup.config.sequence.pulses[k].duration_s;
        let s = &mut b.summary;
        s.float("sweep_peak_delta_nu", peak_at, "nu_r");
        s.float("sweep_peak_population", peak, "");
        s.float("fourier_width", 1.0 / (duration * b.units.recoil_frequency), "nu_r");
        b.sweep = Some(SweepTable { target, detunings, rows });
        Ok(())
    }
}

fn core_error(e: RunError) -> oam_core::Error {
    match e {
        RunError::Core(e) => e,
        RunError::Io { source, .. } => oam_core::Error::Io(source),
        RunError::Config(c) => oam_core::Error::Degenerate(c.to_string()),
    }
}

/// Populations after the swept pulse at each detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub target: i32,
    pub detunings: Vec<f64>,
    pub rows: Vec<oam_core::Populations>,
}

fn write_text(path: &Path, text: &str) -> RunResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_bundle(b: &Bundle, setup: &Setup, dir: &Path) -> RunResult<()> {
    let u = &b.units;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_text(&dir.join("config.toml"), &crate::config::normalized_echo(&b.config))?;
    io::write_field(&dir.join("ground_order0.bin"), &b.ground.field, 0, u)?;
    if b.config.imaging.write_fields {
        for (n, p) in b.final_state.populations().entries {
            if p > 0.0 {
                let f = b.final_state.component(n).expect("listed order");
                io::write_field(&dir.join(format!("field_{}.bin", order_name(n))), f, n, u)?;
            }
        }
    }
    io::write_population_log(&dir.join("populations.csv"), &b.log, u)?;
    let mut reports = String::from("pulse,order,population,winding,lz_hbar,core_y_m,core_z_m,confidence,status\n");
    for r in &b.reports {
        match &r.report {
            Ok(v) => {
                let _ = writeln!(
                    reports,
                    "{},{},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},ok",
                    r.pulse,
                    r.order,
                    r.population,
                    v.winding,
                    v.l_z_expect,
                    u.length_to_si(v.core_location.0),
                    u.length_to_si(v.core_location.1),
                    v.confidence
                );
            }
            Err(g) => {
                let _ = writeln!(reports, "{},{},{:.17e},,,,,,{g}", r.pulse, r.order, r.population);
            }
        }
    }
    write_text(&dir.join("vortex_reports.csv"), &reports)?;
    for (name, img) in &b.images {
        io::write_pgm16(&dir.join(format!("{name}.pgm")), img, u)?;
    }
    if let Some(study) = &b.study {
        io::write_study_table(&dir.join("study.csv"), study)?;
    }
    if let Some(sweep) = &b.sweep {
        let orders: Vec<i32> = sweep.rows.first().map(|p| p.entries.iter().map(|e| e.0).collect()).unwrap_or_default();
        let mut s = String::from("delta_nu_over_nu_r");
        for n in &orders {
            let _ = write!(s, ",P_{n}");
        }
        s.push('\n');
        for (d, p) in sweep.detunings.iter().zip(&sweep.rows) {
            let _ = write!(s, "{d:.17e}");
            for (_, v) in &p.entries {
                let _ = write!(s, ",{v:.17e}");
            }
            s.push('\n');
        }
        write_text(&dir.join("resonance.csv"), &s)?;
    }
    if b.config.analysis.corkscrew {
        let p = b.config.sequence.pulses.iter().find(|p| p.coupling == "lg_g");
        let delta_nu = p.map_or(4.0, |p| p.delta_nu_over_nu_r);
        let volume = corkscrew_potential(
            &setup.lg,
            &setup.g_counter,
            delta_nu,
            0.0,
            b.config.analysis.corkscrew_slices as usize,
            &setup.grid,
        )?;
        io::write_corkscrew_stack(&dir.join("corkscrew"), &volume, u)?;
    }
    let path = dir.join("summary.csv");
    write_text(&path, &b.summary.to_csv())?;
    let mut side = String::new();
    let _ = writeln!(side, "format = \"oam-summary\"\nversion = 1\nscenario = \"{}\"", b.config.scenario.name());
    let _ = writeln!(side, "float_format = \"{{:.17e}}\"\n\n[units]");
    for (k, _, unit) in &b.summary.entries {
        let _ = writeln!(side, "{k} = \"{}\"", if unit.is_empty() { "1" } else { unit });
    }
    write_text(&io::sidecar_path(&path), &side)?;
    Ok(())
}
