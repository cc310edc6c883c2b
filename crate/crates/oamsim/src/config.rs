//! Experiment configuration: a versioned TOML schema whose physical keys carry
//! their unit as a suffix (`_s`, `_m`, `_hz`, `_kg`, `_rad`, `_rad_s`, `_w`,
//! `_j_m2`, `_over_nu_r`).
//!
//! Validation walks the parsed document against the fully defaulted
//! configuration, so every accepted key and its type come from one place,
//! and reports every problem at once with its key path.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleVortex,
    CounterRotating,
    PhaseCoherence,
    DoubleCharge,
    ResonanceSweep,
    Custom,
}

impl Scenario {
    pub const NAMES: [&'static str; 6] =
        ["single_vortex", "counter_rotating", "phase_coherence", "double_charge", "resonance_sweep", "custom"];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SingleVortex => "single_vortex",
            Scenario::CounterRotating => "counter_rotating",
            Scenario::PhaseCoherence => "phase_coherence",
            Scenario::DoubleCharge => "double_charge",
            Scenario::ResonanceSweep => "resonance_sweep",
            Scenario::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub schema_version: i64,
    pub scenario: Scenario,
    /// Seed for the optional image noise.
    pub seed: u64,
    pub output_dir: String,
    pub physical: PhysicalConfig,
    pub grid: GridConfig,
    pub condensate: CondensateConfig,
    pub beams: BeamsConfig,
    pub dynamics: DynamicsConfig,
    pub sequence: SequenceConfig,
    pub imaging: ImagingConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConfig {
    pub atomic_mass_kg: f64,
    pub wavelength_m: f64,
    /// Bookkeeping only: fields are normalized to one.
    pub atom_number: f64,
    /// `(ν_x, ν_y, ν_z)`.
    pub trap_freqs_hz: [f64; 3],
    /// Single-photon detuning; bookkeeping only.
    pub raman_detuning_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_y: i64,
    pub n_z: i64,
    pub extent_y_m: f64,
    pub extent_z_m: f64,
    /// Ladder truncation: orders `−n_max..=n_max`.
    pub n_max: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CondensateConfig {
    /// Thomas-Fermi radius along `y` that fixes the 2D coupling.
    pub tf_radius_y_m: f64,
    /// Explicit 2D coupling; overrides `tf_radius_y_m` when positive.
    pub s_wave_coupling_j_m2: f64,
    pub relax_dt_s: f64,
    pub relax_tol: f64,
    pub relax_max_steps: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    /// `laguerre_gauss` or `gaussian`.
    pub kind: String,
    pub l: i64,
    pub waist_m: f64,
    /// Bookkeeping only: Rabi rates are calibrated, not derived from power.
    pub power_w: f64,
    pub center_m: [f64; 2],
    pub phase_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamsConfig {
    /// Laguerre-Gaussian beam of the LG/G pair.
    pub lg: BeamConfig,
    /// Counter-propagating Gaussian shared by both pairs.
    pub g_counter: BeamConfig,
    /// Gaussian replacing the LG beam in G/G pulses.
    pub g_second: BeamConfig,
    /// Co-propagating Gaussian for the optical phase readout.
    pub g_copropagating: BeamConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    pub dt_s: f64,
    pub step_limit_rad: f64,
    /// Edge-order population guard; zero disables it.
    pub edge_limit: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub pulses: Vec<PulseConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseConfig {
    pub label: String,
    /// `lg_g` or `g_g`.
    pub coupling: String,
    pub delta_nu_over_nu_r: f64,
    pub duration_s: f64,
    /// `pi` (maximize the target population), `fraction` or `fixed`.
    pub calibrate: String,
    /// Share of the source order moved into the target order (`fraction`).
    pub transfer_fraction: f64,
    pub source_order: i64,
    pub target_order: i64,
    /// Calibrate on the `current` state or on the `ground` state placed in
    /// `source_order`.
    pub calibrate_on: String,
    /// Peak two-photon Rabi rate for `fixed` pulses.
    pub peak_rabi_rad_s: f64,
    /// Relative optical phase added to the coupling.
    pub phase_rad: f64,
    pub trap_on: bool,
    pub delay_after_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingConfig {
    pub tof_s: f64,
    /// Initial interval with interactions; clipped to `tof_s`.
    pub meanfield_window_s: f64,
    pub pad_factor: i64,
    /// Output pixel pitch; zero keeps the simulation grid.
    pub pixel_pitch_m: f64,
    pub blur_m: f64,
    /// Seeded Gaussian noise, relative to the image maximum; zero disables.
    pub noise_relative: f64,
    pub orders: Vec<i64>,
    /// `auto`, `coherent` or `separated`.
    pub colocation: String,
    pub write_fields: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub loop_radius_m: f64,
    /// Hole search annulus as fractions of the cloud radius.
    pub hole_annulus: [f64; 2],
    pub phase_steps: i64,
    /// Pulse receiving the scanned beam phase.
    pub phase_pulse: i64,
    pub sweep_pulse: i64,
    pub sweep_min_over_nu_r: f64,
    pub sweep_max_over_nu_r: f64,
    pub sweep_points: i64,
    pub corkscrew: bool,
    pub corkscrew_slices: i64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: Scenario::Custom,
            seed: 0,
            output_dir: "out".into(),
            physical: PhysicalConfig::default(),
            grid: GridConfig::default(),
            condensate: CondensateConfig::default(),
            beams: BeamsConfig::default(),
            dynamics: DynamicsConfig::default(),
            sequence: SequenceConfig::default(),
            imaging: ImagingConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            atomic_mass_kg: 3.8175e-26,
            wavelength_m: 589.0e-9,
            atom_number: 1.5e6,
            trap_freqs_hz: [20.0, 40.0 / 2f64.sqrt(), 40.0],
            raman_detuning_hz: -1.5e9,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_y: 256, n_z: 256, extent_y_m: 160e-6, extent_z_m: 160e-6, n_max: 3 }
    }
}

impl Default for CondensateConfig {
    fn default() -> Self {
        Self { tf_radius_y_m: 30e-6, s_wave_coupling_j_m2: 0.0, relax_dt_s: 3e-6, relax_tol: 1e-11, relax_max_steps: 200_000 }
    }
}

impl BeamConfig {
    fn gaussian(waist: f64) -> Self {
        Self { kind: "gaussian".into(), l: 0, waist_m: waist, power_w: 0.0, center_m: [0.0; 2], phase_rad: 0.0 }
    }
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self::gaussian(175e-6)
    }
}

impl Default for BeamsConfig {
    fn default() -> Self {
        Self {
            lg: BeamConfig { kind: "laguerre_gauss".into(), l: 1, ..BeamConfig::gaussian(85e-6) },
            g_counter: BeamConfig::gaussian(175e-6),
            g_second: BeamConfig::gaussian(200e-6),
            g_copropagating: BeamConfig::gaussian(200e-6),
        }
    }
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { dt_s: 1e-6, step_limit_rad: 0.1, edge_limit: 1e-3 }
    }
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            coupling: "lg_g".into(),
            delta_nu_over_nu_r: 4.0,
            duration_s: 130e-6,
            calibrate: "pi".into(),
            transfer_fraction: 0.5,
            source_order: 0,
            target_order: 1,
            calibrate_on: "current".into(),
            peak_rabi_rad_s: 0.0,
            phase_rad: 0.0,
            trap_on: true,
            delay_after_s: 0.0,
        }
    }
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self {
            tof_s: 6e-3,
            meanfield_window_s: 0.5e-3,
            pad_factor: 2,
            pixel_pitch_m: 0.0,
            blur_m: 0.0,
            noise_relative: 0.0,
            orders: vec![0, 1],
            colocation: "auto".into(),
            write_fields: true,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            loop_radius_m: 8e-6,
            hole_annulus: [0.1, 0.7],
            phase_steps: 18,
            phase_pulse: 0,
            sweep_pulse: 0,
            sweep_min_over_nu_r: 2.0,
            sweep_max_over_nu_r: 6.0,
            sweep_points: 17,
            corkscrew: false,
            corkscrew_slices: 16,
        }
    }
}

/// One schema violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Every problem found in a configuration document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), message: message.into() }
}

/// Allowed values of the string-valued enumerations, by key name.
fn choices(key: &str) -> Option<&'static [&'static str]> {
    match key {
        "scenario" => Some(&Scenario::NAMES),
        "kind" => Some(&["laguerre_gauss", "gaussian"]),
        "coupling" => Some(&["lg_g", "g_g"]),
        "calibrate" => Some(&["pi", "fraction", "fixed"]),
        "calibrate_on" => Some(&["current", "ground"]),
        "colocation" => Some(&["auto", "coherent", "separated"]),
        _ => None,
    }
}

/// Closest candidate by normalized Levenshtein similarity, if any is close.
fn suggest<'a>(word: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .map(|c| (strsim::normalized_levenshtein(word, c), c))
        .filter(|(s, _)| *s >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Template for the elements of an array of tables, keyed by path.
fn element_template(path: &str) -> Option<Value> {
    match path {
        "sequence.pulses" => Value::try_from(PulseConfig::default()).ok(),
        _ => None,
    }
}

/// Checks `doc` against `template`, widening integers to floats where the
/// template holds a float. Offending entries are removed so the rest of the
/// document can still be checked against the defaults.
fn walk(doc: &mut Table, template: &Table, prefix: &str, errors: &mut Vec<ConfigError>) {
    let keys: Vec<String> = doc.keys().cloned().collect();
    for key in keys {
        let path = join(prefix, &key);
        let Some(expected) = template.get(&key) else {
            let hint = suggest(&key, template.keys().map(String::as_str))
                .map(|s| format!("; did you mean `{}`?", join(prefix, s)))
                .unwrap_or_default();
            errors.push(err(&path, format!("unknown key{hint}")));
            doc.remove(&key);
            continue;
        };
        let value = doc.get_mut(&key).expect("key listed above");
        if !check_value(value, expected, &path, &key, errors) {
            doc.remove(&key);
        }
    }
}

/// Returns whether `value` may be kept.
fn check_value(value: &mut Value, expected: &Value, path: &str, key: &str, errors: &mut Vec<ConfigError>) -> bool {
    match (expected, &mut *value) {
        (Value::Table(t), Value::Table(d)) => {
            walk(d, t, path, errors);
            true
        }
        (Value::Float(_), Value::Integer(i)) => {
            *value = Value::Float(*i as f64);
            true
        }
        (Value::Float(_), Value::Float(f)) if !f.is_finite() => {
            errors.push(err(path, "must be finite"));
            false
        }
        (Value::String(_), Value::String(s)) => match choices(key) {
            Some(options) if !options.contains(&s.as_str()) => {
                let hint = suggest(s, options.iter().copied()).map(|c| format!("; did you mean `{c}`?")).unwrap_or_default();
                errors.push(err(path, format!("`{s}` is not one of {}{hint}", options.join(", "))));
                false
            }
            _ => true,
        },
        (Value::Array(t), Value::Array(items)) => {
            let element = element_template(path).or_else(|| t.first().cloned());
            let mut ok = true;
            if let Some(element) = element {
                for (i, item) in items.iter_mut().enumerate() {
                    ok &= check_value(item, &element, &format!("{path}[{i}]"), key, errors);
                }
            }
            ok
        }
        (e, v) if std::mem::discriminant(e) == std::mem::discriminant(v) => true,
        (e, v) => {
            errors.push(err(path, format!("expected {}, found {}", type_name(e), type_name(v))));
            false
        }
    }
}

/// Parses and validates a configuration document. On failure, every problem
/// found is reported.
pub fn parse_config(text: &str) -> Result<Config, ConfigErrors> {
    let mut doc: Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![err("", format!("not valid TOML: {}", e.message().trim()))])
    })?;
    let mut errors = Vec::new();
    match doc.get("schema_version") {
        None => errors.push(err("schema_version", "missing; this reader understands version 1")),
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(v) => errors.push(err("schema_version", format!("unsupported version {v}; expected {SCHEMA_VERSION}"))),
    }
    let template = match Value::try_from(Config::default()) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("the default configuration serializes to a table"),
    };
    walk(&mut doc, &template, "", &mut errors);
    let config: Config = match Value::Table(doc).try_into() {
        Ok(c) => c,
        Err(e) => {
            let e: toml::de::Error = e;
            errors.push(err("", e.message().trim().to_string()));
            return Err(ConfigErrors(errors));
        }
    };
    errors.extend(check(&config));
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<Config, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    parse_config(&text).map_err(LoadError::Schema)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Schema(ConfigErrors),
}

/// The fully defaulted configuration as TOML; parsing it gives `config` back.
pub fn normalized_echo(config: &Config) -> String {
    let Ok(Value::Table(t)) = Value::try_from(config) else {
        unreachable!("the configuration serializes to a table")
    };
    let mut out = String::new();
    emit(&t, "", &mut out);
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Float(x) if *x != 0.0 && !(1e-3..1e7).contains(&x.abs()) => format!("{x:e}"),
        Value::Float(x) => format!("{x:?}"),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn is_table_array(v: &Value) -> bool {
    matches!(v, Value::Array(a) if a.first().is_some_and(Value::is_table))
}

/// TOML writer that keeps small and large floats in exponent notation.
fn emit(t: &Table, prefix: &str, out: &mut String) {
    use std::fmt::Write as _;
    for (k, v) in t {
        if !v.is_table() && !is_table_array(v) {
            let _ = writeln!(out, "{k} = {}", scalar(v));
        }
    }
    for (k, v) in t {
        let path = join(prefix, k);
        match v {
            Value::Table(sub) => {
                if sub.values().any(|v| !v.is_table()) {
                    let _ = writeln!(out, "\n[{path}]");
                }
                emit(sub, &path, out);
            }
            Value::Array(items) if is_table_array(v) => {
                for item in items {
                    let _ = writeln!(out, "\n[[{path}]]");
                    if let Value::Table(sub) = item {
                        emit(sub, &path, out);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Value checks on a structurally valid configuration.
pub fn check(c: &Config) -> Vec<ConfigError> {
    let mut e = Vec::new();
    let mut positive = |path: &str, v: f64| {
        if !(v > 0.0) {
            e.push(err(path, format!("must be positive, got {v}")));
        }
    };
    positive("physical.atomic_mass_kg", c.physical.atomic_mass_kg);
    positive("physical.wavelength_m", c.physical.wavelength_m);
    positive("physical.atom_number", c.physical.atom_number);
    positive("grid.extent_y_m", c.grid.extent_y_m);
    positive("grid.extent_z_m", c.grid.extent_z_m);
    positive("condensate.relax_dt_s", c.condensate.relax_dt_s);
    positive("condensate.relax_tol", c.condensate.relax_tol);
    positive("dynamics.dt_s", c.dynamics.dt_s);
    positive("dynamics.step_limit_rad", c.dynamics.step_limit_rad);
    positive("analysis.loop_radius_m", c.analysis.loop_radius_m);
    for (name, b) in [
        ("lg", &c.beams.lg),
        ("g_counter", &c.beams.g_counter),
        ("g_second", &c.beams.g_second),
        ("g_copropagating", &c.beams.g_copropagating),
    ] {
        positive(&format!("beams.{name}.waist_m"), b.waist_m);
    }
    for (i, p) in c.sequence.pulses.iter().enumerate() {
        positive(&format!("sequence.pulses[{i}].duration_s"), p.duration_s);
        if p.calibrate == "fixed" {
            positive(&format!("sequence.pulses[{i}].peak_rabi_rad_s"), p.peak_rabi_rad_s);
        }
    }
    if c.condensate.s_wave_coupling_j_m2 <= 0.0 {
        positive("condensate.tf_radius_y_m", c.condensate.tf_radius_y_m);
    }
    if c.condensate.s_wave_coupling_j_m2 < 0.0 {
        e.push(err("condensate.s_wave_coupling_j_m2", "must not be negative"));
    }
    for (i, f) in c.physical.trap_freqs_hz.iter().enumerate() {
        if !(*f >= 0.0) {
            e.push(err(&format!("physical.trap_freqs_hz[{i}]"), "must not be negative"));
        }
    }
    for (path, n) in [("grid.n_y", c.grid.n_y), ("grid.n_z", c.grid.n_z)] {
        if n < 4 || (n as u64).count_ones() != 1 {
            e.push(err(path, format!("must be a power of two >= 4, got {n}")));
        }
    }
    if !(1..=7).contains(&c.grid.n_max) {
        e.push(err("grid.n_max", format!("must lie in 1..=7, got {}", c.grid.n_max)));
    }
    if c.condensate.relax_max_steps < 1 {
        e.push(err("condensate.relax_max_steps", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&c.dynamics.edge_limit) {
        e.push(err("dynamics.edge_limit", "must lie in [0, 1)"));
    }
    for (name, b) in [
        ("lg", &c.beams.lg),
        ("g_counter", &c.beams.g_counter),
        ("g_second", &c.beams.g_second),
        ("g_copropagating", &c.beams.g_copropagating),
    ] {
        if b.kind == "laguerre_gauss" && !(1..=2).contains(&b.l.abs()) {
            e.push(err(&format!("beams.{name}.l"), "LG charge must satisfy 1 <= |l| <= 2"));
        }
        if b.power_w < 0.0 {
            e.push(err(&format!("beams.{name}.power_w"), "must not be negative"));
        }
    }
    let n_max = c.grid.n_max;
    let pulses = c.sequence.pulses.len() as i64;
    for (i, p) in c.sequence.pulses.iter().enumerate() {
        let path = |k: &str| format!("sequence.pulses[{i}].{k}");
        if p.delay_after_s < 0.0 {
            e.push(err(&path("delay_after_s"), "must not be negative"));
        }
        if p.calibrate == "fraction" && !(p.transfer_fraction > 0.0 && p.transfer_fraction < 1.0) {
            e.push(err(&path("transfer_fraction"), "must lie in (0, 1)"));
        }
        for (k, n) in [("source_order", p.source_order), ("target_order", p.target_order)] {
            if n.abs() > n_max {
                e.push(err(&path(k), format!("order {n} outside the ladder ±{n_max}")));
            }
        }
    }
    let im = &c.imaging;
    if im.tof_s < 0.0 {
        e.push(err("imaging.tof_s", "must not be negative"));
    }
    if im.meanfield_window_s < 0.0 {
        e.push(err("imaging.meanfield_window_s", "must not be negative"));
    }
    if !(1..=8).contains(&im.pad_factor) {
        e.push(err("imaging.pad_factor", "must lie in 1..=8"));
    }
    for (k, v) in [("pixel_pitch_m", im.pixel_pitch_m), ("blur_m", im.blur_m), ("noise_relative", im.noise_relative)] {
        if v < 0.0 {
            e.push(err(&format!("imaging.{k}"), "must not be negative"));
        }
    }
    if im.orders.is_empty() {
        e.push(err("imaging.orders", "select at least one order"));
    }
    for (i, n) in im.orders.iter().enumerate() {
        if n.abs() > n_max {
            e.push(err(&format!("imaging.orders[{i}]"), format!("order {n} outside the ladder ±{n_max}")));
        }
    }
    let a = &c.analysis;
    if !(a.hole_annulus[0] >= 0.0 && a.hole_annulus[1] > a.hole_annulus[0]) {
        e.push(err("analysis.hole_annulus", "need 0 <= inner < outer"));
    }
    if a.corkscrew && a.corkscrew_slices < 8 {
        e.push(err("analysis.corkscrew_slices", "need at least 8 slices"));
    }
    let need_pulse = |e: &mut Vec<ConfigError>, key: &str, index: i64| {
        if !(0..pulses).contains(&index) {
            e.push(err(key, format!("pulse index {index} outside the sequence of {pulses} pulse(s)")));
        }
    };
    match c.scenario {
        Scenario::SingleVortex | Scenario::CounterRotating | Scenario::DoubleCharge => {
            if pulses == 0 {
                e.push(err("sequence.pulses", format!("scenario {} needs at least one pulse", c.scenario.name())));
            }
        }
        Scenario::PhaseCoherence => {
            need_pulse(&mut e, "analysis.phase_pulse", a.phase_pulse);
            if a.phase_steps < 3 {
                e.push(err("analysis.phase_steps", "need at least 3 phases"));
            }
        }
        Scenario::ResonanceSweep => {
            need_pulse(&mut e, "analysis.sweep_pulse", a.sweep_pulse);
            if a.sweep_points < 2 {
                e.push(err("analysis.sweep_points", "need at least 2 points"));
            }
            if !(a.sweep_max_over_nu_r > a.sweep_min_over_nu_r) {
                e.push(err("analysis.sweep_max_over_nu_r", "must exceed sweep_min_over_nu_r"));
            }
        }
        Scenario::Custom => {}
    }
    e
}
