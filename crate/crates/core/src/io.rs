//! File formats: binary field dumps, 16-bit graymaps, delimited tables, and
//! their TOML metadata sidecars (`<file>.toml` next to `<file>`).
//!
//! Field dump: `n_y·n_z` pairs of little-endian `f64` `(re, im)`, `y`
//! fastest, amplitude in m⁻¹. Graymaps are binary PGM (`P5`, maxval 65535,
//! big-endian samples); the top row is the largest `z`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::PhaseStudy;
use crate::dynamics::PopulationLog;
use crate::field::TransverseField;
use crate::grid::Grid2D;
use crate::image::ImagePlane;
use crate::optics::CorkscrewVolume;
use crate::units::UnitSystem;
use crate::{Error, Result};

pub const FIELD_FORMAT: &str = "oam-field-dump";
pub const IMAGE_FORMAT: &str = "oam-pgm16";

/// Path of the sidecar belonging to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

fn write_sidecar<T: Serialize>(path: &Path, meta: &T) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| format_err(path, e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

fn read_sidecar<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)?;
    toml::from_str(&text).map_err(|e| format_err(&side, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format: String,
    pub version: u32,
    pub encoding: String,
    pub n_y: usize,
    pub n_z: usize,
    pub extent_y_m: f64,
    pub extent_z_m: f64,
    pub amplitude_unit: String,
    /// Momentum order of the component (`n·2ħk`).
    pub order: i32,
}

pub fn write_field(path: &Path, field: &TransverseField, order: i32, units: &UnitSystem) -> Result<()> {
    let grid = field.grid();
    let mut bytes = Vec::with_capacity(16 * grid.len());
    for v in field.values() {
        bytes.extend_from_slice(&units.amplitude_to_si(v.re).to_le_bytes());
        bytes.extend_from_slice(&units.amplitude_to_si(v.im).to_le_bytes());
    }
    let meta = FieldMeta {
        format: FIELD_FORMAT.into(),
        version: 1,
        encoding: "f64 little-endian (re, im) pairs, y fastest".into(),
        n_y: grid.n_y(),
        n_z: grid.n_z(),
        extent_y_m: units.length_to_si(grid.extent_y()),
        extent_z_m: units.length_to_si(grid.extent_z()),
        amplitude_unit: "1/m".into(),
        order,
    };
    write_sidecar(path, &meta)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a dump on a fresh grid built from the sidecar.
pub fn read_field(path: &Path, units: &UnitSystem) -> Result<(TransverseField, FieldMeta)> {
    let meta: FieldMeta = read_sidecar(path)?;
    if meta.format != FIELD_FORMAT || meta.version != 1 {
        return Err(format_err(path, format!("unsupported format {} v{}", meta.format, meta.version)));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != 16 * meta.n_y * meta.n_z {
        return Err(format_err(path, format!("expected {} bytes, found {}", 16 * meta.n_y * meta.n_z, bytes.len())));
    }
    let grid = Grid2D::new(
        meta.n_y,
        meta.n_z,
        units.length_to_internal(meta.extent_y_m),
        units.length_to_internal(meta.extent_z_m),
    )?;
    let word = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let values = bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(units.amplitude_to_internal(word(&c[..8])), units.amplitude_to_internal(word(&c[8..]))))
        .collect();
    Ok((TransverseField::from_values(grid, values)?, meta))
}

/// Reads a dump onto an existing grid, checking that the shapes agree.
pub fn read_field_on(path: &Path, grid: &Arc<Grid2D>, units: &UnitSystem) -> Result<(TransverseField, FieldMeta)> {
    let (f, meta) = read_field(path, units)?;
    let same = f.grid().n_y() == grid.n_y()
        && f.grid().n_z() == grid.n_z()
        && (f.grid().extent_y() / grid.extent_y() - 1.0).abs() < 1e-9
        && (f.grid().extent_z() / grid.extent_z() - 1.0).abs() < 1e-9;
    if !same {
        return Err(Error::DimensionMismatch { expected: format!("{grid:?}"), found: format!("{:?}", f.grid()) });
    }
    Ok((TransverseField::from_values(grid.clone(), f.into_values())?, meta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub format: String,
    pub version: u32,
    pub label: String,
    pub n_y: usize,
    pub n_z: usize,
    pub pitch_m: f64,
    /// Pixel value represented by one gray level.
    pub value_per_count: f64,
    pub orientation: String,
}

/// Writes `image` as a 16-bit PGM scaled so its maximum maps to 65535.
pub fn write_pgm16(path: &Path, image: &ImagePlane, units: &UnitSystem) -> Result<()> {
    let max = image.max();
    let per_count = if max > 0.0 { max / 65535.0 } else { 1.0 };
    write_pgm16_scaled(path, image, per_count)?;
    write_sidecar(
        path,
        &ImageMeta {
            format: IMAGE_FORMAT.into(),
            version: 1,
            label: image.label.clone(),
            n_y: image.n_y(),
            n_z: image.n_z(),
            pitch_m: units.length_to_si(image.pitch()),
            value_per_count: per_count,
            orientation: "columns: y increasing; rows: z decreasing (top row is largest z)".into(),
        },
    )
}

fn write_pgm16_scaled(path: &Path, image: &ImagePlane, per_count: f64) -> Result<()> {
    let (n_y, n_z) = (image.n_y(), image.n_z());
    let mut out = format!("P5\n{n_y} {n_z}\n65535\n").into_bytes();
    out.reserve(2 * n_y * n_z);
    for iz in (0..n_z).rev() {
        for iy in 0..n_y {
            let v = (image.pixels()[iz * n_y + iy] / per_count).round().clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

/// Reads a 16-bit binary PGM: `(width, height, samples in file order)`.
pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(format_err(path, "not a binary graymap"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| format_err(path, format!("bad header field {s}")));
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 65535 {
        return Err(format_err(path, "expected maxval 65535"));
    }
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() != 2 * w * h {
        return Err(format_err(path, "pixel data length mismatch"));
    }
    Ok((w, h, data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

/// Population log as CSV: one row per pulse.
pub fn write_population_log(path: &Path, log: &PopulationLog, units: &UnitSystem) -> Result<()> {
    let mut s = String::from("pulse,label,delta_nu_over_nu_r,duration_s");
    let orders: Vec<i32> = log.rows.first().map(|r| r.populations.entries.iter().map(|e| e.0).collect()).unwrap_or_default();
    for n in &orders {
        let _ = write!(s, ",P_{n}");
    }
    s.push_str(",total\n");
    for r in &log.rows {
        let _ = write!(s, "{},{},{:.17e},{:.17e}", r.pulse, r.label, r.delta_nu, units.time_to_si(r.duration));
        for (_, p) in &r.populations.entries {
            let _ = write!(s, ",{p:.17e}");
        }
        let _ = writeln!(s, ",{:.17e}", r.populations.total);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Phase-study table as CSV.
pub fn write_study_table(path: &Path, study: &PhaseStudy) -> Result<()> {
    let mut s = String::from("trial,beam_phase_rad,readout_angle_rad,hole_angle_rad\n");
    for r in &study.rows {
        let _ = writeln!(s, "{},{:.17e},{:.17e},{:.17e}", r.trial, r.beam_phase, r.readout_angle, r.hole_angle);
    }
    fs::write(path, s)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackMeta {
    pub format: String,
    pub version: u32,
    pub slices: Vec<String>,
    pub x_m: Vec<f64>,
    pub pitch_m: f64,
    pub value_per_count: f64,
}

/// Corkscrew render as `slice_NNN.pgm` files in `dir` with a shared gray
/// scale, described by `dir/corkscrew.toml`.
pub fn write_corkscrew_stack(dir: &Path, volume: &CorkscrewVolume, units: &UnitSystem) -> Result<()> {
    fs::create_dir_all(dir)?;
    let max = volume.max();
    let per_count = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let mut names = Vec::new();
    for (i, slice) in volume.slices.iter().enumerate() {
        let name = format!("slice_{i:03}.pgm");
        let img = ImagePlane::from_grid_density(&volume.grid, slice.clone(), format!("x slice {i}"))?;
        write_pgm16_scaled(&dir.join(&name), &img, per_count)?;
        names.push(name);
    }
    let pitch = volume.grid.dy().min(volume.grid.dz());
    let meta = StackMeta {
        format: "oam-pgm16-stack".into(),
        version: 1,
        slices: names,
        x_m: volume.x.iter().map(|x| units.length_to_si(*x)).collect(),
        pitch_m: units.length_to_si(pitch),
        value_per_count: per_count,
    };
    let text = toml::to_string(&meta).map_err(|e| format_err(dir, e.to_string()))?;
    fs::write(dir.join("corkscrew.toml"), text)?;
    Ok(())
}
