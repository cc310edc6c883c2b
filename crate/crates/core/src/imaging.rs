//! Release from the trap, time of flight, synthetic absorption images and the
//! analytic interference patterns they are compared against.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::field::{LadderState, TransverseField};
use crate::grid::Grid2D;
use crate::image::ImagePlane;
use crate::par;
use crate::spectral::{apply_diagonal_in_k, kinetic_factors};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TofOptions {
    /// Initial interval (internal time) integrated with the meanfield.
    pub meanfield_window: f64,
    pub g2d: f64,
    /// Split-step size during the meanfield window.
    pub dt: f64,
    /// Linear zero-padding factor applied before the ballistic stage.
    pub pad_factor: usize,
    /// Components holding less than this population skip the meanfield stage.
    pub active_floor: f64,
    /// Largest norm fraction tolerated in the outer band of the padded grid.
    pub boundary_limit: f64,
}

impl TofOptions {
    pub fn ballistic() -> Self {
        Self { meanfield_window: 0.0, g2d: 0.0, ..Self::default() }
    }
}

impl Default for TofOptions {
    fn default() -> Self {
        Self {
            meanfield_window: 0.0,
            g2d: 0.0,
            dt: 1.0,
            pad_factor: 2,
            active_floor: 1e-6,
            boundary_limit: 1e-4,
        }
    }
}

/// Expands every order for time `t` with the trap off. The optional meanfield
/// window runs first on the original grid; the state is then zero-padded and
/// propagated exactly by `exp(−ik²(t − window))`. Returns the state on the
/// padded grid.
pub fn time_of_flight(state: &LadderState, t: f64, opts: &TofOptions) -> Result<LadderState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("tof", "time of flight must be finite and >= 0"));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let window = opts.meanfield_window.clamp(0.0, t);
    let mut current = state.clone();
    if window > 0.0 && opts.g2d > 0.0 {
        current = meanfield_expansion(&current, window, opts)?;
        check_boundary(&current, opts.boundary_limit, opts.pad_factor)?;
    } else if window > 0.0 {
        current = ballistic(&current, window)?;
    }

    let big = state.grid().padded(opts.pad_factor)?;
    let padded: Vec<TransverseField> = current
        .components()
        .iter()
        .map(|c| TransverseField::from_values(big.clone(), state.grid().embed(c.values(), &big)?))
        .collect::<Result<_>>()?;
    let mut out = LadderState::from_components(state.min_order(), padded)?;
    out = ballistic(&out, t - window)?;
    check_boundary(&out, opts.boundary_limit, 2 * opts.pad_factor)?;
    out.set_tof_time(state.tof_time() + t);
    Ok(out)
}

fn ballistic(state: &LadderState, t: f64) -> Result<LadderState> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid_ref().clone();
    let f = kinetic_factors(&grid, Complex64::new(0.0, t));
    let mut out = state.clone();
    let mut cols = out.raw_columns();
    for c in cols.iter_mut().filter(|c| c.iter().any(|v| *v != Complex64::new(0.0, 0.0))) {
        apply_diagonal_in_k(&grid, c, &f);
    }
    out.restore_columns(cols);
    Ok(out)
}

fn meanfield_expansion(state: &LadderState, window: f64, opts: &TofOptions) -> Result<LadderState> {
    if !(opts.dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let grid = state.grid_ref().clone();
    let pops = state.populations();
    let active: Vec<bool> = state.orders().map(|n| pops.get(n) >= opts.active_floor).collect();
    let steps = ((window / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = window / steps as f64;
    let half = kinetic_factors(&grid, Complex64::new(0.0, 0.5 * h));
    let full = kinetic_factors(&grid, Complex64::new(0.0, h));
    let g2d = opts.g2d;

    let mut out = state.clone();
    let all = out.raw_columns();
    let (mut act, mut idle): (Vec<_>, Vec<_>) = all.into_iter().enumerate().partition(|(i, _)| active[*i]);
    let mut cols: Vec<Vec<Complex64>> = act.iter_mut().map(|(_, c)| std::mem::take(c)).collect();
    for c in cols.iter_mut() {
        apply_diagonal_in_k(&grid, c, &half);
    }
    for s in 0..steps {
        par::for_each_chunk_group_mut(&mut cols, par::CHUNK, |_, group| {
            let len = group.first().map_or(0, |g| g.len());
            for i in 0..len {
                let rho: f64 = group.iter().map(|g| g[i].norm_sqr()).sum();
                let p = Complex64::from_polar(1.0, -h * g2d * rho);
                group.iter_mut().for_each(|g| g[i] *= p);
            }
        });
        let f = if s + 1 == steps { &half } else { &full };
        for c in cols.iter_mut() {
            apply_diagonal_in_k(&grid, c, f);
        }
    }
    let free = kinetic_factors(&grid, Complex64::new(0.0, window));
    for (_, c) in idle.iter_mut() {
        if c.iter().any(|v| *v != Complex64::new(0.0, 0.0)) {
            apply_diagonal_in_k(&grid, c, &free);
        }
    }
    let mut merged: Vec<(usize, Vec<Complex64>)> =
        act.into_iter().map(|(i, _)| i).zip(cols).chain(idle).collect();
    merged.sort_by_key(|(i, _)| *i);
    out.restore_columns(merged.into_iter().map(|(_, c)| c).collect());
    if !out.is_finite() {
        return Err(Error::NonFinite("time-of-flight meanfield stage"));
    }
    Ok(out)
}

/// Fails when any component keeps more than `limit` of its norm within the
/// outer sixteenth of the grid on any side.
fn check_boundary(state: &LadderState, limit: f64, suggested_pad: usize) -> Result<()> {
    let grid = state.grid();
    let (by, bz) = ((grid.n_y() / 16).max(1), (grid.n_z() / 16).max(1));
    let mut worst = 0.0f64;
    for c in state.components() {
        let total = c.norm_sq();
        if total <= 0.0 {
            continue;
        }
        let mut edge = 0.0;
        for (idx, v) in c.values().iter().enumerate() {
            let (iy, iz) = (idx % grid.n_y(), idx / grid.n_y());
            if iy < by || iy >= grid.n_y() - by || iz < bz || iz >= grid.n_z() - bz {
                edge += v.norm_sqr();
            }
        }
        worst = worst.max(edge * grid.cell_area() / total);
    }
    if worst > limit {
        return Err(Error::GridOverflow { fraction: worst, required_pad: suggested_pad });
    }
    Ok(())
}

/// TF-equivalent radius `√(6⟨y²⟩)` along the wider axis of a density.
pub fn cloud_radius(grid: &Grid2D, density: &[f64]) -> f64 {
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let (mut yy, mut zz) = (0.0, 0.0);
    for (idx, d) in density.iter().enumerate() {
        let (y, z) = grid.position(idx);
        yy += y * y * d;
        zz += z * z * d;
    }
    (6.0 * yy.max(zz) / total).sqrt()
}

/// Orders `n` and `m` have separated along `x` once `4|n − m|·t > 2R`
/// (order `n` moves at `4n` in internal units).
pub fn separated(n: i32, m: i32, tof_time: f64, radius: f64) -> bool {
    4.0 * (n - m).unsigned_abs() as f64 * tof_time > 2.0 * radius
}

/// How selected orders are combined in an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colocation {
    /// Decide per pair from the time of flight and the cloud size.
    Auto,
    /// Treat every selected order as overlapping (coherent sum).
    Coherent,
    /// Treat every selected order as separated (sum of densities).
    Separated,
}

/// Column density of the selected orders: co-located groups add coherently,
/// separated groups add their densities. Optional `pitch` resamples.
pub fn absorption_image(state: &LadderState, select: &[i32], pitch: Option<f64>, mode: Colocation) -> Result<ImagePlane> {
    if select.is_empty() {
        return Err(Error::invalid("select", "empty order selection"));
    }
    let mut orders: Vec<i32> = select.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let fields: Vec<&TransverseField> = orders
        .iter()
        .map(|n| {
            state
                .component(*n)
                .ok_or_else(|| Error::invalid("select", format!("order {n} not in {:?}", state.orders())))
        })
        .collect::<Result<_>>()?;
    let grid = state.grid();
    let radius = match mode {
        Colocation::Auto => {
            let mut d = vec![0.0; grid.len()];
            for f in &fields {
                for (a, v) in d.iter_mut().zip(f.values()) {
                    *a += v.norm_sqr();
                }
            }
            cloud_radius(grid, &d)
        }
        _ => 0.0,
    };
    // union-find over pairwise co-location
    let mut group: Vec<usize> = (0..orders.len()).collect();
    for i in 0..orders.len() {
        for j in 0..i {
            let together = match mode {
                Colocation::Coherent => true,
                Colocation::Separated => false,
                Colocation::Auto => !separated(orders[i], orders[j], state.tof_time(), radius),
            };
            if together {
                let (gi, gj) = (group[i], group[j]);
                group.iter_mut().filter(|g| **g == gi).for_each(|g| *g = gj);
            }
        }
    }
    let mut density = vec![0.0; grid.len()];
    let mut labels = Vec::new();
    let mut seen: Vec<usize> = group.clone();
    seen.sort_unstable();
    seen.dedup();
    for g in seen {
        let members: Vec<usize> = (0..orders.len()).filter(|&i| group[i] == g).collect();
        labels.push(members.iter().map(|&i| orders[i].to_string()).collect::<Vec<_>>().join("+"));
        for idx in 0..grid.len() {
            let amp: Complex64 = members.iter().map(|&i| fields[i].values()[idx]).sum();
            density[idx] += amp.norm_sqr();
        }
    }
    let label = format!("orders {}", labels.join(", "));
    let image = ImagePlane::from_grid_density(grid, density, label)?;
    match pitch {
        Some(p) => image.resample(p),
        None => Ok(image),
    }
}

/// Azimuthally averaged amplitude `f(ρ) = √⟨|ψ|²⟩_φ` on uniform radial bins.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub dr: f64,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(dr: f64, values: Vec<f64>) -> Result<Self> {
        if !(dr > 0.0) || values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("radial_profile", "need dr > 0 and finite non-negative values"));
        }
        Ok(Self { dr, values })
    }

    pub fn from_fn(dr: f64, bins: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(dr, (0..bins).map(|i| f(i as f64 * dr)).collect())
    }

    /// Profile of `field` about `center`, bin width = grid spacing.
    pub fn from_field(field: &TransverseField, center: (f64, f64)) -> Result<Self> {
        let grid = field.grid();
        let dr = grid.dy().min(grid.dz());
        let bins = (0.5 * grid.extent_y().min(grid.extent_z()) / dr).floor() as usize;
        let mut sum = vec![0.0; bins + 1];
        let mut count = vec![0usize; bins + 1];
        for (idx, v) in field.values().iter().enumerate() {
            let (y, z) = grid.position(idx);
            let b = ((y - center.0).hypot(z - center.1) / dr).round() as usize;
            if b <= bins {
                sum[b] += v.norm_sqr();
                count[b] += 1;
            }
        }
        let values = sum.iter().zip(&count).map(|(s, c)| if *c > 0 { (s / *c as f64).sqrt() } else { 0.0 }).collect();
        Self::new(dr, values)
    }

    /// Linear interpolation, zero beyond the last bin.
    pub fn at(&self, r: f64) -> f64 {
        let x = r / self.dr;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return if i + 1 == self.values.len() { self.values[i] } else { 0.0 };
        }
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dr: self.dr, values: self.values.iter().map(|v| v * s).collect() }
    }
}

/// Reference interference patterns of rotating and non-rotating parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PatternKind {
    /// `|f₊e^{iφ} + f₋e^{−iφ}e^{iχ}|²`, equal to `4f²cos²(φ − χ/2)` for equal
    /// profiles; `χ` orients the two lobes.
    CounterRotating { relative_phase: f64 },
    /// `|f₀ + f₁e^{i(φ+θ)}|²`: one hole at `φ = π − θ`.
    RotVsNonrot { theta: f64 },
    /// `|f₀ + f₂e^{i(2φ+θ)}|²`: two holes `π` apart.
    DoublyVsNonrot { theta: f64 },
}

/// Renders `kind` on `grid` from two radial profiles: `(f₊, f₋)`,
/// `(f₀, f₁)` or `(f₀, f₂)` respectively.
pub fn analytic_pattern(kind: PatternKind, a: &RadialProfile, b: &RadialProfile, grid: &Grid2D) -> Result<ImagePlane> {
    let (label, density): (&str, Vec<f64>) = match kind {
        PatternKind::CounterRotating { relative_phase } => (
            "counter-rotating",
            pattern(grid, |r, phi| {
                (a.at(r) * Complex64::from_polar(1.0, phi) + b.at(r) * Complex64::from_polar(1.0, relative_phase - phi))
                    .norm_sqr()
            }),
        ),
        PatternKind::RotVsNonrot { theta } => (
            "rotating vs non-rotating",
            pattern(grid, |r, phi| (a.at(r) + b.at(r) * Complex64::from_polar(1.0, phi + theta)).norm_sqr()),
        ),
        PatternKind::DoublyVsNonrot { theta } => (
            "doubly charged vs non-rotating",
            pattern(grid, |r, phi| (a.at(r) + b.at(r) * Complex64::from_polar(1.0, 2.0 * phi + theta)).norm_sqr()),
        ),
    };
    ImagePlane::from_grid_density(grid, density, label)
}

fn pattern(grid: &Grid2D, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Vec<f64> {
    par::map_indexed(grid.len(), |idx| {
        let (y, z) = grid.position(idx);
        f(y.hypot(z), z.atan2(y))
    })
}

/// Pearson correlation of two equally shaped images (mean removed, scale free).
pub fn normalized_cross_correlation(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    if a.n_y() != b.n_y() || a.n_z() != b.n_z() || (a.pitch() - b.pitch()).abs() > 1e-12 * a.pitch() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} @ {}", a.n_y(), a.n_z(), a.pitch()),
            found: format!("{}x{} @ {}", b.n_y(), b.n_z(), b.pitch()),
        });
    }
    let n = a.pixels().len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.pixels().iter().zip(b.pixels()) {
        let (dx, dy) = (x - ma, y - mb);
        ab += dx * dy;
        aa += dx * dx;
        bb += dy * dy;
    }
    if !(aa > 0.0 && bb > 0.0) {
        return Err(Error::Degenerate("constant image has no correlation".into()));
    }
    Ok(ab / (aa * bb).sqrt())
}

/// Maximizes the correlation of `image` with `make(angle)` over one turn:
/// `coarse` uniform samples, then golden-section refinement to `1e-4` rad.
pub fn fit_pattern_angle<F>(image: &ImagePlane, coarse: usize, make: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<ImagePlane>,
{
    let coarse = coarse.max(8);
    let corr = |x: f64| -> Result<f64> { normalized_cross_correlation(image, &make(x)?) };
    let step = TAU / coarse as f64;
    let mut best = (0.0, f64::MIN);
    for i in 0..coarse {
        let x = step * i as f64;
        let c = corr(x)?;
        if c > best.1 {
            best = (x, c);
        }
    }
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (corr(c)?, corr(d)?);
    while b - a > 1e-4 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = corr(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = corr(d)?;
        }
    }
    let (x, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    let (x, v) = if v >= best.1 { (x, v) } else { best };
    Ok((x.rem_euclid(TAU), v))
}

/// RMS width `√⟨y²⟩` of a field's density along `y` about the origin.
pub fn rms_width_y(field: &TransverseField) -> f64 {
    let grid = field.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (idx, v) in field.values().iter().enumerate() {
        let (y, _) = grid.position(idx);
        num += y * y * v.norm_sqr();
        den += v.norm_sqr();
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_gaussian_expansion_law() {
        let g = Grid2D::new(256, 256, 400.0, 400.0).unwrap();
        let a0 = 8.0;
        let f = TransverseField::from_fn(g.clone(), |y, z| Complex64::new((-(y * y + z * z) / (2.0 * a0 * a0)).exp(), 0.0));
        let s = LadderState::from_components(0, vec![f.clone()]).unwrap();
        let t = 60.0;
        let out = time_of_flight(&s, t, &TofOptions::ballistic()).unwrap();
        let w0 = rms_width_y(&f);
        let w = rms_width_y(out.component(0).unwrap());
        let expect = w0 * (1.0 + (2.0 * t / (a0 * a0)).powi(2)).sqrt();
        assert!((w / expect - 1.0).abs() < 1e-3, "{w} vs {expect}");
        assert!((out.populations().total - s.populations().total).abs() < 1e-9);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Grid2D::new(32, 32, 40.0, 40.0).unwrap();
        let f = TransverseField::from_fn(g, |y, z| Complex64::new((-(y * y + z * z) / 20.0).exp(), 0.1 * y));
        let s = LadderState::from_components(0, vec![f.clone()]).unwrap();
        let out = time_of_flight(&s, 0.0, &TofOptions::default()).unwrap();
        assert_eq!(out.component(0).unwrap().values(), f.values());
    }

    #[test]
    fn counter_rotating_zeros_on_vertical_axis() {
        let g = Grid2D::new(64, 64, 64.0, 64.0).unwrap();
        let f = RadialProfile::from_fn(0.5, 80, |r| r * (-r * r / 100.0).exp()).unwrap();
        let img = analytic_pattern(PatternKind::CounterRotating { relative_phase: 0.0 }, &f, &f, &g).unwrap();
        assert!(img.sample(0.0, 8.0).unwrap() < 1e-12);
        assert!(img.sample(0.0, -8.0).unwrap() < 1e-12);
        assert!(img.sample(8.0, 0.0).unwrap() > 1.0);
    }

    #[test]
    fn separation_rule() {
        assert!(!separated(0, 1, 10.0, 30.0));
        assert!(separated(0, 1, 10.0, 19.0));
        assert!(separated(-1, 1, 10.0, 39.0));
    }
}
