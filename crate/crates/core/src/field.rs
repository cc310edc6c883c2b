//! Transverse wavefunctions and the momentum-ladder state.

use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::Grid2D;
use crate::par;
use crate::{Error, Result};

/// Complex amplitude on a [`Grid2D`], normalized so that `∫|ψ|² dy dz` is the
/// fraction of atoms it carries.
#[derive(Clone, Debug)]
pub struct TransverseField {
    grid: Arc<Grid2D>,
    values: Vec<Complex64>,
}

impl TransverseField {
    pub fn zeros(grid: Arc<Grid2D>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn<F>(grid: Arc<Grid2D>, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync + Send,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let g = &grid;
        par::for_each_chunk_mut(&mut values, par::CHUNK, |off, c| {
            for (i, v) in c.iter_mut().enumerate() {
                let (y, z) = g.position(off + i);
                *v = f(y, z);
            }
        });
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<Grid2D>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", grid.len()),
                found: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn grid_ref(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `∫|ψ|² dy dz`.
    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.values) * self.grid.cell_area()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn peak_density(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        par::for_each_chunk_mut(&mut self.values, par::CHUNK, |_, c| {
            c.iter_mut().for_each(|v| *v *= s)
        });
    }

    /// Rescales to unit norm.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Degenerate("cannot normalize a zero field".into()));
        }
        self.scale(1.0 / n.sqrt());
        Ok(())
    }

    /// `∫ conj(self) · other`.
    pub fn inner(&self, other: &TransverseField) -> Complex64 {
        let re = par::sum_chunks(&self.values, |off, c| {
            c.iter()
                .zip(&other.values[off..off + c.len()])
                .map(|(a, b)| (a.conj() * b).re)
                .sum()
        });
        let im = par::sum_chunks(&self.values, |off, c| {
            c.iter()
                .zip(&other.values[off..off + c.len()])
                .map(|(a, b)| (a.conj() * b).im)
                .sum()
        });
        Complex64::new(re, im) * self.grid.cell_area()
    }

    /// `‖self − other‖ / ‖other‖` in the grid L2 norm.
    pub fn relative_distance(&self, other: &TransverseField) -> f64 {
        let diff = par::sum_chunks(&self.values, |off, c| {
            c.iter()
                .zip(&other.values[off..off + c.len()])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum()
        });
        (diff / norm_sq(&other.values)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

pub(crate) fn norm_sq(values: &[Complex64]) -> f64 {
    par::sum_chunks(values, |_, c| c.iter().map(|v| v.norm_sqr()).sum())
}

/// Per-order populations `P_n = ∫|ψ_n|²` and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Populations {
    pub entries: Vec<(i32, f64)>,
    pub total: f64,
}

impl Populations {
    pub fn get(&self, order: i32) -> f64 {
        self.entries
            .iter()
            .find(|(n, _)| *n == order)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Transverse wavefunctions for a contiguous range of momentum orders, all on
/// one grid. Order `n` carries axial momentum `n·2ħk`.
#[derive(Clone, Debug)]
pub struct LadderState {
    grid: Arc<Grid2D>,
    min_order: i32,
    components: Vec<TransverseField>,
    tof_time: f64,
}

impl LadderState {
    /// All-zero state over `orders`.
    pub fn new(grid: Arc<Grid2D>, orders: RangeInclusive<i32>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::invalid("orders", "empty order range"));
        }
        let count = (orders.end() - orders.start() + 1) as usize;
        let components = (0..count).map(|_| TransverseField::zeros(grid.clone())).collect();
        Ok(Self {
            grid,
            min_order: *orders.start(),
            components,
            tof_time: 0.0,
        })
    }

    /// Orders `−n_max..=n_max`, all zero.
    pub fn symmetric(grid: Arc<Grid2D>, n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        let n = n_max as i32;
        Self::new(grid, -n..=n)
    }

    /// Puts `field` in order 0 of a symmetric ladder.
    pub fn from_rest(field: TransverseField, n_max: u32) -> Result<Self> {
        let mut s = Self::symmetric(field.grid_ref().clone(), n_max)?;
        s.set_component(0, field)?;
        Ok(s)
    }

    /// Builds a state from explicit components starting at `min_order`.
    pub fn from_components(min_order: i32, components: Vec<TransverseField>) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| Error::invalid("components", "no components"))?
            .grid_ref()
            .clone();
        if components.iter().any(|c| **c.grid_ref() != *grid) {
            return Err(Error::DimensionMismatch {
                expected: format!("{grid:?}"),
                found: "components on different grids".into(),
            });
        }
        Ok(Self {
            grid,
            min_order,
            components,
            tof_time: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn grid_ref(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn orders(&self) -> RangeInclusive<i32> {
        self.min_order..=self.max_order()
    }

    pub fn min_order(&self) -> i32 {
        self.min_order
    }

    pub fn max_order(&self) -> i32 {
        self.min_order + self.components.len() as i32 - 1
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, order: i32) -> Option<&TransverseField> {
        self.index(order).map(|i| &self.components[i])
    }

    pub fn component_mut(&mut self, order: i32) -> Option<&mut TransverseField> {
        self.index(order).map(move |i| &mut self.components[i])
    }

    pub fn components(&self) -> &[TransverseField] {
        &self.components
    }

    pub fn set_component(&mut self, order: i32, field: TransverseField) -> Result<()> {
        if *field.grid_ref().as_ref() != *self.grid {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.grid),
                found: format!("{:?}", field.grid()),
            });
        }
        let i = self.index(order).ok_or_else(|| {
            Error::invalid("order", format!("{order} outside {:?}", self.orders()))
        })?;
        self.components[i] = field;
        Ok(())
    }

    /// Elapsed time of flight (internal units); zero while trapped.
    pub fn tof_time(&self) -> f64 {
        self.tof_time
    }

    pub(crate) fn set_tof_time(&mut self, t: f64) {
        self.tof_time = t;
    }

    pub(crate) fn raw_columns(&mut self) -> Vec<Vec<Complex64>> {
        self.components
            .iter_mut()
            .map(|c| std::mem::take(&mut c.values))
            .collect()
    }

    pub(crate) fn restore_columns(&mut self, columns: Vec<Vec<Complex64>>) {
        for (c, v) in self.components.iter_mut().zip(columns) {
            c.values = v;
        }
    }

    pub fn populations(&self) -> Populations {
        let entries: Vec<(i32, f64)> = self
            .orders()
            .zip(&self.components)
            .map(|(n, c)| (n, c.norm_sq()))
            .collect();
        let total = entries.iter().map(|(_, p)| p).sum();
        Populations { entries, total }
    }

    /// `Σ_n |ψ_n|²` per grid point.
    pub fn total_density(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.grid.len()];
        for c in &self.components {
            for (acc, v) in d.iter_mut().zip(c.values()) {
                *acc += v.norm_sqr();
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(TransverseField::is_finite)
    }

    fn index(&self, order: i32) -> Option<usize> {
        let i = order - self.min_order;
        (i >= 0 && (i as usize) < self.components.len()).then_some(i as usize)
    }
}

/// Per-order populations and their total.
pub fn field_norm(state: &LadderState) -> Populations {
    state.populations()
}
