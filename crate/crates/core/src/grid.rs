use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WellModel;

/// Uniform sampling `x_j = origin + j·spacing`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    origin: f64,
    spacing: f64,
    len: usize,
}

impl SpatialGrid {
    pub fn new(origin: f64, spacing: f64, len: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) || !origin.is_finite() {
            return Err(Error::invalid(format!(
                "bad grid origin {origin} / spacing {spacing}"
            )));
        }
        if len < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        Ok(SpatialGrid {
            origin,
            spacing,
            len,
        })
    }

    /// `intervals + 1` nodes covering `[0, L]`, walls included.
    pub fn well(model: &WellModel, intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::invalid("well grid needs at least two intervals"));
        }
        Self::new(0.0, model.well_width() / intervals as f64, intervals + 1)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    /// Position of the last node.
    pub fn end(&self) -> f64 {
        self.position(self.len - 1)
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.position(j))
    }

    /// Number of intervals if this grid is a well grid of `model`.
    pub fn well_intervals(&self, model: &WellModel) -> Option<usize> {
        let l = model.well_width();
        let k = self.len - 1;
        let tol = 1e-12 * l;
        (self.origin.abs() <= tol && (self.spacing * k as f64 - l).abs() <= tol * k as f64)
            .then_some(k)
    }

    pub(crate) fn require_well(&self, model: &WellModel) -> Result<usize> {
        self.well_intervals(model).ok_or_else(|| {
            Error::invalid(format!(
                "grid [{}, {}] does not span the well [0, {}]",
                self.origin,
                self.end(),
                model.well_width()
            ))
        })
    }
}

/// Complex wavefunction sampled on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub samples: Vec<Complex64>,
    pub grid: SpatialGrid,
    pub time: f64,
}

impl GridState {
    pub fn new(samples: Vec<Complex64>, grid: SpatialGrid, time: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        Ok(GridState {
            samples,
            grid,
            time,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// `Σ|ψ_j|²·Δx`.
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()
    }

    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `Σ conj(self_j)·other_j·Δx`.
    pub fn overlap(&self, other: &GridState) -> Complex64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.spacing()
    }

    pub fn l2_distance(&self, other: &GridState) -> f64 {
        let s: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.spacing()).sqrt()
    }

    pub fn has_non_finite(&self) -> bool {
        self.samples
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    }
}

/// `Σ|a_j - b_j|·Δx` between two densities on the same grid.
pub fn l1_distance(a: &[f64], b: &[f64], spacing: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * spacing
}
