//! Gaussian initial states and their decomposition in the well eigenbasis.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dst::SineTransform;
use crate::error::{Error, Result};
use crate::grid::{GridState, SpatialGrid};
use crate::model::{LevelIndex, WellModel};

/// Minimum sampling density accepted by [`gaussian_state`].
pub const MIN_POINTS_PER_SIGMA: f64 = 8.0;

/// Levels below this weight count as empty for automatic truncation.
const QUIET_WEIGHT: f64 = 1e-14;
const QUIET_RUN: usize = 10;

/// `A·exp(-(x-x0)²/4σ² + i p0 x/ħ)`; `σ` is the position spread of `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpec {
    center: f64,
    width: f64,
    momentum: f64,
}

impl WavepacketSpec {
    pub fn new(model: &WellModel, center: f64, width: f64, momentum: f64) -> Result<Self> {
        let l = model.well_width();
        if !(center > 0.0 && center < l) {
            return Err(Error::invalid(format!(
                "packet center {center} not inside (0, {l})"
            )));
        }
        if !(width > 0.0 && width < l / 2.0) {
            return Err(Error::invalid(format!(
                "packet width {width} not in (0, L/2)"
            )));
        }
        if !momentum.is_finite() {
            return Err(Error::invalid("packet momentum must be finite"));
        }
        Ok(WavepacketSpec {
            center,
            width,
            momentum,
        })
    }

    /// Center and width as fractions of `L`, momentum in units of `ħ/L`.
    pub fn from_fractions(
        model: &WellModel,
        center: f64,
        width: f64,
        momentum: f64,
    ) -> Result<Self> {
        let l = model.well_width();
        Self::new(model, center * l, width * l, momentum * model.hbar() / l)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// Mass of the untruncated Gaussian that lies beyond the walls.
    pub fn wall_tail_mass(&self, model: &WellModel) -> f64 {
        let s = self.width * std::f64::consts::SQRT_2;
        0.5 * libm::erfc(self.center / s) + 0.5 * libm::erfc((model.well_width() - self.center) / s)
    }

    /// A well grid fine enough for this packet: at least 10 points per σ and
    /// twice the highest level with non-negligible weight.
    pub fn default_grid(&self, model: &WellModel) -> Result<SpatialGrid> {
        let l = model.well_width();
        let by_width = (10.0 * l / self.width).ceil();
        let top_level =
            (self.momentum.abs() + 8.0 * model.hbar() / self.width) * l / (PI * model.hbar());
        let need = by_width.max(2.0 * top_level).max(512.0);
        SpatialGrid::well(model, (need as usize).next_power_of_two())
    }
}

/// Samples the packet on `grid`, zeroes it outside `[0, L]` (walls included)
/// and normalizes it to unit discrete norm.
pub fn gaussian_state(
    model: &WellModel,
    spec: &WavepacketSpec,
    grid: &SpatialGrid,
) -> Result<GridState> {
    let points_per_sigma = spec.width / grid.spacing();
    if points_per_sigma < MIN_POINTS_PER_SIGMA {
        return Err(Error::Resolution {
            points_per_sigma,
            required: MIN_POINTS_PER_SIGMA,
        });
    }
    let l = model.well_width();
    let tol = 1e-12 * l;
    let k = spec.momentum / model.hbar();
    let mut samples: Vec<Complex64> = grid
        .positions()
        .map(|x| {
            if x <= tol || x >= l - tol {
                Complex64::new(0.0, 0.0)
            } else {
                let d = x - spec.center;
                Complex64::from_polar((-d * d / (4.0 * spec.width * spec.width)).exp(), k * x)
            }
        })
        .collect();
    let norm = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::EmptyState);
    }
    samples.iter_mut().for_each(|z| *z /= norm);
    GridState::new(samples, *grid, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Stop after the first run of ten consecutive levels above the dominant
    /// one whose weights are all below `1e-14`.
    Auto,
    Levels(usize),
}

/// Eigenbasis amplitudes `a_1..a_{n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    model: WellModel,
    amplitudes: Vec<Complex64>,
    /// `‖ψ‖² - Σ|a_n|²` of the state this vector was computed from.
    truncation_defect: f64,
    renormalized: bool,
    time: f64,
}

impl CoefficientVector {
    pub fn new(model: WellModel, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid(
                "coefficient vector needs at least one level",
            ));
        }
        Ok(CoefficientVector {
            model,
            amplitudes,
            truncation_defect: 0.0,
            renormalized: false,
            time: 0.0,
        })
    }

    /// A single normalized eigenstate padded with zeros up to `n_max`.
    pub fn eigenstate(model: WellModel, n: LevelIndex, n_max: usize) -> Result<Self> {
        let n = n.get() as usize;
        if n > n_max {
            return Err(Error::invalid(format!("level {n} beyond n_max {n_max}")));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); n_max];
        a[n - 1] = Complex64::new(1.0, 0.0);
        Self::new(model, a)
    }

    pub fn model(&self) -> &WellModel {
        &self.model
    }

    pub fn n_max(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: LevelIndex) -> Complex64 {
        self.amplitudes
            .get(n.get() as usize - 1)
            .copied()
            .unwrap_or_default()
    }

    /// `(n, a_n)` pairs starting at `n = 1`.
    pub fn levels(&self) -> impl Iterator<Item = (LevelIndex, Complex64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| (LevelIndex::new(i as u64 + 1).expect("n >= 1"), a))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn truncation_defect(&self) -> f64 {
        self.truncation_defect
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `|a_{n_max}|² / max|a_n|²`.
    pub fn tail_ratio(&self) -> f64 {
        let max = self
            .amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        self.amplitudes.last().map_or(0.0, |a| a.norm_sqr()) / max
    }

    /// Rescaled to unit total weight; the result is flagged.
    pub fn renormalized(&self) -> Result<Self> {
        let w = self.total_weight();
        if w == 0.0 {
            return Err(Error::EmptyState);
        }
        let s = w.sqrt();
        Ok(CoefficientVector {
            amplitudes: self.amplitudes.iter().map(|a| a / s).collect(),
            renormalized: true,
            ..self.clone()
        })
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>, time: f64) -> Self {
        CoefficientVector {
            amplitudes,
            time,
            ..self.clone()
        }
    }
}

/// `a_n = Σ_j φ_n(x_j) ψ(x_j) Δx` on a well grid (type-I sine transform).
pub fn decompose(
    state: &GridState,
    model: &WellModel,
    truncation: Truncation,
) -> Result<CoefficientVector> {
    let intervals = state.grid.require_well(model)?;
    let limit = intervals - 1;
    if let Truncation::Levels(n) = truncation {
        if n > limit {
            return Err(Error::Aliasing {
                requested: n,
                limit,
            });
        }
        if n == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
    }
    let dx = state.spacing();
    let mut all = vec![Complex64::new(0.0, 0.0); limit];
    SineTransform::new(intervals).apply(&state.samples[1..intervals], &mut all);
    let scale = (2.0 / model.well_width()).sqrt() * dx;
    all.iter_mut().for_each(|a| *a *= scale);

    let n_max = match truncation {
        Truncation::Levels(n) => n,
        Truncation::Auto => auto_truncation(&all),
    };
    all.truncate(n_max);
    let defect = state.norm_sqr() - all.iter().map(|a| a.norm_sqr()).sum::<f64>();
    Ok(CoefficientVector {
        model: *model,
        amplitudes: all,
        truncation_defect: defect,
        renormalized: false,
        time: state.time,
    })
}

fn auto_truncation(all: &[Complex64]) -> usize {
    let peak = argmax_weight(all).unwrap_or(0);
    let mut run = 0;
    for (i, a) in all.iter().enumerate().skip(peak + 1) {
        if a.norm_sqr() < QUIET_WEIGHT {
            run += 1;
            if run == QUIET_RUN {
                return i + 1;
            }
        } else {
            run = 0;
        }
    }
    all.len()
}

fn argmax_weight(a: &[Complex64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in a.iter().enumerate() {
        let w = z.norm_sqr();
        // strict comparison keeps the smaller index on ties
        if w > 0.0 && best.is_none_or(|(_, b)| w > b) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i)
}

/// Level carrying the largest weight; ties go to the smaller `n`.
pub fn dominant_level(coeffs: &CoefficientVector) -> Result<LevelIndex> {
    let i = argmax_weight(&coeffs.amplitudes).ok_or(Error::EmptyState)?;
    LevelIndex::new(i as u64 + 1)
}

/// Rounded `⟨n⟩ = Σ n|a_n|² / Σ|a_n|²`, never below 1.
pub fn mean_level(coeffs: &CoefficientVector) -> Result<LevelIndex> {
    let w = coeffs.total_weight();
    if w == 0.0 {
        return Err(Error::EmptyState);
    }
    let mean: f64 = coeffs
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (i + 1) as f64 * a.norm_sqr())
        .sum::<f64>()
        / w;
    LevelIndex::new((mean.round() as u64).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSelector {
    Peak,
    Mean,
}

impl LevelSelector {
    pub fn select(self, coeffs: &CoefficientVector) -> Result<LevelIndex> {
        match self {
            LevelSelector::Peak => dominant_level(coeffs),
            LevelSelector::Mean => mean_level(coeffs),
        }
    }
}

/// Overlap of the untruncated, continuum-normalized Gaussian with the sine
/// eigenfunction extended over the whole line. Accurate only when the packet
/// tails beyond the walls are negligible.
pub fn gaussian_overlap_closed_form(
    model: &WellModel,
    spec: &WavepacketSpec,
    n: LevelIndex,
) -> Complex64 {
    let l = model.well_width();
    let s = spec.width;
    let k = n.as_f64() * PI / l;
    let p = spec.momentum / model.hbar();
    let amp = (2.0 * PI * s * s).powf(-0.25);
    let lobe = |q: f64| Complex64::from_polar((-s * s * q * q).exp(), q * spec.center);
    let integral = (lobe(p + k) - lobe(p - k)) * (2.0 * s * PI.sqrt()) / Complex64::new(0.0, 2.0);
    integral * amp * (2.0 / l).sqrt()
}
