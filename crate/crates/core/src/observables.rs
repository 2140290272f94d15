//! Autocorrelation and its spectrum, quantum carpets, light-cone leakage and
//! nearest-neighbor level spacings.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l1_distance, GridState, SpatialGrid};
use crate::model::{energy, level_spacing_at, velocity, LevelIndex, WellModel};
use crate::phase::reduced_phase;
use crate::spectral::{angular_frequencies, ExactEvolution, Reconstructor};
use crate::split::{PropagationConfig, SplitOperator};
use crate::wavepacket::{CoefficientVector, WavepacketSpec};

/// Relative tolerance for calling a time axis uniform.
const UNIFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl AutocorrelationSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(
                "autocorrelation times and values differ in length",
            ));
        }
        Ok(AutocorrelationSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sampling step if the times are evenly spaced.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let n = self.times.len() - 1;
        let dt = (self.times[n] - self.times[0]) / n as f64;
        if dt.is_nan() || dt <= 0.0 {
            return None;
        }
        self.times
            .iter()
            .enumerate()
            .all(|(k, &t)| {
                (t - (self.times[0] + k as f64 * dt)).abs() <= UNIFORM_TOLERANCE * dt * n as f64
            })
            .then_some(dt)
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_step().is_some()
    }
}

/// `A(t) = Σ|a_n|²·exp(-iE_n t/ħ)`.
pub fn autocorrelation(coeffs: &CoefficientVector, times: &[f64]) -> AutocorrelationSeries {
    let omegas = angular_frequencies(coeffs.model(), coeffs.n_max());
    let weights = coeffs.weights();
    let values = times
        .par_iter()
        .map(|&t| {
            weights
                .iter()
                .zip(&omegas)
                .map(|(&w, &om)| Complex64::from_polar(w, -reduced_phase(om, t)))
                .sum()
        })
        .collect();
    AutocorrelationSeries {
        times: times.to_vec(),
        values,
    }
}

/// `count` evenly spaced times `t0 + k·dt`.
pub fn uniform_times(t0: f64, dt: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 + k as f64 * dt).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub energy: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelExtraction {
    pub peaks: Vec<SpectralPeak>,
    /// `2πħ/T_total`.
    pub resolution: f64,
    /// Half-width of the Hann main lobe, two resolution bins.
    pub mainlobe_halfwidth: f64,
    /// Energies are recovered within `base_energy ± π·ħ/δt`.
    pub base_energy: f64,
    pub window_span: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    /// Energy at the center of the analyzed band; the series is demodulated by it.
    pub base_energy: f64,
    /// Peaks below this fraction of the largest one are dropped.
    pub relative_threshold: f64,
}

impl ExtractionOptions {
    pub fn around(base_energy: f64) -> Self {
        ExtractionOptions {
            base_energy,
            relative_threshold: 1e-4,
        }
    }
}

/// Hann-windowed Fourier transform of a uniformly sampled `A(t)`.
///
/// Peaks are the local maxima of `|F|` over `±2` bins (the main lobe) above
/// the threshold, refined by a parabola through the three bins around each.
/// A weight is the interpolated peak height over the window sum.
pub fn extract_levels(
    series: &AutocorrelationSeries,
    hbar: f64,
    options: ExtractionOptions,
) -> Result<LevelExtraction> {
    let dt = series.uniform_step().ok_or(Error::NonUniformSampling)?;
    let n = series.len();
    let t0 = series.times[0];
    let window: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
        .collect();
    let window_sum: f64 = window.iter().sum();
    let base_omega = options.base_energy / hbar;

    // F_j = Σ_k w_k A(t_k) e^{+iω_j (t_k - t0)}, ω_j = 2πj/(nδt) relative to the base
    let mut buf: Vec<Complex64> = series
        .values
        .iter()
        .zip(&series.times)
        .zip(&window)
        .map(|((a, &t), &w)| a * Complex64::from_polar(w, reduced_phase(base_omega, t - t0)))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    // bins reordered so that index 0 is the most negative frequency
    let half = n / 2;
    let mag: Vec<f64> = (0..n).map(|i| buf[(i + n - half) % n].norm()).collect();
    let bin = 2.0 * PI / (n as f64 * dt);
    let peak_floor = options.relative_threshold * mag.iter().cloned().fold(0.0, f64::max);

    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let m = mag[i];
        if m <= peak_floor || m == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        // ties resolve to the left-most bin
        let is_max = (lo..=hi).all(|j| j == i || (j < i && mag[j] < m) || (j > i && mag[j] <= m));
        if !is_max {
            continue;
        }
        let (a, b, c) = (mag[i - 1], m, mag[i + 1]);
        let denom = a - 2.0 * b + c;
        let (offset, height) = if denom < 0.0 {
            let d = 0.5 * (a - c) / denom;
            (d, b - 0.25 * (a - c) * d)
        } else {
            (0.0, b)
        };
        let omega = base_omega + ((i as f64 + offset) - half as f64) * bin;
        peaks.push(SpectralPeak {
            energy: hbar * omega,
            weight: height / window_sum,
        });
    }
    Ok(LevelExtraction {
        peaks,
        resolution: hbar * bin,
        mainlobe_halfwidth: 2.0 * hbar * bin,
        base_energy: options.base_energy,
        window_span: hbar * PI / dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    Exact,
    Split,
}

/// How carpet rows are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CarpetEngine {
    /// Independent rows from the eigenbasis.
    Exact,
    /// Sequential propagation; the carpet grid must be the configuration's
    /// well grid.
    Split(PropagationConfig),
}

/// `|ψ(x, t)|²`, rows are times.
#[derive(Debug, Clone, PartialEq)]
pub struct CarpetGrid {
    pub model: WellModel,
    pub grid: SpatialGrid,
    pub times: Vec<f64>,
    /// Row-major, `times.len() × grid.len()`.
    pub density: Vec<f64>,
    pub engine: EngineTag,
    pub packet: Option<WavepacketSpec>,
}

impl CarpetGrid {
    pub fn rows(&self) -> usize {
        self.times.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.density[r * self.cols()..(r + 1) * self.cols()]
    }

    /// `Σ_j ρ_j Δx` of each row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|r| self.row(r).iter().sum::<f64>() * self.grid.spacing())
            .collect()
    }

    pub fn with_packet(mut self, packet: WavepacketSpec) -> Self {
        self.packet = Some(packet);
        self
    }

    /// L¹ distance of every row to row 0; with `allow_mirror` the smaller of
    /// the direct and the `x → L - x` reflected comparison.
    pub fn return_distances(&self, allow_mirror: bool) -> Vec<f64> {
        let first = self.row(0);
        (0..self.rows())
            .map(|r| row_distance(first, self.row(r), self.grid.spacing(), allow_mirror))
            .collect()
    }
}

/// L¹ distance, optionally minimized over mirror reflection of `b`.
pub fn row_distance(a: &[f64], b: &[f64], spacing: f64, allow_mirror: bool) -> f64 {
    let direct = l1_distance(a, b, spacing);
    if !allow_mirror {
        return direct;
    }
    let mirrored = a
        .iter()
        .zip(b.iter().rev())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * spacing;
    direct.min(mirrored)
}

/// Density rows at `times` (absolute, sorted for the split engine).
pub fn carpet(
    coeffs: &CoefficientVector,
    grid: &SpatialGrid,
    times: &[f64],
    engine: CarpetEngine,
) -> Result<CarpetGrid> {
    let model = *coeffs.model();
    let reconstructor = Reconstructor::new(&model, *grid)?;
    match engine {
        CarpetEngine::Exact => {
            if coeffs.n_max() > reconstructor.level_limit() {
                return Err(Error::Aliasing {
                    requested: coeffs.n_max(),
                    limit: reconstructor.level_limit(),
                });
            }
            let evolution = ExactEvolution::new(coeffs.clone());
            let rows: Vec<Vec<f64>> = times
                .par_iter()
                .map(|&t| reconstructor.density(&evolution.at(t)))
                .collect::<Result<_>>()?;
            Ok(CarpetGrid {
                model,
                grid: *grid,
                times: times.to_vec(),
                density: rows.concat(),
                engine: EngineTag::Exact,
                packet: None,
            })
        }
        CarpetEngine::Split(config) => {
            if *grid != config.well_grid(&model) {
                return Err(Error::invalid(format!(
                    "split-operator carpets are sampled on the propagation well grid ({} intervals)",
                    config.well_intervals()
                )));
            }
            let initial = config.from_well(&model, &reconstructor.reconstruct(coeffs)?)?;
            split_carpet(&model, config, initial, times)
        }
    }
}

/// Split-operator carpet from a box state, restricted to the well nodes.
pub fn split_carpet(
    model: &WellModel,
    config: PropagationConfig,
    initial: GridState,
    times: &[f64],
) -> Result<CarpetGrid> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("split-operator sample times must be sorted"));
    }
    let mut op = SplitOperator::new(model, config);
    let mut state = initial;
    let t_final = times.last().copied().unwrap_or(state.time);
    let mut density = Vec::with_capacity(times.len() * (config.well_intervals() + 1));
    let mut failure = None;
    op.propagate(&mut state, t_final, times, |s| {
        match config.to_well(model, s) {
            Ok(w) => density.extend(w.density()),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(CarpetGrid {
        model: *model,
        grid: config.well_grid(model),
        times: times.to_vec(),
        density,
        engine: EngineTag::Split,
        packet: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    /// `(t, leaked probability)` for every row before wall contact.
    pub rows: Vec<(f64, f64)>,
    pub max: f64,
}

/// Probability beyond `|x - x0| > c·t + margin` in each row with
/// `t < min(x0, L - x0)/c`, measured from the first row's time.
pub fn lightcone_leakage(carpet: &CarpetGrid, x0: f64, margin: f64) -> Result<LeakageReport> {
    let model = &carpet.model;
    let c = model.light_speed();
    let l = model.well_width();
    let t_start = carpet.times.first().copied().unwrap_or(0.0);
    let limit = x0.min(l - x0) / c;
    let dx = carpet.grid.spacing();
    let mut rows = Vec::new();
    for (r, &t) in carpet.times.iter().enumerate() {
        let elapsed = t - t_start;
        if elapsed >= limit {
            continue;
        }
        let reach = c * elapsed + margin;
        let leaked: f64 = carpet
            .grid
            .positions()
            .zip(carpet.row(r))
            .filter(|(x, _)| (x - x0).abs() > reach)
            .map(|(_, &rho)| rho)
            .sum::<f64>()
            * dx;
        rows.push((t, leaked));
    }
    if rows.is_empty() {
        return Err(Error::NoPreReflectionRows { limit });
    }
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(LeakageReport { rows, max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonRelativistic,
    Intermediate,
    UltraRelativistic,
}

impl Regime {
    /// By `v/c`: below 0.1, between, above 0.9.
    pub fn classify(beta: f64) -> Self {
        if beta < 0.1 {
            Regime::NonRelativistic
        } else if beta > 0.9 {
            Regime::UltraRelativistic
        } else {
            Regime::Intermediate
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::NonRelativistic => "non_relativistic",
            Regime::Intermediate => "intermediate",
            Regime::UltraRelativistic => "ultra_relativistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingStatistics {
    /// `s_n = E_{n+1} - E_n` for `n = 1..n_max-1`.
    pub spacings: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub mean: f64,
    pub variance: f64,
    /// `ħπc/L`.
    pub asymptote: f64,
    /// `(ħπc/L - s_last)/(ħπc/L)`.
    pub asymptote_gap: f64,
}

pub fn level_spacing(model: &WellModel, n_max: usize) -> Result<SpacingStatistics> {
    if n_max < 2 {
        return Err(Error::invalid(format!(
            "level spacing needs n_max >= 2, got {n_max}"
        )));
    }
    let c = model.light_speed();
    let (spacings, regimes): (Vec<f64>, Vec<Regime>) = (1..n_max as u64)
        .map(|n| {
            let n = LevelIndex::new(n).expect("n >= 1");
            (
                level_spacing_at(model, n),
                Regime::classify(velocity(model, n) / c),
            )
        })
        .unzip();
    let count = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / count;
    let variance = spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / count;
    let asymptote = model.asymptotic_spacing();
    let last = *spacings.last().expect("n_max >= 2");
    Ok(SpacingStatistics {
        spacings,
        regimes,
        mean,
        variance,
        asymptote,
        asymptote_gap: (asymptote - last) / asymptote,
    })
}

/// `E_n` for `n = 1..=n_max`.
pub fn analytic_levels(model: &WellModel, n_max: usize) -> Vec<f64> {
    (1..=n_max as u64)
        .map(|n| energy(model, LevelIndex::new(n).expect("n >= 1")))
        .collect()
}
