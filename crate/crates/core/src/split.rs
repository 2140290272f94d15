//! Split-operator (Strang) propagation on a periodic box.
//!
//! The infinite well is replaced by walls of finite height `V0` outside
//! `[0, L]`. The box is laid out so that both walls fall on grid nodes, which
//! carry `V0/2`; the well interior is then sampled on exactly the nodes of a
//! well grid with `K` intervals, so states can be compared with the exact
//! engine node by node.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridState, SpatialGrid};
use crate::model::{KineticForm, WellModel};
use crate::phase::reduced_phase;
use crate::wavepacket::WavepacketSpec;

pub const MIN_GRID_SIZE: usize = 256;
/// Default wall height in units of `mc²`.
pub const DEFAULT_WALL_HEIGHT: f64 = 1e4;
/// Largest accepted `V0·dt/ħ`.
pub const MAX_WALL_PHASE: f64 = PI / 8.0;
/// Fraction of the box given to each margin before snapping to nodes.
const MARGIN_FRACTION: f64 = 0.1;

/// `exp(-i·sqrt(m²c⁴ + p²c²)·dt/ħ)`.
pub fn kinetic_phase(model: &WellModel, p: f64, dt: f64) -> Complex64 {
    phase_factor(
        KineticForm::Relativistic.energy(model, p) / model.hbar(),
        dt,
    )
}

fn phase_factor(omega: f64, dt: f64) -> Complex64 {
    Complex64::from_polar(1.0, -reduced_phase(omega, dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    grid_size: usize,
    well_intervals: usize,
    dt: f64,
    wall_height: f64,
    dt_capped: bool,
}

impl PropagationConfig {
    /// `grid_size` nodes in the periodic box, `well_intervals` of them spanning
    /// `[0, L]`, centered. `dt` is reduced if `V0·dt/ħ` would exceed `π/8`.
    pub fn new(
        model: &WellModel,
        grid_size: usize,
        well_intervals: usize,
        dt: f64,
        wall_height: f64,
    ) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE || !grid_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid size {grid_size} must be a power of two >= {MIN_GRID_SIZE}"
            )));
        }
        if well_intervals < 2
            || well_intervals + 2 > grid_size
            || !(grid_size - well_intervals).is_multiple_of(2)
        {
            return Err(Error::invalid(format!(
                "{well_intervals} well intervals do not fit symmetrically in a box of {grid_size} nodes"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !(wall_height.is_finite() && wall_height > 0.0) {
            return Err(Error::invalid(format!(
                "wall height must be positive, got {wall_height}"
            )));
        }
        let cap = MAX_WALL_PHASE * model.hbar() / wall_height;
        let dt_capped = dt > cap;
        Ok(PropagationConfig {
            grid_size,
            well_intervals,
            dt: dt.min(cap),
            wall_height,
            dt_capped,
        })
    }

    /// Defaults for a packet: walls at `10⁴·mc²`, momentum cutoff at least
    /// `8(|p0| + ħ/σ)`, at least 8 nodes per σ, and
    /// `dt = min(ħπ/(8V0), T_cl/1000)`.
    pub fn for_packet(model: &WellModel, spec: &WavepacketSpec, t_classical: f64) -> Result<Self> {
        let l = model.well_width();
        let hbar = model.hbar();
        let need_k = (8.0 * l / spec.width())
            .max(8.0 * (spec.momentum().abs() + hbar / spec.width()) * l / (PI * hbar))
            .ceil() as usize;
        let mut n = MIN_GRID_SIZE;
        while Self::layout(n) < need_k {
            n *= 2;
        }
        let v0 = DEFAULT_WALL_HEIGHT * model.rest_energy();
        let dt = (hbar * PI / (8.0 * v0)).min(t_classical / 1000.0);
        Self::new(model, n, Self::layout(n), dt, v0)
    }

    /// Well intervals for a box of `n` nodes with margins near `n/10` each.
    pub fn layout(n: usize) -> usize {
        n - 2 * (MARGIN_FRACTION * n as f64).round() as usize
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn well_intervals(&self) -> usize {
        self.well_intervals
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Whether the requested step was reduced to respect the wall phase limit.
    pub fn dt_capped(&self) -> bool {
        self.dt_capped
    }

    pub fn wall_height(&self) -> f64 {
        self.wall_height
    }

    pub fn with_dt(self, model: &WellModel, dt: f64) -> Result<Self> {
        Self::new(
            model,
            self.grid_size,
            self.well_intervals,
            dt,
            self.wall_height,
        )
    }

    pub fn with_wall_height(self, model: &WellModel, wall_height: f64) -> Result<Self> {
        Self::new(
            model,
            self.grid_size,
            self.well_intervals,
            self.dt,
            wall_height,
        )
    }

    /// Index of the node at `x = 0`.
    pub fn wall_node(&self) -> usize {
        (self.grid_size - self.well_intervals) / 2
    }

    /// Width δ of the region between each wall and the box edge.
    pub fn margin(&self, model: &WellModel) -> f64 {
        self.wall_node() as f64 * self.spacing(model)
    }

    pub fn spacing(&self, model: &WellModel) -> f64 {
        model.well_width() / self.well_intervals as f64
    }

    pub fn box_grid(&self, model: &WellModel) -> SpatialGrid {
        let dx = self.spacing(model);
        SpatialGrid::new(-(self.wall_node() as f64) * dx, dx, self.grid_size)
            .expect("validated layout")
    }

    pub fn well_grid(&self, model: &WellModel) -> SpatialGrid {
        SpatialGrid::well(model, self.well_intervals).expect("validated layout")
    }

    /// Largest momentum represented on the box grid.
    pub fn momentum_cutoff(&self, model: &WellModel) -> f64 {
        PI * model.hbar() / self.spacing(model)
    }

    /// Restriction of a box state to the well nodes (walls included).
    pub fn to_well(&self, model: &WellModel, state: &GridState) -> Result<GridState> {
        self.check_state(state)?;
        let w = self.wall_node();
        GridState::new(
            state.samples[w..=w + self.well_intervals].to_vec(),
            self.well_grid(model),
            state.time,
        )
    }

    /// A well-grid state padded with zeros over the margins.
    pub fn from_well(&self, model: &WellModel, state: &GridState) -> Result<GridState> {
        if state.grid.well_intervals(model) != Some(self.well_intervals) {
            return Err(Error::invalid(
                "state is not on this configuration's well grid",
            ));
        }
        let w = self.wall_node();
        let mut samples = vec![Complex64::new(0.0, 0.0); self.grid_size];
        samples[w..=w + self.well_intervals].copy_from_slice(&state.samples);
        GridState::new(samples, self.box_grid(model), state.time)
    }

    /// Probability on nodes strictly outside `[0, L]`.
    pub fn wall_mass(&self, model: &WellModel, state: &GridState) -> f64 {
        let w = self.wall_node();
        let outside: f64 = state.samples[..w]
            .iter()
            .chain(&state.samples[w + self.well_intervals + 1..])
            .map(|z| z.norm_sqr())
            .sum();
        outside * self.spacing(model)
    }

    fn check_state(&self, state: &GridState) -> Result<()> {
        if state.samples.len() != self.grid_size {
            return Err(Error::invalid(format!(
                "state has {} samples, configuration expects {}",
                state.samples.len(),
                self.grid_size
            )));
        }
        Ok(())
    }
}

/// Summary of a [`SplitOperator::propagate`] run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub steps: u64,
    /// Largest step actually used; segments between samples are divided
    /// evenly, so this never exceeds the configured `dt`.
    pub max_dt: f64,
    pub norm_drift: f64,
}

pub struct SplitOperator {
    model: WellModel,
    config: PropagationConfig,
    kinetic: KineticForm,
    potential: Vec<f64>,
    momenta: Vec<f64>,
    half_potential: Vec<Complex64>,
    kinetic_factors: Vec<Complex64>,
    current_dt: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    steps: u64,
}

impl SplitOperator {
    pub fn new(model: &WellModel, config: PropagationConfig) -> Self {
        Self::with_kinetic(model, config, KineticForm::Relativistic)
    }

    pub fn with_kinetic(
        model: &WellModel,
        config: PropagationConfig,
        kinetic: KineticForm,
    ) -> Self {
        let n = config.grid_size;
        let w = config.wall_node();
        let v0 = config.wall_height;
        let potential = (0..n)
            .map(|j| {
                if j == w || j == w + config.well_intervals {
                    v0 / 2.0
                } else if j < w || j > w + config.well_intervals {
                    v0
                } else {
                    0.0
                }
            })
            .collect();
        let dp = 2.0 * PI * model.hbar() / (n as f64 * config.spacing(model));
        let momenta = (0..n)
            .map(|k| {
                if k < n / 2 {
                    k as f64 * dp
                } else {
                    (k as f64 - n as f64) * dp
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch = vec![
            Complex64::new(0.0, 0.0);
            forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len())
        ];
        let mut op = SplitOperator {
            model: *model,
            config,
            kinetic,
            potential,
            momenta,
            half_potential: Vec::new(),
            kinetic_factors: Vec::new(),
            current_dt: f64::NAN,
            forward,
            inverse,
            scratch,
            steps: 0,
        };
        op.set_dt(config.dt);
        op
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Box potential at each node.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Momentum of each FFT bin, in FFT order.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    fn set_dt(&mut self, dt: f64) {
        if dt == self.current_dt {
            return;
        }
        let hbar = self.model.hbar();
        let inv_n = 1.0 / self.config.grid_size as f64;
        self.half_potential = self
            .potential
            .iter()
            .map(|&v| phase_factor(v / hbar, dt / 2.0))
            .collect();
        self.kinetic_factors = self
            .momenta
            .iter()
            .map(|&p| phase_factor(self.kinetic.energy(&self.model, p) / hbar, dt) * inv_n)
            .collect();
        self.current_dt = dt;
    }

    /// One Strang step with the configured `dt`.
    pub fn step(&mut self, state: &mut GridState) -> Result<()> {
        self.config.check_state(state)?;
        let dt = self.config.dt;
        self.set_dt(dt);
        self.step_unchecked(state)?;
        state.time += dt;
        Ok(())
    }

    fn step_unchecked(&mut self, state: &mut GridState) -> Result<()> {
        let psi = &mut state.samples;
        psi.iter_mut()
            .zip(&self.half_potential)
            .for_each(|(z, f)| *z *= f);
        self.forward.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut()
            .zip(&self.kinetic_factors)
            .for_each(|(z, f)| *z *= f);
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut()
            .zip(&self.half_potential)
            .for_each(|(z, f)| *z *= f);
        self.steps += 1;
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericalBlowup { step: self.steps });
        }
        Ok(())
    }

    /// Evolves `state` to `t_final`, calling `sampler` with the state at each
    /// of `sample_times` (absolute times, in `[state.time, t_final]`). Each
    /// gap between consecutive stops is split into equal steps no longer than
    /// the configured `dt`.
    pub fn propagate<F>(
        &mut self,
        state: &mut GridState,
        t_final: f64,
        sample_times: &[f64],
        mut sampler: F,
    ) -> Result<PropagationReport>
    where
        F: FnMut(&GridState),
    {
        self.config.check_state(state)?;
        let t0 = state.time;
        if !(t_final.is_finite() && t_final >= t0) {
            return Err(Error::SampleTime {
                time: t_final,
                t_final,
            });
        }
        for &t in sample_times {
            if !(t >= t0 && t <= t_final) {
                return Err(Error::SampleTime { time: t, t_final });
            }
        }
        let mut stops: Vec<(f64, bool)> = sample_times.iter().map(|&t| (t, true)).collect();
        stops.sort_by(|a, b| a.0.total_cmp(&b.0));
        stops.push((t_final, false));

        let norm0 = state.norm_sqr();
        let first_step = self.steps;
        let mut max_dt: f64 = 0.0;
        let mut start = t0;
        let mut done = 0u64;
        for (t, sample) in stops {
            let gap = t - start;
            if gap > 0.0 {
                let count = (gap / self.config.dt).ceil().max(1.0) as u64;
                let dt = gap / count as f64;
                self.set_dt(dt);
                max_dt = max_dt.max(dt);
                for _ in 0..count {
                    self.step_unchecked(state)?;
                }
                done += count;
                state.time = t;
                start = t;
            }
            if sample {
                sampler(state);
            }
        }
        debug_assert_eq!(done, self.steps - first_step);
        Ok(PropagationReport {
            steps: done,
            max_dt,
            norm_drift: state.norm_sqr() - norm0,
        })
    }
}
