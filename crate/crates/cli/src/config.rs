//! Run configuration: a single JSON document, every block optional.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use salpeter_core::model::revival_times;
use salpeter_core::observables::uniform_times;
use salpeter_core::split::PropagationConfig;
use salpeter_core::wavepacket::{decompose, gaussian_state, LevelSelector, MIN_POINTS_PER_SIGMA};
use salpeter_core::{
    CoefficientVector, RevivalTimes, SpatialGrid, Truncation, WavepacketSpec, WellModel,
};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub packet: PacketBlock,
    pub engine: EngineBlock,
    pub times: TimesBlock,
    pub levels: LevelsBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub mass: f64,
    pub light_speed: f64,
    pub hbar: f64,
    pub well_width_in_compton: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketBlock {
    #[serde(rename = "x0_over_L")]
    pub x0_over_l: f64,
    #[serde(rename = "sigma_over_L")]
    pub sigma_over_l: f64,
    #[serde(rename = "p0_in_hbar_over_L")]
    pub p0_in_hbar_over_l: f64,
    /// Number of levels kept; `None` truncates automatically.
    pub levels: Option<usize>,
    /// Level whose derivatives define the revival times.
    pub selector: LevelSelector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Exact,
    Split,
    Diag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineBlock {
    pub kind: EngineKind,
    pub split: SplitParams,
    pub diag: DiagParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitParams {
    /// Power of two; chosen from the packet when absent.
    pub grid_size: Option<usize>,
    pub dt: Option<f64>,
    pub wall_height_in_mc2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagParams {
    pub grid_size: usize,
    pub wall_height_in_mc2: f64,
    #[serde(rename = "p_max_in_hbar_over_L")]
    pub p_max_in_hbar_over_l: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Natural,
    TCl,
    TRev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimesBlock {
    pub t_min: f64,
    pub t_max: f64,
    pub unit: TimeUnit,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsBlock {
    /// Levels listed by `spectrum`.
    pub count: usize,
    /// Range tabulated by `revivals` and `spacing`.
    pub n_min: u64,
    pub n_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarpetFormat {
    Csv,
    Bin,
    Pgm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// File stem; defaults to the command name.
    pub basename: Option<String>,
    pub formats: Vec<CarpetFormat>,
    /// Carpet columns after averaging neighbouring nodes.
    pub columns: Option<usize>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            mass: 1.0,
            light_speed: 1.0,
            hbar: 1.0,
            well_width_in_compton: 112.5,
        }
    }
}

impl Default for PacketBlock {
    fn default() -> Self {
        PacketBlock {
            x0_over_l: 0.5,
            sigma_over_l: 0.05,
            p0_in_hbar_over_l: 0.0,
            levels: None,
            selector: LevelSelector::Peak,
        }
    }
}

impl Default for EngineBlock {
    fn default() -> Self {
        EngineBlock {
            kind: EngineKind::Exact,
            split: SplitParams::default(),
            diag: DiagParams::default(),
        }
    }
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            grid_size: None,
            dt: None,
            wall_height_in_mc2: salpeter_core::split::DEFAULT_WALL_HEIGHT,
        }
    }
}

impl Default for DiagParams {
    fn default() -> Self {
        DiagParams {
            grid_size: salpeter_core::momentum::DEFAULT_GRID_SIZE,
            wall_height_in_mc2: salpeter_core::momentum::DEFAULT_WALL_HEIGHT,
            p_max_in_hbar_over_l: None,
        }
    }
}

impl Default for TimesBlock {
    fn default() -> Self {
        TimesBlock {
            t_min: 0.0,
            t_max: 1.0,
            unit: TimeUnit::TRev,
            samples: 201,
        }
    }
}

impl Default for LevelsBlock {
    fn default() -> Self {
        LevelsBlock {
            count: 100,
            n_min: 1,
            n_max: 1000,
        }
    }
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            basename: None,
            formats: vec![CarpetFormat::Bin, CarpetFormat::Pgm],
            columns: None,
        }
    }
}

/// Recursively overlays `patch` onto `base`; objects merge, anything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        Ok(serde_json::from_value(value)?)
    }

    pub fn basename<'a>(&'a self, command: &'a str) -> &'a str {
        self.output.basename.as_deref().unwrap_or(command)
    }

    /// Checks every block and builds the physical objects.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let m = &self.model;
        let model =
            WellModel::with_compton_widths(m.mass, m.light_speed, m.hbar, m.well_width_in_compton)?;
        let p = &self.packet;
        let packet = WavepacketSpec::from_fractions(
            &model,
            p.x0_over_l,
            p.sigma_over_l,
            p.p0_in_hbar_over_l,
        )?;
        if p.levels == Some(0) {
            return Err(CliError::validation("packet.levels must be positive"));
        }

        let t = &self.times;
        if !(t.t_min.is_finite() && t.t_max.is_finite() && t.t_min >= 0.0) {
            return Err(CliError::validation(format!(
                "times must be finite with t_min >= 0, got [{}, {}]",
                t.t_min, t.t_max
            )));
        }
        if t.samples == 0 {
            return Err(CliError::validation("times.samples must be positive"));
        }
        if t.samples > 1 && t.t_max <= t.t_min {
            return Err(CliError::validation(format!(
                "{} samples need t_max > t_min, got [{}, {}]",
                t.samples, t.t_min, t.t_max
            )));
        }
        if t.samples == 1 && t.t_max != t.t_min {
            return Err(CliError::validation("a single sample needs t_max == t_min"));
        }

        let lv = &self.levels;
        if lv.count == 0 || lv.n_min == 0 || lv.n_max < lv.n_min {
            return Err(CliError::validation(format!(
                "levels need count >= 1 and 1 <= n_min <= n_max, got count={}, n_min={}, n_max={}",
                lv.count, lv.n_min, lv.n_max
            )));
        }

        let s = &self.engine.split;
        if !(s.wall_height_in_mc2.is_finite() && s.wall_height_in_mc2 > 0.0) {
            return Err(CliError::validation(
                "engine.split.wall_height_in_mc2 must be positive",
            ));
        }
        if let Some(dt) = s.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::validation("engine.split.dt must be positive"));
            }
        }
        let d = &self.engine.diag;
        if !(d.wall_height_in_mc2.is_finite() && d.wall_height_in_mc2 > 0.0) {
            return Err(CliError::validation(
                "engine.diag.wall_height_in_mc2 must be positive",
            ));
        }
        if d.grid_size < 2 || !d.grid_size.is_multiple_of(2) {
            return Err(CliError::validation(format!(
                "engine.diag.grid_size must be even and >= 2, got {}",
                d.grid_size
            )));
        }
        if let Some(p) = d.p_max_in_hbar_over_l {
            if !(p.is_finite() && p > 0.0) {
                return Err(CliError::validation(
                    "engine.diag.p_max_in_hbar_over_L must be positive",
                ));
            }
        }

        if let Some(name) = &self.output.basename {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(CliError::validation(format!(
                    "output.basename must be a plain file stem, got {name:?}"
                )));
            }
        }
        if self.output.columns == Some(0) {
            return Err(CliError::validation("output.columns must be positive"));
        }
        Ok(Resolved { model, packet })
    }
}

/// Validated physical inputs.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub model: WellModel,
    pub packet: WavepacketSpec,
}

/// Packet state decomposed on a well grid, with its revival times.
pub struct Decomposed {
    pub grid: SpatialGrid,
    pub coeffs: CoefficientVector,
    pub revivals: RevivalTimes,
}

impl Resolved {
    pub fn decompose_on(
        &self,
        config: &RunConfig,
        grid: SpatialGrid,
    ) -> Result<Decomposed, CliError> {
        let truncation = match config.packet.levels {
            Some(n) => Truncation::Levels(n),
            None => Truncation::Auto,
        };
        let state = gaussian_state(&self.model, &self.packet, &grid)?;
        let coeffs = decompose(&state, &self.model, truncation)?;
        let n0 = config.packet.selector.select(&coeffs)?;
        Ok(Decomposed {
            grid,
            coeffs,
            revivals: revival_times(&self.model, n0),
        })
    }

    pub fn decompose(&self, config: &RunConfig) -> Result<Decomposed, CliError> {
        self.decompose_on(config, self.packet.default_grid(&self.model)?)
    }

    /// Split-operator settings from the packet defaults and any overrides.
    pub fn propagation(
        &self,
        config: &RunConfig,
        t_classical: f64,
    ) -> Result<PropagationConfig, CliError> {
        let s = &config.engine.split;
        let model = &self.model;
        let base = PropagationConfig::for_packet(model, &self.packet, t_classical)?;
        let mut prop = match s.grid_size {
            Some(n) => PropagationConfig::new(
                model,
                n,
                PropagationConfig::layout(n),
                base.dt(),
                base.wall_height(),
            )?,
            None => base,
        };
        prop = prop.with_wall_height(model, s.wall_height_in_mc2 * model.rest_energy())?;
        if let Some(dt) = s.dt {
            prop = prop.with_dt(model, dt)?;
        }
        let per_sigma = self.packet.width() / prop.spacing(model);
        if per_sigma < MIN_POINTS_PER_SIGMA {
            let need =
                (MIN_POINTS_PER_SIGMA * model.well_width() / self.packet.width()).ceil() as usize;
            let mut n = prop.grid_size();
            while PropagationConfig::layout(n) < need {
                n *= 2;
            }
            return Err(CliError::validation(format!(
                "split grid of {} nodes gives {per_sigma:.2} points per sigma (need {MIN_POINTS_PER_SIGMA}); use engine.split.grid_size >= {n}",
                prop.grid_size()
            )));
        }
        Ok(prop)
    }
}

impl TimesBlock {
    /// Absolute sample times.
    pub fn resolve(&self, revivals: &RevivalTimes) -> Vec<f64> {
        let unit = match self.unit {
            TimeUnit::Natural => 1.0,
            TimeUnit::TCl => revivals.t_classical,
            TimeUnit::TRev => revivals.t_revival,
        };
        let t0 = self.t_min * unit;
        if self.samples == 1 {
            return vec![t0];
        }
        let step = (self.t_max - self.t_min) * unit / (self.samples - 1) as f64;
        uniform_times(t0, step, self.samples)
    }
}
