use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use salpeter_core::io::{
    write_carpet_binary, write_carpet_csv, write_carpet_pgm, write_coefficients_csv,
    write_spectrum_comparison_csv, CsvWriter, Field,
};
use salpeter_core::model::{
    energy, kinetic_energy, lorentz_factor, revival_times, velocity, KineticForm,
};
use salpeter_core::momentum::{project, solve, EigenSpectrum, MomentumGrid};
use salpeter_core::observables::{
    autocorrelation, carpet, extract_levels, level_spacing, AutocorrelationSeries, CarpetEngine,
    CarpetGrid, ExtractionOptions,
};
use salpeter_core::split::SplitOperator;
use salpeter_core::wavepacket::gaussian_state;
use salpeter_core::{CoefficientVector, LevelIndex, RevivalTimes, SpatialGrid, WellModel};

use crate::config::{CarpetFormat, Decomposed, EngineKind, Resolved, RunConfig};
use crate::error::CliError;

/// Rows evaluated at once by the exact carpet engine, to bound memory.
const CARPET_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Analytic spectrum; with `--engine diag` also the numerical comparison.
    Spectrum,
    /// Space-time probability density of the configured packet.
    Carpet,
    /// Revival-time table over a range of levels.
    Revivals,
    /// Autocorrelation and the levels recovered from it.
    Autocorr,
    /// Nearest-neighbour level spacings with regime labels.
    Spacing,
    /// Eigenbasis populations of the configured packet.
    Coeffs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Carpet => "carpet",
            Command::Revivals => "revivals",
            Command::Autocorr => "autocorr",
            Command::Spacing => "spacing",
            Command::Coeffs => "coeffs",
        }
    }

    fn engines(self) -> &'static [EngineKind] {
        match self {
            Command::Spectrum | Command::Coeffs => &[EngineKind::Exact, EngineKind::Diag],
            Command::Carpet | Command::Autocorr => &[EngineKind::Exact, EngineKind::Split],
            Command::Revivals | Command::Spacing => {
                &[EngineKind::Exact, EngineKind::Split, EngineKind::Diag]
            }
        }
    }
}

/// Files written by one run, relative to the output directory.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn create(&mut self, name: String) -> Result<BufWriter<File>, CliError> {
        let file = File::create(self.dir.join(&name))
            .map_err(|e| CliError::Io(format!("{}: {e}", self.dir.join(&name).display())))?;
        self.files.push(name);
        Ok(BufWriter::new(file))
    }
}

#[derive(Serialize)]
struct PacketMeta {
    n0: u64,
    omega0: f64,
    t_classical: f64,
    t_revival: f64,
    t_super: f64,
    gamma: f64,
    velocity: f64,
    levels: usize,
    truncation_defect: f64,
    grid_points: usize,
}

impl PacketMeta {
    fn new(d: &Decomposed) -> Self {
        let r = d.revivals;
        PacketMeta {
            n0: r.n0.get(),
            omega0: r.omega0,
            t_classical: r.t_classical,
            t_revival: r.t_revival,
            t_super: r.t_super,
            gamma: r.gamma,
            velocity: r.velocity,
            levels: d.coeffs.n_max(),
            truncation_defect: d.coeffs.truncation_defect(),
            grid_points: d.grid.len(),
        }
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    engine: EngineKind,
    well_width: f64,
    compton_wavelength: f64,
    packet: Option<PacketMeta>,
    details: Value,
    files: Vec<String>,
    config: &'a RunConfig,
}

/// Validates everything, then runs `command` and writes its files into `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let resolved = config.resolve()?;
    let engine = config.engine.kind;
    if !command.engines().contains(&engine) {
        return Err(CliError::validation(format!(
            "the {} command does not support the {engine:?} engine",
            command.name()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut output = Output {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let base = config.basename(command.name()).to_string();
    let (packet, details) = match command {
        Command::Spectrum => (None, spectrum(config, &resolved, &base, &mut output)?),
        Command::Carpet => carpet_cmd(config, &resolved, &base, &mut output)?,
        Command::Revivals => revivals(config, &resolved, &base, &mut output)?,
        Command::Autocorr => autocorr(config, &resolved, &base, &mut output)?,
        Command::Spacing => (None, spacing(config, &resolved, &base, &mut output)?),
        Command::Coeffs => coeffs(config, &resolved, &base, &mut output)?,
    };

    let meta_name = format!("{base}.meta.json");
    let mut files = output.files.clone();
    files.push(meta_name.clone());
    let meta = Meta {
        command: command.name(),
        engine,
        well_width: resolved.model.well_width(),
        compton_wavelength: resolved.model.compton_wavelength(),
        packet,
        details,
        files: output.files.clone(),
        config,
    };
    let mut w = output.create(meta_name)?;
    serde_json::to_writer_pretty(&mut w, &meta).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(files)
}

fn momentum_grid(
    config: &RunConfig,
    model: &WellModel,
    levels: usize,
) -> Result<MomentumGrid, CliError> {
    let d = &config.engine.diag;
    Ok(match d.p_max_in_hbar_over_l {
        Some(p) => MomentumGrid::new(p * model.hbar() / model.well_width(), d.grid_size)?,
        None => MomentumGrid::for_levels(model, levels, d.grid_size)?,
    })
}

fn diagonalize(
    config: &RunConfig,
    model: &WellModel,
    levels: usize,
) -> Result<EigenSpectrum, CliError> {
    let grid = momentum_grid(config, model, levels)?;
    let v0 = config.engine.diag.wall_height_in_mc2 * model.rest_energy();
    Ok(solve(
        &grid,
        model,
        v0,
        levels.min(grid.len()),
        KineticForm::Relativistic,
    )?)
}

fn spectrum(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<Value, CliError> {
    let model = &r.model;
    let count = config.levels.count;
    let mut csv = CsvWriter::new(
        out.create(format!("{base}.csv"))?,
        &["n", "energy", "kinetic_energy", "beta", "gamma"],
    )?;
    for n in 1..=count as u64 {
        let n = LevelIndex::new(n)?;
        csv.row(&[
            Field::Int(n.get()),
            Field::Float(energy(model, n)),
            Field::Float(kinetic_energy(model, n)),
            Field::Float(velocity(model, n) / model.light_speed()),
            Field::Float(lorentz_factor(model, n)),
        ])?;
    }
    csv.finish()?;
    if config.engine.kind != EngineKind::Diag {
        return Ok(json!({ "levels": count }));
    }

    let spectrum = diagonalize(config, model, count)?;
    let bound = spectrum.bound_levels(model);
    write_spectrum_comparison_csv(out.create(format!("{base}_diag.csv"))?, model, bound)?;
    let worst = bound
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let exact = energy(model, LevelIndex::new(k as u64 + 1).expect("k + 1 >= 1"));
            (e - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    Ok(json!({
        "levels": count,
        "bound_levels": bound.len(),
        "max_rel_error": worst,
        "rayleigh_defect": spectrum.rayleigh_defect,
        "p_max": spectrum.grid.p_max(),
        "grid_size": spectrum.grid.len(),
        "wall_height": spectrum.wall_height,
    }))
}

/// Averages blocks of `(len - 1)/columns` nodes; the node at `x = L` is dropped.
fn coarsen(carpet: CarpetGrid, columns: usize) -> Result<CarpetGrid, CliError> {
    let intervals = carpet.cols() - 1;
    if columns > intervals || !intervals.is_multiple_of(columns) {
        return Err(CliError::validation(format!(
            "output.columns = {columns} must divide the {intervals} grid intervals"
        )));
    }
    let block = intervals / columns;
    let dx = carpet.grid.spacing();
    let grid = SpatialGrid::new(
        carpet.grid.origin() + 0.5 * (block - 1) as f64 * dx,
        block as f64 * dx,
        columns,
    )?;
    let density = (0..carpet.rows())
        .flat_map(|r| {
            carpet.row(r)[..intervals]
                .chunks(block)
                .map(|c| c.iter().sum::<f64>() / block as f64)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(CarpetGrid {
        grid,
        density,
        ..carpet
    })
}

fn carpet_cmd(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<(Option<PacketMeta>, Value), CliError> {
    let model = &r.model;
    let probe = r.decompose(config)?;
    let times = config.times.resolve(&probe.revivals);
    let (d, mut grid, details) = match config.engine.kind {
        EngineKind::Split => {
            let prop = r.propagation(config, probe.revivals.t_classical)?;
            let d = r.decompose_on(config, prop.well_grid(model))?;
            let g = carpet(&d.coeffs, &d.grid, &times, CarpetEngine::Split(prop))?;
            let details = json!({
                "grid_size": prop.grid_size(),
                "well_intervals": prop.well_intervals(),
                "dt": prop.dt(),
                "dt_capped": prop.dt_capped(),
                "wall_height": prop.wall_height(),
            });
            (d, g, details)
        }
        _ => {
            let mut merged: Option<CarpetGrid> = None;
            for chunk in times.chunks(CARPET_CHUNK) {
                let mut g = carpet(&probe.coeffs, &probe.grid, chunk, CarpetEngine::Exact)?;
                if let Some(c) = config.output.columns {
                    g = coarsen(g, c)?;
                }
                match merged.as_mut() {
                    Some(m) => {
                        m.times.extend_from_slice(&g.times);
                        m.density.append(&mut g.density);
                    }
                    None => merged = Some(g),
                }
            }
            let g = merged.expect("at least one sample time");
            let details = json!({ "grid_intervals": probe.grid.len() - 1 });
            (probe, g, details)
        }
    };
    if config.engine.kind == EngineKind::Split {
        if let Some(c) = config.output.columns {
            grid = coarsen(grid, c)?;
        }
    }
    let g = grid.with_packet(r.packet);
    for format in &config.output.formats {
        match format {
            CarpetFormat::Csv => write_carpet_csv(out.create(format!("{base}.csv"))?, &g)?,
            CarpetFormat::Bin => write_carpet_binary(out.create(format!("{base}.bin"))?, &g)?,
            CarpetFormat::Pgm => write_carpet_pgm(out.create(format!("{base}.pgm"))?, &g)?,
        }
    }
    let mut details = details;
    details["rows"] = json!(g.rows());
    details["cols"] = json!(g.cols());
    Ok((Some(PacketMeta::new(&d)), details))
}

fn write_revival_row(
    csv: &mut CsvWriter<BufWriter<File>>,
    model: &WellModel,
    t: &RevivalTimes,
) -> Result<(), CliError> {
    csv.row(&[
        Field::Int(t.n0.get()),
        Field::Float(t.velocity / model.light_speed()),
        Field::Float(t.gamma),
        Field::Float(t.t_classical),
        Field::Float(t.t_revival),
        Field::Float(t.t_super),
        Field::Float(t.t_revival / t.t_classical),
    ])?;
    Ok(())
}

fn revivals(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<(Option<PacketMeta>, Value), CliError> {
    let model = &r.model;
    let mut csv = CsvWriter::new(
        out.create(format!("{base}.csv"))?,
        &[
            "n",
            "beta",
            "gamma",
            "t_classical",
            "t_revival",
            "t_super",
            "t_revival_over_t_classical",
        ],
    )?;
    for n in config.levels.n_min..=config.levels.n_max {
        write_revival_row(&mut csv, model, &revival_times(model, LevelIndex::new(n)?))?;
    }
    csv.finish()?;
    let d = r.decompose(config)?;
    Ok((
        Some(PacketMeta::new(&d)),
        json!({
            "n_min": config.levels.n_min,
            "n_max": config.levels.n_max,
            "light_crossing_time": 2.0 * model.well_width() / model.light_speed(),
            "nonrelativistic_revival_time": model.nonrelativistic_revival_time(),
        }),
    ))
}

/// `A(t) = ⟨ψ(0)|ψ(t)⟩` from split-operator propagation on the box grid.
fn split_autocorrelation(
    config: &RunConfig,
    r: &Resolved,
    t_classical: f64,
    times: &[f64],
) -> Result<(AutocorrelationSeries, Value), CliError> {
    let model = &r.model;
    let prop = r.propagation(config, t_classical)?;
    let initial = gaussian_state(model, &r.packet, &prop.box_grid(model))?;
    let mut state = initial.clone();
    let mut values: Vec<Complex64> = Vec::with_capacity(times.len());
    let mut op = SplitOperator::new(model, prop);
    let report = op.propagate(&mut state, *times.last().expect("validated"), times, |s| {
        values.push(initial.overlap(s))
    })?;
    let details = json!({
        "grid_size": prop.grid_size(),
        "well_intervals": prop.well_intervals(),
        "dt": prop.dt(),
        "dt_capped": prop.dt_capped(),
        "wall_height": prop.wall_height(),
        "steps": report.steps,
        "norm_drift": report.norm_drift,
    });
    Ok((AutocorrelationSeries::new(times.to_vec(), values)?, details))
}

/// Level nearest to `e` on the analytic ladder.
fn nearest_level(model: &WellModel, e: f64) -> LevelIndex {
    let x = ((e / model.rest_energy()).powi(2) - 1.0).max(0.0).sqrt();
    let n = (x * model.reduced_width() / std::f64::consts::PI)
        .round()
        .max(1.0);
    LevelIndex::new(n as u64).expect("n >= 1")
}

fn autocorr(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<(Option<PacketMeta>, Value), CliError> {
    let model = &r.model;
    let d = r.decompose(config)?;
    let times = config.times.resolve(&d.revivals);
    let (series, mut details) = match config.engine.kind {
        EngineKind::Split => split_autocorrelation(config, r, d.revivals.t_classical, &times)?,
        _ => (
            autocorrelation(&d.coeffs.renormalized()?, &times),
            json!({}),
        ),
    };
    let mut csv = CsvWriter::new(
        out.create(format!("{base}.csv"))?,
        &["t", "re", "im", "abs"],
    )?;
    for (&t, a) in series.times.iter().zip(&series.values) {
        csv.floats(&[t, a.re, a.im, a.norm()])?;
    }
    csv.finish()?;

    if series.len() >= 2 {
        let base_energy = energy(model, d.revivals.n0);
        let ext = extract_levels(
            &series,
            model.hbar(),
            ExtractionOptions::around(base_energy),
        )?;
        let mut csv = CsvWriter::new(
            out.create(format!("{base}_levels.csv"))?,
            &[
                "energy",
                "weight",
                "nearest_n",
                "analytic_energy",
                "offset_in_resolution",
            ],
        )?;
        for p in &ext.peaks {
            let n = nearest_level(model, p.energy);
            let exact = energy(model, n);
            csv.row(&[
                Field::Float(p.energy),
                Field::Float(p.weight),
                Field::Int(n.get()),
                Field::Float(exact),
                Field::Float((p.energy - exact) / ext.resolution),
            ])?;
        }
        csv.finish()?;
        // levels outside base ± πħ/δt fold back into the window
        let weights = d.coeffs.weights();
        let floor = 1e-8 * weights.iter().cloned().fold(0.0, f64::max);
        let reach = d
            .coeffs
            .levels()
            .zip(&weights)
            .filter(|(_, &w)| w > floor)
            .map(|((n, _), _)| (energy(model, n) - base_energy).abs())
            .fold(0.0, f64::max);
        let covered = reach <= ext.window_span;
        if !covered {
            eprintln!(
                "salpeter: warning: sampling step folds levels up to {reach:.3e} from the band center into a window of ±{:.3e}; use a smaller time step",
                ext.window_span
            );
        }
        details["band_covered"] = json!(covered);
        details["resolution"] = json!(ext.resolution);
        details["base_energy"] = json!(ext.base_energy);
        details["window_span"] = json!(ext.window_span);
        details["peaks"] = json!(ext.peaks.len());
    }
    details["samples"] = json!(series.len());
    Ok((Some(PacketMeta::new(&d)), details))
}

fn spacing(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<Value, CliError> {
    let model = &r.model;
    let stats = level_spacing(model, config.levels.n_max as usize)?;
    let mut csv = CsvWriter::new(
        out.create(format!("{base}.csv"))?,
        &["n", "spacing", "spacing_over_asymptote", "beta", "regime"],
    )?;
    for (k, (&s, regime)) in stats.spacings.iter().zip(&stats.regimes).enumerate() {
        let n = LevelIndex::new(k as u64 + 1)?;
        if n.get() < config.levels.n_min {
            continue;
        }
        csv.row(&[
            Field::Int(n.get()),
            Field::Float(s),
            Field::Float(s / stats.asymptote),
            Field::Float(velocity(model, n) / model.light_speed()),
            Field::Text(regime.label()),
        ])?;
    }
    csv.finish()?;
    Ok(json!({
        "mean": stats.mean,
        "variance": stats.variance,
        "asymptote": stats.asymptote,
        "asymptote_gap": stats.asymptote_gap,
    }))
}

fn coeffs(
    config: &RunConfig,
    r: &Resolved,
    base: &str,
    out: &mut Output,
) -> Result<(Option<PacketMeta>, Value), CliError> {
    let model = &r.model;
    let d = r.decompose(config)?;
    write_coefficients_csv(out.create(format!("{base}.csv"))?, &d.coeffs)?;
    if config.engine.kind != EngineKind::Diag {
        return Ok((Some(PacketMeta::new(&d)), json!({})));
    }

    let spectrum = diagonalize(config, model, d.coeffs.n_max())?;
    let state = gaussian_state(model, &r.packet, &d.grid)?;
    let numeric = project(&spectrum, model, &state);
    let diag = CoefficientVector::new(*model, numeric)?;
    let mut csv = CsvWriter::new(
        out.create(format!("{base}_diag.csv"))?,
        &["n", "abs2_analytic", "abs2_diag", "energy_diag"],
    )?;
    for (((n, a), w), e) in d.coeffs.levels().zip(diag.weights()).zip(&spectrum.levels) {
        csv.row(&[
            Field::Int(n.get()),
            Field::Float(a.norm_sqr()),
            Field::Float(w),
            Field::Float(*e),
        ])?;
    }
    csv.finish()?;
    Ok((
        Some(PacketMeta::new(&d)),
        json!({
            "diag_levels": spectrum.levels.len(),
            "diag_weight": diag.total_weight(),
            "p_max": spectrum.grid.p_max(),
            "grid_size": spectrum.grid.len(),
            "wall_height": spectrum.wall_height,
        }),
    ))
}
