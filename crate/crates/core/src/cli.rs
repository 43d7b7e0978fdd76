//! Command-line front end: config ingestion, subcommand dispatch and file output.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use serde::Serialize;

use crate::config::{parse_config, RunConfig};
use crate::ensemble::{bootstrap_spearman, run_sweep, summarize, summary_csv};
use crate::error::{Error, Result};
use crate::forces::ForceModel;
use crate::langevin::{simulate_trajectory, trajectory_rng, trapping_time, AtomInField, NoiseMode, Trajectory};
use crate::modes::{cross_section, peak_magnitude, profile_grid, ModeFamily, ModeSuperposition};
use crate::output::{to_json_string, write_file, Csv};
use crate::response::Drive;
use crate::spectral::{spectral_scan, SpectralModel};

#[derive(Debug, Parser)]
#[command(name = "fiberqed", version, about = "Atom dynamics in a hollow-core fiber")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides the integrator seed and the sweep base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// physical, paper-compat or off.
    #[arg(long, global = true, value_name = "MODE")]
    pub noise_mode: Option<NoiseMode>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FIBERQED_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Profile grid of the drive mode and a summary of every configured mode.
    Modes,
    /// Branch broadening and shift as the threshold is scanned.
    Spectrum,
    /// Force, friction and diffusion maps over the transverse plane.
    Forces,
    /// One Langevin trajectory.
    Simulate,
    /// Trapping-time statistics over the configured sweep.
    Sweep,
}

impl Cli {
    fn load(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut run = parse_config(path)?;
        for w in &run.warnings {
            log::warn!("{w}");
        }
        if let Some(seed) = self.seed {
            run.integrator.seed = seed;
            run.file.integrator.seed = seed;
            if let Some(s) = run.sweep.as_mut() {
                s.base_seed = seed;
            }
            if let Some(s) = run.file.sweep.as_mut() {
                s.base_seed = seed;
            }
        }
        if let Some(mode) = self.noise_mode {
            run.integrator.noise_mode = mode;
            run.file.integrator.noise_mode = mode;
        }
        Ok(run)
    }
}

/// Parse-free entry point used by the binary and the tests.
pub fn run(cli: &Cli) -> Result<()> {
    let config = cli.load()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    dispatch(cli.command, &config, &cli.out, cli.threads)
}

pub fn dispatch(command: Command, config: &RunConfig, out: &Path, threads: Option<usize>) -> Result<()> {
    match command {
        Command::Modes => write_modes(config, out),
        Command::Spectrum => write_spectrum(config, out),
        Command::Forces => write_forces(config, out),
        Command::Simulate => write_simulation(config, out),
        Command::Sweep => write_sweep(config, out, threads),
    }
}

/// Drive plus line model as configured.
pub fn force_model(config: &RunConfig) -> Result<ForceModel> {
    let drive = Drive::new(config.drive.clone())?;
    let spectral = SpectralModel::build(&config.fiber, &config.atom, config.units, &config.spectral)?;
    Ok(ForceModel::new(drive, spectral, &config.atom, config.units, config.force_options))
}

#[derive(Serialize)]
struct ModeSummary<'a> {
    role: String,
    label: &'a str,
    family: ModeFamily,
    waist: f64,
    order: u32,
    coefficient_norm: f64,
    cross_section: f64,
    peak_magnitude: f64,
}

fn mode_summary(role: String, mode: &ModeSuperposition) -> Result<ModeSummary<'_>> {
    Ok(ModeSummary {
        role,
        label: &mode.label,
        family: mode.family,
        waist: mode.waist,
        order: mode.order(),
        coefficient_norm: mode.coefficient_norm(),
        cross_section: cross_section(mode)?,
        peak_magnitude: peak_magnitude(mode),
    })
}

fn write_modes(config: &RunConfig, out: &Path) -> Result<()> {
    let (half_width, n) = config.grid();
    let mut csv = Csv::new(&["x", "y", "f", "dfx", "dfy"]);
    for p in profile_grid(&config.drive.profile, half_width, n) {
        csv.row(&[p.x, p.y, p.sample.value, p.sample.gradient[0], p.sample.gradient[1]]);
    }
    write_file(&out.join("modes_grid.csv"), csv.as_str())?;
    let mut summary = vec![mode_summary("drive".into(), &config.drive.profile)?];
    for b in &config.fiber.branches {
        summary.push(mode_summary(format!("branch {}", b.index), &b.profile)?);
    }
    write_file(&out.join("modes.json"), &to_json_string(&summary)?)
}

#[derive(Serialize)]
struct SpectrumMeta {
    ck: f64,
    profile_value: f64,
    mode_area: f64,
    atom_area: f64,
    omega_a: f64,
}

fn write_spectrum(config: &RunConfig, out: &Path) -> Result<()> {
    let s = config.file.spectrum.as_ref().ok_or_else(|| Error::Config("spectrum needs a [spectrum] section".into()))?;
    let ck = s.ck.unwrap_or(config.units.c * config.fiber.extinction);
    let mode = &config.drive.profile;
    let mode_area = match s.mode_area {
        Some(a) => a,
        None => cross_section(mode)?,
    };
    let profile_value = s.profile_value.unwrap_or_else(|| peak_magnitude(mode));
    let thresholds: Vec<f64> = if s.points == 1 {
        vec![s.omega_th_min]
    } else {
        (0..s.points).map(|i| s.omega_th_min + (s.omega_th_max - s.omega_th_min) * i as f64 / (s.points - 1) as f64).collect()
    };
    let scan = spectral_scan(&config.atom, ck, profile_value, mode_area, &thresholds, config.spectral.tolerance)?;
    let mut csv = Csv::new(&["omega_th", "Gamma_branch", "Delta_branch"]);
    for i in 0..thresholds.len() {
        csv.row(&[scan.omega_th[i], scan.gamma_branch[i], scan.delta_branch[i]]);
    }
    write_file(&out.join("spectrum.csv"), csv.as_str())?;
    let meta = SpectrumMeta {
        ck,
        profile_value,
        mode_area,
        atom_area: scan.atom_area,
        omega_a: config.atom.omega_a,
    };
    write_file(&out.join("spectrum.json"), &to_json_string(&meta)?)
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn write_forces(config: &RunConfig, out: &Path) -> Result<()> {
    let model = force_model(config)?;
    let (half_width, n) = config.grid();
    let mut header: Vec<String> = ["x", "y", "Fx", "Fy", "Fz"].iter().map(|s| s.to_string()).collect();
    for prefix in ["fric", "D"] {
        for a in AXES {
            for b in AXES {
                header.push(format!("{prefix}{a}{b}"));
            }
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    let mut grid = Csv::new(&["x", "y", "gx", "gy"]);
    for p in profile_grid(&config.drive.profile, half_width, n) {
        let s = model.sample(&Vector3::new(p.x, p.y, 0.0), &Vector3::zeros())?;
        let mut row = vec![p.x, p.y, s.mean.x, s.mean.y, s.mean.z];
        for m in [&s.friction, &s.diffusion] {
            for i in 0..3 {
                for j in 0..3 {
                    row.push(m[(i, j)]);
                }
            }
        }
        csv.row(&row);
    }
    for (x, y, gx, gy) in model.gradient_map(half_width, n) {
        grid.row(&[x, y, gx, gy]);
    }
    write_file(&out.join("forces.csv"), csv.as_str())?;
    write_file(&out.join("gradient_map.csv"), grid.as_str())
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    config: &'a crate::config::ConfigFile,
    seed: u64,
    noise_mode: NoiseMode,
    steps: usize,
    samples: usize,
    exit_radius: f64,
    exit_time: Option<f64>,
    censored: bool,
    trapping_time: f64,
    max_radius: f64,
    failure: Option<&'a str>,
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut csv = Csv::new(&["t", "x", "y", "z", "vx", "vy", "vz"]);
    for s in &traj.samples {
        csv.row(&[s.t, s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z]);
    }
    csv.into_string()
}

fn write_simulation(config: &RunConfig, out: &Path) -> Result<()> {
    let model = force_model(config)?;
    let field = AtomInField {
        model: &model,
        mass: config.atom.mass,
    };
    let cfg = &config.integrator;
    let mut rng = trajectory_rng(cfg.seed, 0);
    let traj = simulate_trajectory(&field, cfg, &mut rng)?;
    write_file(&out.join("trajectory.csv"), &trajectory_csv(&traj))?;
    let (trap, censored) = trapping_time(&traj);
    let meta = RunMetadata {
        config: &config.file,
        seed: cfg.seed,
        noise_mode: cfg.noise_mode,
        steps: cfg.steps(),
        samples: traj.samples.len(),
        exit_radius: cfg.core_exit_radius,
        exit_time: traj.exit_time,
        censored,
        trapping_time: trap,
        max_radius: traj.max_radius(),
        failure: traj.failure.as_deref(),
    };
    write_file(&out.join("run.json"), &to_json_string(&meta)?)?;
    match &traj.failure {
        Some(f) => Err(Error::NonFiniteForce {
            t: traj.final_state().map_or(0.0, |s| s.t),
            detail: f.clone(),
        }),
        None => Ok(()),
    }
}

fn write_sweep(config: &RunConfig, out: &Path, threads: Option<usize>) -> Result<()> {
    let sweep = config.sweep.as_ref().ok_or_else(|| Error::Config("sweep needs a [sweep] section".into()))?;
    let section = config.file.sweep.as_ref().expect("sweep section present with spec");
    let model = force_model(config)?;
    let cfg = config.sweep_integrator();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let result = pool.install(|| run_sweep(&model, config.atom.mass, sweep, &cfg))?;
    let spearman = if result.values.len() >= 2 && result.values.iter().all(|v| v.n > 0) {
        Some(bootstrap_spearman(&result, section.bootstrap_resamples, section.confidence, sweep.base_seed)?)
    } else {
        None
    };
    write_file(&out.join("sweep_summary.csv"), &summary_csv(&result))?;
    write_file(&out.join("sweep_summary.json"), &to_json_string(&summarize(&result, spearman))?)
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

/// Machine-readable error line for stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&ErrorReport {
        error: err.kind(),
        message: err.to_string(),
    })
    .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", err.kind()))
}
