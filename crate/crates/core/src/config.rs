//! Run configuration: TOML in, validated specs out, canonical JSON for records.
//!
//! Keys use the physics symbol names (`Gamma`, `GammaF`, `Delta`, `lambdaA`,
//! `m`, `w0`, `x0`, `t`, ...).
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{SweepParameter, SweepSpec};
use crate::error::{Error, Result};
use crate::fiber::{AtomSpec, BranchSpec, FiberSpec, Units, C_MICRO};
use crate::forces::ForceOptions;
use crate::langevin::{IntegratorConfig, NoiseMode};
use crate::modes::{ig_odd_5_5, load_mode_table, ModeSuperposition, ModeTable};
use crate::quadrature::Tolerance;
use crate::response::{DriveSpec, ProfileNormalization, WaveKind};
use crate::spectral::SpectralSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitPreset {
    /// µm, µs; c in µm/µs.
    SiMicro,
    /// c = ħ = 1.
    Natural,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_core() -> f64 {
    50.0
}
fn default_profile() -> String {
    "HG_0_0".into()
}
fn default_wave() -> WaveKind {
    WaveKind::Travelling
}
fn default_normalization() -> ProfileNormalization {
    ProfileNormalization::Peak
}
fn default_noise() -> NoiseMode {
    NoiseMode::Physical
}
fn default_decimation() -> usize {
    1
}
fn default_reps() -> usize {
    50
}
fn default_resamples() -> usize {
    2000
}
fn default_confidence() -> f64 {
    0.95
}
fn default_points() -> usize {
    201
}
fn default_grid_points() -> usize {
    41
}
fn default_parameter() -> SweepParameter {
    SweepParameter::Detuning
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "lambdaA")]
    pub lambda_a: f64,
    pub m: f64,
    /// Overrides `2πc/λ_A`.
    #[serde(rename = "omegaA", default)]
    pub omega_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSection {
    pub index: u32,
    pub omega_th: f64,
    pub profile: String,
    /// Defaults to the drive waist.
    #[serde(default)]
    pub w0: Option<f64>,
    #[serde(rename = "K", default)]
    pub extinction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSection {
    #[serde(default = "default_core")]
    pub core_diameter: f64,
    #[serde(rename = "K", default)]
    pub extinction: f64,
    #[serde(rename = "GammaF", default)]
    pub gamma_f: Option<f64>,
    #[serde(rename = "DeltaF", default)]
    pub delta_f: f64,
    #[serde(rename = "branch", default)]
    pub branches: Vec<BranchSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default = "default_profile")]
    pub profile: String,
    pub w0: f64,
    pub g: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub k: f64,
    #[serde(default = "default_wave")]
    pub wave: WaveKind,
    #[serde(default = "default_normalization")]
    pub normalization: ProfileNormalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub x0: f64,
    pub y0: f64,
    #[serde(default)]
    pub z0: f64,
    pub vx0: f64,
    pub vy0: f64,
    #[serde(default)]
    pub vz0: f64,
    pub t: f64,
    pub dt: f64,
    #[serde(default = "default_noise")]
    pub noise_mode: NoiseMode,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the core radius.
    #[serde(default)]
    pub exit_radius: Option<f64>,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default = "yes")]
    pub planar: bool,
    #[serde(default = "yes")]
    pub stop_on_exit: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcesSection {
    #[serde(default)]
    pub threshold_friction: Option<bool>,
    #[serde(default)]
    pub axial_drive_diffusion: bool,
    #[serde(default)]
    pub threshold_window: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_parameter")]
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Replaces the integrator exit radius for the sweep.
    #[serde(default)]
    pub exit_radius: Option<f64>,
    /// Replaces the integrator horizon for the sweep.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub omega_th_min: f64,
    pub omega_th_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Defaults to `c·K`.
    #[serde(default)]
    pub ck: Option<f64>,
    /// Defaults to the peak of the area-normalized drive profile.
    #[serde(default)]
    pub profile_value: Option<f64>,
    /// Defaults to the cross section of the drive profile.
    #[serde(default)]
    pub mode_area: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Defaults to twice the drive waist.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub points: usize,
}

/// The file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub units: Option<UnitPreset>,
    #[serde(default)]
    pub hbar: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub mode_tables: Vec<PathBuf>,
    pub atom: AtomSection,
    pub fiber: FiberSection,
    pub drive: DriveSection,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub forces: ForcesSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub grid: Option<GridSection>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn canonical_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Everything a subcommand needs, validated and cross-referenced.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub preset: UnitPreset,
    pub units: Units,
    pub atom: AtomSpec,
    pub fiber: FiberSpec,
    pub drive: DriveSpec,
    pub integrator: IntegratorConfig,
    pub force_options: ForceOptions,
    pub spectral: SpectralSettings,
    pub sweep: Option<SweepSpec>,
    pub warnings: Vec<String>,
}

/// Parse and validate a TOML config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = ConfigFile::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    RunConfig::resolve(file, path.parent().unwrap_or(Path::new(".")))
}

fn resolve_units(file: &ConfigFile) -> Result<(UnitPreset, Units)> {
    let check = |name: &str, v: Option<f64>| -> Result<()> {
        match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        }
    };
    check("hbar", file.hbar)?;
    check("c", file.c)?;
    let preset = match file.units {
        Some(p) => p,
        None if file.hbar == Some(1.0) && file.c.is_none() => UnitPreset::Natural,
        None => UnitPreset::SiMicro,
    };
    let units = match preset {
        UnitPreset::Natural => {
            if file.hbar.is_some_and(|h| h != 1.0) || file.c.is_some_and(|c| c != 1.0) {
                return Err(Error::Config("natural units require hbar = 1 and c = 1".into()));
            }
            Units::natural()
        }
        UnitPreset::SiMicro => Units {
            c: file.c.unwrap_or(C_MICRO),
            hbar: file.hbar.unwrap_or(1.0),
        },
    };
    Ok((preset, units))
}

fn builtin_mode(label: &str) -> Option<ModeSuperposition> {
    if label == "IG_o_5_5" {
        return Some(ig_odd_5_5(1.0));
    }
    let rest = label.strip_prefix("HG_")?;
    let (l, m) = rest.split_once('_')?;
    ModeSuperposition::hermite(l.parse().ok()?, m.parse().ok()?, 1.0).ok()
}

/// Look a label up in the tables, then among built-ins (`HG_l_m`, `IG_o_5_5`).
pub fn lookup_mode(tables: &[ModeTable], label: &str, waist: f64) -> Result<ModeSuperposition> {
    let found = tables.iter().find_map(|t| t.get(label).cloned()).or_else(|| builtin_mode(label));
    match found {
        Some(mode) => mode.with_waist(waist),
        None => Err(Error::Config(format!("unknown mode label {label:?}"))),
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Validate `file`; relative table paths resolve against `base_dir`.
    pub fn resolve(file: ConfigFile, base_dir: &Path) -> Result<Self> {
        let (preset, units) = resolve_units(&file)?;
        let mut warnings = Vec::new();
        let mut tables = Vec::new();
        for p in &file.mode_tables {
            let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
            let table = load_mode_table(&full)?;
            for w in &table.warnings {
                warnings.push(format!("{}:{}: {}: {}", full.display(), w.line, w.label, w.message));
            }
            tables.push(table);
        }

        let a = &file.atom;
        positive("lambdaA", a.lambda_a)?;
        let atom = match a.omega_a {
            Some(w) => AtomSpec::new(w, a.gamma, a.lambda_a, a.m)?,
            None => AtomSpec::from_wavelength(a.lambda_a, a.gamma, a.m, units)?,
        };

        let d = &file.drive;
        positive("w0", d.w0)?;
        let drive = DriveSpec {
            profile: lookup_mode(&tables, &d.profile, d.w0)?,
            normalization: d.normalization,
            amplitude: d.alpha,
            coupling: d.g,
            detuning: d.delta,
            wave: d.wave,
            k: d.k,
        };

        let f = &file.fiber;
        let branches = f
            .branches
            .iter()
            .map(|b| {
                Ok(BranchSpec {
                    index: b.index,
                    omega_th: b.omega_th,
                    profile: lookup_mode(&tables, &b.profile, b.w0.unwrap_or(d.w0))?,
                    extinction: b.extinction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fiber = FiberSpec {
            core_diameter: f.core_diameter,
            extinction: f.extinction,
            branches,
            bulk_gamma_f: f.gamma_f,
            delta_f_offset: f.delta_f,
        };
        fiber.validate()?;
        if fiber.bulk_gamma_f.is_none() && fiber.branches.is_empty() {
            return Err(Error::Config("fiber needs GammaF or at least one branch".into()));
        }

        let i = &file.integrator;
        let integrator = IntegratorConfig {
            r0: [i.x0, i.y0, i.z0],
            v0: [i.vx0, i.vy0, i.vz0],
            t_max: i.t,
            dt: i.dt,
            noise_mode: i.noise_mode,
            seed: i.seed,
            core_exit_radius: i.exit_radius.unwrap_or(0.5 * fiber.core_diameter),
            decimation: i.decimation,
            planar: i.planar,
            stop_on_exit: i.stop_on_exit,
        };
        integrator.validate()?;

        let fo = &file.forces;
        let mut tolerance = Tolerance::default();
        if let Some(v) = fo.abs_tol {
            tolerance.abs = v;
        }
        if let Some(v) = fo.rel_tol {
            tolerance.rel = v;
        }
        if let Some(v) = fo.max_intervals {
            tolerance.max_intervals = v;
        }
        let spectral = SpectralSettings {
            tolerance,
            threshold_window: fo.threshold_window,
        };
        let force_options = ForceOptions {
            threshold_friction: fo.threshold_friction,
            axial_drive_diffusion: fo.axial_drive_diffusion,
        };

        let sweep = match &file.sweep {
            Some(s) => {
                let spec = SweepSpec {
                    parameter: s.parameter,
                    values: s.values.clone(),
                    repetitions: s.repetitions,
                    base_seed: s.base_seed,
                };
                spec.validate()?;
                if !(s.confidence > 0.0 && s.confidence < 1.0) {
                    return Err(Error::Config(format!("sweep confidence must lie in (0, 1), got {}", s.confidence)));
                }
                Some(spec)
            }
            None => None,
        };
        if let Some(s) = &file.spectrum {
            if !(s.omega_th_min >= 0.0 && s.omega_th_max >= s.omega_th_min && s.points >= 1) {
                return Err(Error::Config("spectrum needs 0 ≤ omega_th_min ≤ omega_th_max and points ≥ 1".into()));
            }
        }

        Ok(Self {
            file,
            preset,
            units,
            atom,
            fiber,
            drive,
            integrator,
            force_options,
            spectral,
            sweep,
            warnings,
        })
    }

    /// Integrator settings for the sweep, with its overrides applied.
    pub fn sweep_integrator(&self) -> IntegratorConfig {
        let mut cfg = self.integrator.clone();
        if let Some(s) = &self.file.sweep {
            if let Some(r) = s.exit_radius {
                cfg.core_exit_radius = r;
            }
            if let Some(t) = s.t {
                cfg.t_max = t;
            }
        }
        cfg
    }

    /// Half width and point count for grid exports.
    pub fn grid(&self) -> (f64, usize) {
        let g = self.file.grid.clone().unwrap_or(GridSection {
            half_width: None,
            points: default_grid_points(),
        });
        (g.half_width.unwrap_or(2.0 * self.file.drive.w0), g.points)
    }
}
