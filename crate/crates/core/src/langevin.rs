//! Classical Langevin dynamics of the atomic center of mass.
//!
//! Each step is a classic RK4 update of `(r, v)` under the deterministic
//! force. Heating enters in one of two ways:
//!
//! * [`NoiseMode::Physical`]: after the RK4 update the momentum receives an
//!   impulse with zero mean and covariance `2 D dt`.
//! * [`NoiseMode::PaperCompat`]: a random force, held constant over the step,
//!   whose per-axis variance is `(D dt)·unit(F)` with `F` the deterministic
//!   force at the start of the step. Draws are uniform on `±√3·√|var|`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::ForceModel;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Physical,
    PaperCompat,
    /// Deterministic dynamics only.
    Off,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physical" => Ok(Self::Physical),
            "paper-compat" | "paper_compat" => Ok(Self::PaperCompat),
            "off" => Ok(Self::Off),
            other => Err(Error::InvalidInput(format!("unknown noise mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub t_max: f64,
    pub dt: f64,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    pub core_exit_radius: f64,
    /// Keep every `decimation`-th step in the recorded samples.
    pub decimation: usize,
    /// Transverse motion only: z and v_z stay fixed.
    pub planar: bool,
    pub stop_on_exit: bool,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!("t_max must be at least dt, got {}", self.t_max)));
        }
        if !(self.core_exit_radius > 0.0) {
            return Err(Error::InvalidInput("core exit radius must be positive".into()));
        }
        if self.decimation == 0 {
            return Err(Error::InvalidInput("decimation must be at least 1".into()));
        }
        if self.r0.iter().chain(self.v0.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("initial state must be finite".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps, `⌊t_max/dt⌋`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    /// First recorded time with `‖r_T‖` beyond the exit radius.
    pub exit_time: Option<f64>,
    pub t_max: f64,
    /// Set when a step produced a non-finite force; the samples end there.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn censored(&self) -> bool {
        self.exit_time.is_none()
    }

    pub fn final_state(&self) -> Option<&PhaseState> {
        self.samples.last()
    }

    /// Largest transverse radius reached.
    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.r.x.hypot(s.r.y)).fold(0.0, f64::max)
    }
}

/// Anything that can supply forces and a diffusion tensor to the integrator.
pub trait ForceField: Sync {
    fn force(&self, r: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64>;
    fn diffusion(&self, r: &Vector3<f64>) -> Matrix3<f64>;
    fn mass(&self) -> f64;
}

/// A [`ForceModel`] together with the atomic mass; mean force plus friction.
pub struct AtomInField<'a> {
    pub model: &'a ForceModel,
    pub mass: f64,
}

impl ForceField for AtomInField<'_> {
    fn force(&self, r: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        self.model.mean_force(r, v, true)
    }

    fn diffusion(&self, r: &Vector3<f64>) -> Matrix3<f64> {
        self.model.diffusion(r)
    }

    fn mass(&self) -> f64 {
        self.mass
    }
}

/// Generator for one trajectory: a ChaCha8 stream keyed by `(seed, stream)`.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `[-1, 1)` scaled to unit variance.
#[inline]
fn unit_uniform<R: Rng>(rng: &mut R) -> f64 {
    SQRT_3 * (2.0 * rng.random::<f64>() - 1.0)
}

/// Square-root factor `L` with `L Lᵀ = cov`, rejecting indefinite input.
fn covariance_factor(cov: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let off_diagonal = cov[(0, 1)] != 0.0 || cov[(0, 2)] != 0.0 || cov[(1, 2)] != 0.0 || cov[(1, 0)] != 0.0 || cov[(2, 0)] != 0.0 || cov[(2, 1)] != 0.0;
    let scale = cov.abs().max();
    let tol = 1e-12 * scale;
    if !off_diagonal {
        let diag = cov.diagonal();
        if let Some(min) = diag.iter().copied().find(|&d| d < -tol) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        return Ok(Matrix3::from_diagonal(&diag.map(|d| d.max(0.0).sqrt())));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
    Ok(eig.eigenvectors * Matrix3::from_diagonal(&roots))
}

/// Momentum impulse with covariance `2 D dt`, built from unit-variance
/// uniform draws. For diagonal `D` each axis is uniform on `±√3·σ`.
pub fn noise_kick<R: Rng>(d: &Matrix3<f64>, dt: f64, rng: &mut R) -> Result<Vector3<f64>> {
    let factor = covariance_factor(&(d * (2.0 * dt)))?;
    let xi = Vector3::new(unit_uniform(rng), unit_uniform(rng), unit_uniform(rng));
    Ok(factor * xi)
}

/// Random force of the paper-compatible scheme: per-axis variance
/// `(D dt)·unit(f)`, uniform on `±√3·√|var|`, zero when `|f| < 1e-20`.
pub fn paper_noise_force<R: Rng>(d: &Matrix3<f64>, dt: f64, f: &Vector3<f64>, rng: &mut R) -> Vector3<f64> {
    let norm = f.norm();
    if norm < 1e-20 {
        return Vector3::zeros();
    }
    let var = (d * dt) * (f / norm);
    var.map(|vi| vi.abs().sqrt() * unit_uniform(rng))
}

/// One classic RK4 step of `ṙ = v`, `m v̇ = F(r, v)`, with `f0 = F(r0, v0)` precomputed.
pub fn rk4_step<F>(state: &PhaseState, dt: f64, mass: f64, f0: Vector3<f64>, force: F) -> PhaseState
where
    F: Fn(&Vector3<f64>, &Vector3<f64>) -> Vector3<f64>,
{
    let (r, v) = (state.r, state.v);
    let k1r = v * dt;
    let k1v = f0 * (dt / mass);
    let k2r = (v + k1v * 0.5) * dt;
    let k2v = force(&(r + k1r * 0.5), &(v + k1v * 0.5)) * (dt / mass);
    let k3r = (v + k2v * 0.5) * dt;
    let k3v = force(&(r + k2r * 0.5), &(v + k2v * 0.5)) * (dt / mass);
    let k4r = (v + k3v) * dt;
    let k4v = force(&(r + k3r), &(v + k3v)) * (dt / mass);
    PhaseState {
        t: state.t + dt,
        r: r + (k1r + k2r * 2.0 + k3r * 2.0 + k4r) / 6.0,
        v: v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) / 6.0,
    }
}

fn transverse_radius(r: &Vector3<f64>) -> f64 {
    r.x.hypot(r.y)
}

fn planarize(mut f: Vector3<f64>, planar: bool) -> Vector3<f64> {
    if planar {
        f.z = 0.0;
    }
    f
}

fn planar_diffusion(mut d: Matrix3<f64>, planar: bool) -> Matrix3<f64> {
    if planar {
        for i in 0..3 {
            d[(2, i)] = 0.0;
            d[(i, 2)] = 0.0;
        }
    }
    d
}

/// Integrate one trajectory with the generator from [`trajectory_rng`].
pub fn simulate_trajectory<F: ForceField + ?Sized>(field: &F, config: &IntegratorConfig, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    config.validate()?;
    let mass = field.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
    }
    let planar = config.planar;
    let dt = config.dt;
    let force = |r: &Vector3<f64>, v: &Vector3<f64>| planarize(field.force(r, v), planar);

    let mut state = PhaseState {
        t: 0.0,
        r: Vector3::from(config.r0),
        v: Vector3::from(config.v0),
    };
    let mut traj = Trajectory {
        samples: vec![state],
        exit_time: None,
        t_max: config.t_max,
        failure: None,
    };
    if transverse_radius(&state.r) > config.core_exit_radius {
        traj.exit_time = Some(0.0);
        if config.stop_on_exit {
            return Ok(traj);
        }
    }

    let steps = config.steps();
    for step in 1..=steps {
        let f0 = force(&state.r, &state.v);
        let noise_force = match config.noise_mode {
            NoiseMode::PaperCompat => {
                let d = planar_diffusion(field.diffusion(&state.r), planar);
                paper_noise_force(&d, dt, &f0, rng)
            }
            _ => Vector3::zeros(),
        };
        let mut next = rk4_step(&state, dt, mass, f0 + noise_force, |r, v| force(r, v) + noise_force);
        if config.noise_mode == NoiseMode::Physical {
            let d = planar_diffusion(field.diffusion(&state.r), planar);
            next.v += noise_kick(&d, dt, rng)? / mass;
        }
        // Exact time from the step count avoids drift from repeated addition.
        next.t = step as f64 * dt;

        if !(next.r.iter().chain(next.v.iter()).all(|x| x.is_finite())) {
            let err = Error::NonFiniteForce {
                t: state.t,
                detail: format!("state left finite range at step {step}"),
            };
            log::error!("{err}");
            traj.failure = Some(err.to_string());
            if traj.samples.last().map(|s| s.t) != Some(state.t) {
                traj.samples.push(state);
            }
            return Ok(traj);
        }
        state = next;

        let exited = traj.exit_time.is_none() && transverse_radius(&state.r) > config.core_exit_radius;
        if exited {
            traj.exit_time = Some(state.t);
        }
        if step % config.decimation == 0 || step == steps || (exited && config.stop_on_exit) {
            traj.samples.push(state);
        }
        if exited && config.stop_on_exit {
            break;
        }
    }
    Ok(traj)
}

/// First exit time, or `t_max` when the atom never left (second value true).
pub fn trapping_time(trajectory: &Trajectory) -> (f64, bool) {
    match trajectory.exit_time {
        Some(t) => (t, false),
        None => (trajectory.t_max, true),
    }
}
