//! Mean forces, friction and momentum diffusion acting on the atomic center of mass.
//!
//! All channels take the drive's [`RabiSample`] and the local [`LineState`];
//! with `R = Re ζ`, `I = Im ζ` and `Z = |ζ|²` the drive force is
//! `ħ/Z [2∇Φ Ω² R + ∇(Ω²) I]` and the vacuum reaction force `ħ ⟨σ†σ⟩ ∇Δ_F`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{AtomSpec, Units};
use crate::response::{Drive, RabiSample};
use crate::spectral::{LineState, SpectralModel};

/// Angular shape of the recoil diffusion tensor (determinant 1/144).
pub fn free_diffusion_shape() -> Matrix3<f64> {
    Matrix3::new(1.0 / 3.0, 0.25, 0.5, 0.25, 1.0 / 3.0, 0.5, 0.5, 0.5, 1.0)
}

fn transverse(g: [f64; 2]) -> Vector3<f64> {
    Vector3::new(g[0], g[1], 0.0)
}

/// Radiation pressure plus gradient force.
pub fn drive_mean_force(hbar: f64, rabi: &RabiSample, line: &LineState) -> Vector3<f64> {
    let (re, im) = line.zeta();
    let z2 = re * re + im * im;
    let omega2 = rabi.omega * rabi.omega;
    let grad_omega2 = rabi.grad_omega * (2.0 * rabi.omega);
    (rabi.grad_phi * (2.0 * omega2 * re) + grad_omega2 * im) * (hbar / z2)
}

/// `Ω²/|ζ|²` without the saturation warning, for inner loops.
fn excitation(rabi: &RabiSample, line: &LineState) -> f64 {
    let (re, im) = line.zeta();
    rabi.omega * rabi.omega / (re * re + im * im)
}

/// `ħ ⟨σ†σ⟩ ∇Δ_F`.
pub fn vacuum_reaction_force(hbar: f64, rabi: &RabiSample, line: &LineState) -> Vector3<f64> {
    transverse(line.grad_delta_f) * (hbar * excitation(rabi, line))
}

/// Velocity-linear drive force. The last two terms, driven by the spatial
/// variation of ζ, are included when `threshold_terms` is set.
pub fn drive_friction_force(hbar: f64, rabi: &RabiSample, line: &LineState, v: &Vector3<f64>, threshold_terms: bool) -> Vector3<f64> {
    let (r, i) = line.zeta();
    let z2 = r * r + i * i;
    let z4 = z2 * z2;
    let om = rabi.omega;
    let om2 = om * om;
    let gphi = &rabi.grad_phi;
    let gom = &rabi.grad_omega;
    let gom2 = gom * (2.0 * om);
    let diff = r * r - i * i;

    let t1 = gphi * (-hbar * v.dot(&(gom2 * diff - gphi * (4.0 * r * i * om2))) / z4);
    let t2 = gom * (hbar * v.dot(&(gphi * (2.0 * diff * om) - gom * (4.0 * r * i))) / z4);
    let mut force = t1 + t2;

    if threshold_terms {
        let grad_r = transverse(line.grad_gamma_f);
        let grad_i = transverse(line.grad_delta_f);
        let grad_z2 = grad_r * (2.0 * r) + grad_i * (2.0 * i);
        let z6 = z4 * z2;
        let t3 = gphi * (hbar * 2.0 * om2 / z6 * v.dot(&(grad_z2 * ((r + i) * (r - i)) - (grad_r * r - grad_i * i) * z2)));
        let t4 = gom * (hbar * 2.0 * om / z6 * v.dot(&(grad_z2 * (2.0 * r * i) - (grad_i * r + grad_r * i) * z2)));
        force += t3 + t4;
    }
    force
}

/// Velocity-linear part of the vacuum reaction force: `ħ ∇Δ_F` times the
/// first-order change of the excitation,
/// `[−v·∇Ω² R + 2 v·∇Φ I Ω² + 2 v·∇(R²) Ω²] / |ζ|⁴`.
pub fn vacuum_friction_force(hbar: f64, rabi: &RabiSample, line: &LineState, v: &Vector3<f64>) -> Vector3<f64> {
    let (r, i) = line.zeta();
    let z2 = r * r + i * i;
    let z4 = z2 * z2;
    let om2 = rabi.omega * rabi.omega;
    let gom2 = rabi.grad_omega * (2.0 * rabi.omega);
    let grad_r2 = transverse(line.grad_gamma_f) * (2.0 * r);
    let weight = (-v.dot(&gom2) * r + 2.0 * v.dot(&rabi.grad_phi) * i * om2 + 2.0 * v.dot(&grad_r2) * om2) / z4;
    transverse(line.grad_delta_f) * (hbar * weight)
}

/// Recoil diffusion `2ħ²k_A²Γ_F⟨σ†σ⟩ M`.
pub fn diffusion_free(hbar: f64, k_a: f64, line: &LineState, excitation: f64) -> Matrix3<f64> {
    free_diffusion_shape() * (2.0 * hbar * hbar * k_a * k_a * line.gamma_f * excitation)
}

/// Drive-fluctuation diffusion `2ħ²Γ_F⟨σ†σ⟩ (∇Ω∘∇Ω/Ω² + ∇Φ∘∇Φ)`, or only
/// its `∇Φ∘∇Φ` part when `axial_only` is set.
pub fn diffusion_drive(hbar: f64, rabi: &RabiSample, line: &LineState, axial_only: bool) -> Matrix3<f64> {
    let (re, im) = line.zeta();
    let z2 = re * re + im * im;
    let exc = rabi.omega * rabi.omega / z2;
    let phase = rabi.grad_phi * rabi.grad_phi.transpose() * exc;
    let tensor = if axial_only {
        phase
    } else {
        // ∇Ω∘∇Ω/Ω² · Ω²/|ζ|², written without dividing by Ω.
        rabi.grad_omega * rabi.grad_omega.transpose() / z2 + phase
    };
    tensor * (2.0 * hbar * hbar * line.gamma_f)
}

/// Reaction diffusion `ħ² (2Γ_F/|ζ|²) ⟨σ†σ⟩ ∇Δ_F∘∇Δ_F`.
pub fn diffusion_react(hbar: f64, rabi: &RabiSample, line: &LineState) -> Matrix3<f64> {
    let (re, im) = line.zeta();
    let z2 = re * re + im * im;
    let noise = 2.0 * re / z2;
    let g = transverse(line.grad_delta_f);
    g * g.transpose() * (hbar * hbar * noise * excitation(rabi, line))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceOptions {
    /// Include the ζ-gradient friction terms; automatic when absent
    /// (on whenever a branch sits inside the threshold window).
    pub threshold_friction: Option<bool>,
    /// Keep only the axial part of the drive diffusion.
    pub axial_drive_diffusion: bool,
}

/// All channels at one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub line: LineState,
    pub excitation: f64,
    pub drive_mean: Vector3<f64>,
    pub reaction_mean: Vector3<f64>,
    pub mean: Vector3<f64>,
    /// Force per unit velocity; `friction * v` is the velocity-linear force.
    pub friction: Matrix3<f64>,
    pub friction_force: Vector3<f64>,
    pub diffusion: Matrix3<f64>,
}

/// Drive, fiber line model and constants bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ForceModel {
    pub drive: Drive,
    pub spectral: SpectralModel,
    pub hbar: f64,
    pub k_a: f64,
    threshold_friction: bool,
    axial_drive_diffusion: bool,
}

impl ForceModel {
    pub fn new(drive: Drive, spectral: SpectralModel, atom: &AtomSpec, units: Units, options: ForceOptions) -> Self {
        let auto = spectral.threshold_branches().next().is_some();
        Self {
            drive,
            spectral,
            hbar: units.hbar,
            k_a: atom.k_a(units),
            threshold_friction: options.threshold_friction.unwrap_or(auto),
            axial_drive_diffusion: options.axial_drive_diffusion,
        }
    }

    pub fn threshold_friction(&self) -> bool {
        self.threshold_friction
    }

    pub fn line_at(&self, r: &Vector3<f64>) -> LineState {
        self.spectral.line_state(self.drive.detuning(), r.x, r.y)
    }

    /// Mean force and excitation only, the per-stage work of the integrator.
    pub fn mean_force(&self, r: &Vector3<f64>, v: &Vector3<f64>, with_friction: bool) -> Vector3<f64> {
        let line = self.line_at(r);
        let rabi = self.drive.rabi(r);
        let mut f = drive_mean_force(self.hbar, &rabi, &line) + vacuum_reaction_force(self.hbar, &rabi, &line);
        if with_friction {
            f += drive_friction_force(self.hbar, &rabi, &line, v, self.threshold_friction) + vacuum_friction_force(self.hbar, &rabi, &line, v);
        }
        f
    }

    /// Total diffusion tensor at `r`.
    pub fn diffusion(&self, r: &Vector3<f64>) -> Matrix3<f64> {
        let line = self.line_at(r);
        let rabi = self.drive.rabi(r);
        self.diffusion_parts(&rabi, &line)
    }

    fn diffusion_parts(&self, rabi: &RabiSample, line: &LineState) -> Matrix3<f64> {
        let exc = excitation(rabi, line);
        diffusion_free(self.hbar, self.k_a, line, exc)
            + diffusion_drive(self.hbar, rabi, line, self.axial_drive_diffusion)
            + diffusion_react(self.hbar, rabi, line)
    }

    fn friction_tensor(&self, rabi: &RabiSample, line: &LineState) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for j in 0..3 {
            let e = Vector3::ith(j, 1.0);
            let col = drive_friction_force(self.hbar, rabi, line, &e, self.threshold_friction) + vacuum_friction_force(self.hbar, rabi, line, &e);
            m.set_column(j, &col);
        }
        m
    }

    pub fn sample(&self, r: &Vector3<f64>, v: &Vector3<f64>) -> Result<ForceSample> {
        let line = self.line_at(r);
        if !(line.gamma_f > 0.0) {
            return Err(Error::InvalidInput(format!("Gamma_F must be positive, got {}", line.gamma_f)));
        }
        let rabi = self.drive.rabi(r);
        let drive_mean = drive_mean_force(self.hbar, &rabi, &line);
        let reaction_mean = vacuum_reaction_force(self.hbar, &rabi, &line);
        let friction = self.friction_tensor(&rabi, &line);
        let sample = ForceSample {
            line,
            excitation: excitation(&rabi, &line),
            drive_mean,
            reaction_mean,
            mean: drive_mean + reaction_mean,
            friction,
            friction_force: friction * v,
            diffusion: self.diffusion_parts(&rabi, &line),
        };
        let finite = sample.mean.iter().chain(sample.friction.iter()).chain(sample.diffusion.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFiniteForce {
                t: f64::NAN,
                detail: format!("at r = ({}, {}, {})", r.x, r.y, r.z),
            });
        }
        Ok(sample)
    }

    /// Transverse intensity gradient `∇_T Ω²` divided by `2|∇Φ| max Ω²`
    /// over a square grid, row-major with `y` outer.
    pub fn gradient_map(&self, half_width: f64, n: usize) -> Vec<(f64, f64, f64, f64)> {
        let axis = crate::modes::grid_axis(half_width, n);
        let mut raw = Vec::with_capacity(n * n);
        let mut peak: f64 = 0.0;
        for &y in &axis {
            for &x in &axis {
                let rabi = self.drive.rabi(&Vector3::new(x, y, 0.0));
                let g = rabi.grad_omega * (2.0 * rabi.omega);
                peak = peak.max(rabi.omega * rabi.omega);
                raw.push((x, y, g.x, g.y));
            }
        }
        let k = self.drive.spec().k.abs();
        let norm = 2.0 * k * peak;
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        raw.into_iter().map(|(x, y, gx, gy)| (x, y, gx * scale, gy * scale)).collect()
    }
}
