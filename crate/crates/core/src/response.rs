//! Drive field and the low-saturation steady state of the atomic polarization.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::modes::{peak_magnitude, ModeSuperposition};
use crate::spectral::LineState;

/// Excitation above which the linear-response model is no longer trusted.
pub const SATURATION_WARNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveKind {
    /// `Ω = α g f(r_T)`, `Φ = kz`.
    Travelling,
    /// `Ω = α g f(r_T) cos(kz)`, `Φ = 0`.
    Standing,
}

/// How the drive profile is scaled before it multiplies `α g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileNormalization {
    /// Unit `∫∫ f² d²r`; Ω carries the 1/w0 scale of the mode.
    Area,
    /// Unit peak `|f|`, so `α g` is the peak Rabi frequency.
    Peak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub profile: ModeSuperposition,
    pub normalization: ProfileNormalization,
    pub amplitude: f64,
    pub coupling: f64,
    pub detuning: f64,
    pub wave: WaveKind,
    pub k: f64,
}

/// Rabi frequency, phase and their gradients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiSample {
    pub omega: f64,
    pub phi: f64,
    pub grad_omega: Vector3<f64>,
    pub grad_phi: Vector3<f64>,
}

impl RabiSample {
    /// No drive at all.
    pub fn dark() -> Self {
        Self {
            omega: 0.0,
            phi: 0.0,
            grad_omega: Vector3::zeros(),
            grad_phi: Vector3::zeros(),
        }
    }
}

/// A validated drive with its profile scale resolved.
#[derive(Debug, Clone)]
pub struct Drive {
    spec: DriveSpec,
    scale: f64,
}

impl Drive {
    pub fn new(spec: DriveSpec) -> Result<Self> {
        spec.profile.validate()?;
        for (name, v) in [("drive amplitude", spec.amplitude), ("g", spec.coupling), ("Delta", spec.detuning), ("k", spec.k)] {
            ensure_finite(name, v)?;
        }
        let scale = match spec.normalization {
            ProfileNormalization::Area => 1.0,
            ProfileNormalization::Peak => {
                let peak = peak_magnitude(&spec.profile);
                if !(peak > 0.0) {
                    return Err(Error::InvalidInput(format!("drive profile {} vanishes everywhere", spec.profile.label)));
                }
                1.0 / peak
            }
        };
        Ok(Self { spec, scale })
    }

    pub fn spec(&self) -> &DriveSpec {
        &self.spec
    }

    pub fn detuning(&self) -> f64 {
        self.spec.detuning
    }

    /// Factor multiplying `f(r_T)` in Ω.
    pub fn amplitude_scale(&self) -> f64 {
        self.spec.amplitude * self.spec.coupling * self.scale
    }

    pub fn rabi(&self, r: &Vector3<f64>) -> RabiSample {
        let s = self.spec.profile.sample(r.x, r.y);
        let a = self.amplitude_scale();
        let k = self.spec.k;
        match self.spec.wave {
            WaveKind::Travelling => RabiSample {
                omega: a * s.value,
                phi: k * r.z,
                grad_omega: Vector3::new(a * s.gradient[0], a * s.gradient[1], 0.0),
                grad_phi: Vector3::new(0.0, 0.0, k),
            },
            WaveKind::Standing => {
                let (sin, cos) = (k * r.z).sin_cos();
                RabiSample {
                    omega: a * s.value * cos,
                    phi: 0.0,
                    grad_omega: Vector3::new(a * s.gradient[0] * cos, a * s.gradient[1] * cos, -a * s.value * k * sin),
                    grad_phi: Vector3::zeros(),
                }
            }
        }
    }
}

fn zeta(line: &LineState) -> Result<Complex64> {
    let (re, im) = line.zeta();
    if !(re > 0.0) {
        return Err(Error::InvalidInput(format!("Re zeta must be positive, got {re}")));
    }
    Ok(Complex64::new(re, im))
}

/// Coherent steady-state polarization `σ = −Ω e^{iΦ}/ζ`.
pub fn sigma_steady(rabi: &RabiSample, line: &LineState) -> Result<Complex64> {
    let z = zeta(line)?;
    Ok(-rabi.omega * Complex64::from_polar(1.0, rabi.phi) / z)
}

/// `⟨σ†σ⟩ = Ω²/|ζ|²`.
pub fn excitation_steady(rabi: &RabiSample, line: &LineState) -> Result<f64> {
    let z = zeta(line)?;
    let excitation = rabi.omega * rabi.omega / z.norm_sqr();
    if excitation > SATURATION_WARNING {
        log::warn!("excitation {excitation:.3} exceeds the low-saturation range");
    }
    Ok(excitation)
}

/// Weight `2Γ_F/|ζ|²` of the white polarization noise.
pub fn polarization_noise_strength(line: &LineState) -> Result<f64> {
    let z = zeta(line)?;
    Ok(2.0 * z.re / z.norm_sqr())
}
