//! Dispersion, loss and atom–mode coupling for the propagating branches of a
//! hollow-core fiber.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::modes::ModeSuperposition;

/// Speed of light in µm/µs.
pub const C_MICRO: f64 = 2.997_924_58e8;

/// Physical constants of the chosen unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub c: f64,
    pub hbar: f64,
}

impl Units {
    /// µm, µs and ħ = 1.
    pub fn si_micro() -> Self {
        Self { c: C_MICRO, hbar: 1.0 }
    }

    /// c = ħ = 1; frequencies are usually quoted in units of ω_A.
    pub fn natural() -> Self {
        Self { c: 1.0, hbar: 1.0 }
    }
}

impl Default for Units {
    fn default() -> Self {
        Self::si_micro()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub omega_a: f64,
    pub gamma: f64,
    pub lambda_a: f64,
    pub mass: f64,
}

impl AtomSpec {
    pub fn new(omega_a: f64, gamma: f64, lambda_a: f64, mass: f64) -> Result<Self> {
        for (name, v) in [("omega_A", omega_a), ("Gamma", gamma), ("lambda_A", lambda_a), ("mass", mass)] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            omega_a,
            gamma,
            lambda_a,
            mass,
        })
    }

    /// Resonance taken from the wavelength, `ω_A = 2πc/λ_A`.
    pub fn from_wavelength(lambda_a: f64, gamma: f64, mass: f64, units: Units) -> Result<Self> {
        Self::new(2.0 * PI * units.c / lambda_a, gamma, lambda_a, mass)
    }

    /// Resonant absorption cross section `3λ²/2π`.
    pub fn area(&self) -> f64 {
        3.0 * self.lambda_a * self.lambda_a / (2.0 * PI)
    }

    /// Resonant wavenumber `ω_A / c`.
    pub fn k_a(&self, units: Units) -> f64 {
        self.omega_a / units.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub index: u32,
    pub omega_th: f64,
    pub profile: ModeSuperposition,
    /// Per-branch extinction override; the fiber value applies when absent.
    #[serde(default)]
    pub extinction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub core_diameter: f64,
    pub extinction: f64,
    pub branches: Vec<BranchSpec>,
    /// Phenomenological bulk broadening; when absent it is built from the branch profiles.
    pub bulk_gamma_f: Option<f64>,
    /// Constant shift added on top of the threshold contributions.
    pub delta_f_offset: f64,
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("core_diameter", self.core_diameter)?;
        ensure_finite("K", self.extinction)?;
        ensure_finite("DeltaF", self.delta_f_offset)?;
        if self.core_diameter <= 0.0 {
            return Err(Error::InvalidInput("core diameter must be positive".into()));
        }
        if self.extinction < 0.0 {
            return Err(Error::InvalidInput("extinction K must be non-negative".into()));
        }
        if let Some(g) = self.bulk_gamma_f {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidInput(format!("bulk GammaF must be non-negative, got {g}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.branches {
            if !seen.insert(b.index) {
                return Err(Error::InvalidInput(format!("duplicate branch index {}", b.index)));
            }
            if !(b.omega_th.is_finite() && b.omega_th >= 0.0) {
                return Err(Error::InvalidInput(format!("branch {}: omega_th must be non-negative", b.index)));
            }
            if let Some(k) = b.extinction {
                if !(k.is_finite() && k >= 0.0) {
                    return Err(Error::InvalidInput(format!("branch {}: K must be non-negative", b.index)));
                }
            }
            b.profile.validate()?;
        }
        Ok(())
    }

    pub fn branch_extinction(&self, branch: &BranchSpec) -> f64 {
        branch.extinction.unwrap_or(self.extinction)
    }
}

/// Branch dispersion `ω(k) = √(ω_th² + c²k²)`.
pub fn omega_of_k(omega_th: f64, k: f64, c: f64) -> f64 {
    omega_th.hypot(c * k)
}

/// Inverse dispersion `|k|(ω)` for `ω ≥ ω_th`.
pub fn k_of_omega(omega_th: f64, omega: f64, c: f64) -> Result<f64> {
    if omega < omega_th {
        return Err(Error::InvalidInput(format!("omega {omega} lies below threshold {omega_th}")));
    }
    Ok(((omega - omega_th) * (omega + omega_th)).sqrt() / c)
}

/// Temporal decay rate `κ = K ω(k)/|k|` of a mode with axial wavenumber `k`.
pub fn kappa_of(omega_th: f64, k: f64, extinction: f64, c: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::DivergentLoss);
    }
    if extinction == 0.0 {
        return Ok(0.0);
    }
    Ok(extinction * omega_of_k(omega_th, k, c) / k.abs())
}

/// Squared atom–mode coupling `g² = (γc/4π)(A_A/A_n)(ω/ω_A)`.
pub fn coupling_g_squared(omega: f64, atom: &AtomSpec, mode_area: f64, c: f64) -> Result<f64> {
    if !(omega > 0.0 && mode_area > 0.0) {
        return Err(Error::InvalidInput("omega and mode area must be positive".into()));
    }
    Ok(atom.gamma * c / (4.0 * PI) * (atom.area() / mode_area) * (omega / atom.omega_a))
}

/// Rough count of guided modes: `⌊2D/λ⌋` axial orders and its square transversally.
pub fn mode_count_estimate(core_diameter: f64, lambda: f64) -> Result<(u64, u64)> {
    if !(core_diameter > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidInput("diameter and wavelength must be positive".into()));
    }
    let axial = (2.0 * core_diameter / lambda).floor() as u64;
    Ok((axial, axial * axial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dispersion_examples() {
        assert_eq!(omega_of_k(1.0, 0.0, 1.0), 1.0);
        assert_eq!(omega_of_k(3.0, 4.0, 1.0), 5.0);
        let k = 1e4;
        assert!((omega_of_k(1.0, k, 1.0) / k - 1.0).abs() < 1e-6);
        assert_eq!(omega_of_k(2.0, -4.0, 1.0), omega_of_k(2.0, 4.0, 1.0));
    }

    #[test]
    fn loss_examples() {
        assert_relative_eq!(kappa_of(3.0, 4.0, 0.1, 1.0).unwrap(), 0.125, max_relative = 1e-15);
        assert!(matches!(kappa_of(1.0, 0.0, 0.1, 1.0), Err(Error::DivergentLoss)));
        assert_eq!(kappa_of(1.0, 2.0, 0.0, 1.0).unwrap(), 0.0);
        let c = 3.0;
        let k = 1e6 / c;
        assert!((kappa_of(1.0, k, 0.2, c).unwrap() / (c * 0.2) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coupling_examples() {
        let atom = AtomSpec::new(2.0, 38.0, 0.78, 1.0).unwrap();
        let c = C_MICRO;
        let g2 = coupling_g_squared(atom.omega_a, &atom, atom.area(), c).unwrap();
        assert_relative_eq!(g2, 38.0 * c / (4.0 * PI), max_relative = 1e-15);
        let doubled = coupling_g_squared(atom.omega_a, &atom, 2.0 * atom.area(), c).unwrap();
        assert_relative_eq!(doubled, 0.5 * g2, max_relative = 1e-15);
        // Hand computation in µm/µs: A_A = 3·0.78²/2π µm², A_n = 100 µm².
        let hand = 38.0 * 2.997_924_58e8 / (4.0 * PI) * (3.0 * 0.6084 / (2.0 * PI)) / 100.0;
        assert_relative_eq!(coupling_g_squared(atom.omega_a, &atom, 100.0, c).unwrap(), hand, max_relative = 1e-14);
    }

    #[test]
    fn mode_counts() {
        assert_eq!(mode_count_estimate(50.0, 0.78).unwrap(), (128, 16384));
        assert_eq!(mode_count_estimate(0.39, 0.78).unwrap(), (1, 1));
        assert!(mode_count_estimate(0.0, 0.78).is_err());
    }

    #[test]
    fn atom_area_and_resonance() {
        let atom = AtomSpec::from_wavelength(0.78, 37.6991, 2.27369, Units::si_micro()).unwrap();
        assert_relative_eq!(atom.omega_a, 2.0 * PI * C_MICRO / 0.78, max_relative = 1e-15);
        assert_relative_eq!(atom.area(), 3.0 * 0.78 * 0.78 / (2.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(atom.k_a(Units::si_micro()), 2.0 * PI / 0.78, max_relative = 1e-15);
        assert!(AtomSpec::new(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn group_velocity_below_c(wth in 0.0f64..10.0, k in -50.0f64..50.0, c in 0.1f64..10.0) {
            let h = 1e-6 * (1.0 + k.abs());
            let vg = (omega_of_k(wth, k + h, c) - omega_of_k(wth, k - h, c)) / (2.0 * h);
            prop_assert!(vg.abs() <= c * (1.0 + 1e-6));
        }

        #[test]
        fn loss_identity(wth in 0.0f64..10.0, k in 0.01f64..50.0, ext in 0.0f64..1.0, c in 0.1f64..10.0) {
            let kappa = kappa_of(wth, k, ext, c).unwrap();
            let expected = ext * omega_of_k(wth, k, c);
            prop_assert!((kappa * k - expected).abs() <= 1e-14 * expected.max(1e-300));
        }

        #[test]
        fn dispersion_round_trip(wth in 0.1f64..10.0, ratio in 0.1f64..1e3, c in 0.1f64..10.0) {
            // ratio = ck/ω_th; below ~0.1 the input ω itself cannot resolve k to 1e-12.
            let k = ratio * wth / c;
            let back = k_of_omega(wth, omega_of_k(wth, k, c), c).unwrap();
            prop_assert!((back - k).abs() <= 1e-12 * k);
        }
    }
}
