//! Fiber-induced broadening Γ_F and lineshift Δ_F of the atomic line.
//!
//! Each branch contributes a threshold excess: the dispersion integral with
//! the branch threshold minus the same integral with the threshold removed.
//! The bulk part is either a phenomenological constant or the unit-pulse
//! approximation `γ A_A Σ f²/(2A_n)`.
//!
//! Branch integrals are evaluated in the offset variable `t = ω − ω_th`, with
//! `Δ_th = ω_A − ω_th` carried separately, so that resonances of width `cK`
//! stay resolved even when ω_A is of order 10⁹. The differences
//! `B(ω;ω_th) − B(ω;0)` and `D(ω;ω_th) − D(ω;0)` are formed algebraically to
//! avoid cancellation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{AtomSpec, BranchSpec, FiberSpec, Units};
use crate::modes::{cross_section, ModeSuperposition};
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, Tolerance};

/// Numerical settings of the dispersion integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSettings {
    pub tolerance: Tolerance,
    /// Only branches with `|ω_th − ω_A|` inside this window get threshold terms.
    /// Defaults to 10³γ when absent.
    pub threshold_window: Option<f64>,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::default(),
            threshold_window: None,
        }
    }
}

impl SpectralSettings {
    pub fn window(&self, atom: &AtomSpec) -> f64 {
        self.threshold_window.unwrap_or(1e3 * atom.gamma)
    }
}

/// Complex line data at one position with transverse gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineState {
    pub gamma_f: f64,
    pub delta_f: f64,
    pub delta_drive: f64,
    pub grad_gamma_f: [f64; 2],
    pub grad_delta_f: [f64; 2],
}

impl LineState {
    /// `(Re ζ, Im ζ)` with `ζ = Γ_F + i(Δ_dr + Δ_F)`.
    pub fn zeta(&self) -> (f64, f64) {
        (self.gamma_f, self.delta_drive + self.delta_f)
    }
}

fn check_args(omega: f64, omega_th: f64, ck: f64) -> Result<()> {
    if !(ck > 0.0) {
        return Err(Error::InvalidInput(format!("cK must be positive, got {ck}")));
    }
    if omega == 0.0 && omega_th > 0.0 {
        return Err(Error::InvalidInput("omega = 0 with a positive threshold".into()));
    }
    if omega < omega_th || omega_th < 0.0 {
        return Err(Error::InvalidInput(format!("need omega ≥ omega_th ≥ 0, got {omega}, {omega_th}")));
    }
    Ok(())
}

/// Broadening integrand `B = ω cK / [(cK)² + (1 − ω_th²/ω²)(ω_A − ω)²]`.
pub fn integrand_b(omega: f64, omega_th: f64, omega_a: f64, ck: f64) -> Result<f64> {
    check_args(omega, omega_th, ck)?;
    if omega == 0.0 {
        return Ok(0.0);
    }
    let confinement = (omega - omega_th) * (omega + omega_th) / (omega * omega);
    let d = omega_a - omega;
    Ok(omega * ck / (ck * ck + confinement * d * d))
}

/// Lineshift integrand `D = ω² s (ω_A − ω) / [c²K²ω² + s²(ω_A − ω)²]`, `s = √(ω² − ω_th²)`.
pub fn integrand_d(omega: f64, omega_th: f64, omega_a: f64, ck: f64) -> Result<f64> {
    check_args(omega, omega_th, ck)?;
    if omega == 0.0 {
        return Ok(0.0);
    }
    let s2 = (omega - omega_th) * (omega + omega_th);
    let d = omega_a - omega;
    Ok(omega * omega * s2.sqrt() * d / (ck * ck * omega * omega + s2 * d * d))
}

/// Shared pieces of both difference integrands at offset `t` above threshold.
struct Offset {
    omega: f64,
    rho: f64,
    one_minus_rho: f64,
    delta: f64,
    den_th: f64,
    den_0: f64,
}

#[inline]
fn offset_terms(t: f64, omega_th: f64, detuning_th: f64, ck: f64) -> Offset {
    let omega = omega_th + t;
    let rho = (t * (2.0 * omega_th + t)).sqrt() / omega;
    let one_minus_rho = (omega_th / omega).powi(2) / (1.0 + rho);
    let delta = detuning_th - t;
    let ck2 = ck * ck;
    Offset {
        omega,
        rho,
        one_minus_rho,
        delta,
        den_th: ck2 + rho * rho * delta * delta,
        den_0: ck2 + delta * delta,
    }
}

/// `B(ω;ω_th) − B(ω;0)` at `ω = ω_th + t`.
fn broadening_excess_at(t: f64, omega_th: f64, detuning_th: f64, ck: f64) -> f64 {
    let o = offset_terms(t, omega_th, detuning_th, ck);
    ck * omega_th * omega_th * o.delta * o.delta / (o.omega * o.den_th * o.den_0)
}

/// `D(ω;ω_th) − D(ω;0)` at `ω = ω_th + t`.
fn lineshift_excess_at(t: f64, omega_th: f64, detuning_th: f64, ck: f64) -> f64 {
    let o = offset_terms(t, omega_th, detuning_th, ck);
    o.omega * o.delta * o.one_minus_rho * (o.rho * o.delta * o.delta - ck * ck) / (o.den_th * o.den_0)
}

/// Upper end of the finite quadrature range, as an offset above threshold.
fn finite_span(omega_th: f64, detuning_th: f64, ck: f64, gamma: f64) -> f64 {
    (detuning_th + (1e4 * ck).max(1e3 * gamma).max(10.0 * omega_th)).max(1e4 * ck)
}

/// Breakpoints at geometric distances from threshold and from resonance.
fn breakpoints(omega_th: f64, detuning_th: f64, ck: f64, span: f64) -> Vec<f64> {
    let mut out = Vec::new();
    // Width of the threshold peak, where the confinement factor catches up with cK.
    let t0 = omega_th * ck * ck / (2.0 * detuning_th.abs().max(ck).powi(2));
    let mut scale = t0.min(ck * 1e-6);
    while scale < span {
        out.push(scale);
        out.push(detuning_th - scale);
        out.push(detuning_th + scale);
        scale *= 10.0;
    }
    out.push(detuning_th);
    out.retain(|&b| b > 0.0 && b < span);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn excess_integral(
    integrand: fn(f64, f64, f64, f64) -> f64,
    omega_th: f64,
    detuning_th: f64,
    ck: f64,
    gamma: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if omega_th == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if !(ck > 0.0) {
        return Err(Error::InvalidInput(format!("cK must be positive, got {ck}")));
    }
    let span = finite_span(omega_th, detuning_th, ck, gamma);
    let breaks = breakpoints(omega_th, detuning_th, ck, span);
    let f = |t: f64| integrand(t, omega_th, detuning_th, ck);
    let body = integrate(f, 0.0, span, &breaks, tol)?;
    let tail = integrate_to_infinity(f, span, tol)?;
    Ok(Estimate {
        value: body.value + tail.value,
        error: body.error + tail.error,
        intervals: body.intervals + tail.intervals,
    })
}

/// `∫_{ω_th}^∞ [B(ω;ω_th) − B(ω;0)] dω`, with `Δ_th = ω_A − ω_th` given explicitly.
pub fn broadening_integral(omega_th: f64, detuning_th: f64, ck: f64, gamma: f64, tol: Tolerance) -> Result<Estimate> {
    excess_integral(broadening_excess_at, omega_th, detuning_th, ck, gamma, tol)
}

/// `∫_{ω_th}^∞ [D(ω;ω_th) − D(ω;0)] dω`, with `Δ_th = ω_A − ω_th` given explicitly.
pub fn lineshift_integral(omega_th: f64, detuning_th: f64, ck: f64, gamma: f64, tol: Tolerance) -> Result<Estimate> {
    excess_integral(lineshift_excess_at, omega_th, detuning_th, ck, gamma, tol)
}

/// `(γ/2π)(A_A/ω_A)/A_n`: converts an excess integral times `f²` into a rate.
pub fn branch_prefactor(atom: &AtomSpec, mode_area: f64) -> f64 {
    atom.gamma / (2.0 * PI) * atom.area() / atom.omega_a / mode_area
}

fn branch_ck(fiber: &FiberSpec, branch: &BranchSpec, units: Units) -> f64 {
    units.c * fiber.branch_extinction(branch)
}

/// Threshold broadening `Γ_Fn(r_T)` of one branch.
pub fn branch_broadening(branch: &BranchSpec, atom: &AtomSpec, fiber: &FiberSpec, units: Units, settings: &SpectralSettings, x: f64, y: f64) -> Result<f64> {
    let coeff = BranchCoefficients::compute(branch, atom, fiber, units, settings)?;
    Ok(coeff.gamma * branch.profile.sample(x, y).value.powi(2))
}

/// Threshold lineshift `Δ_Fn(r_T)` of one branch.
pub fn branch_lineshift(branch: &BranchSpec, atom: &AtomSpec, fiber: &FiberSpec, units: Units, settings: &SpectralSettings, x: f64, y: f64) -> Result<f64> {
    let coeff = BranchCoefficients::compute(branch, atom, fiber, units, settings)?;
    Ok(coeff.delta * branch.profile.sample(x, y).value.powi(2))
}

/// Bulk broadening: the configured constant, or `γ A_A Σ f²/(2A_n)` over all branches.
pub fn bulk_broadening(fiber: &FiberSpec, atom: &AtomSpec, x: f64, y: f64) -> Result<f64> {
    match fiber.bulk_gamma_f {
        Some(g) => Ok(g),
        None => {
            let mut total = 0.0;
            for b in &fiber.branches {
                total += atom.gamma * atom.area() * b.profile.sample(x, y).value.powi(2) / (2.0 * cross_section(&b.profile)?);
            }
            Ok(total)
        }
    }
}

/// Position-independent factors of one branch: rates per unit `f²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCoefficients {
    pub index: u32,
    pub mode_area: f64,
    pub gamma: f64,
    pub delta: f64,
    pub gamma_error: f64,
    pub delta_error: f64,
}

impl BranchCoefficients {
    pub fn compute(branch: &BranchSpec, atom: &AtomSpec, fiber: &FiberSpec, units: Units, settings: &SpectralSettings) -> Result<Self> {
        let mode_area = cross_section(&branch.profile)?;
        let pref = branch_prefactor(atom, mode_area);
        let ck = branch_ck(fiber, branch, units);
        let detuning_th = atom.omega_a - branch.omega_th;
        let b = broadening_integral(branch.omega_th, detuning_th, ck, atom.gamma, settings.tolerance)?;
        let d = lineshift_integral(branch.omega_th, detuning_th, ck, atom.gamma, settings.tolerance)?;
        Ok(Self {
            index: branch.index,
            mode_area,
            gamma: pref * b.value,
            delta: pref * d.value,
            gamma_error: pref * b.error,
            delta_error: pref * d.error,
        })
    }
}

/// Precomputed line model: every term is `C_n f_n(r_T)²`, so gradients follow
/// from the mode gradients without numerical differentiation.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    bulk_constant: Option<f64>,
    bulk_terms: Vec<(ModeSuperposition, f64)>,
    threshold_terms: Vec<(ModeSuperposition, BranchCoefficients)>,
    delta_offset: f64,
}

impl SpectralModel {
    pub fn build(fiber: &FiberSpec, atom: &AtomSpec, units: Units, settings: &SpectralSettings) -> Result<Self> {
        fiber.validate()?;
        let window = settings.window(atom);
        let mut bulk_terms = Vec::new();
        let mut threshold_terms = Vec::new();
        for b in &fiber.branches {
            if fiber.bulk_gamma_f.is_none() {
                let area = cross_section(&b.profile)?;
                bulk_terms.push((b.profile.clone(), atom.gamma * atom.area() / (2.0 * area)));
            }
            if b.omega_th > 0.0 && (b.omega_th - atom.omega_a).abs() <= window {
                let coeff = BranchCoefficients::compute(b, atom, fiber, units, settings)?;
                threshold_terms.push((b.profile.clone(), coeff));
            }
        }
        Ok(Self {
            bulk_constant: fiber.bulk_gamma_f,
            bulk_terms,
            threshold_terms,
            delta_offset: fiber.delta_f_offset,
        })
    }

    /// Model with constant Γ_F and Δ_F and no branches.
    pub fn constant(gamma_f: f64, delta_f: f64) -> Self {
        Self {
            bulk_constant: Some(gamma_f),
            bulk_terms: Vec::new(),
            threshold_terms: Vec::new(),
            delta_offset: delta_f,
        }
    }

    pub fn threshold_branches(&self) -> impl Iterator<Item = &BranchCoefficients> {
        self.threshold_terms.iter().map(|(_, c)| c)
    }

    /// Γ_F, Δ_F and their transverse gradients at `(x, y)`.
    pub fn line_state(&self, delta_drive: f64, x: f64, y: f64) -> LineState {
        let mut gamma_f = self.bulk_constant.unwrap_or(0.0);
        let mut delta_f = self.delta_offset;
        let mut grad_gamma_f = [0.0; 2];
        let mut grad_delta_f = [0.0; 2];
        for (mode, c) in &self.bulk_terms {
            let s = mode.sample(x, y);
            gamma_f += c * s.value * s.value;
            for i in 0..2 {
                grad_gamma_f[i] += 2.0 * c * s.value * s.gradient[i];
            }
        }
        for (mode, c) in &self.threshold_terms {
            let s = mode.sample(x, y);
            let f2 = s.value * s.value;
            gamma_f += c.gamma * f2;
            delta_f += c.delta * f2;
            for i in 0..2 {
                grad_gamma_f[i] += 2.0 * c.gamma * s.value * s.gradient[i];
                grad_delta_f[i] += 2.0 * c.delta * s.value * s.gradient[i];
            }
        }
        LineState {
            gamma_f,
            delta_f,
            delta_drive,
            grad_gamma_f,
            grad_delta_f,
        }
    }
}

/// Complete line state straight from the specs.
pub fn line_state(fiber: &FiberSpec, atom: &AtomSpec, units: Units, settings: &SpectralSettings, delta_drive: f64, x: f64, y: f64) -> Result<LineState> {
    let state = SpectralModel::build(fiber, atom, units, settings)?.line_state(delta_drive, x, y);
    if !(state.gamma_f > 0.0) {
        return Err(Error::InvalidInput(format!("Gamma_F must be positive, got {}", state.gamma_f)));
    }
    Ok(state)
}

/// Threshold contributions of a single branch as its threshold is scanned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralScan {
    pub omega_th: Vec<f64>,
    pub gamma_branch: Vec<f64>,
    pub delta_branch: Vec<f64>,
    pub atom_area: f64,
    pub profile_value: f64,
    pub mode_area: f64,
}

/// Γ_Fn and Δ_Fn for one branch of fixed profile value `f` and area `A_n`
/// at each threshold in `thresholds`.
pub fn spectral_scan(atom: &AtomSpec, ck: f64, profile_value: f64, mode_area: f64, thresholds: &[f64], tol: Tolerance) -> Result<SpectralScan> {
    let pref = branch_prefactor(atom, mode_area) * profile_value * profile_value;
    let mut gamma_branch = Vec::with_capacity(thresholds.len());
    let mut delta_branch = Vec::with_capacity(thresholds.len());
    for &wth in thresholds {
        let det = atom.omega_a - wth;
        gamma_branch.push(pref * broadening_integral(wth, det, ck, atom.gamma, tol)?.value);
        delta_branch.push(pref * lineshift_integral(wth, det, ck, atom.gamma, tol)?.value);
    }
    Ok(SpectralScan {
        omega_th: thresholds.to_vec(),
        gamma_branch,
        delta_branch,
        atom_area: atom.area(),
        profile_value,
        mode_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn integrand_examples() {
        assert_relative_eq!(integrand_b(1.0, 0.5, 1.0, 1e-3).unwrap(), 1e3, max_relative = 1e-12);
        assert_relative_eq!(integrand_b(0.7, 0.7, 1.0, 1e-2).unwrap(), 70.0, max_relative = 1e-12);
        let (w, ck) = (1.3, 0.05);
        let lor = w * ck / (ck * ck + 0.09);
        assert_relative_eq!(integrand_b(w, 0.0, 1.0, ck).unwrap(), lor, max_relative = 1e-14);
        assert_eq!(integrand_d(1.0, 0.5, 1.0, 1e-3).unwrap(), 0.0);
        assert_eq!(integrand_d(0.5, 0.5, 1.0, 1e-3).unwrap(), 0.0);
        assert!(integrand_b(0.0, 0.5, 1.0, 1e-3).is_err());
        assert!(integrand_b(0.2, 0.5, 1.0, 1e-3).is_err());
    }

    #[test]
    fn free_lineshift_form() {
        // ω_th = 0 reduces to ω(ω_A−ω)/(c²K² + (ω_A−ω)²).
        for &w in &[0.2, 0.9, 1.1, 3.0] {
            let d = 1.0 - w;
            let expected = w * d / (1e-4 + d * d);
            assert_relative_eq!(integrand_d(w, 0.0, 1.0, 1e-2).unwrap(), expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn stable_differences_match_direct_ones() {
        let (wa, wth, ck) = (1.0, 0.97, 2e-3);
        for &t in &[1e-7, 1e-3, 0.02, 0.03, 0.031, 0.5, 4.0] {
            let w = wth + t;
            let b = integrand_b(w, wth, wa, ck).unwrap() - integrand_b(w, 0.0, wa, ck).unwrap();
            let d = integrand_d(w, wth, wa, ck).unwrap() - integrand_d(w, 0.0, wa, ck).unwrap();
            let bs = broadening_excess_at(t, wth, wa - wth, ck);
            let ds = lineshift_excess_at(t, wth, wa - wth, ck);
            assert!((b - bs).abs() <= 1e-9 * (1.0 + b.abs()), "t={t}: {b} vs {bs}");
            assert!((d - ds).abs() <= 1e-9 * (1.0 + d.abs()), "t={t}: {d} vs {ds}");
        }
    }

    #[test]
    fn threshold_terms_vanish_without_threshold() {
        let tol = Tolerance::default();
        assert_eq!(broadening_integral(0.0, 1.0, 1e-3, 1e-3, tol).unwrap().value, 0.0);
        assert_eq!(lineshift_integral(0.0, 1.0, 1e-3, 1e-3, tol).unwrap().value, 0.0);
        assert_eq!(broadening_excess_at(0.4, 0.0, 1.0, 1e-3), 0.0);
        assert_eq!(lineshift_excess_at(0.4, 0.0, 1.0, 1e-3), 0.0);
    }

    #[test]
    fn lorentzian_normalization() {
        let ck = 1e-4;
        let f = |w: f64| integrand_b(w, 0.0, 1.0, ck).unwrap();
        let tol = Tolerance::default();
        let breaks = [1.0 - 10.0 * ck, 1.0, 1.0 + 10.0 * ck];
        // Cut at ω_A + 10⁴cK; the logarithmic cK/ω tail beyond is below 1e-3.
        let body = integrate(f, 0.0, 1.0 + 1e4 * ck, &breaks, tol).unwrap();
        assert_relative_eq!(body.value / PI, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn broadening_positive_at_resonant_threshold() {
        let est = broadening_integral(1.0, 0.0, 1e-3, 1e-4, Tolerance::default()).unwrap();
        assert!(est.value > 0.0);
    }

    #[test]
    fn far_threshold_is_negligible() {
        // The bulk rate per branch corresponds to an excess integral of π ω_A.
        // A threshold far above resonance only leaves its own peak of height
        // ω_th/cK, which decays like 1/(1 + t/t0) with t0 = ω_th cK²/(2Δ_th²).
        let ck = 1e-8;
        let wth = 3.0;
        let det: f64 = 1.0 - wth;
        let est = broadening_integral(wth, det, ck, 1e-9, Tolerance::default()).unwrap();
        let t0 = wth * ck * ck / (2.0 * det * det);
        let bound = wth / ck * t0 * ((wth / t0).ln() + 1.0);
        assert!(est.value.abs() < 1e-6 * PI, "{}", est.value);
        assert!(est.value.abs() < 2.0 * bound, "{} vs {bound}", est.value);
    }

    #[test]
    fn constant_model() {
        let model = SpectralModel::constant(37.6991, 0.0);
        let s = model.line_state(7728.32, 3.0, -2.0);
        assert_eq!(s.zeta(), (37.6991, 7728.32));
        assert_eq!(s.grad_delta_f, [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn broadening_excess_nonnegative_below_resonance(wth in 0.01f64..1.0, t in 0.0f64..5.0, ck in 1e-5f64..1e-1) {
            prop_assert!(broadening_excess_at(t, wth, 1.0 - wth, ck) >= 0.0);
        }
    }
}
