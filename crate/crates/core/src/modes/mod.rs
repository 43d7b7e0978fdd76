//! Hermite–Gaussian basis functions and the finite HG superpositions used to
//! approximate hollow-core fiber (Ince–Gaussian) modes.
//!
//! Every profile is evaluated in the waist plane, where the basis is real:
//!
//! ```text
//! u_j(s) = (√(2/π) / (2^j j! w0))^{1/2} H_j(√2 s / w0) exp(-s²/w0²)
//! HG_{l,m}(x, y) = u_l(x) u_m(y)
//! ```
//!
//! Values come from the normalized three-term recurrence
//! `u_{j+1} = (2 s/w0 · u_j − √j u_{j−1}) / √(j+1)`, which never forms the
//! factorial or the raw Hermite polynomial, and gradients from
//! `∂_s u_j = (2/w0)(√j u_{j−1} − (s/w0) u_j)`.

mod table;

pub use table::{load_mode_table, parse_mode_table, Diagnostic, ModeTable};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{gauss_hermite_64, integrate, Tolerance};

/// Highest 1-D order the recurrences are used for.
pub const MAX_ORDER: usize = 40;

/// Allowed deviation of Σα² from one before a superposition is flagged.
pub const NORM_TOLERANCE: f64 = 5e-3;

/// Default energy fraction a rescaled mode must keep inside the core.
pub const DEFAULT_CONTAINMENT: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HGIndex {
    pub l: u32,
    pub m: u32,
}

impl HGIndex {
    pub fn new(l: u32, m: u32) -> Self {
        Self { l, m }
    }

    pub fn order(&self) -> u32 {
        self.l + self.m
    }
}

/// Where a superposition came from; Ince-derived modes carry a single order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeFamily {
    Hermite,
    Ince,
}

/// A transverse mode `f(x, y) = Σ α_{l,m} HG_{l,m}(x, y)` with a shared waist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSuperposition {
    pub label: String,
    pub family: ModeFamily,
    pub waist: f64,
    pub terms: Vec<(HGIndex, f64)>,
}

/// Profile value and transverse gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub value: f64,
    pub gradient: [f64; 2],
}

impl ModeSuperposition {
    pub fn new(label: impl Into<String>, family: ModeFamily, waist: f64, terms: Vec<(HGIndex, f64)>) -> Result<Self> {
        let mode = Self {
            label: label.into(),
            family,
            waist,
            terms,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// A single basis function `HG_{l,m}` with unit coefficient.
    pub fn hermite(l: u32, m: u32, waist: f64) -> Result<Self> {
        Self::new(format!("HG_{l}_{m}"), ModeFamily::Hermite, waist, vec![(HGIndex::new(l, m), 1.0)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput(format!("mode {} has no terms", self.label)));
        }
        if !(self.waist.is_finite() && self.waist > 0.0) {
            return Err(Error::InvalidInput(format!("mode {} waist must be positive, got {}", self.label, self.waist)));
        }
        for (idx, coeff) in &self.terms {
            ensure_finite("mode coefficient", *coeff)?;
            if idx.l as usize > MAX_ORDER || idx.m as usize > MAX_ORDER {
                return Err(Error::InvalidInput(format!(
                    "mode {}: index ({}, {}) exceeds supported order {MAX_ORDER}",
                    self.label, idx.l, idx.m
                )));
            }
        }
        if self.family == ModeFamily::Ince {
            let order = self.terms[0].0.order();
            if self.terms.iter().any(|(idx, _)| idx.order() != order) {
                return Err(Error::InvalidInput(format!("Ince mode {} mixes HG orders", self.label)));
            }
        }
        Ok(())
    }

    /// Same coefficients at another waist.
    pub fn with_waist(&self, waist: f64) -> Result<Self> {
        let mut mode = self.clone();
        mode.waist = waist;
        mode.validate()?;
        Ok(mode)
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a * a).sum()
    }

    /// Highest HG order present.
    pub fn order(&self) -> u32 {
        self.terms.iter().map(|(idx, _)| idx.order()).max().unwrap_or(0)
    }

    fn max_indices(&self) -> (usize, usize) {
        self.terms.iter().fold((0, 0), |(l, m), (idx, _)| (l.max(idx.l as usize), m.max(idx.m as usize)))
    }

    /// Value and transverse gradient in one pass over the basis.
    pub fn sample(&self, x: f64, y: f64) -> ProfileSample {
        let (lmax, mmax) = self.max_indices();
        let w = self.waist;
        let mut ux = [0.0; MAX_ORDER + 1];
        let mut uy = [0.0; MAX_ORDER + 1];
        hermite_functions(lmax, x, w, &mut ux);
        hermite_functions(mmax, y, w, &mut uy);

        let mut value = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (idx, a) in &self.terms {
            let (l, m) = (idx.l as usize, idx.m as usize);
            value += a * ux[l] * uy[m];
            gx += a * derivative(&ux, l, x, w) * uy[m];
            gy += a * ux[l] * derivative(&uy, m, y, w);
        }
        ProfileSample {
            value,
            gradient: [gx, gy],
        }
    }
}

#[inline]
fn derivative(u: &[f64], j: usize, s: f64, w: f64) -> f64 {
    let lower = if j == 0 { 0.0 } else { (j as f64).sqrt() * u[j - 1] };
    2.0 / w * (lower - s / w * u[j])
}

/// Fill `out[0..=n]` with `u_j(s)` for `j = 0..=n`.
pub(crate) fn hermite_functions(n: usize, s: f64, w0: f64, out: &mut [f64]) {
    let xi = s / w0;
    out[0] = (2.0 / std::f64::consts::PI).powf(0.25) / w0.sqrt() * (-xi * xi).exp();
    if n >= 1 {
        out[1] = 2.0 * xi * out[0];
    }
    for j in 1..n {
        let jf = j as f64;
        out[j + 1] = (2.0 * xi * out[j] - jf.sqrt() * out[j - 1]) / (jf + 1.0).sqrt();
    }
}

/// Same recurrence with the Gaussian factor dropped: `u_j(s) exp(s²/w0²)`.
fn hermite_polynomial_parts(n: usize, s: f64, w0: f64, out: &mut [f64]) {
    let xi = s / w0;
    out[0] = (2.0 / std::f64::consts::PI).powf(0.25) / w0.sqrt();
    if n >= 1 {
        out[1] = 2.0 * xi * out[0];
    }
    for j in 1..n {
        let jf = j as f64;
        out[j + 1] = (2.0 * xi * out[j] - jf.sqrt() * out[j - 1]) / (jf + 1.0).sqrt();
    }
}

/// One-dimensional, L²-normalized Hermite–Gaussian function `u_j(s)` at the waist.
pub fn hg_eval_1d(j: usize, s: f64, w0: f64) -> Result<f64> {
    ensure_finite("s", s)?;
    ensure_finite("w0", w0)?;
    if w0 <= 0.0 {
        return Err(Error::InvalidInput(format!("waist must be positive, got {w0}")));
    }
    if j > MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {j} exceeds {MAX_ORDER}")));
    }
    let mut u = [0.0; MAX_ORDER + 1];
    hermite_functions(j, s, w0, &mut u);
    Ok(u[j])
}

/// `f(r_T)` for a superposition.
pub fn profile_eval(mode: &ModeSuperposition, x: f64, y: f64) -> f64 {
    mode.sample(x, y).value
}

/// Transverse gradient `∇_T f(r_T)` from the basis recurrences.
pub fn profile_grad(mode: &ModeSuperposition, x: f64, y: f64) -> [f64; 2] {
    mode.sample(x, y).gradient
}

/// `∫ u_a(s) u_b(s) ds` by 64-node Gauss–Hermite (exact for a + b ≤ 127).
fn overlap_1d(a: usize, b: usize, w0: f64) -> f64 {
    let rule = gauss_hermite_64();
    let n = a.max(b);
    let scale = w0 / std::f64::consts::SQRT_2;
    rule.integrate(|t| {
        let mut p = [0.0; MAX_ORDER + 1];
        hermite_polynomial_parts(n, scale * t, w0, &mut p);
        p[a] * p[b]
    }) * scale
}

/// `∫∫ f g d²r` for two superpositions sharing a waist.
pub fn overlap(f: &ModeSuperposition, g: &ModeSuperposition) -> Result<f64> {
    if (f.waist - g.waist).abs() > 1e-12 * f.waist {
        return Err(Error::InvalidInput(format!(
            "overlap needs a common waist ({} vs {})",
            f.waist, g.waist
        )));
    }
    let mut total = 0.0;
    for (i, a) in &f.terms {
        for (j, b) in &g.terms {
            total += a * b * overlap_1d(i.l as usize, j.l as usize, f.waist) * overlap_1d(i.m as usize, j.m as usize, f.waist);
        }
    }
    Ok(total)
}

/// Mode cross section `A_n = ∫∫ |f|² d²r`.
///
/// With the L²-normalized basis this is Σα² for an orthonormal
/// superposition; it is computed by quadrature rather than assumed.
pub fn cross_section(mode: &ModeSuperposition) -> Result<f64> {
    let area = overlap(mode, mode)?;
    if !area.is_finite() || area <= 0.0 {
        return Err(Error::Quadrature {
            estimate: area,
            error: f64::NAN,
            requested: 0.0,
        });
    }
    Ok(area)
}

/// Fraction of `∫ u_j²` inside `|s| ≤ t` for unit waist.
fn line_fraction(j: usize, t: f64) -> Result<f64> {
    // u_40² is below 1e-40 past |s| = 15, so wider windows only starve the rule.
    let t = t.min(15.0);
    let breaks: Vec<f64> = (1..15).map(f64::from).filter(|&b| b < t).collect();
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-12,
        max_intervals: 500,
    };
    let half = integrate(
        |s| {
            let mut u = [0.0; MAX_ORDER + 1];
            hermite_functions(j, s, 1.0, &mut u);
            u[j] * u[j]
        },
        0.0,
        t,
        &breaks,
        tol,
    )?;
    Ok((2.0 * half.value).min(1.0))
}

/// Worst-case energy fraction of any `HG_{l,m}` with `l + m = order`
/// inside the square `|x|, |y| ≤ half_width` at the given waist.
pub fn containment_fraction(order: usize, half_width: f64, waist: f64) -> Result<f64> {
    let t = half_width / waist;
    let fractions = (0..=order).map(|j| line_fraction(j, t)).collect::<Result<Vec<_>>>()?;
    Ok((0..=order).map(|l| fractions[l] * fractions[order - l]).fold(f64::INFINITY, f64::min))
}

/// Largest waist `≤ base_waist` keeping order-`order` modes inside the square core.
///
/// The energy fraction is monotone in the waist, so plain bisection applies.
pub fn waist_for_order(order: usize, core_half_width: f64, base_waist: f64, threshold: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {order} exceeds {MAX_ORDER}")));
    }
    if !(core_half_width > 0.0 && base_waist > 0.0) {
        return Err(Error::InvalidInput("core half-width and base waist must be positive".into()));
    }
    let fail = || Error::Containment {
        order,
        base_waist,
        threshold,
    };
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(fail());
    }
    if containment_fraction(order, core_half_width, base_waist)? >= threshold {
        return Ok(base_waist);
    }
    let mut lo = base_waist * 1e-6;
    if containment_fraction(order, core_half_width, lo)? < threshold {
        return Err(fail());
    }
    let mut hi = base_waist;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if containment_fraction(order, core_half_width, mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * base_waist {
            break;
        }
    }
    Ok(lo)
}

/// Largest `|f|` of a superposition, searched on a refining grid over ±4 w0.
pub fn peak_magnitude(mode: &ModeSuperposition) -> f64 {
    let mut center = (0.0, 0.0);
    let mut half = 4.0 * mode.waist;
    let n = 161;
    let mut best = 0.0_f64;
    for _ in 0..6 {
        let step = 2.0 * half / (n - 1) as f64;
        let mut best_here = (best, center);
        for i in 0..n {
            let x = center.0 - half + i as f64 * step;
            for j in 0..n {
                let y = center.1 - half + j as f64 * step;
                let v = profile_eval(mode, x, y).abs();
                if v > best_here.0 {
                    best_here = (v, (x, y));
                }
            }
        }
        best = best_here.0;
        center = best_here.1;
        half = 2.0 * step;
    }
    best
}

/// One row of a profile grid export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub sample: ProfileSample,
}

/// Profile and gradient on an `n × n` grid over `[-half_width, half_width]²`,
/// row-major with `y` as the outer index.
pub fn profile_grid(mode: &ModeSuperposition, half_width: f64, n: usize) -> Vec<GridPoint> {
    let coords = grid_axis(half_width, n);
    let mut out = Vec::with_capacity(n * n);
    for &y in &coords {
        for &x in &coords {
            out.push(GridPoint {
                x,
                y,
                sample: mode.sample(x, y),
            });
        }
    }
    out
}

pub(crate) fn grid_axis(half_width: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
}

/// The order-5 odd Ince–Gaussian mode written as three HG terms.
pub fn ig_odd_5_5(waist: f64) -> ModeSuperposition {
    ModeSuperposition {
        label: "IG_o_5_5".into(),
        family: ModeFamily::Ince,
        waist,
        terms: vec![
            (HGIndex::new(4, 1), 0.755),
            (HGIndex::new(2, 3), -0.643),
            (HGIndex::new(0, 5), 0.130),
        ],
    }
}
