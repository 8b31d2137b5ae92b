//! 1-D Gaussian boundary model.
//!
//! A segment `[t0, t1]` has boundary profile
//! `Ω(t) = exp(-(t - t0)²/2σ²) + exp(-(t - t1)²/2σ²)`. Its transform under
//! `ω(ν) = ∫ Ω(t) e^{-jνt} dt` is
//!
//! ```text
//! ω(ν) = σ√(2π) · (e^{-jνt0} + e^{-jνt1}) · e^{-ν²σ²/2}
//! ```
//!
//! and Parseval reads `∫ ω_s(ν) ω_b(-ν) dν = 2π ∫ Ω_S(t) Ω_B(t) dt`.
//!
//! For equal widths the band-limited overlap has the closed form
//!
//! ```text
//! ∫_{-L}^{L} ω_s(ν) ω_b(-ν) dν
//!     = 2π^{3/2} σ · Σ_{a ∈ s, b ∈ b} e^{-(t_b - t_a)²/4σ²} · Re erf(Lσ - j(t_b - t_a)/2σ)
//! ```
//!
//! which drops to `erf(Lσ) · Σ e^{-(t_b - t_a)²/4σ²}` (same prefactor) when the
//! imaginary shift inside erf is ignored.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fourier::{Complex, RealGrid};
use crate::quadrature::GaussLegendre;

use super::erf::{complex_erf, erf};

const ORDER: usize = 16;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(ORDER))
}

/// Segment `H(t - t0) - H(t - t1)`, `t0 < t1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment1D {
    t0: f64,
    t1: f64,
}

impl BoundarySegment1D {
    pub fn new(t0: f64, t1: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::NonFinite(format!("segment [{t0}, {t1}]")));
        }
        if t0 >= t1 {
            return Err(Error::InvalidInput(format!("segment needs t0 < t1, got [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1 })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    fn edges(&self) -> [f64; 2] {
        [self.t0, self.t1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBoundaryModel {
    segment: BoundarySegment1D,
    sigma: f64,
}

impl GaussianBoundaryModel {
    pub fn new(segment: BoundarySegment1D, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("boundary width sigma must be positive, got {sigma}")));
        }
        Ok(Self { segment, sigma })
    }

    /// Model for a boundary region of width `d`, using `σ = d / 2`.
    pub fn from_region_width(segment: BoundarySegment1D, d: f64) -> Result<Self> {
        Self::new(segment, d / 2.0)
    }

    pub fn segment(&self) -> BoundarySegment1D {
        self.segment
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Boundary-region width `d = 2σ`.
    pub fn region_width(&self) -> f64 {
        2.0 * self.sigma
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        self.segment.edges().iter().map(|e| (-(t - e).powi(2) / s2).exp()).sum()
    }
}

/// `Ω(t)` sampled at `points`.
pub fn gaussian_boundary_profile(model: &GaussianBoundaryModel, points: &[f64]) -> Result<RealGrid> {
    RealGrid::from_vec_1d(points.iter().map(|&t| model.eval(t)).collect())
}

/// Closed-form `ω(ν)` including the `σ√(2π)` Gaussian amplitude.
pub fn gaussian_boundary_spectrum(model: &GaussianBoundaryModel, nu: f64) -> Complex {
    let s = model.sigma;
    let phase: Complex = model
        .segment
        .edges()
        .iter()
        .map(|&e| Complex::from_polar(1.0, -nu * e))
        .sum();
    phase * (s * (2.0 * PI).sqrt() * (-0.5 * nu * nu * s * s).exp())
}

/// `∫ Ω(t) dt = 2σ√(2π)`.
pub fn profile_mass(model: &GaussianBoundaryModel) -> f64 {
    2.0 * model.sigma * (2.0 * PI).sqrt()
}

fn check_limit(nu_limit: f64) -> Result<()> {
    if !nu_limit.is_finite() || nu_limit < 0.0 {
        return Err(Error::InvalidInput(format!("band limit must be finite and >= 0, got {nu_limit}")));
    }
    Ok(())
}

fn max_edge_gap(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel) -> f64 {
    let mut gap = 0.0f64;
    for a in ms.segment.edges() {
        for b in mb.segment.edges() {
            gap = gap.max((a - b).abs());
        }
    }
    gap
}

/// `Re ∫_{-L}^{L} ω_s(ν) ω_b(-ν) dν` by composite Gauss–Legendre, refined
/// until two successive panel counts agree to 1e-12 relative.
pub fn boundary_overlap_numeric(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel, nu_limit: f64) -> Result<f64> {
    check_limit(nu_limit)?;
    if nu_limit == 0.0 {
        return Ok(0.0);
    }
    let f = |nu: f64| gaussian_boundary_spectrum(ms, nu) * gaussian_boundary_spectrum(mb, -nu);
    // beyond this the envelope e^{-ν²(σs² + σb²)/2} is below e^{-40}
    let cutoff = (80.0 / (ms.sigma.powi(2) + mb.sigma.powi(2))).sqrt();
    let limit = nu_limit.min(cutoff);
    // resolve both the oscillation of e^{-jνΔ} and the Gaussian envelope
    let scale = max_edge_gap(ms, mb) + 1.0 / ms.sigma.min(mb.sigma);
    let mut panels = ((2.0 * limit * scale).ceil() as usize).max(8);
    let magnitude = profile_mass(ms) * profile_mass(mb);
    let mut prev: Complex = rule().integrate(f, -limit, limit, panels);
    for _ in 0..8 {
        panels *= 2;
        let next: Complex = rule().integrate(f, -limit, limit, panels);
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(Error::NonFinite("boundary overlap integrand".into()));
        }
        let converged = (next - prev).norm() <= 1e-12 * next.norm().max(1e-3 * magnitude);
        prev = next;
        if converged {
            break;
        }
    }
    if prev.im.abs() > 1e-8 * magnitude.max(1.0) {
        return Err(Error::Envelope(format!("imaginary residue {} in boundary overlap", prev.im)));
    }
    Ok(prev.re)
}

fn same_sigma(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel) -> Result<f64> {
    if (ms.sigma - mb.sigma).abs() > 1e-12 * ms.sigma {
        return Err(Error::InvalidInput(format!(
            "closed forms need equal widths, got {} and {}",
            ms.sigma, mb.sigma
        )));
    }
    Ok(ms.sigma)
}

/// Gaussian-offset weights `e^{-(t_b - t_a)²/4σ²}` with their erf shifts `(t_b - t_a)/2σ`.
fn offset_terms(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel, sigma: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(4);
    for a in ms.segment.edges() {
        for b in mb.segment.edges() {
            let shift = (b - a) / (2.0 * sigma);
            out.push(((-shift * shift).exp(), shift));
        }
    }
    out
}

fn closed_prefactor(sigma: f64) -> f64 {
    2.0 * PI.powf(1.5) * sigma
}

/// Band-limited overlap through the four-term complex-erf closed form.
pub fn boundary_overlap_closed(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel, nu_limit: f64) -> Result<f64> {
    check_limit(nu_limit)?;
    let sigma = same_sigma(ms, mb)?;
    let x = nu_limit * sigma;
    let mut sum = 0.0;
    for (weight, shift) in offset_terms(ms, mb, sigma) {
        sum += weight * complex_erf(Complex::new(x, -shift))?.re;
    }
    Ok(closed_prefactor(sigma) * sum)
}

/// `erf(Lσ) ×` the sum of Gaussian-offset weights: the closed form with the
/// imaginary erf shift dropped.
pub fn boundary_overlap_approx(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel, nu_limit: f64) -> Result<f64> {
    check_limit(nu_limit)?;
    let sigma = same_sigma(ms, mb)?;
    let weights: f64 = offset_terms(ms, mb, sigma).iter().map(|(w, _)| w).sum();
    Ok(closed_prefactor(sigma) * erf(nu_limit * sigma) * weights)
}

/// Upper bound on `|closed - approx|`:
/// `2π^{3/2}σ · Σ (1 + w_k) · e^{-x²}/(√π x)` with `x = Lσ`.
///
/// Each term differs by `w_k·T_0 - T_cos` where `T_0` is the Gaussian tail
/// beyond the band and `|T_cos| <= T_0`; `erfc(x) <= e^{-x²}/(√π x)`.
pub fn erf_approx_remainder_bound(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel, nu_limit: f64) -> Result<f64> {
    check_limit(nu_limit)?;
    let sigma = same_sigma(ms, mb)?;
    let x = nu_limit * sigma;
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    let weights: f64 = offset_terms(ms, mb, sigma).iter().map(|(w, _)| 1.0 + w).sum();
    Ok(closed_prefactor(sigma) * weights * (-x * x).exp() / (PI.sqrt() * x))
}

/// Which overlap evaluation feeds [`boundary_iou_spectral`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OverlapMethod {
    #[default]
    Numeric,
    Closed,
    Approx,
}

/// Boundary IoU from the spectra: `1 / ((ω_s(0) + ω_b(0)) / overlap - 1)`,
/// where `overlap` is the band-limited spectral overlap divided by `2π`
/// so that it measures `∫ Ω_S Ω_B dt`.
pub fn boundary_iou_spectral(
    ms: &GaussianBoundaryModel,
    mb: &GaussianBoundaryModel,
    nu_limit: f64,
    method: OverlapMethod,
) -> Result<f64> {
    let raw = match method {
        OverlapMethod::Numeric => boundary_overlap_numeric(ms, mb, nu_limit)?,
        OverlapMethod::Closed => boundary_overlap_closed(ms, mb, nu_limit)?,
        OverlapMethod::Approx => boundary_overlap_approx(ms, mb, nu_limit)?,
    };
    let overlap = raw / (2.0 * PI);
    let mass = (gaussian_boundary_spectrum(ms, 0.0) + gaussian_boundary_spectrum(mb, 0.0)).re;
    if overlap <= 1e-300 || !overlap.is_finite() {
        return Err(Error::Degenerate(format!("boundary overlap {overlap} is not positive")));
    }
    Ok(1.0 / (mass / overlap - 1.0))
}

fn spatial_window(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel) -> (f64, f64, usize) {
    let sigma = ms.sigma.max(mb.sigma);
    let lo = ms.segment.t0.min(mb.segment.t0) - 14.0 * sigma;
    let hi = ms.segment.t1.max(mb.segment.t1) + 14.0 * sigma;
    let panels = ((hi - lo) / (0.25 * ms.sigma.min(mb.sigma))).ceil() as usize;
    (lo, hi, panels.max(16))
}

/// `∫ Ω_S(t) Ω_B(t) dt` by spatial quadrature.
pub fn spatial_overlap_quadrature(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel) -> f64 {
    let (lo, hi, panels) = spatial_window(ms, mb);
    rule().integrate(|t| ms.eval(t) * mb.eval(t), lo, hi, panels)
}

/// Relaxed IoU of the two profiles computed entirely in the spatial domain.
pub fn spatial_relaxed_iou(ms: &GaussianBoundaryModel, mb: &GaussianBoundaryModel) -> f64 {
    let (lo, hi, panels) = spatial_window(ms, mb);
    let inter: f64 = rule().integrate(|t| ms.eval(t) * mb.eval(t), lo, hi, panels);
    let mass_s: f64 = rule().integrate(|t| ms.eval(t), lo, hi, panels);
    let mass_b: f64 = rule().integrate(|t| mb.eval(t), lo, hi, panels);
    inter / (mass_s + mass_b - inter)
}
