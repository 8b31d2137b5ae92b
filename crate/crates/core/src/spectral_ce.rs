//! Cross-entropy in the spatial and frequency domains.
//!
//! With `b`, `y`, `y_p` the DFTs of the annotation `B(·, c)`, the logits
//! `Y(·, c)` and the log-partition `Y_p`, the CE splits exactly into
//! per-frequency components
//!
//! ```text
//! L_ce(k) = (1/N) Σ_c b(-k, c) · (y_p(k) - y(k, c)),     Σ_k L_ce(k) = L_CE
//! ```
//!
//! where `N` is the pixel count. The components are complex; for real inputs
//! `L_ce(-k) = conj(L_ce(k))`, so any radially binned sum is real.

use crate::error::{Error, Result};
use crate::fourier::{dft, Complex, Shape, Spectrum};
use crate::segmap::{log_partition, softmax, ClassField, PROB_FLOOR};

/// How 2-D frequencies are collapsed onto a scalar radius.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RadialMetric {
    /// `max(|k_row|, |k_col|)`: the frequencies kept by a square low-resolution grid.
    #[default]
    Chebyshev,
    /// `round(sqrt(k_row² + k_col²))`.
    Euclidean,
}

impl RadialMetric {
    pub fn radius(self, shape: Shape, index: usize) -> usize {
        match self {
            RadialMetric::Chebyshev => shape.chebyshev_radius(index),
            RadialMetric::Euclidean => shape.euclidean_radius(index),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CeDecomposition {
    components: Spectrum,
    radial_profile: Vec<f64>,
    metric: RadialMetric,
    total: f64,
    imag_residue: f64,
}

impl CeDecomposition {
    /// Per-frequency complex components in DFT order.
    pub fn components(&self) -> &Spectrum {
        &self.components
    }

    /// Real sum of the components at each radius (index = radius).
    pub fn radial_profile(&self) -> &[f64] {
        &self.radial_profile
    }

    pub fn metric(&self) -> RadialMetric {
        self.metric
    }

    /// `Re Σ_k L_ce(k)`, the spatial cross-entropy.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `|Im Σ_k L_ce(k)|`.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn shape(&self) -> Shape {
        self.components.shape()
    }

    pub fn nyquist(&self) -> usize {
        self.shape().nyquist_radius()
    }
}

fn check_inputs(logits: &ClassField, annot: &ClassField) -> Result<()> {
    if logits.dims() != annot.dims() {
        return Err(Error::mismatch(logits.dims(), annot.dims()));
    }
    Ok(())
}

/// `-Σ_c Σ_t B(t, c)·(Y(t, c) - Y_p(t))`.
pub fn ce_spatial(logits: &ClassField, annot: &ClassField) -> Result<f64> {
    check_inputs(logits, annot)?;
    let yp = log_partition(logits);
    let yp = yp.values();
    let plane = yp.len();
    let mut total = 0.0;
    for c in 0..logits.num_classes() {
        let (y, b) = (logits.plane(c), annot.plane(c));
        for t in 0..plane {
            total -= b[t] * (y[t] - yp[t]);
        }
    }
    Ok(total)
}

/// `-Σ B·log(max(S, floor))` with `S = softmax(Y)`. Same value as
/// [`ce_spatial`] whenever no probability hits the floor.
pub fn ce_from_probabilities(logits: &ClassField, annot: &ClassField) -> Result<f64> {
    check_inputs(logits, annot)?;
    let s = softmax(logits);
    Ok(-s
        .values()
        .iter()
        .zip(annot.values())
        .map(|(p, b)| b * p.max(PROB_FLOOR).ln())
        .sum::<f64>())
}

pub fn ce_decompose(logits: &ClassField, annot: &ClassField) -> Result<CeDecomposition> {
    ce_decompose_with(logits, annot, RadialMetric::Chebyshev)
}

pub fn ce_decompose_with(
    logits: &ClassField,
    annot: &ClassField,
    metric: RadialMetric,
) -> Result<CeDecomposition> {
    check_inputs(logits, annot)?;
    let shape = logits.shape();
    let n = shape.len();
    let yp = dft(&log_partition(logits).to_grid())?;
    let mut acc = vec![Complex::new(0.0, 0.0); n];
    for c in 0..logits.num_classes() {
        let b = dft(&annot.class_grid(c))?;
        let y = dft(&logits.class_grid(c))?;
        for (k, slot) in acc.iter_mut().enumerate() {
            *slot += b.at_negated(k) * (yp.values()[k] - y.values()[k]);
        }
    }
    let scale = 1.0 / n as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    let components = Spectrum::new(shape, acc)?;
    Ok(summarize(components, metric))
}

fn summarize(components: Spectrum, metric: RadialMetric) -> CeDecomposition {
    let shape = components.shape();
    let max_radius = (0..shape.len()).map(|k| metric.radius(shape, k)).max().unwrap_or(0);
    let mut radial_profile = vec![0.0; max_radius + 1];
    let mut sum = Complex::new(0.0, 0.0);
    for (k, v) in components.values().iter().enumerate() {
        radial_profile[metric.radius(shape, k)] += v.re;
        sum += v;
    }
    CeDecomposition {
        components,
        radial_profile,
        metric,
        total: sum.re,
        imag_residue: sum.im.abs(),
    }
}

/// `Re Σ` of the components with Chebyshev radius `<= nu_max`.
pub fn truncated_ce(dec: &CeDecomposition, nu_max: usize) -> f64 {
    let shape = dec.shape();
    dec.components
        .values()
        .iter()
        .enumerate()
        .filter(|(k, _)| shape.chebyshev_radius(*k) <= nu_max)
        .map(|(_, v)| v.re)
        .sum()
}

/// Relative CE discrepancy `|1 - L̂(nu_max) / L_CE|` caused by band-limiting.
pub fn discrepancy_r(dec: &CeDecomposition, nu_max: usize) -> Result<f64> {
    if dec.total.abs() <= 1e-12 {
        return Err(Error::Degenerate(format!(
            "cross-entropy {} is too close to zero for a relative discrepancy",
            dec.total
        )));
    }
    Ok((1.0 - truncated_ce(dec, nu_max) / dec.total).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPoint {
    pub nu_max: usize,
    pub truncated_ce: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationCurve {
    pub total: f64,
    pub points: Vec<TruncationPoint>,
}

/// Truncated CE and `R` for every band limit in `nus`, reported in ascending order.
pub fn truncation_curve(logits: &ClassField, annot: &ClassField, nus: &[usize]) -> Result<TruncationCurve> {
    let dec = ce_decompose(logits, annot)?;
    curve_from_decomposition(&dec, nus)
}

pub fn curve_from_decomposition(dec: &CeDecomposition, nus: &[usize]) -> Result<TruncationCurve> {
    let mut nus = nus.to_vec();
    nus.sort_unstable();
    nus.dedup();
    let points = nus
        .into_iter()
        .map(|nu| {
            Ok(TruncationPoint {
                nu_max: nu,
                truncated_ce: truncated_ce(dec, nu),
                discrepancy: discrepancy_r(dec, nu)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncationCurve {
        total: dec.total,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmap::{one_hot, FieldKind, LabelMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{LN_2, PI};

    fn random_instance(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> (ClassField, ClassField) {
        let map = LabelMap::from_fn(h, w, c, |_, _| rng.gen_range(0..c as u32)).unwrap();
        let logits = ClassField::from_fn(h, w, c, FieldKind::Logit, |_, _, _| rng.gen_range(-4.0..4.0)).unwrap();
        (logits, one_hot(&map))
    }

    #[test]
    fn uniform_logits() {
        let map = LabelMap::from_fn(4, 4, 2, |r, c| ((r + c) % 2) as u32).unwrap();
        let b = one_hot(&map);
        let z = ClassField::new(4, 4, 2, FieldKind::Logit, vec![0.0; 32]).unwrap();
        assert!((ce_spatial(&z, &b).unwrap() - 16.0 * LN_2).abs() < 1e-12);

        let dec = ce_decompose(&z, &b).unwrap();
        assert!((dec.components().values()[0].re - 16.0 * LN_2).abs() < 1e-12);
        assert!(dec.components().values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn confident_logits_closed_form() {
        let map = LabelMap::from_fn(3, 3, 2, |r, _| (r % 2) as u32).unwrap();
        let b = one_hot(&map);
        let y = b.scaled(10.0).unwrap();
        let per_pixel = (1.0 + (-10f64).exp()).ln();
        assert!((ce_spatial(&y, &b).unwrap() - 9.0 * per_pixel).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (y, b) = random_instance(&mut rng, 8, 8, 3);
        let direct = ce_from_probabilities(&y, &b).unwrap();
        assert!((ce_spatial(&y, &b).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn dims_must_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (y, _) = random_instance(&mut rng, 4, 4, 3);
        let (_, b) = random_instance(&mut rng, 4, 5, 3);
        assert!(matches!(ce_spatial(&y, &b), Err(Error::ShapeMismatch { .. })));
        assert!(ce_decompose(&y, &b).is_err());
    }

    #[test]
    fn decomposition_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for (h, w, c) in [(5, 7, 2), (8, 8, 4), (1, 9, 3)] {
            let (y, b) = random_instance(&mut rng, h, w, c);
            let dec = ce_decompose(&y, &b).unwrap();
            let spatial = ce_spatial(&y, &b).unwrap();
            assert!((dec.total() - spatial).abs() <= 1e-8 * spatial.abs());
            assert!(dec.imag_residue() <= 1e-9 * (1.0 + spatial.abs()));
            let profile_sum: f64 = dec.radial_profile().iter().sum();
            assert!((profile_sum - dec.total()).abs() <= 1e-8 * dec.total().abs());
            let comp = dec.components();
            for k in 0..comp.len() {
                assert!((comp.at_negated(k) - comp.values()[k].conj()).norm() < 1e-9);
            }
        }
    }

    /// Length-8 step annotation, logits `a·B`: every DFT here is hand computable.
    /// The step `(1,1,1,1,0,0,0,0)` has `|ŝ(k)|² = 2 / (1 - cos(πk/4))` for odd `k`
    /// and zero for even `k ≠ 0`; `Y_p = ln(1 + e^a)` is constant. Hence
    /// `L_ce(0) = 8 ln(1 + e^a) - 4a` and `L_ce(k) = -(a/4)|ŝ(k)|²` otherwise.
    #[test]
    fn step_signal_by_hand() {
        let a = 1.3;
        let map = LabelMap::new(1, 8, 2, vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
        let b = one_hot(&map);
        let y = b.scaled(a).unwrap();
        let dec = ce_decompose(&y, &b).unwrap();
        let comp = dec.components().values();
        let dc = 8.0 * (1.0 + a.exp()).ln() - 4.0 * a;
        assert!((comp[0] - Complex::new(dc, 0.0)).norm() < 1e-12);
        for (k, v) in comp.iter().enumerate().skip(1) {
            let expect = if k % 2 == 1 {
                -(a / 4.0) * 2.0 / (1.0 - (PI * k as f64 / 4.0).cos())
            } else {
                0.0
            };
            assert!((v - Complex::new(expect, 0.0)).norm() < 1e-12, "k = {k}");
        }
        assert!((dec.total() - 8.0 * (1.0 + (-a).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (y, b) = random_instance(&mut rng, 6, 6, 3);
        let dec = ce_decompose(&y, &b).unwrap();
        assert!((truncated_ce(&dec, dec.nyquist()) - dec.total()).abs() < 1e-12 * dec.total().abs());
        assert!((truncated_ce(&dec, 0) - dec.radial_profile()[0]).abs() < 1e-12);

        let shape = dec.shape();
        let mut partial = 0.0;
        for k in 0..36 {
            let (r, c) = (k / 6, k % 6);
            let fr = if r <= 3 { r as i64 } else { r as i64 - 6 };
            let fc = if c <= 3 { c as i64 } else { c as i64 - 6 };
            if fr.abs() <= 2 && fc.abs() <= 2 {
                partial += dec.components().values()[k].re;
            }
        }
        assert_eq!(shape.len(), 36);
        assert!((truncated_ce(&dec, 2) - partial).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (y, b) = random_instance(&mut rng, 16, 16, 3);
        let dec = ce_decompose(&y, &b).unwrap();
        assert!(discrepancy_r(&dec, 8).unwrap() <= 1e-9);
        let partial = truncated_ce(&dec, 3);
        assert!((discrepancy_r(&dec, 3).unwrap() - (1.0 - partial / dec.total()).abs()).abs() < 1e-15);

        let z = ClassField::new(2, 2, 2, FieldKind::Logit, vec![0.0; 8]).unwrap();
        let bz = one_hot(&LabelMap::new(2, 2, 2, vec![0, 1, 1, 0]).unwrap());
        let dc_only = ce_decompose(&z, &bz).unwrap();
        assert!(discrepancy_r(&dc_only, 0).unwrap() < 1e-12);
    }

    #[test]
    fn zero_cross_entropy_is_degenerate() {
        let map = LabelMap::new(1, 2, 1, vec![0, 0]).unwrap();
        let b = one_hot(&map);
        let y = b.scaled(1.0).unwrap();
        let dec = ce_decompose(&y, &b).unwrap();
        assert!(matches!(discrepancy_r(&dec, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn curve_is_sorted_and_ends_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let (y, b) = random_instance(&mut rng, 10, 10, 2);
        let curve = truncation_curve(&y, &b, &[5, 0, 2, 2]).unwrap();
        let nus: Vec<usize> = curve.points.iter().map(|p| p.nu_max).collect();
        assert_eq!(nus, vec![0, 2, 5]);
        assert!(curve.points.last().unwrap().discrepancy <= 1e-9);
        assert!(curve.points.iter().all(|p| p.discrepancy >= 0.0));
    }

    #[test]
    fn euclidean_profile_still_sums_to_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let (y, b) = random_instance(&mut rng, 8, 8, 3);
        let dec = ce_decompose_with(&y, &b, RadialMetric::Euclidean).unwrap();
        assert_eq!(dec.radial_profile().len(), 7); // round(sqrt(32)) + 1
        let s: f64 = dec.radial_profile().iter().sum();
        assert!((s - dec.total()).abs() < 1e-9 * dec.total());
    }
}
