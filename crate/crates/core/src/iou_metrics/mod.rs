//! Set, soft and spectral IoU plus boundary IoU.
//! The 1-D Gaussian boundary model lives in `boundary`.

mod boundary;
mod erf;

pub use boundary::{
    boundary_iou_spectral, boundary_overlap_approx, boundary_overlap_closed, boundary_overlap_numeric,
    erf_approx_remainder_bound, gaussian_boundary_profile, gaussian_boundary_spectrum, profile_mass,
    spatial_overlap_quadrature, spatial_relaxed_iou, BoundarySegment1D, GaussianBoundaryModel, OverlapMethod,
};
pub use erf::{complex_erf, erf, ERF_IMAG_LIMIT};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::fourier::{overlap_spectral, zero_frequency, RealGrid, Shape, Spectrum};
use crate::segmap::LabelMap;

/// Binary mask over a 1-D or 2-D grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    shape: Shape,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(shape: Shape, values: Vec<bool>) -> Result<Self> {
        if shape.is_empty() || shape.len() != values.len() {
            return Err(Error::Dimension(format!("{shape:?} given {} values", values.len())));
        }
        Ok(Self { shape, values })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let cols = shape.cols();
        Self::new(shape, (0..shape.len()).map(|i| f(i / cols, i % cols)).collect())
    }

    /// Pixels carrying `class`.
    pub fn from_labels(map: &LabelMap, class: u32) -> Self {
        Self {
            shape: map.shape(),
            values: map.labels().iter().map(|&l| l == class).collect(),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        if self.shape != other.shape {
            return Err(Error::mismatch(self.shape, other.shape));
        }
        Ok(BinaryMask {
            shape: self.shape,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn to_grid(&self) -> RealGrid {
        RealGrid::new(self.shape, self.values.iter().map(|&v| f64::from(u8::from(v))).collect())
            .expect("mask shape is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IoUReport {
    pub intersection: f64,
    pub union: f64,
    pub iou: f64,
}

/// Set IoU `|a ∩ b| / |a ∪ b|`.
pub fn iou_discrete(a: &BinaryMask, b: &BinaryMask) -> Result<IoUReport> {
    let inter = a.and(b)?.count();
    let union = a.zip_with(b, |x, y| x || y)?.count();
    if union == 0 {
        return Err(Error::Degenerate("IoU of two empty masks".into()));
    }
    Ok(IoUReport {
        intersection: inter as f64,
        union: union as f64,
        iou: inter as f64 / union as f64,
    })
}

/// Mean IoU over the classes present in either map.
pub fn mean_iou(a: &LabelMap, b: &LabelMap) -> Result<f64> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(Error::mismatch((a.height(), a.width()), (b.height(), b.width())));
    }
    let classes = a.num_classes().max(b.num_classes()) as u32;
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..classes {
        match iou_discrete(&BinaryMask::from_labels(a, c), &BinaryMask::from_labels(b, c)) {
            Ok(r) => {
                sum += r.iou;
                present += 1;
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(sum / present as f64)
}

/// Soft IoU `Σ s·b / (Σ s + Σ b - Σ s·b)` for maps with values in [0, 1].
pub fn iou_relaxed(s: &RealGrid, b: &RealGrid) -> Result<f64> {
    if s.shape() != b.shape() {
        return Err(Error::mismatch(s.shape(), b.shape()));
    }
    if s.values().iter().chain(b.values()).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("relaxed IoU needs values in [0, 1]".into()));
    }
    let (mut inter, mut ms, mut mb) = (0.0, 0.0, 0.0);
    for (&x, &y) in s.values().iter().zip(b.values()) {
        inter += x * y;
        ms += x;
        mb += y;
    }
    let denom = ms + mb - inter;
    if denom <= 0.0 {
        return Err(Error::Degenerate("relaxed IoU with zero union".into()));
    }
    Ok(inter / denom)
}

/// Relaxed IoU from the spectra of the two maps:
/// `1 / ((s(0) + b(0)) / overlap - 1)` with `overlap = (1/N) Σ_k s(k) b(-k)`.
pub fn iou_spectral(s_spec: &Spectrum, b_spec: &Spectrum) -> Result<f64> {
    let overlap = overlap_spectral(s_spec, b_spec)?.re;
    let mass = (zero_frequency(s_spec) + zero_frequency(b_spec)).re;
    if overlap <= 1e-12 * mass.abs().max(1.0) {
        return Err(Error::Degenerate(format!("spectral overlap {overlap} is not positive")));
    }
    Ok(1.0 / (mass / overlap - 1.0))
}

/// Distance used to grow the boundary band.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryDistance {
    #[default]
    Chebyshev,
    /// Euclidean distance rounded to the nearest integer.
    EuclideanRounded,
}

/// Grid pixels within distance `d` of the mask boundary. A boundary pixel is
/// a mask pixel with an off-mask 4-neighbour or lying on the image edge.
pub fn boundary_region(mask: &BinaryMask, d: usize) -> Result<BinaryMask> {
    boundary_region_with(mask, d, BoundaryDistance::Chebyshev)
}

pub fn boundary_region_with(mask: &BinaryMask, d: usize, metric: BoundaryDistance) -> Result<BinaryMask> {
    if d == 0 {
        return Err(Error::InvalidInput("boundary width d must be >= 1".into()));
    }
    let (rows, cols) = (mask.shape.rows(), mask.shape.cols());
    let at = |r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && mask.values[r as usize * cols + c as usize]
    };
    let sources: Vec<(usize, usize)> = (0..rows * cols)
        .filter(|&i| mask.values[i])
        .map(|i| (i / cols, i % cols))
        .filter(|&(r, c)| {
            let (r, c) = (r as isize, c as isize);
            !(at(r - 1, c) && at(r + 1, c) && at(r, c - 1) && at(r, c + 1))
        })
        .collect();

    let mut out = vec![false; rows * cols];
    match metric {
        BoundaryDistance::Chebyshev => {
            let mut dist = vec![usize::MAX; rows * cols];
            let mut queue = VecDeque::new();
            for &(r, c) in &sources {
                dist[r * cols + c] = 0;
                queue.push_back((r, c));
            }
            while let Some((r, c)) = queue.pop_front() {
                let here = dist[r * cols + c];
                out[r * cols + c] = true;
                if here == d {
                    continue;
                }
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                            continue;
                        }
                        let j = nr as usize * cols + nc as usize;
                        if dist[j] == usize::MAX {
                            dist[j] = here + 1;
                            queue.push_back((nr as usize, nc as usize));
                        }
                    }
                }
            }
        }
        BoundaryDistance::EuclideanRounded => {
            let di = d as isize;
            for &(r, c) in &sources {
                for dr in -di..=di {
                    for dc in -di..=di {
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                            continue;
                        }
                        if ((dr * dr + dc * dc) as f64).sqrt().round() as usize <= d {
                            out[nr as usize * cols + nc as usize] = true;
                        }
                    }
                }
            }
        }
    }
    BinaryMask::new(mask.shape, out)
}

/// IoU of `s ∩ S_d` against `b ∩ B_d`.
pub fn boundary_iou_discrete(s: &BinaryMask, b: &BinaryMask, d: usize) -> Result<f64> {
    boundary_iou_discrete_with(s, b, d, BoundaryDistance::Chebyshev)
}

pub fn boundary_iou_discrete_with(
    s: &BinaryMask,
    b: &BinaryMask,
    d: usize,
    metric: BoundaryDistance,
) -> Result<f64> {
    let sc = s.and(&boundary_region_with(s, d, metric)?)?;
    let bc = b.and(&boundary_region_with(b, d, metric)?)?;
    Ok(iou_discrete(&sc, &bc)?.iou)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::dft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask_1d(bits: &[u8]) -> BinaryMask {
        BinaryMask::new(Shape::D1(bits.len()), bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn set_iou_examples() {
        let a = BinaryMask::from_fn(Shape::d2(2, 2), |r, _| r == 0).unwrap();
        let b = BinaryMask::from_fn(Shape::d2(2, 2), |_, c| c == 0).unwrap();
        assert_eq!(iou_discrete(&a, &a).unwrap().iou, 1.0);
        let r = iou_discrete(&a, &b).unwrap();
        assert_eq!((r.intersection, r.union), (1.0, 3.0));
        assert!((r.iou - 1.0 / 3.0).abs() < 1e-15);

        let c = BinaryMask::from_fn(Shape::d2(2, 2), |r, _| r == 1).unwrap();
        assert_eq!(iou_discrete(&a, &c).unwrap().iou, 0.0);

        let empty = BinaryMask::from_fn(Shape::d2(2, 2), |_, _| false).unwrap();
        assert!(matches!(iou_discrete(&empty, &empty), Err(Error::Degenerate(_))));
    }

    #[test]
    fn relaxed_examples() {
        let b = RealGrid::from_vec_1d(vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(iou_relaxed(&b, &b).unwrap(), 1.0);
        let s = RealGrid::from_vec_1d(b.values().iter().map(|v| 0.5 * v).collect()).unwrap();
        assert!((iou_relaxed(&s, &b).unwrap() - 0.5).abs() < 1e-15);

        let zero = RealGrid::filled(Shape::D1(4), 0.0).unwrap();
        assert!(matches!(iou_relaxed(&zero, &zero), Err(Error::Degenerate(_))));
        let bad = RealGrid::filled(Shape::D1(4), 1.5).unwrap();
        assert!(matches!(iou_relaxed(&bad, &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn relaxed_matches_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let shape = Shape::d2(6, 5);
        let s = RealGrid::from_fn(shape, |_, _| rng.gen::<f64>()).unwrap();
        let b = RealGrid::from_fn(shape, |_, _| rng.gen::<f64>()).unwrap();
        let inter: f64 = s.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
        let union: f64 = s.values().iter().zip(b.values()).map(|(x, y)| x + y - x * y).sum();
        assert!((iou_relaxed(&s, &b).unwrap() - inter / union).abs() < 1e-14);
    }

    #[test]
    fn spectral_matches_relaxed() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let shape = Shape::d2(7, 9);
        let s = RealGrid::from_fn(shape, |_, _| rng.gen::<f64>()).unwrap();
        let b = RealGrid::from_fn(shape, |_, _| rng.gen::<f64>()).unwrap();
        let spec = iou_spectral(&dft(&s).unwrap(), &dft(&b).unwrap()).unwrap();
        assert!((spec - iou_relaxed(&s, &b).unwrap()).abs() < 1e-8);

        let m = mask_1d(&[0, 1, 1, 0, 1]).to_grid();
        let sm = dft(&m).unwrap();
        assert!((iou_spectral(&sm, &sm).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_disjoint_is_degenerate() {
        let a = dft(&mask_1d(&[1, 1, 0, 0]).to_grid()).unwrap();
        let b = dft(&mask_1d(&[0, 0, 1, 1]).to_grid()).unwrap();
        assert!(matches!(iou_spectral(&a, &b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn boundary_region_1d() {
        let m = mask_1d(&[0, 1, 1, 1, 0]);
        let r = boundary_region(&m, 1).unwrap();
        assert_eq!(r.count(), 5);

        let m = mask_1d(&[0, 0, 0, 1, 1, 1, 1, 1, 1, 1]);
        let r = boundary_region(&m, 1).unwrap();
        // every mask pixel touches the image edge in a 1-row grid
        assert_eq!(r.values().iter().position(|&v| v), Some(2));
    }

    /// Brute force: Chebyshev distance to the nearest boundary pixel.
    fn brute_region(mask: &BinaryMask, d: usize) -> Vec<bool> {
        let (rows, cols) = (mask.shape().rows(), mask.shape().cols());
        let v = mask.values();
        let inside = |r: isize, c: isize| {
            r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && v[r as usize * cols + c as usize]
        };
        let mut boundary = vec![];
        for r in 0..rows as isize {
            for c in 0..cols as isize {
                if inside(r, c) && !(inside(r - 1, c) && inside(r + 1, c) && inside(r, c - 1) && inside(r, c + 1)) {
                    boundary.push((r, c));
                }
            }
        }
        (0..rows * cols)
            .map(|i| {
                let (r, c) = ((i / cols) as isize, (i % cols) as isize);
                boundary
                    .iter()
                    .any(|&(br, bc)| (r - br).unsigned_abs().max((c - bc).unsigned_abs()) <= d)
            })
            .collect()
    }

    #[test]
    fn boundary_region_matches_brute_force() {
        let ones = BinaryMask::from_fn(Shape::d2(3, 3), |_, _| true).unwrap();
        let r = boundary_region(&ones, 1).unwrap();
        assert_eq!(r.values(), brute_region(&ones, 1).as_slice());
        assert_eq!(r.count(), 9);

        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for d in 1..4 {
            let m = BinaryMask::from_fn(Shape::d2(12, 15), |_, _| rng.gen_bool(0.6)).unwrap();
            assert_eq!(boundary_region(&m, d).unwrap().values(), brute_region(&m, d).as_slice());
        }
    }

    #[test]
    fn wide_band_covers_grid() {
        let m = BinaryMask::from_fn(Shape::d2(6, 6), |r, c| r == 2 && c == 3).unwrap();
        assert_eq!(boundary_region(&m, 6).unwrap().count(), 36);
        let empty = BinaryMask::from_fn(Shape::d2(3, 3), |_, _| false).unwrap();
        assert!(boundary_region(&empty, 2).unwrap().is_empty());
    }

    #[test]
    fn euclidean_band_is_a_disk() {
        let m = BinaryMask::from_fn(Shape::d2(9, 9), |r, c| r == 4 && c == 4).unwrap();
        let r = boundary_region_with(&m, 2, BoundaryDistance::EuclideanRounded).unwrap();
        // offsets with round(sqrt(dr² + dc²)) <= 2: all but the four (±2, ±2) corners
        assert_eq!(r.count(), 21);
    }

    #[test]
    fn boundary_iou_examples() {
        let s = BinaryMask::from_fn(Shape::d2(8, 8), |r, c| (2..6).contains(&r) && (1..5).contains(&c)).unwrap();
        assert_eq!(boundary_iou_discrete(&s, &s, 1).unwrap(), 1.0);

        let far = BinaryMask::from_fn(Shape::d2(8, 20), |r, c| r < 3 && c < 3).unwrap();
        let far2 = BinaryMask::from_fn(Shape::d2(8, 20), |r, c| r >= 5 && c >= 15).unwrap();
        assert_eq!(boundary_iou_discrete(&far, &far2, 1).unwrap(), 0.0);

        // 1-D strips offset by one, d = 1: clipped sets are the strips themselves.
        // s = {2,3,4,5}, b = {3,4,5,6}: |∩| = 3, |∪| = 5
        let s = mask_1d(&[0, 0, 1, 1, 1, 1, 0, 0, 0]);
        let b = mask_1d(&[0, 0, 0, 1, 1, 1, 1, 0, 0]);
        assert!((boundary_iou_discrete(&s, &b, 1).unwrap() - 0.6).abs() < 1e-15);

        let empty = mask_1d(&[0, 0, 0]);
        assert!(boundary_iou_discrete(&empty, &empty, 1).is_err());
    }

    #[test]
    fn boundary_iou_excludes_interior() {
        // 2-D squares offset by one column; only bands of width 1 compared.
        let s = BinaryMask::from_fn(Shape::d2(10, 10), |r, c| (1..9).contains(&r) && (1..7).contains(&c)).unwrap();
        let b = BinaryMask::from_fn(Shape::d2(10, 10), |r, c| (1..9).contains(&r) && (2..8).contains(&c)).unwrap();
        let full = iou_discrete(&s, &b).unwrap().iou;
        let band = boundary_iou_discrete(&s, &b, 1).unwrap();
        assert!(band < full);
    }

    #[test]
    fn mean_iou_over_present_classes() {
        let a = LabelMap::new(1, 4, 3, vec![0, 0, 1, 1]).unwrap();
        let b = LabelMap::new(1, 4, 3, vec![0, 1, 1, 1]).unwrap();
        // class 0: 1/2, class 1: 2/3, class 2 absent
        assert!((mean_iou(&a, &b).unwrap() - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }
}
