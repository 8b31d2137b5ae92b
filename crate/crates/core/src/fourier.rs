//! Discrete Fourier machinery for 1-D and 2-D grids of arbitrary size.
//!
//! Convention: the forward transform is unnormalized with kernel
//! `exp(-2πi k n / N)` per axis, the inverse carries the `1/N` factor.
//! Spectra are stored in standard DFT order; index `k` stands for the
//! signed frequency `k` when `k <= N/2` and `k - N` otherwise.
//!
//! Power-of-two axes go through an iterative radix-2 transform, every other
//! length through a direct `O(N²)` sum with an exact twiddle table.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Shape of a 1-D or 2-D grid. Values are stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    D1(usize),
    D2 { rows: usize, cols: usize },
}

impl Shape {
    pub fn d2(rows: usize, cols: usize) -> Self {
        Shape::D2 { rows, cols }
    }

    pub fn rows(&self) -> usize {
        match *self {
            Shape::D1(_) => 1,
            Shape::D2 { rows, .. } => rows,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            Shape::D1(n) => n,
            Shape::D2 { cols, .. } => cols,
        }
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, count: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Dimension(format!("empty grid {self:?}")));
        }
        if self.len() != count {
            return Err(Error::Dimension(format!(
                "{self:?} holds {} values, got {count}",
                self.len()
            )));
        }
        Ok(())
    }

    /// `(row, col)` of a flat index.
    pub fn unflatten(&self, index: usize) -> (usize, usize) {
        (index / self.cols(), index % self.cols())
    }

    /// Flat index of the frequency `-k` (taken modulo the size on each axis).
    pub fn negated_index(&self, index: usize) -> usize {
        let (r, c) = self.unflatten(index);
        let nr = (self.rows() - r) % self.rows();
        let nc = (self.cols() - c) % self.cols();
        nr * self.cols() + nc
    }

    /// Largest Chebyshev radius present on this grid.
    pub fn nyquist_radius(&self) -> usize {
        match *self {
            Shape::D1(n) => n / 2,
            Shape::D2 { rows, cols } => (rows / 2).max(cols / 2),
        }
    }

    /// Chebyshev radius `max(|k_row|, |k_col|)` of a flat spectrum index.
    pub fn chebyshev_radius(&self, index: usize) -> usize {
        let (r, c) = self.unflatten(index);
        let fr = signed_frequency(r, self.rows()).unsigned_abs() as usize;
        let fc = signed_frequency(c, self.cols()).unsigned_abs() as usize;
        fr.max(fc)
    }

    /// Euclidean radius of a flat spectrum index, rounded to the nearest integer.
    pub fn euclidean_radius(&self, index: usize) -> usize {
        let (r, c) = self.unflatten(index);
        let fr = signed_frequency(r, self.rows()) as f64;
        let fc = signed_frequency(c, self.cols()) as f64;
        fr.hypot(fc).round() as usize
    }
}

/// Signed frequency of DFT index `k` on an axis of length `n`.
pub fn signed_frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Real-valued grid with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    shape: Shape,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        shape.check(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at index {i}")));
        }
        Ok(Self { shape, values })
    }

    pub fn from_vec_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(Shape::D1(values.len()), values)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let cols = shape.cols();
        let values = (0..shape.len()).map(|i| f(i / cols, i % cols)).collect();
        Self::new(shape, values)
    }

    pub fn filled(shape: Shape, value: f64) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.shape.cols() + col]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_complex(&self) -> Spectrum {
        Spectrum {
            shape: self.shape,
            values: self.values.iter().map(|&v| Complex::new(v, 0.0)).collect(),
        }
    }
}

/// Complex grid in standard DFT index order. Also used for complex spatial
/// grids such as the output of [`idft`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    shape: Shape,
    values: Vec<Complex>,
}

impl Spectrum {
    pub fn new(shape: Shape, values: Vec<Complex>) -> Result<Self> {
        shape.check(values.len())?;
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        Self::new(shape, vec![Complex::new(0.0, 0.0); shape.len()])
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the frequency `-k` of flat index `index`.
    pub fn at_negated(&self, index: usize) -> Complex {
        self.values[self.shape.negated_index(index)]
    }

    /// Largest `|value(-k) - conj(value(k))|` over all indices.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.at_negated(i) - self.values[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts as a [`RealGrid`].
    pub fn real_part(&self) -> Result<RealGrid> {
        RealGrid::new(self.shape, self.values.iter().map(|v| v.re).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Forward DFT of a real grid.
pub fn dft(grid: &RealGrid) -> Result<Spectrum> {
    transform(grid.to_complex(), Direction::Forward)
}

/// Forward DFT of a complex grid.
pub fn dft_complex(grid: &Spectrum) -> Result<Spectrum> {
    transform(grid.clone(), Direction::Forward)
}

/// Inverse DFT including the `1/N` normalization; `idft(dft(x)) == x`.
pub fn idft(spectrum: &Spectrum) -> Result<Spectrum> {
    transform(spectrum.clone(), Direction::Inverse)
}

/// Inverse DFT keeping only the real part. Use when the spectrum is known
/// to be conjugate-symmetric.
pub fn idft_real(spectrum: &Spectrum) -> Result<RealGrid> {
    idft(spectrum)?.real_part()
}

fn transform(mut grid: Spectrum, dir: Direction) -> Result<Spectrum> {
    grid.shape.check(grid.values.len())?;
    let (rows, cols) = (grid.shape.rows(), grid.shape.cols());

    let row_plan = Plan::new(cols, dir);
    for row in grid.values.chunks_exact_mut(cols) {
        row_plan.run(row);
    }
    if rows > 1 {
        let col_plan = Plan::new(rows, dir);
        let mut column = vec![Complex::new(0.0, 0.0); rows];
        for c in 0..cols {
            for (r, slot) in column.iter_mut().enumerate() {
                *slot = grid.values[r * cols + c];
            }
            col_plan.run(&mut column);
            for (r, v) in column.iter().enumerate() {
                grid.values[r * cols + c] = *v;
            }
        }
    }
    if dir == Direction::Inverse {
        let scale = 1.0 / grid.values.len() as f64;
        for v in &mut grid.values {
            *v *= scale;
        }
    }
    Ok(grid)
}

/// Per-length transform plan holding the twiddle table `w^m, m < n`.
struct Plan {
    n: usize,
    twiddles: Vec<Complex>,
}

impl Plan {
    fn new(n: usize, dir: Direction) -> Self {
        let sign = match dir {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let twiddles = (0..n)
            .map(|m| {
                let (s, c) = (2.0 * PI * m as f64 / n as f64).sin_cos();
                Complex::new(c, sign * s)
            })
            .collect();
        Self { n, twiddles }
    }

    fn run(&self, data: &mut [Complex]) {
        debug_assert_eq!(data.len(), self.n);
        if self.n <= 1 {
            return;
        }
        if self.n.is_power_of_two() {
            self.radix2(data);
        } else {
            self.direct(data);
        }
    }

    fn direct(&self, data: &mut [Complex]) {
        let n = self.n;
        let out: Vec<Complex> = (0..n)
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                let mut m = 0usize;
                for x in data.iter() {
                    acc += x * self.twiddles[m];
                    m += k;
                    if m >= n {
                        m -= n;
                    }
                }
                acc
            })
            .collect();
        data.copy_from_slice(&out);
    }

    fn radix2(&self, data: &mut [Complex]) {
        let n = self.n;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

fn same_shape(a: Shape, b: Shape) -> Result<()> {
    if a != b {
        return Err(Error::mismatch(a, b));
    }
    Ok(())
}

/// Spatial overlap `Σ_t a(t)·b(t)`.
pub fn overlap_spatial(a: &RealGrid, b: &RealGrid) -> Result<f64> {
    same_shape(a.shape, b.shape)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum())
}

/// Frequency-domain overlap `(1/N) Σ_k sa(k)·sb(-k)`. For spectra of real
/// grids this equals [`overlap_spatial`] of the originating grids.
pub fn overlap_spectral(sa: &Spectrum, sb: &Spectrum) -> Result<Complex> {
    same_shape(sa.shape, sb.shape)?;
    let sum: Complex = (0..sa.len()).map(|k| sa.values[k] * sb.at_negated(k)).sum();
    Ok(sum / sa.len() as f64)
}

/// `Σ_t grid(t)`.
pub fn total_mass(grid: &RealGrid) -> f64 {
    grid.values.iter().sum()
}

/// The DC coefficient; equals [`total_mass`] of the originating grid.
pub fn zero_frequency(spectrum: &Spectrum) -> Complex {
    spectrum.values[0]
}

/// Zero every coefficient whose Chebyshev radius exceeds `nu_max`.
pub fn band_limit(spectrum: &Spectrum, nu_max: usize) -> Spectrum {
    let shape = spectrum.shape;
    let values = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if shape.chebyshev_radius(i) <= nu_max {
                v
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    Spectrum { shape, values }
}

/// Periodic convolution `(a ⊛ k)(t) = Σ_s a(s)·k(t - s)`, summed directly.
/// The kernel must already be zero-padded to the grid size.
pub fn circular_convolve(a: &RealGrid, kernel: &RealGrid) -> Result<RealGrid> {
    same_shape(a.shape, kernel.shape)?;
    let (rows, cols) = (a.shape.rows(), a.shape.cols());
    let mut out = vec![0.0; a.len()];
    for (t, slot) in out.iter_mut().enumerate() {
        let (tr, tc) = (t / cols, t % cols);
        let mut acc = 0.0;
        for sr in 0..rows {
            let kr = (tr + rows - sr) % rows;
            for sc in 0..cols {
                let kc = (tc + cols - sc) % cols;
                acc += a.values[sr * cols + sc] * kernel.values[kr * cols + kc];
            }
        }
        *slot = acc;
    }
    RealGrid::new(a.shape, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn naive(values: &[Complex], inverse: bool) -> Vec<Complex> {
        let n = values.len();
        let sign = if inverse { 1.0 } else { -1.0 };
        (0..n)
            .map(|k| {
                let s: Complex = values
                    .iter()
                    .enumerate()
                    .map(|(t, v)| v * Complex::from_polar(1.0, sign * 2.0 * PI * (k * t) as f64 / n as f64))
                    .sum();
                if inverse {
                    s / n as f64
                } else {
                    s
                }
            })
            .collect()
    }

    fn random_grid(rng: &mut ChaCha8Rng, shape: Shape) -> RealGrid {
        RealGrid::from_fn(shape, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn constant_grid_is_dc_only() {
        let g = RealGrid::filled(Shape::D1(6), 2.5).unwrap();
        let s = dft(&g).unwrap();
        assert!((s.values()[0] - c(15.0, 0.0)).norm() < 1e-12);
        assert!(s.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let g = RealGrid::from_vec_1d(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = dft(&g).unwrap();
        assert!(s.values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn forward_matches_naive_on_odd_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_grid(&mut rng, Shape::D1(7));
        let s = dft(&g).unwrap();
        let expect = naive(&g.to_complex().into_values(), false);
        for (a, b) in s.values().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn radix2_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_grid(&mut rng, Shape::D1(64));
        let s = dft(&g).unwrap();
        let expect = naive(&g.to_complex().into_values(), false);
        for (a, b) in s.values().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn inverse_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<Complex> = (0..5).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let spec = Spectrum::new(Shape::D1(5), values.clone()).unwrap();
        let back = idft(&spec).unwrap();
        for (a, b) in back.values().iter().zip(naive(&values, true)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_spike_inverts_to_ones() {
        let mut v = vec![c(0.0, 0.0); 6];
        v[0] = c(6.0, 0.0);
        let g = idft(&Spectrum::new(Shape::D1(6), v).unwrap()).unwrap();
        assert!(g.values().iter().all(|x| (x - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn round_trip_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for shape in [Shape::d2(8, 8), Shape::d2(5, 9), Shape::d2(1, 3)] {
            let g = random_grid(&mut rng, shape);
            let back = idft_real(&dft(&g).unwrap()).unwrap();
            let err = g.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-12, "{shape:?}: {err}");
        }
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(RealGrid::new(Shape::D1(0), vec![]), Err(Error::Dimension(_))));
        assert!(matches!(Spectrum::new(Shape::d2(2, 2), vec![c(0.0, 0.0); 3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn overlap_examples() {
        let ones = RealGrid::filled(Shape::D1(4), 1.0).unwrap();
        assert_eq!(overlap_spatial(&ones, &ones).unwrap(), 4.0);
        let a = RealGrid::from_vec_1d(vec![1.0, 2.0]).unwrap();
        let b = RealGrid::from_vec_1d(vec![3.0, -1.0]).unwrap();
        assert_eq!(overlap_spatial(&a, &b).unwrap(), 1.0);

        let so = dft(&ones).unwrap();
        assert!((overlap_spectral(&so, &so).unwrap() - c(4.0, 0.0)).norm() < 1e-12);

        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        let delta = dft(&RealGrid::from_vec_1d(d).unwrap()).unwrap();
        let ones8 = dft(&RealGrid::filled(Shape::D1(8), 1.0).unwrap()).unwrap();
        assert!((overlap_spectral(&delta, &ones8).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn overlap_shape_mismatch() {
        let a = RealGrid::filled(Shape::D1(4), 1.0).unwrap();
        let b = RealGrid::filled(Shape::D1(5), 1.0).unwrap();
        assert!(matches!(overlap_spatial(&a, &b), Err(Error::ShapeMismatch { .. })));
        assert!(overlap_spectral(&dft(&a).unwrap(), &dft(&b).unwrap()).is_err());
    }

    #[test]
    fn mass_matches_dc() {
        let ones = RealGrid::filled(Shape::d2(3, 3), 1.0).unwrap();
        assert_eq!(total_mass(&ones), 9.0);
        let zero_sum = RealGrid::from_vec_1d(vec![1.0, -2.0, 0.5, 0.5]).unwrap();
        assert!(zero_frequency(&dft(&zero_sum).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn band_limit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = dft(&random_grid(&mut rng, Shape::D1(9))).unwrap();
        assert_eq!(band_limit(&s, 4), s);
        assert_eq!(band_limit(&s, 100), s);

        let dc = band_limit(&s, 0);
        assert_eq!(dc.values()[0], s.values()[0]);
        assert!(dc.values()[1..].iter().all(|v| v.norm() == 0.0));

        // Enumerated: signed frequencies of 0..9 are 0,1,2,3,4,-4,-3,-2,-1.
        let kept: Vec<usize> = band_limit(&s, 2)
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(kept, vec![0, 1, 2, 7, 8]);
    }

    #[test]
    fn chebyshev_radius_2d() {
        let shape = Shape::d2(4, 6);
        // index (3, 2) -> signed (-1, 2)
        assert_eq!(shape.chebyshev_radius(3 * 6 + 2), 2);
        assert_eq!(shape.euclidean_radius(3 * 6 + 2), 2);
        assert_eq!(shape.nyquist_radius(), 3);
        assert_eq!(shape.negated_index(3 * 6 + 2), 6 + 4);
    }

    #[test]
    fn convolution_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_grid(&mut rng, Shape::D1(8));
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        let delta = RealGrid::from_vec_1d(d).unwrap();
        assert_eq!(circular_convolve(&a, &delta).unwrap(), a);

        let a = RealGrid::from_vec_1d(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let k = RealGrid::from_vec_1d(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(circular_convolve(&a, &k).unwrap().values(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn convolution_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_grid(&mut rng, Shape::D1(8));
        let k = random_grid(&mut rng, Shape::D1(8));
        let out = circular_convolve(&a, &k).unwrap();
        for t in 0..8 {
            let mut acc = 0.0;
            for s in 0..8 {
                for u in 0..8 {
                    if (s + u) % 8 == t {
                        acc += a.values()[s] * k.values()[u];
                    }
                }
            }
            assert!((out.values()[t] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(RealGrid::from_vec_1d(vec![1.0, f64::NAN]), Err(Error::NonFinite(_))));
    }
}
