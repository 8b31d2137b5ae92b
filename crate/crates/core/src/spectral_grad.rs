//! Spectral Jacobians of a toy 1-D layer `Y = softplus(K ⊛ X)` and of the
//! CE frequency components it feeds, with a finite-difference oracle.
//!
//! `J[i][j] = ∂y(ν_i)/∂x(ν_j)` where each spectral coordinate is treated as
//! an independent complex variable (its conjugate partner `x(-ν_j)` held
//! fixed). Under the unnormalized DFT the exact layer Jacobian is
//! `k(ν_j)·(1/N)·d(ν_i - ν_j)` with `d = dft(sigmoid(z))`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fourier::{dft, dft_complex, idft, Complex, RealGrid, Shape, Spectrum};
use crate::segmap::{softmax, ClassField, FieldKind};
use crate::spectral_ce::ce_decompose;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;

fn softplus(z: f64) -> f64 {
    // stable for large |z|
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Periodic 1-D convolution followed by softplus.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyConvLayer {
    kernel: RealGrid,
}

impl ToyConvLayer {
    /// `kernel` is zero-padded to the signal length.
    pub fn new(kernel: RealGrid) -> Result<Self> {
        if !matches!(kernel.shape(), Shape::D1(_)) {
            return Err(Error::Dimension(format!("layer kernel must be 1-D, got {:?}", kernel.shape())));
        }
        Ok(Self { kernel })
    }

    /// Kernel with `taps` random values on `{0, 1, N-1, 2, N-2, ...}`,
    /// rescaled so that `‖k‖∞ = scale`.
    pub fn random(n: usize, taps: usize, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        if taps == 0 || taps > n {
            return Err(Error::InvalidInput(format!("{taps} taps on a length-{n} kernel")));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidInput(format!("kernel scale {scale}")));
        }
        let mut values = vec![0.0f64; n];
        for t in 0..taps {
            let pos = if t % 2 == 1 { t.div_ceil(2) } else { (n - t / 2) % n };
            values[pos] = rng.gen_range(-1.0..1.0);
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            values.iter_mut().for_each(|v| *v *= scale / peak);
        }
        Self::new(RealGrid::from_vec_1d(values)?)
    }

    pub fn kernel(&self) -> &RealGrid {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    /// `‖k‖∞`, the smallness parameter of the Taylor approximations.
    pub fn scale(&self) -> f64 {
        self.kernel.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn kernel_spectrum(&self) -> Result<Spectrum> {
        dft(&self.kernel)
    }

    /// `z = k ⊛ x`.
    pub fn pre_activation(&self, x: &RealGrid) -> Result<RealGrid> {
        crate::fourier::circular_convolve(x, &self.kernel)
    }

    pub fn forward(&self, x: &RealGrid) -> Result<RealGrid> {
        let z = self.pre_activation(x)?;
        RealGrid::new(z.shape(), z.values().iter().map(|&v| softplus(v)).collect())
    }

    /// Holomorphic extension of [`forward`](Self::forward) to complex signals.
    pub fn forward_complex(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        let n = self.len();
        if x.len() != n {
            return Err(Error::mismatch(x.len(), n));
        }
        let k = self.kernel.values();
        Ok((0..n)
            .map(|t| {
                let z: Complex = (0..n).map(|s| x[s] * k[(t + n - s) % n]).sum();
                (Complex::new(1.0, 0.0) + z.exp()).ln()
            })
            .collect())
    }
}

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralJacobian {
    rows: usize,
    cols: usize,
    values: Vec<Complex>,
}

impl SpectralJacobian {
    pub fn new(rows: usize, cols: usize, values: Vec<Complex>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix given {} values", values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("Jacobian entry".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Result<Self> {
        let values = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<Complex> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diagonal().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self.get(i, j).norm());
                }
            }
        }
        m
    }

    /// Largest off-diagonal magnitude over the largest diagonal magnitude.
    pub fn off_diagonal_ratio(&self) -> f64 {
        let d = self.max_diagonal();
        if d == 0.0 {
            return f64::INFINITY;
        }
        self.max_off_diagonal() / d
    }

    pub fn max_abs_diff(&self, other: &SpectralJacobian) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::mismatch((self.rows, self.cols), (other.rows, other.cols)));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn diagonal_matrix(diag: &[Complex]) -> Result<SpectralJacobian> {
    let n = diag.len();
    SpectralJacobian::from_fn(n, n, |i, j| if i == j { diag[i] } else { Complex::new(0.0, 0.0) })
}

/// Linear stage: `diag(k(ν))`.
pub fn conv_jacobian_spectral(layer: &ToyConvLayer) -> Result<SpectralJacobian> {
    diagonal_matrix(layer.kernel_spectrum()?.values())
}

/// Second-order spectrum of `softplus(idft z)`:
/// `N ln2·[k=0] + z(k)/2 + (1/8N)·Σ_r z(r) z(k-r)`.
pub fn softplus_taylor_spectrum(z: &Spectrum) -> Result<Spectrum> {
    let n = z.len();
    let quad = softplus_quadratic_term(z)?;
    let mut out: Vec<Complex> = z.values().iter().zip(quad.values()).map(|(a, q)| a * 0.5 + q).collect();
    out[0] += n as f64 * std::f64::consts::LN_2;
    Spectrum::new(z.shape(), out)
}

/// The `(1/8N)·(z ⊛ z)` part of [`softplus_taylor_spectrum`].
pub fn softplus_quadratic_term(z: &Spectrum) -> Result<Spectrum> {
    one_d(z.shape())?;
    let n = z.len();
    let v = z.values();
    let scale = 1.0 / (8.0 * n as f64);
    let out = (0..n)
        .map(|k| (0..n).map(|r| v[r] * v[(k + n - r) % n]).sum::<Complex>() * scale)
        .collect();
    Spectrum::new(z.shape(), out)
}

fn one_d(shape: Shape) -> Result<usize> {
    match shape {
        Shape::D1(n) => Ok(n),
        Shape::D2 { rows: 1, cols } => Ok(cols),
        other => Err(Error::Dimension(format!("expected a 1-D signal, got {other:?}"))),
    }
}

/// Softplus stage linearized at small `z`: `½[i=j] + z(i-j)/(4N)`.
pub fn activation_jacobian_spectral(z: &Spectrum) -> Result<SpectralJacobian> {
    let n = one_d(z.shape())?;
    let v = z.values();
    let scale = 1.0 / (4.0 * n as f64);
    SpectralJacobian::from_fn(n, n, |i, j| {
        let delta = if i == j { 0.5 } else { 0.0 };
        Complex::new(delta, 0.0) + v[(i + n - j) % n] * scale
    })
}

/// `k(ν_j)·[½[i=j] + z(i-j)/(4N)]`: both stages composed over the
/// intermediate frequency.
pub fn layer_jacobian_full(layer: &ToyConvLayer, x: &RealGrid) -> Result<SpectralJacobian> {
    let z = dft(&layer.pre_activation(x)?)?;
    let act = activation_jacobian_spectral(&z)?;
    let conv = conv_jacobian_spectral(layer)?;
    compose(&act, &conv)
}

/// Exact layer Jacobian `k(ν_j)·(1/N)·dft(sigmoid z)(i - j)`.
pub fn layer_jacobian_exact(layer: &ToyConvLayer, x: &RealGrid) -> Result<SpectralJacobian> {
    let z = layer.pre_activation(x)?;
    let n = one_d(z.shape())?;
    let d = dft(&RealGrid::new(z.shape(), z.values().iter().map(|&v| sigmoid(v)).collect())?)?;
    let k = layer.kernel_spectrum()?;
    let (d, k) = (d.values(), k.values());
    let inv = 1.0 / n as f64;
    SpectralJacobian::from_fn(n, n, |i, j| k[j] * d[(i + n - j) % n] * inv)
}

/// `½·diag(k(ν))`.
pub fn layer_jacobian_delta(layer: &ToyConvLayer) -> Result<SpectralJacobian> {
    let k = layer.kernel_spectrum()?;
    let half: Vec<Complex> = k.values().iter().map(|v| v * 0.5).collect();
    diagonal_matrix(&half)
}

/// Matrix product `a·b`.
pub fn compose(a: &SpectralJacobian, b: &SpectralJacobian) -> Result<SpectralJacobian> {
    if a.cols != b.rows {
        return Err(Error::mismatch((a.rows, a.cols), (b.rows, b.cols)));
    }
    SpectralJacobian::from_fn(a.rows, b.cols, |i, j| (0..a.cols).map(|q| a.get(i, q) * b.get(q, j)).sum())
}

fn check_step(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    Ok(())
}

/// Finite-difference Jacobian of a map whose output is already a spectrum.
///
/// `Re x(ν_j)` and `Im x(ν_j)` are perturbed by `±h` and the real part of the
/// inverse transform is fed to `f`. A real perturbation moves `x(ν_j)` and
/// `x(-ν_j)` together, so the two central differences are
/// `D_re = (A_j + A_-j)/2` and `D_im = i(A_j - A_-j)/2`, and
/// `A_j = D_re - i·D_im`.
pub fn fd_jacobian_spectral_output<F>(f: F, x: &RealGrid, h: f64) -> Result<SpectralJacobian>
where
    F: Fn(&RealGrid) -> Result<Spectrum>,
{
    check_step(h)?;
    let shape = x.shape();
    let spectrum = dft(x)?;
    let cols = spectrum.len();
    let eval = |delta: Complex, j: usize| -> Result<Vec<Complex>> {
        let mut s = spectrum.clone();
        s.values_mut()[j] += delta;
        let signal = idft(&s)?;
        let real = RealGrid::new(shape, signal.values().iter().map(|v| v.re).collect())?;
        Ok(f(&real)?.into_values())
    };
    let mut columns = Vec::with_capacity(cols);
    let mut rows = None;
    for j in 0..cols {
        let rp = eval(Complex::new(h, 0.0), j)?;
        let rm = eval(Complex::new(-h, 0.0), j)?;
        let ip = eval(Complex::new(0.0, h), j)?;
        let im = eval(Complex::new(0.0, -h), j)?;
        let m = rp.len();
        if *rows.get_or_insert(m) != m {
            return Err(Error::Dimension("map output length changed between evaluations".into()));
        }
        let col: Vec<Complex> = (0..m)
            .map(|i| {
                let d_re = (rp[i] - rm[i]) / (2.0 * h);
                let d_im = (ip[i] - im[i]) / (2.0 * h);
                d_re - Complex::i() * d_im
            })
            .collect();
        columns.push(col);
    }
    let rows = rows.unwrap_or(0);
    SpectralJacobian::from_fn(rows, cols, |i, j| columns[j][i])
}

/// Finite-difference spectral Jacobian of a real spatial map.
pub fn fd_jacobian_spectral<F>(f: F, x: &RealGrid, h: f64) -> Result<SpectralJacobian>
where
    F: Fn(&RealGrid) -> Result<RealGrid>,
{
    fd_jacobian_spectral_output(|g| dft(&f(g)?), x, h)
}

/// Largest `|∂/∂Im - i·∂/∂Re|` over all entries, relative to the largest
/// `|∂/∂Re|`, for a map evaluated on complex signals. Zero for maps that are
/// holomorphic in every spectral coordinate.
pub fn cauchy_riemann_residual<F>(f: F, x: &RealGrid, h: f64) -> Result<f64>
where
    F: Fn(&[Complex]) -> Result<Vec<Complex>>,
{
    check_step(h)?;
    let spectrum = dft(x)?;
    let shape = x.shape();
    let eval = |delta: Complex, j: usize| -> Result<Vec<Complex>> {
        let mut s = spectrum.clone();
        s.values_mut()[j] += delta;
        let out = f(idft(&s)?.values())?;
        let n = out.len();
        let grid = Spectrum::new(if n == shape.len() { shape } else { Shape::D1(n) }, out)?;
        Ok(dft_complex(&grid)?.into_values())
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..spectrum.len() {
        let (rp, rm) = (eval(Complex::new(h, 0.0), j)?, eval(Complex::new(-h, 0.0), j)?);
        let (ip, im) = (eval(Complex::new(0.0, h), j)?, eval(Complex::new(0.0, -h), j)?);
        for i in 0..rp.len() {
            let d_re = (rp[i] - rm[i]) / (2.0 * h);
            let d_im = (ip[i] - im[i]) / (2.0 * h);
            worst = worst.max((d_im - Complex::i() * d_re).norm());
            scale = scale.max(d_re.norm());
        }
    }
    if !worst.is_finite() {
        return Err(Error::NonFinite("Cauchy-Riemann residual".into()));
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Elementwise `max(x, 0)`.
pub fn relu_map(x: &RealGrid) -> Result<RealGrid> {
    RealGrid::new(x.shape(), x.values().iter().map(|v| v.max(0.0)).collect())
}

/// Factor-2 periodic linear interpolation of a 1-D signal: even samples
/// copy the input, odd samples average the two neighbours.
pub fn upsample2_map(x: &RealGrid) -> Result<RealGrid> {
    let n = one_d(x.shape())?;
    let v = x.values();
    let out = (0..2 * n)
        .map(|t| if t % 2 == 0 { v[t / 2] } else { 0.5 * (v[t / 2] + v[(t / 2 + 1) % n]) })
        .collect();
    RealGrid::from_vec_1d(out)
}

/// One toy layer per class feeding softmax and cross-entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct CeToy {
    layers: Vec<ToyConvLayer>,
}

impl CeToy {
    pub fn new(layers: Vec<ToyConvLayer>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidInput("at least one class layer is required".into()));
        };
        if let Some(bad) = layers.iter().find(|l| l.len() != first.len()) {
            return Err(Error::mismatch(first.len(), bad.len()));
        }
        Ok(Self { layers })
    }

    pub fn random(n: usize, classes: usize, taps: usize, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let layers = (0..classes)
            .map(|_| ToyConvLayer::random(n, taps, scale, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[ToyConvLayer] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.layers.len()
    }

    /// Logit field of height 1.
    pub fn logits(&self, x: &RealGrid) -> Result<ClassField> {
        let n = self.layers[0].len();
        let mut values = Vec::with_capacity(n * self.layers.len());
        for layer in &self.layers {
            values.extend_from_slice(layer.forward(x)?.values());
        }
        ClassField::new(1, n, self.layers.len(), FieldKind::Logit, values)
    }

    /// CE frequency components `L_ce(ν)` for input `x`.
    pub fn components(&self, x: &RealGrid, annot: &ClassField) -> Result<Spectrum> {
        let dec = ce_decompose(&self.logits(x)?, annot)?;
        let comps = dec.components();
        Spectrum::new(Shape::D1(comps.len()), comps.values().to_vec())
    }
}

fn check_annot(toy: &CeToy, x: &RealGrid, annot: &ClassField) -> Result<()> {
    let n = one_d(x.shape())?;
    if n != toy.layers[0].len() {
        return Err(Error::mismatch(n, toy.layers[0].len()));
    }
    if annot.dims() != (toy.num_classes(), 1, n) {
        return Err(Error::mismatch(annot.dims(), (toy.num_classes(), 1, n)));
    }
    Ok(())
}

/// Delta-approximated CE Jacobian
/// `Σ_c ½k(ν_j, c)·([ν_i = 0]·s(-ν_j, c) - [i = j]·b(-ν_i, c)) / N`.
pub fn ce_jacobian_spectral(toy: &CeToy, x: &RealGrid, annot: &ClassField) -> Result<SpectralJacobian> {
    check_annot(toy, x, annot)?;
    let n = x.len();
    let probs = softmax(&toy.logits(x)?);
    let mut k = Vec::with_capacity(toy.num_classes());
    let mut s = Vec::with_capacity(toy.num_classes());
    let mut b = Vec::with_capacity(toy.num_classes());
    for (c, layer) in toy.layers.iter().enumerate() {
        k.push(layer.kernel_spectrum()?);
        s.push(dft(&RealGrid::from_vec_1d(probs.plane(c).to_vec())?)?);
        b.push(dft(&RealGrid::from_vec_1d(annot.plane(c).to_vec())?)?);
    }
    let inv = 1.0 / n as f64;
    SpectralJacobian::from_fn(n, n, |i, j| {
        let mut acc = Complex::new(0.0, 0.0);
        for c in 0..k.len() {
            let mut inner = Complex::new(0.0, 0.0);
            if i == 0 {
                inner += s[c].at_negated(j);
            }
            if i == j {
                inner -= b[c].at_negated(i);
            }
            acc += k[c].values()[j] * inner * (0.5 * inv);
        }
        acc
    })
}

/// Finite-difference oracle for [`ce_jacobian_spectral`].
pub fn ce_jacobian_fd(toy: &CeToy, x: &RealGrid, annot: &ClassField, h: f64) -> Result<SpectralJacobian> {
    check_annot(toy, x, annot)?;
    fd_jacobian_spectral_output(|g| toy.components(g, annot), x, h)
}
