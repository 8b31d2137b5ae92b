//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::Rng;

use specseg::fourier::{RealGrid, Shape};
use specseg::segmap::{ClassField, FieldKind, LabelMap};

/// Naive separable DFT with `e^{-2πi kt/n}`, written out independently of the library.
pub fn naive_dft(values: &[C], rows: usize, cols: usize) -> Vec<C> {
    let dft_1d = |x: &[C]| -> Vec<C> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| {
                        let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                        v * C::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    };
    let mut out = values.to_vec();
    for r in 0..rows {
        let row = dft_1d(&out[r * cols..(r + 1) * cols]);
        out[r * cols..(r + 1) * cols].copy_from_slice(&row);
    }
    for c in 0..cols {
        let col: Vec<C> = (0..rows).map(|r| out[r * cols + c]).collect();
        for (r, v) in dft_1d(&col).into_iter().enumerate() {
            out[r * cols + c] = v;
        }
    }
    out
}

pub fn naive_dft_real(grid: &RealGrid) -> Vec<C> {
    let s = grid.shape();
    let v: Vec<C> = grid.values().iter().map(|&x| C::new(x, 0.0)).collect();
    naive_dft(&v, s.rows(), s.cols())
}

/// Flat index of `-k` on a `rows x cols` grid.
pub fn neg(k: usize, rows: usize, cols: usize) -> usize {
    let (r, c) = (k / cols, k % cols);
    ((rows - r) % rows) * cols + (cols - c) % cols
}

pub fn random_grid(rng: &mut impl Rng, shape: Shape, lo: f64, hi: f64) -> RealGrid {
    let v = (0..shape.len()).map(|_| rng.gen_range(lo..hi)).collect();
    RealGrid::new(shape, v).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, h: usize, w: usize, classes: usize) -> LabelMap {
    let v = (0..h * w).map(|_| rng.gen_range(0..classes as u32)).collect();
    LabelMap::new(h, w, classes, v).unwrap()
}

pub fn random_logits(rng: &mut impl Rng, h: usize, w: usize, classes: usize, amp: f64) -> ClassField {
    let v = (0..h * w * classes).map(|_| rng.gen_range(-amp..amp)).collect();
    ClassField::new(h, w, classes, FieldKind::Logit, v).unwrap()
}

/// `-Σ_t log softmax(y_t)[label_t]` via log-sum-exp.
pub fn ce_oracle(logits: &ClassField, labels: &LabelMap) -> f64 {
    let (classes, h, w) = logits.dims();
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            let m = (0..classes).map(|k| logits.get(k, r, c)).fold(f64::NEG_INFINITY, f64::max);
            let lse = m + (0..classes).map(|k| (logits.get(k, r, c) - m).exp()).sum::<f64>().ln();
            total += lse - logits.get(labels.get(r, c) as usize, r, c);
        }
    }
    total
}

/// Average ranks (ties share the mean rank).
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = mean;
        }
        i = j + 1;
    }
    out
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
