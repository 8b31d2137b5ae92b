//! Segmentation data model: hard label maps and per-class fields.
//! A field holds one-hot annotations, probabilities or logits.

mod block;
mod pgm;
mod tensor;

pub use block::{block_annotation, block_annotation_with, block_edge, BlockMode};
pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm, PgmEncoding};
pub use tensor::{decode_tensor, encode_tensor, load_tensor, save_tensor, TENSOR_HEADER_LEN, TENSOR_MAGIC};

use crate::error::{Error, Result};
use crate::fourier::{RealGrid, Shape};

/// Floor applied to probabilities before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Integer class grid, every label below `num_classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    num_classes: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, num_classes: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 || num_classes == 0 {
            return Err(Error::Dimension(format!(
                "label map {height}x{width} with {num_classes} classes"
            )));
        }
        if labels.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} map given {} labels",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            height,
            width,
            num_classes,
            labels,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        num_classes: usize,
        mut f: impl FnMut(usize, usize) -> u32,
    ) -> Result<Self> {
        let labels = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self::new(height, width, num_classes, labels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn shape(&self) -> Shape {
        Shape::d2(self.height, self.width)
    }

    /// Binary mask of one class as a real grid.
    pub fn class_indicator(&self, class: u32) -> RealGrid {
        let values = self.labels.iter().map(|&l| f64::from(u8::from(l == class))).collect();
        RealGrid::new(self.shape(), values).expect("label map shape is valid")
    }
}

/// What a [`ClassField`] holds; selects the invariant checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Values in {0, 1}, one hot per pixel.
    OneHot,
    /// Values in (0, 1], summing to one per pixel.
    Prob,
    /// Unconstrained finite values.
    Logit,
}

/// Per-class real grid stored in `(class, row, col)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassField {
    height: usize,
    width: usize,
    num_classes: usize,
    kind: FieldKind,
    values: Vec<f64>,
}

impl ClassField {
    pub fn new(
        height: usize,
        width: usize,
        num_classes: usize,
        kind: FieldKind,
        values: Vec<f64>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || num_classes == 0 {
            return Err(Error::Dimension(format!(
                "field {num_classes}x{height}x{width}"
            )));
        }
        if values.len() != num_classes * height * width {
            return Err(Error::Dimension(format!(
                "field {num_classes}x{height}x{width} given {} values",
                values.len()
            )));
        }
        let field = Self {
            height,
            width,
            num_classes,
            kind,
            values,
        };
        field.validate()?;
        Ok(field)
    }

    /// Build from a function of `(class, row, col)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        num_classes: usize,
        kind: FieldKind,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let plane = height * width;
        let values = (0..num_classes * plane)
            .map(|i| {
                let (c, p) = (i / plane, i % plane);
                f(c, p / width, p % width)
            })
            .collect();
        Self::new(height, width, num_classes, kind, values)
    }

    fn validate(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at index {i}")));
        }
        let plane = self.height * self.width;
        match self.kind {
            FieldKind::Logit => {}
            FieldKind::OneHot => {
                if self.values.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidInput("one-hot field has non-binary values".into()));
                }
                for p in 0..plane {
                    let s: f64 = (0..self.num_classes).map(|c| self.values[c * plane + p]).sum();
                    if s != 1.0 {
                        return Err(Error::InvalidInput(format!("one-hot pixel {p} sums to {s}")));
                    }
                }
            }
            FieldKind::Prob => {
                if self.values.iter().any(|&v| v <= 0.0 || v > 1.0) {
                    return Err(Error::InvalidInput("probability outside (0, 1]".into()));
                }
                for p in 0..plane {
                    let s: f64 = (0..self.num_classes).map(|c| self.values[c * plane + p]).sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidInput(format!("probabilities at pixel {p} sum to {s}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reinterpret the field under another kind, checking its invariant.
    pub fn into_kind(mut self, kind: FieldKind) -> Result<Self> {
        self.kind = kind;
        self.validate()?;
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Shape {
        Shape::d2(self.height, self.width)
    }

    /// `(classes, height, width)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.num_classes, self.height, self.width)
    }

    pub fn get(&self, class: usize, row: usize, col: usize) -> f64 {
        self.values[(class * self.height + row) * self.width + col]
    }

    pub fn plane(&self, class: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[class * n..(class + 1) * n]
    }

    /// One class as a real grid.
    pub fn class_grid(&self, class: usize) -> RealGrid {
        RealGrid::new(self.shape(), self.plane(class).to_vec()).expect("field values are finite")
    }

    /// Multiply every value by `alpha`, yielding a logit field.
    pub fn scaled(&self, alpha: f64) -> Result<ClassField> {
        let values = self.values.iter().map(|v| v * alpha).collect();
        ClassField::new(self.height, self.width, self.num_classes, FieldKind::Logit, values)
    }

    /// Class index with the largest value at each pixel; ties go to the lowest class.
    pub fn argmax(&self) -> LabelMap {
        let plane = self.height * self.width;
        let labels = (0..plane)
            .map(|p| {
                let mut best = 0usize;
                for c in 1..self.num_classes {
                    if self.values[c * plane + p] > self.values[best * plane + p] {
                        best = c;
                    }
                }
                best as u32
            })
            .collect();
        LabelMap::new(self.height, self.width, self.num_classes, labels).expect("argmax labels in range")
    }

}

/// One real value per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_grid(&self) -> RealGrid {
        RealGrid::new(Shape::d2(self.height, self.width), self.values.clone()).expect("finite scalar field")
    }
}

/// `B(t, c) = [label(t) == c]`.
pub fn one_hot(map: &LabelMap) -> ClassField {
    let plane = map.height * map.width;
    let mut values = vec![0.0; map.num_classes * plane];
    for (p, &l) in map.labels.iter().enumerate() {
        values[l as usize * plane + p] = 1.0;
    }
    ClassField {
        height: map.height,
        width: map.width,
        num_classes: map.num_classes,
        kind: FieldKind::OneHot,
        values,
    }
}

fn pixel_max(logits: &ClassField, p: usize) -> f64 {
    let plane = logits.height * logits.width;
    (0..logits.num_classes)
        .map(|c| logits.values[c * plane + p])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-pixel softmax over classes, with the pixel maximum subtracted first.
pub fn softmax(logits: &ClassField) -> ClassField {
    let plane = logits.height * logits.width;
    let mut values = vec![0.0; logits.values.len()];
    for p in 0..plane {
        let m = pixel_max(logits, p);
        let mut sum = 0.0;
        for c in 0..logits.num_classes {
            let e = (logits.values[c * plane + p] - m).exp();
            values[c * plane + p] = e;
            sum += e;
        }
        for c in 0..logits.num_classes {
            values[c * plane + p] /= sum;
        }
    }
    ClassField {
        height: logits.height,
        width: logits.width,
        num_classes: logits.num_classes,
        kind: FieldKind::Prob,
        values,
    }
}

/// `Y_p(t) = log Σ_c exp(Y(t, c))`, evaluated as a stable log-sum-exp.
pub fn log_partition(logits: &ClassField) -> ScalarField {
    let plane = logits.height * logits.width;
    let values = (0..plane)
        .map(|p| {
            let m = pixel_max(logits, p);
            let s: f64 = (0..logits.num_classes)
                .map(|c| (logits.values[c * plane + p] - m).exp())
                .sum();
            m + s.ln()
        })
        .collect();
    ScalarField {
        height: logits.height,
        width: logits.width,
        values,
    }
}
