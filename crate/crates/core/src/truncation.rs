//! Feature truncation by bilinear down-sampling, and a FLOPs cost model for
//! encoder-decoder networks.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Multi-channel real feature map stored in `(channel, row, col)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Dimension(format!("feature map {channels}x{height}x{width}")));
        }
        if values.len() != channels * height * width {
            return Err(Error::Dimension(format!(
                "feature map {channels}x{height}x{width} given {} values",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value at index {i}")));
        }
        Ok(Self { channels, height, width, values })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let plane = height * width;
        let values = (0..channels * plane)
            .map(|i| f(i / plane.max(1), (i % plane.max(1)) / width.max(1), i % width.max(1)))
            .collect();
        Self::new(channels, height, width, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.values[channel * plane..(channel + 1) * plane]
    }

    /// Sum of squared values.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Source coordinates and weights of one align-corners output axis.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            let pos = if dst == 1 || src == 1 {
                0.0
            } else {
                i as f64 * (src - 1) as f64 / (dst - 1) as f64
            };
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Per-channel bilinear interpolation with corner-aligned sampling: output
/// sample `i` reads the input at `i·(src - 1)/(dst - 1)`.
pub fn bilinear_resize(f: &FeatureMap, target_h: usize, target_w: usize) -> Result<FeatureMap> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidInput(format!("resize target {target_h}x{target_w}")));
    }
    let rows = axis_taps(f.height, target_h);
    let cols = axis_taps(f.width, target_w);
    let mut values = Vec::with_capacity(f.channels * target_h * target_w);
    for c in 0..f.channels {
        for &(r0, r1, wr) in &rows {
            for &(c0, c1, wc) in &cols {
                let top = f.get(c, r0, c0) * (1.0 - wc) + f.get(c, r0, c1) * wc;
                let bottom = f.get(c, r1, c0) * (1.0 - wc) + f.get(c, r1, c1) * wc;
                values.push(top * (1.0 - wr) + bottom * wr);
            }
        }
    }
    FeatureMap::new(f.channels, target_h, target_w, values)
}

/// Band limit represented by a truncated side: `(size - 1) / 2`.
pub fn band_limit_of_size(size: usize) -> usize {
    size.saturating_sub(1) / 2
}

/// Resize to `size × size`; `size` must be odd and no larger than either side.
pub fn truncate_feature(f: &FeatureMap, size: usize) -> Result<FeatureMap> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("truncation size must be odd and positive, got {size}")));
    }
    if size > f.height || size > f.width {
        return Err(Error::InvalidInput(format!(
            "truncation size {size} exceeds feature side {}x{}",
            f.height, f.width
        )));
    }
    bilinear_resize(f, size, size)
}

/// Truncate and resize back to the original side.
pub fn truncate_and_restore(f: &FeatureMap, size: usize) -> Result<FeatureMap> {
    bilinear_resize(&truncate_feature(f, size)?, f.height, f.width)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Pointwise,
    Upsample,
    Pool,
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conv" => Ok(LayerKind::Conv),
            "pointwise" => Ok(LayerKind::Pointwise),
            "upsample" => Ok(LayerKind::Upsample),
            "pool" => Ok(LayerKind::Pool),
            other => Err(Error::Format(format!("unknown layer kind {other:?}"))),
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Conv => "conv",
            LayerKind::Pointwise => "pointwise",
            LayerKind::Upsample => "upsample",
            LayerKind::Pool => "pool",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partition {
    Encoder,
    Decoder,
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "encoder" => Ok(Partition::Encoder),
            "decoder" => Ok(Partition::Decoder),
            other => Err(Error::Format(format!("unknown partition {other:?}"))),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Encoder => "encoder",
            Partition::Decoder => "decoder",
        })
    }
}

/// One layer: channel counts are real so that pruning can scale them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: f64,
    pub out_channels: f64,
    pub kernel: usize,
    /// Output spatial side.
    pub side: f64,
    pub partition: Partition,
}

impl LayerSpec {
    fn validate(&self) -> Result<()> {
        let ok = self.in_channels > 0.0
            && self.out_channels > 0.0
            && self.kernel > 0
            && self.side > 0.0
            && self.in_channels.is_finite()
            && self.out_channels.is_finite()
            && self.side.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!("layer dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    /// FLOPs at output side `side`, counting a multiply-add as 2.
    ///
    /// conv `2k²·Cin·Cout·s²`, pointwise `2·Cin·Cout·s²`, bilinear upsample
    /// `8·Cout·s²` (four taps), pool `k²·Cout·s²`.
    pub fn flops_at(&self, side: f64) -> f64 {
        let area = side * side;
        let k2 = (self.kernel * self.kernel) as f64;
        match self.kind {
            LayerKind::Conv => 2.0 * k2 * self.in_channels * self.out_channels * area,
            LayerKind::Pointwise => 2.0 * self.in_channels * self.out_channels * area,
            LayerKind::Upsample => 8.0 * self.out_channels * area,
            LayerKind::Pool => k2 * self.out_channels * area,
        }
    }

    pub fn flops(&self) -> f64 {
        self.flops_at(self.side)
    }
}

/// Ordered layer list of an encoder-decoder network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCostSpec {
    layers: Vec<LayerSpec>,
}

impl NetworkCostSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network spec has no layers".into()));
        }
        for l in &layers {
            l.validate()?;
        }
        Ok(Self { layers })
    }

    /// One layer per line: `kind, Cin, Cout, k, side, partition`. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut layers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(Error::Format(format!(
                    "line {}: expected 6 fields (kind, Cin, Cout, k, side, partition), got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i]
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number {:?}", lineno + 1, fields[i])))
            };
            let kernel = fields[3]
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("line {}: bad kernel side {:?}", lineno + 1, fields[3])))?;
            let layer = LayerSpec {
                kind: fields[0].parse()?,
                in_channels: num(1)?,
                out_channels: num(2)?,
                kernel,
                side: num(4)?,
                partition: fields[5].parse()?,
            };
            layer
                .validate()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            layers.push(layer);
        }
        Self::new(layers)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Largest decoder output side; the reference the decoder feature side is measured against.
    pub fn base_side(&self) -> Option<f64> {
        self.layers
            .iter()
            .filter(|l| l.partition == Partition::Decoder)
            .map(|l| l.side)
            .reduce(f64::max)
    }

    pub fn decoder_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| l.partition == Partition::Decoder).count()
    }

    /// Decoder sides after scaling by `decoder_feature_side / base_side`.
    pub fn decoder_sides(&self, decoder_feature_side: f64) -> Vec<f64> {
        let ratio = self.base_side().map_or(1.0, |b| decoder_feature_side / b);
        self.layers
            .iter()
            .filter(|l| l.partition == Partition::Decoder)
            .map(|l| l.side * ratio)
            .collect()
    }

    /// Encoder channels scaled by `1 - rate`, except the network input channels.
    pub fn pruned(&self, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidInput(format!("pruning rate must lie in [0, 1), got {rate}")));
        }
        let keep = 1.0 - rate;
        let mut layers = self.layers.clone();
        for (i, l) in layers.iter_mut().enumerate() {
            if l.partition == Partition::Encoder {
                if i > 0 {
                    l.in_channels *= keep;
                }
                l.out_channels *= keep;
            }
        }
        Self::new(layers)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub flops_total: f64,
    pub flops_encoder: f64,
    pub flops_decoder: f64,
    pub relative_flops_drop: Option<f64>,
    pub fpi: Option<f64>,
}

impl CostReport {
    pub fn flops_by_partition(&self, partition: Partition) -> f64 {
        match partition {
            Partition::Encoder => self.flops_encoder,
            Partition::Decoder => self.flops_decoder,
        }
    }

    /// Attach the drop relative to `base`.
    pub fn with_baseline(mut self, base: &CostReport) -> Result<Self> {
        self.relative_flops_drop = Some(relative_flops_drop(&self, base)?);
        Ok(self)
    }

    pub fn with_miou(mut self, miou: f64) -> Result<Self> {
        self.fpi = Some(fpi(self.flops_total, miou)?);
        Ok(self)
    }
}

/// Cost with every decoder side scaled by `decoder_feature_side / base_side`.
pub fn flops_total(spec: &NetworkCostSpec, decoder_feature_side: f64) -> Result<CostReport> {
    if !(decoder_feature_side.is_finite() && decoder_feature_side > 0.0) {
        return Err(Error::InvalidInput(format!("decoder feature side {decoder_feature_side}")));
    }
    flops_with_stage_sides(spec, &spec.decoder_sides(decoder_feature_side))
}

/// Cost with explicit output sides for the decoder layers, in order.
pub fn flops_with_stage_sides(spec: &NetworkCostSpec, decoder_sides: &[f64]) -> Result<CostReport> {
    if decoder_sides.len() != spec.decoder_layer_count() {
        return Err(Error::mismatch(decoder_sides.len(), spec.decoder_layer_count()));
    }
    if decoder_sides.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidInput("decoder sides must be positive".into()));
    }
    let mut sides = decoder_sides.iter();
    let (mut enc, mut dec) = (0.0, 0.0);
    for l in &spec.layers {
        match l.partition {
            Partition::Encoder => enc += l.flops(),
            Partition::Decoder => dec += l.flops_at(*sides.next().expect("length checked")),
        }
    }
    Ok(CostReport {
        flops_total: enc + dec,
        flops_encoder: enc,
        flops_decoder: dec,
        relative_flops_drop: None,
        fpi: None,
    })
}

/// `1 - truncated / base`.
pub fn relative_drop(truncated: f64, base: f64) -> Result<f64> {
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::Degenerate(format!("baseline FLOPs must be positive, got {base}")));
    }
    if !(truncated.is_finite() && truncated >= 0.0) {
        return Err(Error::InvalidInput(format!("FLOPs must be non-negative, got {truncated}")));
    }
    Ok(1.0 - truncated / base)
}

pub fn relative_flops_drop(truncated: &CostReport, base: &CostReport) -> Result<f64> {
    relative_drop(truncated.flops_total, base.flops_total)
}

/// FLOPs per IoU score.
pub fn fpi(flops: f64, miou: f64) -> Result<f64> {
    if !(miou > 0.0 && miou <= 1.0) {
        return Err(Error::InvalidInput(format!("mIoU must lie in (0, 1], got {miou}")));
    }
    if !(flops.is_finite() && flops >= 0.0) {
        return Err(Error::InvalidInput(format!("FLOPs must be non-negative, got {flops}")));
    }
    Ok(flops / miou)
}
