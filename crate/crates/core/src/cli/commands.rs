use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use super::config::ConfigFile;
use super::svg::{LinePlot, Series};
use super::{BiouArgs, BlockAnnotArgs, CliError, Command, CommonArgs, FlopsArgs, GradcheckArgs, SpectrumArgs};
use crate::error::Error;
use crate::fourier::{dft, RealGrid};
use crate::iou_metrics::{
    boundary_iou_spectral, boundary_overlap_approx, boundary_overlap_closed, boundary_overlap_numeric, mean_iou,
    spatial_overlap_quadrature, spatial_relaxed_iou, BoundarySegment1D, GaussianBoundaryModel, OverlapMethod,
};
use crate::segmap::{
    block_annotation_with, load_pgm, load_tensor, log_partition, one_hot, save_pgm, BlockMode, ClassField, LabelMap,
    PgmEncoding,
};
use crate::spectral_ce::{ce_decompose_with, ce_spatial, discrepancy_r, CeDecomposition, RadialMetric};
use crate::spectral_grad::{
    cauchy_riemann_residual, fd_jacobian_spectral, layer_jacobian_delta, layer_jacobian_full, relu_map,
    upsample2_map, SpectralJacobian, ToyConvLayer, FD_STEP,
};
use crate::synth::{confident_logits, seeded_blob_map};
use crate::truncation::{flops_total, fpi, relative_drop, NetworkCostSpec};

const DEFAULT_OUT: &str = "specseg-out";
const DEFAULT_SEED: u64 = 0;
const DEFAULT_ALPHA: f64 = 4.0;
const DEFAULT_SIZE: usize = 32;
const DEFAULT_CLASSES: usize = 3;

/// Files written by a command, in creation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
}

pub fn run_command(command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::BlockAnnot(a) => cmd_block_annot(a),
        Command::Biou(a) => cmd_biou(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Flops(a) => cmd_flops(a),
    }
}

struct Context {
    cfg: ConfigFile,
    out: PathBuf,
    plot: bool,
    seed: u64,
}

impl Context {
    fn new(common: &CommonArgs) -> Result<Self, CliError> {
        let cfg = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let out: PathBuf = cfg.pick(common.out.clone(), "out", PathBuf::from(DEFAULT_OUT))?;
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            plot: cfg.switch(common.plot, "plot")?,
            seed: cfg.pick(common.seed, "seed", DEFAULT_SEED)?,
            cfg,
            out,
        })
    }

    fn path(&self, prefix: &str, name: &str) -> PathBuf {
        self.out.join(format!("{prefix}{name}"))
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::from(io),
        other => CliError::Lib(Error::Format(format!("{other:?}"))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_svg(path: &Path, plot: &LinePlot) -> Result<(), CliError> {
    std::fs::write(path, plot.render())?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Input files from flags, else a comma-separated `input` config entry.
fn inputs(flag: &[PathBuf], cfg: &ConfigFile) -> Result<Vec<PathBuf>, CliError> {
    if !flag.is_empty() {
        return Ok(flag.to_vec());
    }
    Ok(cfg.pick_list::<PathBuf>(None, "input")?.unwrap_or_default())
}

fn file_prefix(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!("{stem}_")
}

/// Run `job` for every input, one worker thread per file. Errors are
/// reported for the first failing input in argument order.
fn fan_out<F>(inputs: &[PathBuf], job: F) -> Result<CommandOutput, CliError>
where
    F: Fn(&Path, &str) -> Result<Vec<PathBuf>, CliError> + Sync,
{
    let results: Vec<Result<Vec<PathBuf>, CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|p| {
                let job = &job;
                scope.spawn(move || job(p, &file_prefix(p)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(usage("worker thread panicked"))))
            .collect()
    });
    let mut out = CommandOutput::default();
    for r in results {
        out.files.extend(r?);
    }
    Ok(out)
}

enum MapSource<'a> {
    File(&'a Path),
    Synthetic { size: usize, classes: usize, seed: u64 },
}

impl MapSource<'_> {
    fn load(&self, classes: Option<usize>) -> Result<LabelMap, CliError> {
        Ok(match *self {
            MapSource::File(p) => load_pgm(p, classes)?,
            MapSource::Synthetic { size, classes, seed } => seeded_blob_map(size, size, classes, seed)?,
        })
    }

    fn label(&self) -> &'static str {
        match self {
            MapSource::File(_) => "pgm",
            MapSource::Synthetic { .. } => "synthetic",
        }
    }
}

fn parse_metric(text: &str) -> Result<RadialMetric, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "chebyshev" => Ok(RadialMetric::Chebyshev),
        "euclidean" => Ok(RadialMetric::Euclidean),
        other => Err(usage(format!("unknown metric {other:?}"))),
    }
}

fn metric_name(metric: RadialMetric) -> &'static str {
    match metric {
        RadialMetric::Chebyshev => "chebyshev",
        RadialMetric::Euclidean => "euclidean",
    }
}

// ---------------------------------------------------------------- spectrum

#[derive(Clone, Debug, Serialize)]
struct SpectrumRow {
    nu: usize,
    b_abs: f64,
    yhat_abs: f64,
    l_ce: f64,
    r: f64,
}

#[derive(Clone, Debug, Serialize)]
struct SpectrumSummary {
    command: &'static str,
    source: &'static str,
    height: usize,
    width: usize,
    classes: usize,
    metric: &'static str,
    alpha: Option<f64>,
    nyquist: usize,
    rows: usize,
    ce_total: f64,
    ce_spatial: f64,
    imag_residue: f64,
}

/// Class-averaged `|b|` and `|ŷ|` per radius, each normalized to its maximum.
fn radial_magnitudes(
    labels: &LabelMap,
    logits: &ClassField,
    metric: RadialMetric,
    radii: usize,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let shape = labels.shape();
    let annot = one_hot(labels);
    let yp = dft(&log_partition(logits).to_grid())?;
    let mut b_sum = vec![0.0; radii];
    let mut y_sum = vec![0.0; radii];
    let mut count = vec![0usize; radii];
    for c in 0..annot.num_classes() {
        let b = dft(&annot.class_grid(c))?;
        let y = dft(&logits.class_grid(c))?;
        for k in 0..shape.len() {
            let r = metric.radius(shape, k);
            b_sum[r] += b.values()[k].norm();
            y_sum[r] += (yp.values()[k] - y.values()[k]).norm();
            count[r] += 1;
        }
    }
    let normalize = |sum: Vec<f64>| {
        let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
        let peak = mean.iter().fold(0.0f64, |m, v| m.max(*v));
        if peak > 0.0 {
            mean.iter().map(|v| v / peak).collect()
        } else {
            mean
        }
    };
    Ok((normalize(b_sum), normalize(y_sum)))
}

fn spectrum_rows(labels: &LabelMap, logits: &ClassField, metric: RadialMetric) -> Result<(Vec<SpectrumRow>, CeDecomposition), Error> {
    let dec = ce_decompose_with(logits, &one_hot(labels), metric)?;
    let profile = dec.radial_profile();
    let (b, y) = radial_magnitudes(labels, logits, metric, profile.len())?;
    let rows = (0..profile.len())
        .map(|nu| {
            Ok(SpectrumRow { nu, b_abs: b[nu], yhat_abs: y[nu], l_ce: profile[nu], r: discrepancy_r(&dec, nu)? })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok((rows, dec))
}

fn spectrum_one(
    ctx: &Context,
    source: MapSource<'_>,
    logits_path: Option<&Path>,
    classes: Option<usize>,
    alpha: f64,
    metric: RadialMetric,
    prefix: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let labels = source.load(classes)?;
    let (logits, alpha_used) = match logits_path {
        Some(p) => {
            let field = load_tensor(p)?;
            if (field.height(), field.width()) != (labels.height(), labels.width()) {
                return Err(Error::mismatch(field.dims(), (labels.height(), labels.width())).into());
            }
            if field.num_classes() < labels.num_classes() {
                return Err(Error::mismatch(field.num_classes(), labels.num_classes()).into());
            }
            (field, None)
        }
        None => (confident_logits(&labels, alpha)?, Some(alpha)),
    };
    // labels may declare fewer classes than the logits carry
    let labels = LabelMap::new(labels.height(), labels.width(), logits.num_classes(), labels.labels().to_vec())?;
    let (rows, dec) = spectrum_rows(&labels, &logits, metric)?;
    let summary = SpectrumSummary {
        command: "spectrum",
        source: source.label(),
        height: labels.height(),
        width: labels.width(),
        classes: labels.num_classes(),
        metric: metric_name(metric),
        alpha: alpha_used,
        nyquist: labels.shape().nyquist_radius(),
        rows: rows.len(),
        ce_total: dec.total(),
        ce_spatial: ce_spatial(&logits, &one_hot(&labels))?,
        imag_residue: dec.imag_residue(),
    };
    let mut files = vec![ctx.path(prefix, "spectrum.csv"), ctx.path(prefix, "spectrum.json")];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &summary)?;
    if ctx.plot {
        let pts = |f: fn(&SpectrumRow) -> f64| rows.iter().map(|r| (r.nu as f64, f(r))).collect();
        let plot = LinePlot::new("Spectra and truncation discrepancy", "ν", "normalized value")
            .with_series(Series::new("|b(ν)|", pts(|r| r.b_abs)))
            .with_series(Series::new("|ŷ(ν)|", pts(|r| r.yhat_abs)))
            .with_series(Series::new("R(ν)", pts(|r| r.r)));
        let lce = LinePlot::new("Cross-entropy spectrum", "ν", "L_ce(ν)").with_series(Series::new("L_ce(ν)", pts(|r| r.l_ce)));
        let (p1, p2) = (ctx.path(prefix, "spectrum.svg"), ctx.path(prefix, "spectrum_lce.svg"));
        write_svg(&p1, &plot)?;
        write_svg(&p2, &lce)?;
        files.extend([p1, p2]);
    }
    Ok(files)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<CommandOutput, CliError> {
    let ctx = Context::new(&args.common)?;
    let cfg = &ctx.cfg;
    let alpha = cfg.pick(args.alpha, "alpha", DEFAULT_ALPHA)?;
    let metric = parse_metric(&cfg.pick(args.metric.clone(), "metric", "chebyshev".to_string())?)?;
    let classes = cfg.pick_opt(args.common.classes, "classes")?;
    let logits: Option<PathBuf> = cfg.pick_opt(args.logits.clone(), "logits")?;
    let batch = cfg.switch(args.batch, "batch")?;
    let files = inputs(&args.input, cfg)?;
    match files.len() {
        0 => {
            if logits.is_some() {
                return Err(usage("--logits needs an --input label map"));
            }
            let size = cfg.pick(args.size, "size", DEFAULT_SIZE)?;
            let source = MapSource::Synthetic { size, classes: classes.unwrap_or(DEFAULT_CLASSES), seed: ctx.seed };
            let files = spectrum_one(&ctx, source, None, None, alpha, metric, "")?;
            Ok(CommandOutput { files })
        }
        1 if !batch => {
            let files = spectrum_one(&ctx, MapSource::File(&files[0]), logits.as_deref(), classes, alpha, metric, "")?;
            Ok(CommandOutput { files })
        }
        _ => {
            if !batch {
                return Err(usage("several inputs need --batch"));
            }
            if logits.is_some() {
                return Err(usage("--logits cannot be combined with --batch"));
            }
            fan_out(&files, |p, prefix| spectrum_one(&ctx, MapSource::File(p), None, classes, alpha, metric, prefix))
        }
    }
}

// ------------------------------------------------------------- block-annot

#[derive(Clone, Debug, Serialize)]
struct BlockRow {
    nu: usize,
    block_edge_rows: usize,
    block_edge_cols: usize,
    miou: f64,
    r: f64,
}

#[derive(Clone, Debug, Serialize)]
struct BlockSummary {
    command: &'static str,
    source: &'static str,
    height: usize,
    width: usize,
    classes: usize,
    mode: &'static str,
    alpha: f64,
    rows: Vec<BlockRow>,
}

fn parse_mode(text: &str) -> Result<BlockMode, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "majority" => Ok(BlockMode::MajorityVote),
        "lowpass" => Ok(BlockMode::LowPassArgmax),
        other => Err(usage(format!("unknown block mode {other:?}"))),
    }
}

fn default_nus(side: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut nu = 1;
    while nu <= side / 2 {
        out.push(nu);
        nu *= 2;
    }
    if out.last() != Some(&(side / 2)) && side / 2 >= 1 {
        out.push(side / 2);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn block_one(
    ctx: &Context,
    source: MapSource<'_>,
    classes: Option<usize>,
    nus: Option<&[usize]>,
    mode: BlockMode,
    alpha: f64,
    prefix: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let map = source.load(classes)?;
    let nus = match nus {
        Some(n) => n.to_vec(),
        None => default_nus(map.height().min(map.width())),
    };
    if nus.contains(&0) {
        return Err(Error::InvalidInput("band limits must be >= 1".into()).into());
    }
    let dec = ce_decompose_with(&confident_logits(&map, alpha)?, &one_hot(&map), RadialMetric::Chebyshev)?;
    let mut files = Vec::new();
    let mut rows = Vec::with_capacity(nus.len());
    for &nu in &nus {
        let block = block_annotation_with(&map, nu, mode)?;
        let path = ctx.path(prefix, &format!("block_nu{nu}.pgm"));
        save_pgm(&block, &path, PgmEncoding::Binary)?;
        files.push(path);
        rows.push(BlockRow {
            nu,
            block_edge_rows: crate::segmap::block_edge(map.height(), nu),
            block_edge_cols: crate::segmap::block_edge(map.width(), nu),
            miou: mean_iou(&block, &map)?,
            r: discrepancy_r(&dec, nu)?,
        });
    }
    let csv_path = ctx.path(prefix, "block_annot.csv");
    write_csv(&csv_path, &rows)?;
    let json_path = ctx.path(prefix, "block_annot.json");
    let summary = BlockSummary {
        command: "block-annot",
        source: source.label(),
        height: map.height(),
        width: map.width(),
        classes: map.num_classes(),
        mode: match mode {
            BlockMode::MajorityVote => "majority",
            BlockMode::LowPassArgmax => "lowpass",
        },
        alpha,
        rows: rows.clone(),
    };
    write_json(&json_path, &summary)?;
    files.extend([csv_path, json_path]);
    if ctx.plot {
        let plot = LinePlot::new("Block-wise annotation", "ν_max", "value")
            .with_series(Series::new("mIoU", rows.iter().map(|r| (r.nu as f64, r.miou)).collect()))
            .with_series(Series::new("R(ν_max)", rows.iter().map(|r| (r.nu as f64, r.r)).collect()));
        let p = ctx.path(prefix, "block_annot.svg");
        write_svg(&p, &plot)?;
        files.push(p);
    }
    Ok(files)
}

fn cmd_block_annot(args: &BlockAnnotArgs) -> Result<CommandOutput, CliError> {
    let ctx = Context::new(&args.common)?;
    let cfg = &ctx.cfg;
    let alpha = cfg.pick(args.alpha, "alpha", DEFAULT_ALPHA)?;
    let mode = parse_mode(&cfg.pick(args.mode.clone(), "mode", "majority".to_string())?)?;
    let classes = cfg.pick_opt(args.common.classes, "classes")?;
    let nus: Option<Vec<usize>> = cfg.pick_list(args.common.nu.as_deref(), "nu")?;
    let batch = cfg.switch(args.batch, "batch")?;
    let files = inputs(&args.input, cfg)?;
    match files.len() {
        0 => {
            let size = cfg.pick(args.size, "size", DEFAULT_SIZE)?;
            let source = MapSource::Synthetic { size, classes: classes.unwrap_or(DEFAULT_CLASSES), seed: ctx.seed };
            Ok(CommandOutput { files: block_one(&ctx, source, None, nus.as_deref(), mode, alpha, "")? })
        }
        1 if !batch => Ok(CommandOutput {
            files: block_one(&ctx, MapSource::File(&files[0]), classes, nus.as_deref(), mode, alpha, "")?,
        }),
        _ => {
            if !batch {
                return Err(usage("several inputs need --batch"));
            }
            fan_out(&files, |p, prefix| block_one(&ctx, MapSource::File(p), classes, nus.as_deref(), mode, alpha, prefix))
        }
    }
}

// -------------------------------------------------------------------- biou

#[derive(Clone, Debug, Serialize)]
struct BiouRow {
    nu_limit: f64,
    numeric: f64,
    closed: f64,
    approx: f64,
    boundary_iou_spectral: f64,
}

#[derive(Clone, Debug, Serialize)]
struct BiouSummary {
    command: &'static str,
    segment_s: [f64; 2],
    segment_b: [f64; 2],
    sigma: f64,
    rows: usize,
    spatial_overlap_2pi: f64,
    spatial_relaxed_iou: f64,
    saturation_at_3_sigma: f64,
}

fn cmd_biou(args: &BiouArgs) -> Result<CommandOutput, CliError> {
    let ctx = Context::new(&args.common)?;
    let cfg = &ctx.cfg;
    let t0 = cfg.pick(args.t0, "t0", 0.0)?;
    let t1 = cfg.pick(args.t1, "t1", 4.0)?;
    let b0 = cfg.pick(args.b0, "b0", t0)?;
    let b1 = cfg.pick(args.b1, "b1", t1)?;
    let sigma = match (cfg.pick_opt(args.sigma, "sigma")?, cfg.pick_opt(args.d, "d")?) {
        (Some(s), _) => s,
        (None, Some(d)) => d / 2.0,
        (None, None) => 0.5,
    };
    let ms = GaussianBoundaryModel::new(BoundarySegment1D::new(t0, t1)?, sigma)?;
    let mb = GaussianBoundaryModel::new(BoundarySegment1D::new(b0, b1)?, sigma)?;
    let nus: Vec<f64> = match cfg.pick_list::<f64>(args.common.nu.as_deref(), "nu")? {
        Some(v) => v,
        // Lσ from 0.25 to 10
        None => (1..=40).map(|i| i as f64 * 0.25 / sigma).collect(),
    };
    let mut rows = Vec::with_capacity(nus.len());
    for &nu in &nus {
        rows.push(BiouRow {
            nu_limit: nu,
            numeric: boundary_overlap_numeric(&ms, &mb, nu)?,
            closed: boundary_overlap_closed(&ms, &mb, nu)?,
            approx: boundary_overlap_approx(&ms, &mb, nu)?,
            boundary_iou_spectral: match boundary_iou_spectral(&ms, &mb, nu, OverlapMethod::Numeric) {
                Ok(v) => v,
                Err(Error::Degenerate(_)) => 0.0,
                Err(e) => return Err(e.into()),
            },
        });
    }
    let full = boundary_overlap_numeric(&ms, &mb, 40.0 / sigma)?;
    let summary = BiouSummary {
        command: "biou",
        segment_s: [t0, t1],
        segment_b: [b0, b1],
        sigma,
        rows: rows.len(),
        spatial_overlap_2pi: 2.0 * std::f64::consts::PI * spatial_overlap_quadrature(&ms, &mb),
        spatial_relaxed_iou: spatial_relaxed_iou(&ms, &mb),
        saturation_at_3_sigma: boundary_overlap_numeric(&ms, &mb, 3.0 / sigma)? / full,
    };
    let mut files = vec![ctx.path("", "biou.csv"), ctx.path("", "biou.json")];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &summary)?;
    if ctx.plot {
        let pts = |f: fn(&BiouRow) -> f64| rows.iter().map(|r| (r.nu_limit, f(r))).collect();
        let overlap = LinePlot::new("Band-limited boundary overlap", "ν_limit", "overlap")
            .with_series(Series::new("numeric", pts(|r| r.numeric)))
            .with_series(Series::new("closed", pts(|r| r.closed)))
            .with_series(Series::new("approx", pts(|r| r.approx)));
        let iou = LinePlot::new("Spectral boundary IoU", "ν_limit", "boundary IoU")
            .with_series(Series::new("spectral", pts(|r| r.boundary_iou_spectral)));
        let (p1, p2) = (ctx.path("", "biou.svg"), ctx.path("", "biou_iou.svg"));
        write_svg(&p1, &overlap)?;
        write_svg(&p2, &iou)?;
        files.extend([p1, p2]);
    }
    Ok(CommandOutput { files })
}

// --------------------------------------------------------------- gradcheck

#[derive(Clone, Debug, Serialize)]
struct JacobianEntry {
    map: &'static str,
    nu_i: usize,
    nu_j: usize,
    re: f64,
    im: f64,
    abs: f64,
}

#[derive(Clone, Debug, Serialize)]
struct OffDiagonalRatios {
    conv_fd: f64,
    relu_fd: f64,
    layer_fd: f64,
    layer_full: f64,
    layer_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
struct GradcheckSummary {
    command: &'static str,
    n: usize,
    kernel_scale: f64,
    taps: usize,
    seed: u64,
    rows: Vec<usize>,
    off_diagonal_ratio: OffDiagonalRatios,
    max_abs_full_minus_fd: f64,
    max_rel_diag_error_delta: f64,
    cauchy_riemann_residual: f64,
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<CommandOutput, CliError> {
    use rand::{Rng, SeedableRng};

    let ctx = Context::new(&args.common)?;
    let cfg = &ctx.cfg;
    let n = cfg.pick(args.n, "n", 16usize)?;
    let scale = cfg.pick(args.scale, "scale", 0.01)?;
    let taps = cfg.pick(args.taps, "taps", 3usize)?;
    if n < 4 {
        return Err(Error::InvalidInput(format!("gradcheck needs n >= 4, got {n}")).into());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
    let layer = ToyConvLayer::random(n, taps, scale, &mut rng)?;
    let x = RealGrid::from_vec_1d((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;

    let conv = fd_jacobian_spectral(|g| layer.pre_activation(g), &x, FD_STEP)?;
    let relu = fd_jacobian_spectral(relu_map, &x, FD_STEP)?;
    let up = fd_jacobian_spectral(upsample2_map, &x, FD_STEP)?;
    let fd = fd_jacobian_spectral(|g| layer.forward(g), &x, FD_STEP)?;
    let full = layer_jacobian_full(&layer, &x)?;
    let delta = layer_jacobian_delta(&layer)?;

    let mut rows = vec![0, n / 4, n / 2];
    rows.dedup();
    let mut entries = Vec::new();
    for (name, jac) in [
        ("conv_fd", &conv),
        ("relu_fd", &relu),
        ("upsample_fd", &up),
        ("layer_fd", &fd),
        ("layer_full", &full),
        ("layer_delta", &delta),
    ] {
        for &i in &rows {
            for j in 0..jac.cols() {
                let v = jac.get(i, j);
                entries.push(JacobianEntry { map: name, nu_i: i, nu_j: j, re: v.re, im: v.im, abs: v.norm() });
            }
        }
    }
    let rel_diag = fd
        .diagonal()
        .iter()
        .zip(delta.diagonal())
        .filter(|(_, d)| d.norm() > 0.0)
        .map(|(f, d)| (f - d).norm() / d.norm())
        .fold(0.0, f64::max);
    let summary = GradcheckSummary {
        command: "gradcheck",
        n,
        kernel_scale: layer.scale(),
        taps,
        seed: ctx.seed,
        rows: rows.clone(),
        off_diagonal_ratio: OffDiagonalRatios {
            conv_fd: conv.off_diagonal_ratio(),
            relu_fd: relu.off_diagonal_ratio(),
            layer_fd: fd.off_diagonal_ratio(),
            layer_full: full.off_diagonal_ratio(),
            layer_delta: delta.off_diagonal_ratio(),
        },
        max_abs_full_minus_fd: full.max_abs_diff(&fd)?,
        max_rel_diag_error_delta: rel_diag,
        cauchy_riemann_residual: cauchy_riemann_residual(|v| layer.forward_complex(v), &x, FD_STEP)?,
    };
    let mut files = vec![ctx.path("", "gradcheck.csv"), ctx.path("", "gradcheck.json")];
    write_csv(&files[0], &entries)?;
    write_json(&files[1], &summary)?;
    if ctx.plot {
        let row_series = |jac: &SpectralJacobian, label: &str| -> Vec<Series> {
            rows.iter()
                .map(|&i| {
                    Series::new(
                        format!("{label} ν_i={i}"),
                        (0..jac.cols()).map(|j| (j as f64, jac.get(i, j).norm())).collect(),
                    )
                })
                .collect()
        };
        let mut written = Vec::new();
        for (name, jac) in [("conv_fd", &conv), ("relu_fd", &relu), ("upsample_fd", &up), ("layer_fd", &fd)] {
            let mut plot = LinePlot::new(format!("Spectral gradient rows ({name})"), "ν_j", "|J(ν_i, ν_j)|");
            for s in row_series(jac, name) {
                plot = plot.with_series(s);
            }
            let p = ctx.path("", &format!("gradcheck_{name}.svg"));
            write_svg(&p, &plot)?;
            written.push(p);
        }
        files.extend(written);
    }
    Ok(CommandOutput { files })
}

// ------------------------------------------------------------------- flops

#[derive(Clone, Debug, Serialize)]
struct FlopsRow {
    size: f64,
    flops: f64,
    relative_drop: f64,
    fpi: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct FlopsSummary {
    command: &'static str,
    source: &'static str,
    base_size: f64,
    base_flops: f64,
    prune_rate: f64,
    rows: Vec<FlopsRow>,
}

fn cmd_flops(args: &FlopsArgs) -> Result<CommandOutput, CliError> {
    let ctx = Context::new(&args.common)?;
    let cfg = &ctx.cfg;
    let sizes: Vec<f64> = match cfg.pick_list(args.sizes.as_deref(), "sizes")? {
        Some(s) => s,
        None => vec![129.0, 65.0, 33.0],
    };
    if sizes.is_empty() {
        return Err(usage("--sizes is empty"));
    }
    let base = cfg.pick_opt(args.base, "base")?.unwrap_or_else(|| sizes.iter().copied().fold(f64::MIN, f64::max));
    let mious: Option<Vec<f64>> = cfg.pick_list(args.miou.as_deref(), "miou")?;
    if let Some(m) = &mious {
        if m.len() != sizes.len() {
            return Err(usage(format!("{} mIoU values for {} sizes", m.len(), sizes.len())));
        }
    }
    let prune = cfg.pick(args.prune, "prune", 0.0)?;
    let raw: Option<Vec<f64>> = cfg.pick_list(args.flops.as_deref(), "flops")?;
    let spec_path: Option<PathBuf> = cfg.pick_opt(args.spec.clone(), "spec")?;

    let (source, flops, base_flops) = match (raw, spec_path) {
        (Some(_), Some(_)) => return Err(usage("give either --spec or --flops, not both")),
        (None, None) => return Err(usage("flops needs --spec or --flops")),
        (Some(values), None) => {
            if values.len() != sizes.len() {
                return Err(usage(format!("{} FLOPs values for {} sizes", values.len(), sizes.len())));
            }
            let Some(pos) = sizes.iter().position(|&s| s == base) else {
                return Err(usage(format!("base size {base} is not among --sizes")));
            };
            let b = values[pos];
            ("table", values, b)
        }
        (None, Some(path)) => {
            let mut spec = NetworkCostSpec::load(&path)?;
            if prune > 0.0 {
                spec = spec.pruned(prune)?;
            }
            let flops = sizes
                .iter()
                .map(|&s| Ok(flops_total(&spec, s)?.flops_total))
                .collect::<Result<Vec<_>, Error>>()?;
            ("spec", flops, flops_total(&spec, base)?.flops_total)
        }
    };
    let rows = sizes
        .iter()
        .zip(&flops)
        .enumerate()
        .map(|(i, (&size, &f))| {
            Ok(FlopsRow {
                size,
                flops: f,
                relative_drop: relative_drop(f, base_flops)?,
                fpi: match &mious {
                    Some(m) => Some(fpi(f, m[i])?),
                    None => None,
                },
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let summary = FlopsSummary {
        command: "flops",
        source,
        base_size: base,
        base_flops,
        prune_rate: prune,
        rows: rows.clone(),
    };
    let mut files = vec![ctx.path("", "flops.csv"), ctx.path("", "flops.json")];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &summary)?;
    if ctx.plot {
        let mut plot = LinePlot::new("FLOPs against decoder feature size", "feature size", "FLOPs")
            .with_series(Series::new("FLOPs", rows.iter().map(|r| (r.size, r.flops)).collect()));
        if mious.is_some() {
            plot = plot.with_series(Series::new("FPI", rows.iter().filter_map(|r| r.fpi.map(|v| (r.size, v))).collect()));
        }
        let p = ctx.path("", "flops.svg");
        write_svg(&p, &plot)?;
        files.push(p);
    }
    Ok(CommandOutput { files })
}
