//! Command implementations behind the `qlra` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qlra::io::{load_qmat, load_sketch, save_qmat, save_sketch, QmatReader};
use qlra::sketching::{sketch_source, MatrixSource};
use qlra::synthetic::{image_to_qmatrix, psnr_8bit, qmatrix_to_image, synth_matrix, Pixels, SpectrumKind, SpectrumSpec};
use qlra::{
    approx_from_sketch, exec, one_pass_approx, EmbeddingConfig, OnePassConfig, QMatrix, Rangefinder, RangefinderMethod,
    SketchDelta, SketchSizes, TestMatrixKind,
};

pub mod verify;

/// Column order of `approx` reports.
pub const APPROX_CSV_HEADER: [&str; 14] = [
    "rank",
    "rangefinder",
    "embedding",
    "seed",
    "relative_error",
    "qb_residual",
    "kappa_h",
    "correction_steps",
    "t_sketch",
    "t_rangefinder",
    "t_solve",
    "t_truncate",
    "t_total",
    "source",
];

/// Column order of `compress-image` reports.
pub const IMAGE_CSV_HEADER: [&str; 14] = [
    "rank",
    "rangefinder",
    "seed",
    "rows",
    "cols",
    "relative_error",
    "psnr_db",
    "compression_ratio",
    "clamped",
    "kappa_h",
    "t_sketch",
    "t_rangefinder",
    "t_solve",
    "t_truncate",
];

#[derive(Parser, Debug)]
#[command(name = "qlra", version, about = "Randomized low-rank approximation of quaternion matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Target rank; a comma-separated list runs a grid where supported.
    #[arg(short = 'r', long = "rank", global = true, value_delimiter = ',')]
    pub rank: Vec<usize>,
    /// Range sketch size s (default r + 5).
    #[arg(long = "sketch-s", global = true)]
    pub sketch_s: Option<usize>,
    /// Co-range sketch size l (default 2s).
    #[arg(long = "sketch-l", global = true)]
    pub sketch_l: Option<usize>,
    /// Rangefinder; a comma-separated list runs both.
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_value = "pseudo-qr")]
    pub rangefinder: Vec<RangefinderArg>,
    #[arg(long, global = true, value_enum, default_value = "gaussian")]
    pub embedding: EmbeddingArg,
    /// Nonzero fraction of the sparse embeddings.
    #[arg(long, global = true, default_value_t = qlra::sketching::DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of seeds (approx) or Monte Carlo trials (verify).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Keep every kernel on one thread.
    #[arg(long, global = true)]
    pub serial: bool,
    /// Output path; reports go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RangefinderArg {
    PseudoQr,
    PseudoSvd,
}

impl From<RangefinderArg> for RangefinderMethod {
    fn from(r: RangefinderArg) -> Self {
        match r {
            RangefinderArg::PseudoQr => RangefinderMethod::PseudoQr,
            RangefinderArg::PseudoSvd => RangefinderMethod::PseudoSvd,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingArg {
    Gaussian,
    Rademacher,
    SparseGaussian,
    SparseRademacher,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    LowrankNoise,
    Pds,
    Eds,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic matrix (QMAT1) and its ground truth (JSON).
    Synth(SynthArgs),
    /// Sketch a QMAT1 matrix by streaming row blocks into a checkpoint.
    Sketch(SketchArgs),
    /// Apply a linear update to a sketch checkpoint.
    Update(UpdateArgs),
    /// Low-rank approximation from a matrix or a checkpoint; CSV report.
    Approx(ApproxArgs),
    /// Run verification suites; exit code 0 iff every check passes.
    Verify(VerifyArgs),
    /// Compress an RGB PNG as a pure quaternion matrix.
    CompressImage(ImageArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "pds")]
    pub spectrum: SpectrumArg,
    /// Decay parameter p, q, or the noise level xi.
    #[arg(long, default_value_t = 2.0)]
    pub param: f64,
    #[arg(long, short = 'm', default_value_t = 400)]
    pub rows: usize,
    #[arg(long, short = 'n', default_value_t = 320)]
    pub cols: usize,
    /// Number of leading unit singular values.
    #[arg(long = "big-r", default_value_t = 10)]
    pub big_r: usize,
    /// Ground-truth JSON path (default: matrix path with .json extension).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SketchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub block_rows: usize,
}

#[derive(Args, Debug)]
pub struct UpdateArgs {
    /// Checkpoint to update; rewritten in place unless --out is given.
    #[arg(long)]
    pub sketch: PathBuf,
    /// QMAT1 update: full-size additive, or a row block with --row0.
    #[arg(long)]
    pub delta: PathBuf,
    #[arg(long)]
    pub row0: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ApproxArgs {
    /// QMAT1 matrix; sketched in memory, errors measured against it.
    #[arg(long, conflicts_with = "sketch", required_unless_present = "sketch")]
    pub input: Option<PathBuf>,
    /// QSKT1 checkpoint; the source matrix is never read.
    #[arg(long)]
    pub sketch: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: verify::Suite,
    /// Planted condition number of the rangefinder suite.
    #[arg(long, default_value_t = 1e6)]
    pub kappa: f64,
}

#[derive(Args, Debug)]
pub struct ImageArgs {
    /// RGB PNG input.
    #[arg(long, conflicts_with = "rank_one", required_unless_present = "rank_one")]
    pub input: Option<PathBuf>,
    /// Use a generated ROWSxCOLS rank-one image instead of a file.
    #[arg(long, value_name = "ROWSxCOLS")]
    pub rank_one: Option<String>,
    /// CSV report path (stdout when omitted). --out names the reconstructed PNG.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub block_rows: usize,
}

/// Runs a parsed command line. `Ok(false)` means a verification check failed.
pub fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    exec::set_serial(cli.global.serial);
    let g = &cli.global;
    match &cli.command {
        Command::Synth(a) => cmd_synth(g, a).map(|_| true),
        Command::Sketch(a) => cmd_sketch(g, a).map(|_| true),
        Command::Update(a) => cmd_update(g, a).map(|_| true),
        Command::Approx(a) => cmd_approx(g, a).map(|_| true),
        Command::Verify(a) => cmd_verify(g, a),
        Command::CompressImage(a) => cmd_compress_image(g, a).map(|_| true),
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QLRA_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("QLRA_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("QLRA_THREADS must be positive");
        }
        // A second call in the same process (tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

impl GlobalOpts {
    fn single_rank(&self) -> Result<usize> {
        match self.rank.as_slice() {
            [r] => Ok(*r),
            [] => bail!("--rank is required"),
            _ => bail!("this command takes a single --rank"),
        }
    }

    fn ranks(&self) -> Result<&[usize]> {
        if self.rank.is_empty() {
            bail!("--rank is required");
        }
        Ok(&self.rank)
    }

    fn sizes(&self, r: usize) -> Result<SketchSizes> {
        Ok(SketchSizes::with_defaults(r, self.sketch_s, self.sketch_l)?)
    }

    /// Sizes shared by a rank grid: s and l are sized for the largest rank.
    fn grid_sizes(&self, r: usize, r_max: usize) -> Result<SketchSizes> {
        let base = self.sizes(r_max)?;
        Ok(SketchSizes::new(r, base.s, base.l)?)
    }

    fn embedding_kind(&self) -> Result<TestMatrixKind> {
        let name = match self.embedding {
            EmbeddingArg::Gaussian => "gaussian",
            EmbeddingArg::Rademacher => "rademacher",
            EmbeddingArg::SparseGaussian => "sparse-gaussian",
            EmbeddingArg::SparseRademacher => "sparse-rademacher",
        };
        Ok(TestMatrixKind::from_name(name, self.density)?)
    }

    fn embedding(&self, seed: u64) -> Result<EmbeddingConfig> {
        Ok(EmbeddingConfig::from_seed(self.embedding_kind()?, seed))
    }

    fn out_path(&self, what: &str) -> Result<&Path> {
        self.out.as_deref().with_context(|| format!("--out is required for the {what}"))
    }
}

/// Opens `path` for writing, or stdout.
fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct Truth<'a> {
    spectrum: &'static str,
    param: f64,
    rows: usize,
    cols: usize,
    big_r: usize,
    seed: u64,
    sigma: &'a [f64],
}

pub fn cmd_synth(g: &GlobalOpts, a: &SynthArgs) -> Result<()> {
    let name = match a.spectrum {
        SpectrumArg::LowrankNoise => "lowrank-noise",
        SpectrumArg::Pds => "pds",
        SpectrumArg::Eds => "eds",
    };
    let spec = SpectrumSpec::new(SpectrumKind::from_name(name, a.param)?, a.rows, a.cols, a.big_r, g.seed);
    spec.validate()?;
    let out = g.out_path("matrix file")?;
    let (m, truth) = synth_matrix(&spec)?;
    save_qmat(out, &m).with_context(|| format!("writing {}", out.display()))?;
    let tpath = a.truth.clone().unwrap_or_else(|| out.with_extension("json"));
    let t = Truth {
        spectrum: name,
        param: a.param,
        rows: a.rows,
        cols: a.cols,
        big_r: a.big_r,
        seed: g.seed,
        sigma: &truth.sigma,
    };
    let mut w = writer(Some(&tpath))?;
    serde_json::to_writer_pretty(&mut w, &t)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_sketch(g: &GlobalOpts, a: &SketchArgs) -> Result<()> {
    let out = g.out_path("checkpoint")?;
    let mut reader = QmatReader::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let sizes = g.sizes(g.single_rank()?)?;
    let st = sketch_source(&mut reader, sizes, &g.embedding(g.seed)?, a.block_rows)?;
    save_sketch(out, &st)?;
    Ok(())
}

pub fn cmd_update(g: &GlobalOpts, a: &UpdateArgs) -> Result<()> {
    let mut st = load_sketch(&a.sketch).with_context(|| format!("reading {}", a.sketch.display()))?;
    let d = load_qmat(&a.delta).with_context(|| format!("reading {}", a.delta.display()))?;
    match a.row0 {
        Some(row0) => st.apply(SketchDelta::RowBlock { row0, block: &d })?,
        None => st.apply(SketchDelta::Additive(&d))?,
    }
    save_sketch(g.out.as_deref().unwrap_or(&a.sketch), &st)?;
    Ok(())
}

#[derive(Serialize)]
struct ApproxRow {
    rank: usize,
    rangefinder: String,
    embedding: String,
    seed: u64,
    relative_error: Option<f64>,
    qb_residual: Option<f64>,
    kappa_h: f64,
    correction_steps: usize,
    t_sketch: f64,
    t_rangefinder: f64,
    t_solve: f64,
    t_truncate: f64,
    t_total: f64,
    source: &'static str,
}

pub fn cmd_approx(g: &GlobalOpts, a: &ApproxArgs) -> Result<()> {
    let mut rows = Vec::new();
    if let Some(path) = &a.sketch {
        let st = load_sketch(path).with_context(|| format!("reading {}", path.display()))?;
        let emb = st.omega_spec().map(|s| s.kind.name()).unwrap_or("explicit").to_string();
        for &r in g.ranks()? {
            for &rf in &g.rangefinder {
                let res = approx_from_sketch(&st, &Rangefinder::from_method(rf.into()), r)?;
                rows.push(row(r, &emb, g.seed, &res, "checkpoint"));
            }
        }
    } else if let Some(path) = &a.input {
        let m = load_qmat(path).with_context(|| format!("reading {}", path.display()))?;
        let ranks = g.ranks()?;
        let r_max = *ranks.iter().max().unwrap();
        let emb_kind = g.embedding_kind()?;
        for t in 0..g.trials.unwrap_or(1) as u64 {
            let seed = g.seed + t;
            for &r in ranks {
                for &rf in &g.rangefinder {
                    let cfg = OnePassConfig {
                        sizes: g.grid_sizes(r, r_max)?,
                        rangefinder: Rangefinder::from_method(rf.into()),
                        embedding: EmbeddingConfig::from_seed(emb_kind, seed),
                        fallback_to_svd: true,
                    };
                    let res = one_pass_approx(&m, &cfg)?;
                    rows.push(row(r, emb_kind.name(), seed, &res, "matrix"));
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(writer(g.out.as_deref())?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn row(rank: usize, emb: &str, seed: u64, res: &qlra::ApproxResult, source: &'static str) -> ApproxRow {
    let d = &res.diagnostics;
    ApproxRow {
        rank,
        rangefinder: d.rangefinder.to_string(),
        embedding: emb.to_string(),
        seed,
        relative_error: d.relative_error,
        qb_residual: d.qb_residual,
        kappa_h: d.kappa_h,
        correction_steps: d.correction_steps,
        t_sketch: d.timings.sketch,
        t_rangefinder: d.timings.rangefinder,
        t_solve: d.timings.solve,
        t_truncate: d.timings.truncate,
        t_total: d.timings.total(),
        source,
    }
}

pub fn cmd_verify(g: &GlobalOpts, a: &VerifyArgs) -> Result<bool> {
    let checks = verify::run_suite(a.suite, g.trials, g.seed, a.kappa)?;
    qlra::analysis::write_checks_csv(writer(g.out.as_deref())?, &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.metric.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "));
    }
    Ok(failed.is_empty())
}

/// Serves image rows as pure quaternion rows.
struct ImageRows<'a> {
    px: &'a Pixels,
}

impl MatrixSource for ImageRows<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.px.rows, self.px.cols)
    }

    fn read_rows(&mut self, r0: usize, r1: usize) -> qlra::Result<QMatrix> {
        let c = self.px.cols * self.px.channels;
        let slice = Pixels::new(r1 - r0, self.px.cols, self.px.channels, self.px.data[r0 * c..r1 * c].to_vec())?;
        image_to_qmatrix(&slice)
    }
}

fn load_png(path: &Path) -> Result<Pixels> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Pixels::from_u8(h as usize, w as usize, 3, img.as_raw())?)
}

fn save_png(path: &Path, px: &Pixels) -> Result<()> {
    let img = image::RgbImage::from_raw(px.cols as u32, px.rows as u32, px.to_u8())
        .context("image buffer size mismatch")?;
    img.save(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('x').with_context(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// `3mn` stored reals over `4r(m + n) + r` for the factors.
pub fn compression_ratio(m: usize, n: usize, r: usize) -> f64 {
    (3 * m * n) as f64 / (4 * r * (m + n) + r) as f64
}

#[derive(Serialize)]
struct ImageRow {
    rank: usize,
    rangefinder: String,
    seed: u64,
    rows: usize,
    cols: usize,
    relative_error: f64,
    psnr_db: f64,
    compression_ratio: f64,
    clamped: usize,
    kappa_h: f64,
    t_sketch: f64,
    t_rangefinder: f64,
    t_solve: f64,
    t_truncate: f64,
}

fn image_out_path(base: &Path, r: usize, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    base.with_file_name(format!("{stem}_r{r}.png"))
}

pub fn cmd_compress_image(g: &GlobalOpts, a: &ImageArgs) -> Result<()> {
    let px = match (&a.input, &a.rank_one) {
        (Some(p), _) => load_png(p)?,
        (None, Some(d)) => {
            let (m, n) = parse_dims(d)?;
            qlra::synthetic::rank_one_image(m, n)
        }
        (None, None) => bail!("--input or --rank-one is required"),
    };
    let (m, n) = (px.rows, px.cols);
    let ranks = g.ranks()?;
    let r_max = *ranks.iter().max().unwrap();
    let sizes = g.sizes(r_max)?;
    let t0 = Instant::now();
    let st = sketch_source(&mut ImageRows { px: &px }, sizes, &g.embedding(g.seed)?, a.block_rows)?;
    let t_sketch = t0.elapsed().as_secs_f64();
    let full = image_to_qmatrix(&px)?;
    let norm = full.fro_norm();
    let mut rows = Vec::new();
    for &r in ranks {
        for &rf in &g.rangefinder {
            let res = approx_from_sketch(&st, &Rangefinder::from_method(rf.into()), r)?;
            let rec = res.reconstruct();
            let err = full.sub(&rec)?.fro_norm();
            let (img, clamped) = qmatrix_to_image(&rec);
            if let Some(out) = &g.out {
                let many = ranks.len() * g.rangefinder.len() > 1;
                let mut p = image_out_path(out, r, many);
                if g.rangefinder.len() > 1 {
                    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    p = p.with_file_name(format!("{stem}_{}.png", res.diagnostics.rangefinder));
                }
                save_png(&p, &img)?;
            }
            let d = &res.diagnostics;
            rows.push(ImageRow {
                rank: r,
                rangefinder: d.rangefinder.to_string(),
                seed: g.seed,
                rows: m,
                cols: n,
                relative_error: if norm > 0.0 { err / norm } else { err },
                psnr_db: psnr_8bit(&px, &img)?,
                compression_ratio: compression_ratio(m, n, r),
                clamped,
                kappa_h: d.kappa_h,
                t_sketch,
                t_rangefinder: d.timings.rangefinder,
                t_solve: d.timings.solve,
                t_truncate: d.timings.truncate,
            });
        }
    }
    let mut w = csv::Writer::from_writer(writer(a.report.as_deref())?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
