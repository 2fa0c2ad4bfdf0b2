//! Command-line front end: reads or generates a point stream, runs one of
//! the coreset pipelines over it in a single pass and reports coreset size,
//! phase timings and k-means costs.

pub mod report;
pub mod source;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, ValueEnum};
use piecy::datagen::{LowerBoundConfig, RandomConfig, SwnConfig};
use piecy::eval::{solve_repeatedly, weighted_cost, CostSummary, EvalParams, Solution};
use piecy::format::{write_coreset, Format, PointWriter};
use piecy::linalg::{compare_svd_backends, spectrum, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERATIONS};
use piecy::piecy::{default_coreset_size, default_svd_dim, PipelineOutput, PipelineStats};
use piecy::piecy_mr::TreeStats;
use piecy::{BicoEngine, Matrix, MrConfig, Piecy, PiecyConfig, PiecyMr, SvdBackend, SvdTruncation, WeightedPoint};

use report::{ConfigEcho, CostEcho, RunReport, Spectrum, Stats, SvdComparisonEcho, Timings, REPORT_VERSION};
use source::{require_unweighted, Source};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Bico,
    Piecy,
    PiecyMr,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Bico => "bico",
            Algo::Piecy => "piecy",
            Algo::PiecyMr => "piecy-mr",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Swn,
    LowerBound,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    /// k-means++ and Lloyd on the coreset only.
    Coreset,
    /// The coreset solutions evaluated on the full input (second pass).
    Full,
    Both,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Bin,
}

impl From<FileFormat> for Format {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => Format::Csv,
            FileFormat::Bin => Format::Bin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Exact,
    Randomized,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "piecy-cli", version, about = "One-pass k-means coresets for high-dimensional streams")]
pub struct Args {
    /// Pipeline to run. Without it, a generated stream is written to --out.
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,

    /// Point file to read.
    #[arg(long, conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the extension by default.
    #[arg(long, value_enum)]
    pub format: Option<FileFormat>,
    /// The input carries a weight per point.
    #[arg(long)]
    pub weighted_input: bool,

    /// Synthetic instance to generate instead of reading a file.
    #[arg(long, value_enum)]
    pub gen: Option<Generator>,
    /// swn: number of hidden clusters.
    #[arg(long, default_value_t = 20)]
    pub clusters: usize,
    /// swn: points per cluster.
    #[arg(long, default_value_t = 500)]
    pub y: usize,
    /// swn: dimension.
    #[arg(long, default_value_t = 200)]
    pub d: usize,
    /// swn: active coordinates per cluster.
    #[arg(long, default_value_t = 20)]
    pub x: usize,
    /// swn: half-width on active coordinates.
    #[arg(long, default_value_t = 10.0)]
    pub spread: f64,
    /// swn: half-width of the noise on the other coordinates.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    /// lower-bound: number of simplex vertices.
    #[arg(long, default_value_t = 10)]
    pub vertices: usize,
    /// lower-bound: number of points, a multiple of --vertices; random: number of
    /// points (and dimension).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// lower-bound: vertex coordinate.
    #[arg(long, default_value_t = 1000.0)]
    pub outer: f64,
    /// lower-bound: offset coordinate.
    #[arg(long, default_value_t = 100.0)]
    pub inner: f64,
    /// random: half-width of the cube.
    #[arg(long, default_value_t = 10.0)]
    pub half_width: f64,

    /// Number of centers.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Coreset size m (default 200 k).
    #[arg(long)]
    pub coreset_size: Option<usize>,
    /// Points per piece (default: the coreset size).
    #[arg(long)]
    pub piece_size: Option<usize>,
    /// Projection dimension (default ceil(3k/2)).
    #[arg(long)]
    pub svd_dim: Option<usize>,
    /// piecy-mr: pieces per merge (branching factor).
    #[arg(long, default_value_t = 2)]
    pub np: usize,
    #[arg(long, value_enum, default_value_t = Backend::Randomized)]
    pub svd_backend: Backend,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,
    #[arg(long, default_value_t = DEFAULT_POWER_ITERATIONS)]
    pub power_iters: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// k-means++ repetitions.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Maximum Lloyd iterations per repetition.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = EvalMode::Coreset)]
    pub eval: EvalMode,

    /// Coreset output (or the generated stream when --algo is absent);
    /// `.bin` selects the binary format.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also report the leading singular values of the input (loads it into memory).
    #[arg(long)]
    pub spectrum: Option<usize>,
    /// Also compare exact and randomized truncated SVD of the input at this rank.
    #[arg(long)]
    pub svd_compare: Option<usize>,
}

impl Args {
    pub fn source(&self) -> Result<Source> {
        if let Some(path) = &self.input {
            let format = self
                .format
                .map(Format::from)
                .unwrap_or_else(|| Format::from_path(path));
            return Ok(Source::File {
                path: path.clone(),
                format,
                weighted: self.weighted_input,
            });
        }
        ensure!(!self.weighted_input, "--weighted-input needs --input");
        Ok(match self.gen {
            Some(Generator::Swn) => Source::Swn(SwnConfig {
                spread: self.spread,
                noise: self.noise,
                ..SwnConfig::new(self.clusters, self.y, self.d, self.x).with_seed(self.seed)
            }),
            Some(Generator::LowerBound) => Source::LowerBound(LowerBoundConfig {
                outer: self.outer,
                inner: self.inner,
                seed: self.seed,
                ..LowerBoundConfig::new(self.vertices, self.n)
            }),
            Some(Generator::Random) => Source::Random(RandomConfig {
                half_width: self.half_width,
                seed: self.seed,
                ..RandomConfig::new(self.n)
            }),
            None => bail!("either --input or --gen is required"),
        })
    }

    fn backend(&self) -> SvdBackend {
        match self.svd_backend {
            Backend::Exact => SvdBackend::Exact,
            Backend::Randomized => SvdBackend::Randomized,
        }
    }

    fn coreset_size(&self) -> usize {
        self.coreset_size.unwrap_or_else(|| default_coreset_size(self.k))
    }

    fn piece_size(&self) -> usize {
        self.piece_size.unwrap_or_else(|| self.coreset_size())
    }

    fn svd_dim(&self) -> usize {
        self.svd_dim.unwrap_or_else(|| default_svd_dim(self.k))
    }

    fn piecy_config(&self) -> PiecyConfig {
        PiecyConfig {
            piece_size: self.piece_size(),
            svd_dim: self.svd_dim(),
            k: self.k,
            coreset_size: self.coreset_size(),
            backend: self.backend(),
            oversample: self.oversample,
            power_iterations: self.power_iters,
            seed: self.seed,
        }
    }

    fn mr_config(&self) -> MrConfig {
        MrConfig {
            piece_size: self.piece_size(),
            num_pieces: self.np,
            svd_dim: self.svd_dim(),
            k: self.k,
            coreset_size: self.coreset_size(),
            backend: self.backend(),
            oversample: self.oversample,
            power_iterations: self.power_iters,
            seed: self.seed,
        }
    }

    fn eval_params(&self) -> EvalParams {
        EvalParams {
            repetitions: self.reps,
            max_iters: self.max_iters,
            seed: self.seed,
            ..EvalParams::default()
        }
    }
}

/// What [`run`] produced.
#[derive(Debug)]
pub enum Outcome {
    Report(Box<RunReport>),
    /// A generated stream was written; carries the number of points.
    Generated(u64),
}

struct PassResult {
    output: PipelineOutput,
    tree: Option<TreeStats>,
    mass: u64,
    seconds: f64,
}

fn run_pipeline(algo: Algo, args: &Args, source: &Source) -> Result<PassResult> {
    let start = Instant::now();
    let mut mass = 0u64;
    let mut stream = source.open()?;
    let (output, tree) = match algo {
        Algo::Bico => {
            let mut engine: Option<BicoEngine> = None;
            let mut coreset_seconds = 0.0;
            let mut points = 0u64;
            for p in stream {
                let p = p?;
                let engine = match &mut engine {
                    Some(e) => e,
                    None => engine.insert(BicoEngine::new(p.dim(), args.coreset_size())?),
                };
                let t = Instant::now();
                engine.insert(&p.coords, p.weight).context(format!("point {}", points + 1))?;
                coreset_seconds += t.elapsed().as_secs_f64();
                points += 1;
                mass += p.weight;
            }
            let stats = PipelineStats {
                points,
                coreset_seconds,
                ..PipelineStats::default()
            };
            let (coreset, dim) = engine.map(|e| (e.coreset(), e.dim())).unwrap_or_default();
            (PipelineOutput { coreset, dim, stats }, None)
        }
        Algo::Piecy => {
            require_unweighted(source, algo.name())?;
            let mut pipeline = Piecy::new(args.piecy_config())?;
            for p in &mut stream {
                let p = p?;
                pipeline.push(&p.coords).context(format!("point {}", mass + 1))?;
                mass += 1;
            }
            (pipeline.finish()?, None)
        }
        Algo::PiecyMr => {
            require_unweighted(source, algo.name())?;
            let mut pipeline = PiecyMr::new(args.mr_config())?;
            for p in &mut stream {
                let p = p?;
                pipeline.push(&p.coords).context(format!("point {}", mass + 1))?;
                mass += 1;
            }
            let (out, tree) = pipeline.finish()?;
            (out, Some(tree))
        }
    };
    Ok(PassResult {
        output,
        tree,
        mass,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates every solution on the full input in one extra pass.
fn full_costs(source: &Source, solutions: &[Solution]) -> Result<Vec<f64>> {
    const CHUNK: usize = 4096;
    let mut costs = vec![0.0; solutions.len()];
    let mut chunk: Vec<WeightedPoint> = Vec::with_capacity(CHUNK);
    let mut flush = |chunk: &mut Vec<WeightedPoint>| {
        for (c, s) in costs.iter_mut().zip(solutions) {
            *c += weighted_cost(chunk, &s.centers);
        }
        chunk.clear();
    };
    for p in source.open()? {
        let p = p?;
        if let Some(s) = solutions.first() {
            ensure!(p.dim() == s.centers.dim(), "input dimension changed between passes");
        }
        chunk.push(p);
        if chunk.len() == CHUNK {
            flush(&mut chunk);
        }
    }
    flush(&mut chunk);
    Ok(costs)
}

fn load_matrix(source: &Source) -> Result<Matrix> {
    let mut m: Option<Matrix> = None;
    for p in source.open()? {
        let p = p?;
        let m = match &mut m {
            Some(m) => m,
            None => m.insert(Matrix::with_capacity(p.dim(), 1024)),
        };
        m.push_row(&p.coords)?;
    }
    m.context("input is empty")
}

fn write_stream(source: &Source, path: &Path) -> Result<u64> {
    let mut writer = PointWriter::create(path, Format::from_path(path), false)?;
    let mut n = 0;
    for p in source.open()? {
        writer.write(&p?.coords, 1)?;
        n += 1;
    }
    writer.finish()?;
    Ok(n)
}

pub fn run(args: &Args) -> Result<Outcome> {
    let source = args.source()?;
    let Some(algo) = args.algo else {
        let out = args.out.as_deref().context("without --algo, --out is required")?;
        return Ok(Outcome::Generated(write_stream(&source, out)?));
    };
    ensure!(args.k >= 1, "--k must be at least 1");
    ensure!(args.reps >= 1, "--reps must be at least 1");

    let total = Instant::now();
    let pass = run_pipeline(algo, args, &source)?;
    let coreset = &pass.output.coreset;
    if let Some(path) = &args.out {
        write_coreset(path, Format::from_path(path), coreset)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }

    let eval_start = Instant::now();
    let (mut coreset_cost, mut full_cost) = (None, None);
    if args.eval != EvalMode::None && !coreset.is_empty() {
        let solutions = solve_repeatedly(coreset, args.k, &args.eval_params())?;
        if matches!(args.eval, EvalMode::Coreset | EvalMode::Both) {
            let summary = CostSummary::from_costs(solutions.iter().map(|s| s.cost).collect())?;
            coreset_cost = Some(CostEcho::from(&summary));
        }
        if matches!(args.eval, EvalMode::Full | EvalMode::Both) {
            let summary = CostSummary::from_costs(full_costs(&source, &solutions)?)?;
            full_cost = Some(CostEcho::from(&summary));
        }
    }
    let eval_seconds = eval_start.elapsed().as_secs_f64();

    let mut spectrum_echo = None;
    let mut comparison = None;
    if args.spectrum.is_some() || args.svd_compare.is_some() {
        let a = load_matrix(&source)?;
        if let Some(m) = args.spectrum {
            spectrum_echo = Some(Spectrum {
                singular_values: spectrum(&a, m)?,
            });
        }
        if let Some(rank) = args.svd_compare {
            let mut t = SvdTruncation::new(rank).with_seed(args.seed);
            t.oversample = args.oversample;
            t.power_iterations = args.power_iters;
            let c = compare_svd_backends(&a, &t)?;
            comparison = Some(SvdComparisonEcho {
                rank: c.rank,
                exact_error: c.exact_error,
                randomized_error: c.randomized_error,
                relative_deviation: c.relative_deviation,
                exact_seconds: c.exact_seconds,
                randomized_seconds: c.randomized_seconds,
            });
        }
    }

    let stats = &pass.output.stats;
    let (svd, core) = (stats.svd_seconds, stats.coreset_seconds);
    let projected = algo != Algo::Bico;
    let report = RunReport {
        report_version: REPORT_VERSION,
        algorithm: algo.name().to_string(),
        input: source.describe(),
        seed: args.seed,
        n: pass.mass,
        d: pass.output.dim,
        k: args.k,
        coreset_points: coreset.len(),
        coreset_weight: coreset.iter().map(|p| p.weight).sum(),
        config: ConfigEcho {
            coreset_size: args.coreset_size(),
            piece_size: projected.then(|| args.piece_size()),
            svd_dim: projected.then(|| args.svd_dim()),
            num_pieces: (algo == Algo::PiecyMr).then_some(args.np),
            svd_backend: format!("{:?}", args.backend()).to_lowercase(),
            oversample: args.oversample,
            power_iterations: args.power_iters,
            reps: args.reps,
            max_iters: args.max_iters,
            eval: format!("{:?}", args.eval).to_lowercase(),
        },
        timings: Timings {
            ingest: (pass.seconds - svd - core).max(0.0),
            svd,
            coreset: core,
            eval: eval_seconds,
            total: total.elapsed().as_secs_f64(),
        },
        stats: Stats {
            pieces: stats.pieces,
            svd_calls: stats.svd_calls,
            flushes_per_level: pass.tree.as_ref().map(|t| t.flushes.clone()),
            received_per_level: pass.tree.as_ref().map(|t| t.received.clone()),
            peak_live_engines: pass.tree.as_ref().map(|t| t.peak_live_engines),
            peak_projectors: pass.tree.as_ref().map(|t| t.peak_projectors),
        },
        coreset_cost,
        full_cost,
        spectrum: spectrum_echo,
        svd_comparison: comparison,
    };
    Ok(Outcome::Report(Box::new(report)))
}
