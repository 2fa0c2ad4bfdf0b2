//! Single-engine pipeline: project each piece of the stream onto its
//! best-fit subspace, then feed the projected points to one [`BicoEngine`].

use std::time::Instant;

use crate::coreset::{BicoEngine, WeightedPoint};
use crate::error::{Error, Result};
use crate::linalg::{project, weighted_best_fit, Matrix, SvdBackend, SvdTruncation, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERATIONS};

/// Default projection dimension for `k` centers: `ceil(3k / 2)`.
pub fn default_svd_dim(k: usize) -> usize {
    (3 * k).div_ceil(2)
}

/// Default coreset size for `k` centers: `200 k`.
pub fn default_coreset_size(k: usize) -> usize {
    200 * k
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecyConfig {
    pub piece_size: usize,
    pub svd_dim: usize,
    pub k: usize,
    pub coreset_size: usize,
    pub backend: SvdBackend,
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl PiecyConfig {
    pub fn new(k: usize) -> Self {
        Self {
            piece_size: default_coreset_size(k),
            svd_dim: default_svd_dim(k),
            k,
            coreset_size: default_coreset_size(k),
            backend: SvdBackend::Randomized,
            oversample: DEFAULT_OVERSAMPLE,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.svd_dim == 0 || self.piece_size < self.svd_dim {
            return Err(Error::InvalidArgument(format!(
                "need piece size ({}) >= svd dimension ({}) >= 1",
                self.piece_size, self.svd_dim
            )));
        }
        if self.k == 0 || self.coreset_size < self.k {
            return Err(Error::InvalidArgument(format!(
                "need coreset size ({}) >= k ({}) >= 1",
                self.coreset_size, self.k
            )));
        }
        Ok(())
    }
}

/// Counters and phase timings collected by the pipelines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineStats {
    pub points: u64,
    pub pieces: usize,
    pub svd_calls: usize,
    pub svd_seconds: f64,
    pub coreset_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub coreset: Vec<WeightedPoint>,
    pub dim: usize,
    pub stats: PipelineStats,
}

/// Projects `points` onto the weighted best-fit subspace of rank `rank`.
///
/// Returns `None` (leave the points as they are) when the rank is not below
/// `min(rows, cols)`, where the projection is the identity.
pub(crate) fn reduce_dimension(
    points: &Matrix,
    weights: &[u64],
    rank: usize,
    backend: SvdBackend,
    oversample: usize,
    power_iterations: usize,
    seed: u64,
) -> Result<Option<Matrix>> {
    let t = SvdTruncation {
        target_rank: rank,
        oversample,
        power_iterations,
        seed,
    };
    let Some(t) = t.fitted(points.rows(), points.cols()) else {
        return Ok(None);
    };
    let projector = weighted_best_fit(points, weights, &t, backend)?;
    project(points, &projector).map(Some)
}

/// Streaming piecy pipeline. The dimension is fixed by the first point.
#[derive(Debug)]
pub struct Piecy {
    cfg: PiecyConfig,
    engine: Option<BicoEngine>,
    piece: Option<Matrix>,
    stats: PipelineStats,
}

impl Piecy {
    pub fn new(cfg: PiecyConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            engine: None,
            piece: None,
            stats: PipelineStats::default(),
        })
    }

    pub fn stats(&self) -> &PipelineStats {
        &self.stats
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if self.piece.is_none() {
            if x.is_empty() {
                return Err(Error::InvalidInput("empty point".into()));
            }
            if self.cfg.svd_dim > x.len() {
                return Err(Error::InvalidArgument(format!(
                    "svd dimension {} exceeds point dimension {}",
                    self.cfg.svd_dim,
                    x.len()
                )));
            }
            self.piece = Some(Matrix::with_capacity(x.len(), self.cfg.piece_size));
            self.engine = Some(BicoEngine::new(x.len(), self.cfg.coreset_size)?);
        }
        let piece = self.piece.as_mut().expect("initialized above");
        piece.push_row(x)?;
        self.stats.points += 1;
        if piece.rows() == self.cfg.piece_size {
            self.process_piece()?;
        }
        Ok(())
    }

    fn process_piece(&mut self) -> Result<()> {
        let piece = self.piece.as_mut().expect("piece buffer exists");
        if piece.is_empty() {
            return Ok(());
        }
        let index = self.stats.pieces as u64;
        self.stats.pieces += 1;
        let start = Instant::now();
        let projected = if piece.rows() < self.cfg.svd_dim || self.cfg.svd_dim >= piece.cols() {
            None
        } else {
            reduce_dimension(
                piece,
                &vec![1; piece.rows()],
                self.cfg.svd_dim,
                self.cfg.backend,
                self.cfg.oversample,
                self.cfg.power_iterations,
                self.cfg.seed ^ index,
            )?
        };
        if projected.is_some() {
            self.stats.svd_calls += 1;
        }
        self.stats.svd_seconds += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let engine = self.engine.as_mut().expect("engine exists with the buffer");
        for row in projected.as_ref().unwrap_or(piece).row_iter() {
            engine.insert(row, 1)?;
        }
        piece.clear();
        self.stats.coreset_seconds += start.elapsed().as_secs_f64();
        Ok(())
    }

    /// Processes the final partial piece and returns the coreset.
    pub fn finish(mut self) -> Result<PipelineOutput> {
        if self.piece.is_none() {
            return Ok(PipelineOutput {
                coreset: Vec::new(),
                dim: 0,
                stats: self.stats,
            });
        }
        self.process_piece()?;
        let engine = self.engine.expect("engine exists with the buffer");
        Ok(PipelineOutput {
            coreset: engine.coreset(),
            dim: engine.dim(),
            stats: self.stats,
        })
    }
}

/// Runs [`Piecy`] over a whole stream.
pub fn piecy_run<I, P>(points: I, cfg: &PiecyConfig) -> Result<PipelineOutput>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    let mut pipeline = Piecy::new(cfg.clone())?;
    for x in points {
        pipeline.push(x.as_ref())?;
    }
    pipeline.finish()
}

/// Plain BICO over a stream of unit-weight points.
pub fn bico_run<I, P>(points: I, coreset_size: usize) -> Result<PipelineOutput>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    let mut engine: Option<BicoEngine> = None;
    let mut stats = PipelineStats::default();
    let start = Instant::now();
    for x in points {
        let x = x.as_ref();
        if engine.is_none() {
            engine = Some(BicoEngine::new(x.len(), coreset_size)?);
        }
        engine.as_mut().expect("created above").insert(x, 1)?;
        stats.points += 1;
    }
    stats.coreset_seconds = start.elapsed().as_secs_f64();
    Ok(match engine {
        Some(e) => PipelineOutput {
            coreset: e.coreset(),
            dim: e.dim(),
            stats,
        },
        None => PipelineOutput {
            coreset: Vec::new(),
            dim: 0,
            stats,
        },
    })
}
