//! Merge-and-reduce tree. Every piece is projected and inserted into the
//! level-0 engine; after `num_pieces` inputs a level flushes its coreset,
//! projects it with a weighted SVD and inserts it one level higher.

use std::time::Instant;

use crate::coreset::{BicoEngine, WeightedPoint};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SvdBackend, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERATIONS};
use crate::piecy::{default_coreset_size, default_svd_dim, reduce_dimension, PipelineOutput, PipelineStats};
use crate::rng::mix;

#[derive(Clone, Debug, PartialEq)]
pub struct MrConfig {
    pub piece_size: usize,
    pub num_pieces: usize,
    pub svd_dim: usize,
    pub k: usize,
    pub coreset_size: usize,
    pub backend: SvdBackend,
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl MrConfig {
    pub fn new(k: usize) -> Self {
        Self {
            piece_size: default_coreset_size(k),
            num_pieces: 2,
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
        if self.num_pieces < 2 {
            return Err(Error::InvalidArgument(format!(
                "number of pieces must be at least 2, got {}",
                self.num_pieces
            )));
        }
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

/// Structural counters of a tree run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeStats {
    /// `flushes[i]`: flushes from level `i` into level `i + 1`.
    pub flushes: Vec<usize>,
    /// `received[i]`: inputs (pieces or coresets) inserted into level `i`.
    pub received: Vec<usize>,
    pub live_engines: usize,
    pub peak_live_engines: usize,
    pub live_projectors: usize,
    pub peak_projectors: usize,
}

#[derive(Debug, Default)]
struct Level {
    engine: Option<BicoEngine>,
    pending: usize,
}

#[derive(Debug)]
pub struct MrTree {
    cfg: MrConfig,
    dim: usize,
    levels: Vec<Level>,
    tree: TreeStats,
    stats: PipelineStats,
}

fn bump(v: &mut Vec<usize>, i: usize) {
    if v.len() <= i {
        v.resize(i + 1, 0);
    }
    v[i] += 1;
}

impl MrTree {
    pub fn new(dim: usize, cfg: MrConfig) -> Result<Self> {
        cfg.validate()?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if cfg.svd_dim > dim {
            return Err(Error::InvalidArgument(format!(
                "svd dimension {} exceeds point dimension {dim}",
                cfg.svd_dim
            )));
        }
        Ok(Self {
            cfg,
            dim,
            levels: Vec::new(),
            tree: TreeStats::default(),
            stats: PipelineStats::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tree_stats(&self) -> &TreeStats {
        &self.tree
    }

    pub fn stats(&self) -> &PipelineStats {
        &self.stats
    }

    /// Number of levels currently holding an engine.
    pub fn live_levels(&self) -> usize {
        self.levels.iter().filter(|l| l.engine.is_some()).count()
    }

    fn project(&mut self, points: &Matrix, weights: &[u64], seed: u64) -> Result<Option<Matrix>> {
        let start = Instant::now();
        self.tree.live_projectors += 1;
        self.tree.peak_projectors = self.tree.peak_projectors.max(self.tree.live_projectors);
        let out = reduce_dimension(
            points,
            weights,
            self.cfg.svd_dim,
            self.cfg.backend,
            self.cfg.oversample,
            self.cfg.power_iterations,
            seed,
        );
        self.tree.live_projectors -= 1;
        if matches!(out, Ok(Some(_))) {
            self.stats.svd_calls += 1;
        }
        self.stats.svd_seconds += start.elapsed().as_secs_f64();
        out
    }

    fn insert_into(&mut self, level: usize, points: &Matrix, weights: &[u64]) -> Result<()> {
        if self.levels.len() <= level {
            self.levels.resize_with(level + 1, Level::default);
        }
        if self.levels[level].engine.is_none() {
            self.levels[level].engine = Some(BicoEngine::new(self.dim, self.cfg.coreset_size)?);
            self.tree.live_engines += 1;
            self.tree.peak_live_engines = self.tree.peak_live_engines.max(self.tree.live_engines);
        }
        let start = Instant::now();
        let engine = self.levels[level].engine.as_mut().expect("created above");
        for (row, &w) in points.row_iter().zip(weights) {
            engine.insert(row, w)?;
        }
        self.stats.coreset_seconds += start.elapsed().as_secs_f64();
        self.levels[level].pending += 1;
        bump(&mut self.tree.received, level);
        Ok(())
    }

    /// Projects one piece and inserts it into level 0, cascading flushes.
    /// Empty pieces are ignored.
    pub fn push_piece(&mut self, piece: &Matrix) -> Result<()> {
        if piece.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: piece.cols(),
            });
        }
        if piece.rows() > self.cfg.piece_size {
            return Err(Error::InvalidArgument(format!(
                "piece has {} rows, piece size is {}",
                piece.rows(),
                self.cfg.piece_size
            )));
        }
        if piece.is_empty() {
            return Ok(());
        }
        let index = self.stats.pieces as u64;
        self.stats.pieces += 1;
        self.stats.points += piece.rows() as u64;
        let weights = vec![1; piece.rows()];
        let projected = self.project(piece, &weights, self.cfg.seed ^ index)?;
        self.insert_into(0, projected.as_ref().unwrap_or(piece), &weights)?;
        self.cascade(0)
    }

    fn cascade(&mut self, mut level: usize) -> Result<()> {
        while self.levels[level].pending >= self.cfg.num_pieces {
            self.flush(level)?;
            level += 1;
        }
        Ok(())
    }

    /// Moves the coreset of `level` into `level + 1` (without cascading).
    fn flush(&mut self, level: usize) -> Result<()> {
        let Some(engine) = self.levels[level].engine.take() else {
            return Ok(());
        };
        self.levels[level].pending = 0;
        let coreset = engine.coreset();
        drop(engine);
        self.tree.live_engines -= 1;
        let flush_index = self.tree.flushes.get(level).copied().unwrap_or(0) as u64;
        bump(&mut self.tree.flushes, level);

        let mut points = Matrix::with_capacity(self.dim, coreset.len());
        let mut weights = Vec::with_capacity(coreset.len());
        for p in &coreset {
            points.push_row(&p.coords)?;
            weights.push(p.weight);
        }
        drop(coreset);
        let projected = self.project(&points, &weights, mix(self.cfg.seed, level as u64 + 1, flush_index))?;
        self.insert_into(level + 1, projected.as_ref().unwrap_or(&points), &weights)
    }

    /// Flushes leftover levels bottom-up until only the topmost engine is
    /// live, then returns its coreset.
    pub fn finalize(mut self) -> Result<(Vec<WeightedPoint>, PipelineStats, TreeStats)> {
        let mut level = 0;
        while level < self.levels.len() {
            let has_upper = self.levels[level + 1..].iter().any(|l| l.engine.is_some());
            if self.levels[level].engine.is_some() && has_upper {
                self.flush(level)?;
                self.cascade(level + 1)?;
            }
            level += 1;
        }
        let coreset = self
            .levels
            .iter()
            .rev()
            .find_map(|l| l.engine.as_ref())
            .map(BicoEngine::coreset)
            .unwrap_or_default();
        Ok((coreset, self.stats, self.tree))
    }
}

/// Point-stream front end for [`MrTree`]. The dimension is fixed by the first point.
#[derive(Debug)]
pub struct PiecyMr {
    cfg: MrConfig,
    tree: Option<MrTree>,
    piece: Option<Matrix>,
}

impl PiecyMr {
    pub fn new(cfg: MrConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tree: None,
            piece: None,
        })
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if self.tree.is_none() {
            self.tree = Some(MrTree::new(x.len(), self.cfg.clone())?);
            self.piece = Some(Matrix::with_capacity(x.len(), self.cfg.piece_size));
        }
        let piece = self.piece.as_mut().expect("created with the tree");
        piece.push_row(x)?;
        if piece.rows() == self.cfg.piece_size {
            self.tree.as_mut().expect("created above").push_piece(piece)?;
            piece.clear();
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(PipelineOutput, TreeStats)> {
        let (Some(mut tree), Some(piece)) = (self.tree, self.piece) else {
            return Ok((
                PipelineOutput {
                    coreset: Vec::new(),
                    dim: 0,
                    stats: PipelineStats::default(),
                },
                TreeStats::default(),
            ));
        };
        tree.push_piece(&piece)?;
        let dim = tree.dim();
        let (coreset, stats, tree_stats) = tree.finalize()?;
        Ok((PipelineOutput { coreset, dim, stats }, tree_stats))
    }
}

/// Runs [`PiecyMr`] over a whole stream.
pub fn piecy_mr_run<I, P>(points: I, cfg: &MrConfig) -> Result<(PipelineOutput, TreeStats)>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    let mut pipeline = PiecyMr::new(cfg.clone())?;
    for x in points {
        pipeline.push(x.as_ref())?;
    }
    pipeline.finish()
}
