//! Seeded generators for the synthetic instance families.
//!
//! All generators are iterators producing one point at a time and keep only
//! `O(d)` state. Randomness comes from [`crate::rng`], so a configuration
//! always yields the same bit pattern.

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Clusters hidden in random coordinate subsets, surrounded by small noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SwnConfig {
    pub clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub active_dims: usize,
    /// Half-width of the uniform range on a cluster's active coordinates.
    pub spread: f64,
    /// Half-width of the uniform noise on the remaining coordinates.
    pub noise: f64,
    pub seed: u64,
}

impl SwnConfig {
    pub fn new(clusters: usize, points_per_cluster: usize, dim: usize, active_dims: usize) -> Self {
        Self {
            clusters,
            points_per_cluster,
            dim,
            active_dims,
            spread: 10.0,
            noise: 0.5,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn len(&self) -> usize {
        self.clusters * self.points_per_cluster
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Iterator over a StructuredWithNoise instance, cluster by cluster.
#[derive(Clone, Debug)]
pub struct StructuredWithNoise {
    cfg: SwnConfig,
    rng: StreamRng,
    cluster: usize,
    emitted_in_cluster: usize,
    active: Vec<bool>,
    order: Vec<usize>,
}

impl StructuredWithNoise {
    pub fn new(cfg: SwnConfig) -> Result<Self> {
        if cfg.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if cfg.active_dims > cfg.dim {
            return Err(Error::InvalidArgument(format!(
                "{} active dimensions exceed dimension {}",
                cfg.active_dims, cfg.dim
            )));
        }
        if !(cfg.spread > cfg.noise && cfg.noise > 0.0) {
            return Err(Error::InvalidArgument("need spread > noise > 0".into()));
        }
        let rng = rng::seeded(cfg.seed);
        let dim = cfg.dim;
        let mut gen = Self {
            cfg,
            rng,
            cluster: 0,
            emitted_in_cluster: 0,
            active: vec![false; dim],
            order: (0..dim).collect(),
        };
        gen.draw_active_dims();
        Ok(gen)
    }

    /// Active coordinate mask of the cluster currently being emitted.
    pub fn active_dims(&self) -> &[bool] {
        &self.active
    }

    fn draw_active_dims(&mut self) {
        self.order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        rng::shuffle(&mut self.rng, &mut self.order);
        self.active.iter_mut().for_each(|a| *a = false);
        for &i in &self.order[..self.cfg.active_dims] {
            self.active[i] = true;
        }
    }
}

impl Iterator for StructuredWithNoise {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.cfg.points_per_cluster == 0 || self.cluster >= self.cfg.clusters {
            return None;
        }
        if self.emitted_in_cluster == self.cfg.points_per_cluster {
            self.cluster += 1;
            self.emitted_in_cluster = 0;
            if self.cluster >= self.cfg.clusters {
                return None;
            }
            self.draw_active_dims();
        }
        self.emitted_in_cluster += 1;
        let (spread, noise) = (self.cfg.spread, self.cfg.noise);
        let rng = &mut self.rng;
        Some(
            self.active
                .iter()
                .map(|&a| {
                    let h = if a { spread } else { noise };
                    rng::uniform(rng, -h, h)
                })
                .collect(),
        )
    }
}

/// k-means++ lower-bound family: a scaled simplex of `k` vertices, each
/// carrying a small simplex of `n/k` points on its own block of dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundConfig {
    pub k: usize,
    pub n: usize,
    /// Edge scale of the outer simplex.
    pub outer: f64,
    /// Edge scale of the per-vertex simplices.
    pub inner: f64,
    /// Unused by the (deterministic) construction; kept for a uniform interface.
    pub seed: u64,
}

impl LowerBoundConfig {
    pub fn new(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            outer: 1000.0,
            inner: 100.0,
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.k + self.n
    }
}

/// Iterator over a LowerBound instance in vertex-major order.
#[derive(Clone, Debug)]
pub struct LowerBound {
    cfg: LowerBoundConfig,
    next: usize,
}

impl LowerBound {
    pub fn new(cfg: LowerBoundConfig) -> Result<Self> {
        if cfg.k < 2 {
            return Err(Error::InvalidArgument("LowerBound needs k >= 2".into()));
        }
        if cfg.n == 0 || !cfg.n.is_multiple_of(cfg.k) {
            return Err(Error::InvalidArgument(format!(
                "n = {} is not a positive multiple of k = {}",
                cfg.n, cfg.k
            )));
        }
        if !(cfg.outer > 0.0 && cfg.inner > 0.0) {
            return Err(Error::InvalidArgument("simplex scales must be positive".into()));
        }
        Ok(Self { cfg, next: 0 })
    }
}

impl Iterator for LowerBound {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.cfg.n {
            return None;
        }
        let per_vertex = self.cfg.n / self.cfg.k;
        let vertex = self.next / per_vertex;
        let mut x = vec![0.0; self.cfg.dim()];
        x[vertex] = self.cfg.outer;
        // point (vertex, j) uses coordinate k + vertex * per_vertex + j
        x[self.cfg.k + self.next] = self.cfg.inner;
        self.next += 1;
        Some(x)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.cfg.n - self.next;
        (left, Some(left))
    }
}

/// `n` points in `R^n` with i.i.d. coordinates uniform on `[-half_width, half_width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomConfig {
    pub n: usize,
    pub half_width: f64,
    pub seed: u64,
}

impl RandomConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            half_width: 10.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct UniformCube {
    cfg: RandomConfig,
    rng: StreamRng,
    next: usize,
}

impl UniformCube {
    pub fn new(cfg: RandomConfig) -> Result<Self> {
        if cfg.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if cfg.half_width.is_nan() || cfg.half_width <= 0.0 {
            return Err(Error::InvalidArgument("half width must be positive".into()));
        }
        let rng = rng::seeded(cfg.seed);
        Ok(Self { cfg, rng, next: 0 })
    }
}

impl Iterator for UniformCube {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.cfg.n {
            return None;
        }
        self.next += 1;
        let h = self.cfg.half_width;
        let rng = &mut self.rng;
        Some((0..self.cfg.n).map(|_| rng::uniform(rng, -h, h)).collect())
    }
}

pub fn gen_structured_with_noise(cfg: SwnConfig) -> Result<StructuredWithNoise> {
    StructuredWithNoise::new(cfg)
}

pub fn gen_lower_bound(cfg: LowerBoundConfig) -> Result<LowerBound> {
    LowerBound::new(cfg)
}

pub fn gen_random(cfg: RandomConfig) -> Result<UniformCube> {
    UniformCube::new(cfg)
}
