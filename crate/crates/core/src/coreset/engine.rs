use std::cmp::Reverse;

use super::feature::{max_insertable_copies, ClusteringFeature, WeightedPoint};
use crate::error::{check_finite, Error, Result};

/// Weighted BICO engine: a bounded tree of clustering features.
///
/// Level `i` (starting at 1) admits points within squared radius
/// `T / (16 * 4^(i-1))` of a feature's reference point. A point is offered to
/// the nearest admissible feature; the copies that fit under the threshold `T`
/// are absorbed and the rest descend to that feature's children. When a new
/// feature would exceed the budget `m`, the engine rebuilds with a larger
/// threshold and retries.
///
/// Inserting `(x, w)` leaves the engine in the same state as inserting `w`
/// unit copies of `x` one after another.
#[derive(Clone, Debug)]
pub struct BicoEngine {
    dim: usize,
    budget: usize,
    threshold: f64,
    nodes: Vec<Node>,
    roots: Vec<usize>,
    total_weight: u64,
    rebuilds: usize,
}

#[derive(Clone, Debug)]
struct Node {
    cf: ClusteringFeature,
    children: Vec<usize>,
}

enum Placement {
    Absorbed,
    Open { parent: Option<usize>, remaining: u64 },
}

impl BicoEngine {
    /// Engine for `dim`-dimensional points keeping at most `budget` features.
    ///
    /// The threshold starts at 0, so only identical points share a feature,
    /// until the first overflow sets it from the closest pair of the first
    /// `budget + 1` distinct points.
    pub fn new(dim: usize, budget: usize) -> Result<Self> {
        Self::with_threshold(dim, budget, 0.0)
    }

    pub fn with_threshold(dim: usize, budget: usize, threshold: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if budget == 0 {
            return Err(Error::InvalidArgument("feature budget must be >= 1".into()));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad threshold {threshold}")));
        }
        Ok(Self {
            dim,
            budget,
            threshold,
            nodes: Vec::new(),
            roots: Vec::new(),
            total_weight: 0,
            rebuilds: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of clustering features.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Features in index order (creation order since the last rebuild).
    pub fn features(&self) -> impl ExactSizeIterator<Item = &ClusteringFeature> + '_ {
        self.nodes.iter().map(|n| &n.cf)
    }

    /// Number of tree levels currently in use.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            1 + nodes[idx].children.iter().map(|&c| walk(nodes, c)).max().unwrap_or(0)
        }
        self.roots.iter().map(|&r| walk(&self.nodes, r)).max().unwrap_or(0)
    }

    pub fn insert_point(&mut self, p: &WeightedPoint) -> Result<()> {
        self.insert(&p.coords, p.weight)
    }

    /// Absorbs `w` copies of `x`.
    pub fn insert(&mut self, x: &[f64], w: u64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        check_finite(x)?;
        if w == 0 {
            return Err(Error::InvalidArgument("point weight must be >= 1".into()));
        }
        self.total_weight += w;
        let mut remaining = w;
        loop {
            match self.place(x, remaining) {
                Placement::Absorbed => return Ok(()),
                Placement::Open { parent, remaining: r } => {
                    if self.nodes.len() < self.budget {
                        self.open(parent, ClusteringFeature::from_point(x, r));
                        return Ok(());
                    }
                    // No room for another feature: rebuild, then retry the
                    // copies that are still pending from the root.
                    let next = if self.threshold > 0.0 {
                        2.0 * self.threshold
                    } else {
                        self.bootstrap_threshold(Some(x))
                    };
                    self.rebuild_at(next);
                    remaining = r;
                }
            }
        }
    }

    /// Doubles the threshold and re-inserts every feature, repeating until at
    /// most `budget` features remain.
    pub fn rebuild(&mut self) {
        loop {
            let next = if self.threshold > 0.0 {
                2.0 * self.threshold
            } else if self.nodes.len() >= 2 {
                self.bootstrap_threshold(None)
            } else {
                return;
            };
            self.rebuild_at(next);
            if self.nodes.len() <= self.budget {
                return;
            }
        }
    }

    /// Changes the feature budget, rebuilding if the engine is now over it.
    pub fn set_budget(&mut self, budget: usize) -> Result<()> {
        if budget == 0 {
            return Err(Error::InvalidArgument("feature budget must be >= 1".into()));
        }
        self.budget = budget;
        if self.nodes.len() > budget {
            self.rebuild();
        }
        Ok(())
    }

    /// One weighted point per feature: the centroid with the feature's weight.
    pub fn coreset(&self) -> Vec<WeightedPoint> {
        self.nodes
            .iter()
            .map(|n| WeightedPoint::new(n.cf.centroid(), n.cf.weight()))
            .collect()
    }

    fn radius_sq(&self, level: usize) -> f64 {
        self.threshold / (16.0 * 4f64.powi(level as i32 - 1))
    }

    fn candidates(&self, parent: Option<usize>) -> &[usize] {
        match parent {
            None => &self.roots,
            Some(p) => &self.nodes[p].children,
        }
    }

    /// Nearest reference point within `sqrt(bound)`; ties go to the lower index.
    fn nearest(&self, x: &[f64], parent: Option<usize>, bound: f64) -> Option<usize> {
        let mut best = bound;
        let mut best_idx = None;
        for &j in self.candidates(parent) {
            if let Some(d) = dist_sq_within(x, self.nodes[j].cf.reference(), best) {
                if best_idx.is_none() || d < best {
                    best = d;
                    best_idx = Some(j);
                }
            }
        }
        best_idx
    }

    fn place(&mut self, x: &[f64], mut w: u64) -> Placement {
        let mut parent = None;
        let mut level = 1;
        loop {
            let Some(j) = self.nearest(x, parent, self.radius_sq(level)) else {
                return Placement::Open { parent, remaining: w };
            };
            let cf = &mut self.nodes[j].cf;
            let fit = max_insertable_copies(
                cf.weight(),
                w,
                cf.internal_error(),
                self.threshold,
                cf.dist_sq_to_centroid(x),
            );
            if fit > 0 {
                cf.add_copies(x, fit);
                w -= fit;
                if w == 0 {
                    return Placement::Absorbed;
                }
            }
            parent = Some(j);
            level += 1;
        }
    }

    fn open(&mut self, parent: Option<usize>, cf: ClusteringFeature) {
        let idx = self.nodes.len();
        self.nodes.push(Node {
            cf,
            children: Vec::new(),
        });
        match parent {
            None => self.roots.push(idx),
            Some(p) => self.nodes[p].children.push(idx),
        }
    }

    /// Closest squared distance among the reference points (plus `extra`),
    /// scaled by `budget / 16`.
    fn bootstrap_threshold(&self, extra: Option<&[f64]>) -> f64 {
        let refs: Vec<&[f64]> = self
            .nodes
            .iter()
            .map(|n| n.cf.reference())
            .chain(extra)
            .collect();
        let mut closest = f64::INFINITY;
        for i in 0..refs.len() {
            for j in i + 1..refs.len() {
                if let Some(d) = dist_sq_within(refs[i], refs[j], closest) {
                    if d > 0.0 {
                        closest = closest.min(d);
                    }
                }
            }
        }
        assert!(closest.is_finite(), "bootstrap needs two distinct points");
        closest * self.budget as f64 / 16.0
    }

    fn rebuild_at(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.rebuilds += 1;
        let old = std::mem::take(&mut self.nodes);
        self.roots.clear();
        let mut order: Vec<usize> = (0..old.len()).collect();
        order.sort_by_key(|&i| Reverse(old[i].cf.weight()));
        let mut pending: Vec<Option<ClusteringFeature>> = old.into_iter().map(|n| Some(n.cf)).collect();
        for i in order {
            let cf = pending[i].take().expect("each feature reinserted once");
            self.reinsert(cf);
        }
    }

    fn reinsert(&mut self, cf: ClusteringFeature) {
        let mut parent = None;
        let mut level = 1;
        loop {
            match self.nearest(cf.reference(), parent, self.radius_sq(level)) {
                None => return self.open(parent, cf),
                Some(j) => {
                    if self.nodes[j].cf.merged_error(&cf) <= self.threshold {
                        self.nodes[j].cf.absorb(&cf);
                        return;
                    }
                    parent = Some(j);
                    level += 1;
                }
            }
        }
    }
}

/// `|a - b|^2` if it is at most `limit`, abandoning early otherwise.
#[inline]
fn dist_sq_within(a: &[f64], b: &[f64], limit: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (ca, cb) in a.chunks(16).zip(b.chunks(16)) {
        acc += ca
            .iter()
            .zip(cb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}
