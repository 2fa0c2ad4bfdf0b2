use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot, norm_sq};

/// A point with a positive integral weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoint {
    pub coords: Vec<f64>,
    pub weight: u64,
}

impl WeightedPoint {
    pub fn new(coords: Vec<f64>, weight: u64) -> Self {
        Self { coords, weight }
    }

    pub fn unit(coords: Vec<f64>) -> Self {
        Self { coords, weight: 1 }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Sufficient statistics of a weighted multiset: total weight `n`, linear sum
/// `s = sum w x`, and `q = sum w |x|^2`, plus the reference point used to
/// route new points to this feature.
///
/// The moments are stored relative to the reference point `r`
/// (`sum w (x - r)` and `sum w |x - r|^2`), so copies of `r` itself carry no
/// rounding error. [`ClusteringFeature::sum`] and
/// [`ClusteringFeature::sum_sq`] translate back to absolute moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringFeature {
    weight: u64,
    offset_sum: Vec<f64>,
    offset_sq: f64,
    reference: Vec<f64>,
}

impl ClusteringFeature {
    /// `w` copies of `x`; `x` becomes the reference point.
    pub fn from_point(x: &[f64], w: u64) -> Self {
        assert!(w >= 1, "clustering feature weight must be positive");
        Self {
            weight: w,
            offset_sum: vec![0.0; x.len()],
            offset_sq: 0.0,
            reference: x.to_vec(),
        }
    }

    /// Builds a feature from absolute moments `n`, `s`, `q` and a reference point.
    pub fn from_parts(weight: u64, sum: &[f64], sum_sq: f64, reference: Vec<f64>) -> Result<Self> {
        if weight == 0 {
            return Err(Error::InvalidArgument("clustering feature weight must be positive".into()));
        }
        if sum.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                got: sum.len(),
            });
        }
        let n = weight as f64;
        let offset_sum: Vec<f64> = sum.iter().zip(&reference).map(|(s, r)| s - n * r).collect();
        // sum w|x - r|^2 = q - 2<r, s> + n|r|^2
        let offset_sq = sum_sq - 2.0 * dot(&reference, sum) + n * norm_sq(&reference);
        Ok(Self {
            weight,
            offset_sum,
            offset_sq,
            reference,
        })
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    /// `s = sum w x`.
    pub fn sum(&self) -> Vec<f64> {
        let n = self.weight as f64;
        self.offset_sum
            .iter()
            .zip(&self.reference)
            .map(|(o, r)| o + n * r)
            .collect()
    }

    /// `q = sum w |x|^2`.
    pub fn sum_sq(&self) -> f64 {
        self.offset_sq
            + 2.0 * dot(&self.reference, &self.offset_sum)
            + self.weight as f64 * norm_sq(&self.reference)
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.weight as f64;
        self.offset_sum
            .iter()
            .zip(&self.reference)
            .map(|(o, r)| r + o / n)
            .collect()
    }

    /// `|x - mu|^2` for the current centroid `mu`.
    pub fn dist_sq_to_centroid(&self, x: &[f64]) -> f64 {
        let n = self.weight as f64;
        self.offset_sum
            .iter()
            .zip(&self.reference)
            .zip(x)
            .map(|((o, r), v)| {
                let d = (v - r) - o / n;
                d * d
            })
            .sum()
    }

    /// Weighted SSE of the summarized multiset to its own centroid,
    /// `q - |s|^2 / n`, clamped at 0.
    pub fn internal_error(&self) -> f64 {
        (self.offset_sq - norm_sq(&self.offset_sum) / self.weight as f64).max(0.0)
    }

    /// Weighted SSE of the summarized multiset to the center `c`,
    /// i.e. `q - 2<c, s> + n |c|^2`.
    ///
    /// Evaluated as `n |mu - c|^2 + internal_error`, which is the same
    /// quantity with less cancellation.
    pub fn cost_to_center(&self, c: &[f64]) -> Result<f64> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        Ok(self.weight as f64 * self.dist_sq_to_centroid(c) + self.internal_error())
    }

    /// The raw moment expression `q - 2<c, s> + n |c|^2`, clamped at 0.
    pub fn cost_to_center_raw(&self, c: &[f64]) -> f64 {
        (self.sum_sq() - 2.0 * dot(c, &self.sum()) + self.weight as f64 * norm_sq(c)).max(0.0)
    }

    pub(crate) fn add_copies(&mut self, x: &[f64], w: u64) {
        let wf = w as f64;
        let mut sq = 0.0;
        for ((o, r), v) in self.offset_sum.iter_mut().zip(&self.reference).zip(x) {
            let y = v - r;
            *o += wf * y;
            sq += y * y;
        }
        self.offset_sq += wf * sq;
        self.weight += w;
    }

    /// Internal error of the union with `other`.
    pub fn merged_error(&self, other: &ClusteringFeature) -> f64 {
        let (n1, n2) = (self.weight as f64, other.weight as f64);
        let spread = dist_sq(&self.centroid(), &other.centroid());
        self.internal_error() + other.internal_error() + n1 * n2 / (n1 + n2) * spread
    }

    /// Adds `other`'s statistics; keeps this feature's reference point.
    pub(crate) fn absorb(&mut self, other: &ClusteringFeature) {
        let n2 = other.weight as f64;
        let shift: Vec<f64> = other
            .reference
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| a - b)
            .collect();
        self.offset_sq += other.offset_sq + 2.0 * dot(&shift, &other.offset_sum) + n2 * norm_sq(&shift);
        for ((o, oo), d) in self.offset_sum.iter_mut().zip(&other.offset_sum).zip(&shift) {
            *o += oo + n2 * d;
        }
        self.weight += other.weight;
    }
}

/// Exact SSE increase from adding `w` copies of a point at squared distance
/// `dist_sq` from the centroid of a multiset of weight `s`: `s w / (s + w) * dist_sq`.
pub fn insertion_error_increment(s: u64, w: u64, dist_sq: f64) -> f64 {
    let (s, w) = (s as f64, w as f64);
    s * w / (s + w) * dist_sq
}

/// Largest `w' <= w` such that `c + s w' / (s + w') * dist_sq <= threshold`.
///
/// If `s * dist_sq - threshold + c <= 0` the threshold is never reached and all
/// `w` copies fit. Otherwise the bound `(s T - s c) / (s dist_sq - T + c)` is
/// floored and then nudged so that it agrees with a direct evaluation of the
/// inequality.
pub fn max_insertable_copies(s: u64, w: u64, cur_error: f64, threshold: f64, dist_sq: f64) -> u64 {
    if w == 0 || dist_sq <= 0.0 {
        return w;
    }
    let sf = s as f64;
    let denom = sf * dist_sq - threshold + cur_error;
    if denom <= 0.0 {
        return w;
    }
    let num = sf * (threshold - cur_error);
    if num <= 0.0 {
        return 0;
    }
    let bound = (num / denom).floor();
    let mut fit = if bound >= w as f64 { w } else { bound as u64 };
    let fits = |k: u64| cur_error + insertion_error_increment(s, k, dist_sq) <= threshold;
    while fit < w && fits(fit + 1) {
        fit += 1;
    }
    while fit > 0 && !fits(fit) {
        fit -= 1;
    }
    fit
}
