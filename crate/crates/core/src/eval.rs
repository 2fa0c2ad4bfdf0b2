//! Weighted k-means++ seeding, weighted Lloyd iterations and cost evaluation.

use rand::RngCore;
use rayon::prelude::*;

use crate::coreset::WeightedPoint;
use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::rng;

/// `k` centers in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet {
    centers: Vec<Vec<f64>>,
}

impl CenterSet {
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        let d = centers
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("a center set needs at least one center".into()))?;
        for c in &centers {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
            crate::error::check_finite(c)?;
        }
        Ok(Self { centers })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Index and squared distance of the closest center (ties: lowest index).
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centers.iter().enumerate() {
            let d = dist_sq(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }
}

/// Samples an index with probability proportional to `masses[i]`.
///
/// Returns `None` if the total mass is zero.
pub fn sample_proportional(masses: &[f64], rng: &mut impl RngCore) -> Option<usize> {
    let total: f64 = masses.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = rng::unit(rng) * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last_positive = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last_positive
}

fn check_points(points: &[WeightedPoint]) -> Result<usize> {
    let d = points
        .first()
        .map(WeightedPoint::dim)
        .ok_or_else(|| Error::InvalidArgument("no points given".into()))?;
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    Ok(d)
}

/// Weighted D² seeding.
///
/// The first center is drawn proportionally to weight, every further one
/// proportionally to `w * D²`. Once all mass is covered (fewer distinct
/// points than `k`) the remaining centers repeat weight-proportional draws.
pub fn kmeanspp_seed(points: &[WeightedPoint], k: usize, rng: &mut impl RngCore) -> Result<CenterSet> {
    check_points(points)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let weights: Vec<f64> = points.iter().map(|p| p.weight as f64).collect();
    let first = sample_proportional(&weights, rng)
        .ok_or_else(|| Error::InvalidArgument("all weights are zero".into()))?;
    let mut centers = vec![points[first].coords.clone()];
    let mut masses: Vec<f64> = points
        .iter()
        .map(|p| p.weight as f64 * dist_sq(&p.coords, &centers[0]))
        .collect();
    while centers.len() < k {
        let pick = match sample_proportional(&masses, rng) {
            Some(i) => i,
            None => sample_proportional(&weights, rng).expect("positive weights"),
        };
        let c = points[pick].coords.clone();
        for (m, p) in masses.iter_mut().zip(points) {
            *m = m.min(p.weight as f64 * dist_sq(&p.coords, &c));
        }
        centers.push(c);
    }
    CenterSet::new(centers)
}

/// `sum w min_c |x - c|^2`.
pub fn weighted_cost(points: &[WeightedPoint], centers: &CenterSet) -> f64 {
    points
        .iter()
        .map(|p| p.weight as f64 * centers.nearest(&p.coords).1)
        .sum()
}

#[derive(Clone, Debug)]
pub struct LloydOutcome {
    pub centers: CenterSet,
    pub cost: f64,
    pub iterations: usize,
    /// Cost before the first iteration, then after each accepted one.
    pub cost_history: Vec<f64>,
}

/// Weighted Lloyd iterations until the relative cost decrease drops below
/// `tol` or `max_iters` is reached.
///
/// A center that loses all its points is moved to the point with the largest
/// weighted squared distance to its center.
pub fn lloyd_iterate(points: &[WeightedPoint], centers: CenterSet, max_iters: usize, tol: f64) -> Result<LloydOutcome> {
    let d = check_points(points)?;
    if centers.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: centers.dim(),
        });
    }
    let k = centers.k();
    let mut current = centers;
    let mut cost = weighted_cost(points, &current);
    let mut history = vec![cost];
    let mut iterations = 0;

    while iterations < max_iters && cost > 0.0 {
        let mut sums = vec![vec![0.0; d]; k];
        let mut mass = vec![0.0; k];
        let mut contrib = Vec::with_capacity(points.len());
        for p in points {
            let (j, dist) = current.nearest(&p.coords);
            let w = p.weight as f64;
            mass[j] += w;
            for (s, x) in sums[j].iter_mut().zip(&p.coords) {
                *s += w * x;
            }
            contrib.push(w * dist);
        }
        let mut next: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                if mass[j] > 0.0 {
                    sums[j].iter().map(|s| s / mass[j]).collect()
                } else {
                    current.centers()[j].clone()
                }
            })
            .collect();
        for j in (0..k).filter(|&j| mass[j] == 0.0) {
            let far = contrib
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("points are nonempty");
            next[j] = points[far].coords.clone();
            contrib[far] = 0.0;
        }
        let candidate = CenterSet::new(next)?;
        let new_cost = weighted_cost(points, &candidate);
        if new_cost > cost {
            // rounding at a fixpoint
            break;
        }
        iterations += 1;
        let improvement = cost - new_cost;
        current = candidate;
        history.push(new_cost);
        let old = cost;
        cost = new_cost;
        if improvement < tol * old {
            break;
        }
    }
    Ok(LloydOutcome {
        centers: current,
        cost,
        iterations,
        cost_history: history,
    })
}

/// `sum min_c |x - c|^2` over a stream of unweighted points, in one pass.
pub fn evaluate_cost<I, P>(centers: &CenterSet, stream: I) -> Result<f64>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    let mut total = 0.0;
    for x in stream {
        let x = x.as_ref();
        if x.len() != centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: centers.dim(),
                got: x.len(),
            });
        }
        total += centers.nearest(x).1;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalParams {
    pub repetitions: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            repetitions: 5,
            max_iters: 100,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Min, max, mean and median of a set of costs.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSummary {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub median: f64,
    pub costs: Vec<f64>,
}

impl CostSummary {
    pub fn from_costs(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidArgument("no costs to summarize".into()));
        }
        let mut sorted = costs.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Ok(Self {
            min: sorted[0],
            max: sorted[n - 1],
            avg: sorted.iter().sum::<f64>() / n as f64,
            median,
            costs,
        })
    }
}

/// One k-means++ + Lloyd run.
#[derive(Clone, Debug)]
pub struct Solution {
    pub centers: CenterSet,
    /// Weighted cost on the points the solution was computed from.
    pub cost: f64,
}

/// Independent k-means++ + Lloyd repetitions, repetition `i` seeded from
/// `(params.seed, i)`. Runs in parallel; the output order is by repetition.
pub fn solve_repeatedly(points: &[WeightedPoint], k: usize, params: &EvalParams) -> Result<Vec<Solution>> {
    check_points(points)?;
    if params.repetitions == 0 {
        return Err(Error::InvalidArgument("at least one repetition is needed".into()));
    }
    (0..params.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::seeded(rng::mix(params.seed, 0x6b6d, rep as u64));
            let seeds = kmeanspp_seed(points, k, &mut rng)?;
            let out = lloyd_iterate(points, seeds, params.max_iters, params.tol)?;
            Ok(Solution {
                centers: out.centers,
                cost: out.cost,
            })
        })
        .collect()
}

/// Runs [`solve_repeatedly`] on a coreset and summarizes the coreset costs.
pub fn coreset_cost_report(coreset: &[WeightedPoint], k: usize, params: &EvalParams) -> Result<(CostSummary, Vec<Solution>)> {
    let solutions = solve_repeatedly(coreset, k, params)?;
    let summary = CostSummary::from_costs(solutions.iter().map(|s| s.cost).collect())?;
    Ok((summary, solutions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(coords: &[f64], w: u64) -> WeightedPoint {
        WeightedPoint::new(coords.to_vec(), w)
    }

    fn random_weighted(n: usize, d: usize, seed: u64) -> Vec<WeightedPoint> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let x = (0..d).map(|_| rng::uniform(&mut r, -5.0, 5.0)).collect();
                WeightedPoint::new(x, 1 + rng::below(&mut r, 4))
            })
            .collect()
    }

    #[test]
    fn seeding_picks_all_distinct_points() {
        let pts = vec![wp(&[0.0], 2), wp(&[5.0], 1), wp(&[9.0], 3)];
        let mut r = rng::seeded(1);
        let c = kmeanspp_seed(&pts, 3, &mut r).unwrap();
        assert_eq!(weighted_cost(&pts, &c), 0.0);
    }

    #[test]
    fn seeding_coincident_points() {
        let pts = vec![wp(&[2.0, 2.0], 1), wp(&[2.0, 2.0], 4)];
        let c = kmeanspp_seed(&pts, 1, &mut rng::seeded(0)).unwrap();
        assert_eq!(c.centers(), &[vec![2.0, 2.0]]);
        let c = kmeanspp_seed(&pts, 3, &mut rng::seeded(0)).unwrap();
        assert_eq!(c.k(), 3);
    }

    #[test]
    fn seeding_rejects_empty() {
        assert!(kmeanspp_seed(&[], 2, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn second_center_follows_d2_law() {
        // masses (0, 2, 8) after a first center at the origin
        let masses = [0.0, 2.0, 8.0];
        let mut r = rng::seeded(5);
        let mut counts = [0usize; 3];
        let trials = 100_000;
        for _ in 0..trials {
            counts[sample_proportional(&masses, &mut r).unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!((counts[1] as f64 / trials as f64 - 0.2).abs() < 0.02);
        assert!((counts[2] as f64 / trials as f64 - 0.8).abs() < 0.02);
        assert_eq!(sample_proportional(&[0.0, 0.0], &mut r), None);
    }

    #[test]
    fn lloyd_fixpoint() {
        let pts = vec![wp(&[0.0], 1), wp(&[2.0], 1), wp(&[10.0], 2), wp(&[12.0], 2)];
        let start = CenterSet::new(vec![vec![1.0], vec![11.0]]).unwrap();
        let out = lloyd_iterate(&pts, start.clone(), 100, 1e-4).unwrap();
        assert_eq!(out.centers, start);
        assert!((out.cost - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lloyd_one_dimensional_example() {
        let pts = vec![wp(&[0.0], 1), wp(&[2.0], 1)];
        let out = lloyd_iterate(&pts, CenterSet::new(vec![vec![5.0]]).unwrap(), 100, 1e-4).unwrap();
        assert!((out.centers.centers()[0][0] - 1.0).abs() < 1e-12);
        assert!((out.cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lloyd_repairs_empty_cluster() {
        let pts = vec![wp(&[0.0], 1), wp(&[1.0], 1), wp(&[20.0], 5)];
        let start = CenterSet::new(vec![vec![0.5], vec![100.0]]).unwrap();
        // second center starts empty-ish: nearest for nobody after step one
        let out = lloyd_iterate(&pts, start, 10, 0.0).unwrap();
        assert!(out.cost < 1.0, "{out:?}");
    }

    #[test]
    fn lloyd_cost_nonincreasing() {
        for seed in 0..100 {
            let pts = random_weighted(60, 3, seed);
            let mut r = rng::seeded(seed + 1000);
            let start = kmeanspp_seed(&pts, 5, &mut r).unwrap();
            let out = lloyd_iterate(&pts, start, 100, 0.0).unwrap();
            assert!(out.cost_history.windows(2).all(|w| w[1] <= w[0]), "seed {seed}");
        }
    }

    #[test]
    fn evaluate_cost_examples() {
        let stream = vec![vec![0.0, 1.0], vec![3.0, 4.0]];
        let all = CenterSet::new(stream.clone()).unwrap();
        assert_eq!(evaluate_cost(&all, &stream).unwrap(), 0.0);
        let one = CenterSet::new(vec![vec![1.0, 1.0]]).unwrap();
        assert!((evaluate_cost(&one, &stream).unwrap() - (1.0 + 13.0)).abs() < 1e-12);
        assert!(evaluate_cost(&one, [vec![1.0]]).is_err());
    }

    #[test]
    fn evaluate_cost_matches_double_loop() {
        let pts = random_weighted(1000, 4, 3);
        let centers = CenterSet::new(pts[..7].iter().map(|p| p.coords.clone()).collect()).unwrap();
        let fast = evaluate_cost(&centers, pts.iter().map(|p| &p.coords)).unwrap();
        let mut naive = 0.0;
        for p in &pts {
            let mut best = f64::INFINITY;
            for c in centers.centers() {
                let mut s = 0.0;
                for i in 0..4 {
                    s += (p.coords[i] - c[i]).powi(2);
                }
                best = best.min(s);
            }
            naive += best;
        }
        assert!((fast - naive).abs() <= 1e-10 * naive);
    }

    #[test]
    fn weighted_cost_equals_unit_copies() {
        let pts = random_weighted(50, 3, 8);
        let centers = CenterSet::new(vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        let copies: Vec<Vec<f64>> = pts
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.coords.clone(), p.weight as usize))
            .collect();
        let a = weighted_cost(&pts, &centers);
        let b = evaluate_cost(&centers, &copies).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn summary_order_statistics() {
        let s = CostSummary::from_costs(vec![5.0, 1.0, 3.0, 4.0, 2.0]).unwrap();
        assert_eq!((s.min, s.median, s.max, s.avg), (1.0, 3.0, 5.0, 3.0));
        assert!(CostSummary::from_costs(vec![]).is_err());
    }

    #[test]
    fn repetitions_are_deterministic() {
        let pts = random_weighted(80, 2, 4);
        let params = EvalParams { seed: 9, ..Default::default() };
        let a = solve_repeatedly(&pts, 4, &params).unwrap();
        let b = solve_repeatedly(&pts, 4, &params).unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.centers, y.centers);
        }
    }

    #[test]
    fn degenerate_coreset_report() {
        let pts = vec![wp(&[1.0], 3), wp(&[4.0], 1)];
        let (summary, _) = coreset_cost_report(&pts, 3, &EvalParams::default()).unwrap();
        assert_eq!(summary.max, 0.0);
    }
}
