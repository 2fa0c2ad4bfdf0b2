use proptest::prelude::*;

use super::*;
use crate::rng;

fn random_points(n: usize, d: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng::uniform(&mut r, -scale, scale)).collect())
        .collect()
}

fn assert_same_features(a: &BicoEngine, b: &BicoEngine, tol: f64) {
    assert_eq!(a.len(), b.len(), "feature counts differ");
    assert_eq!(a.threshold(), b.threshold());
    for (fa, fb) in a.features().zip(b.features()) {
        assert_eq!(fa.weight(), fb.weight());
        assert_eq!(fa.reference(), fb.reference());
        let q_scale = fa.sum_sq().abs().max(1.0);
        assert!((fa.sum_sq() - fb.sum_sq()).abs() <= tol * q_scale);
        for (x, y) in fa.sum().iter().zip(fb.sum()) {
            assert!((x - y).abs() <= tol * x.abs().max(1.0));
        }
    }
}

fn check_invariants(e: &BicoEngine, points: &[(Vec<f64>, u64)]) {
    assert!(e.len() <= e.budget());
    let mass: u64 = e.features().map(|f| f.weight()).sum();
    let expected: u64 = points.iter().map(|p| p.1).sum();
    assert_eq!(mass, expected);
    assert_eq!(e.total_weight(), expected);
    let d = e.dim();
    for j in 0..d {
        let got: f64 = e.features().map(|f| f.sum()[j]).sum();
        let want: f64 = points.iter().map(|(x, w)| *w as f64 * x[j]).sum();
        let scale: f64 = points.iter().map(|(x, w)| *w as f64 * x[j].abs()).sum::<f64>().max(1.0);
        assert!((got - want).abs() <= 1e-7 * scale, "coordinate {j}: {got} vs {want}");
    }
    for f in e.features() {
        assert!(f.internal_error() <= e.threshold() * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn first_point_opens_feature() {
    let mut e = BicoEngine::new(3, 10).unwrap();
    let x = [1.0, -2.0, 0.5];
    e.insert(&x, 7).unwrap();
    assert_eq!(e.len(), 1);
    let f = e.features().next().unwrap();
    assert_eq!(f.weight(), 7);
    assert_eq!(f.sum(), vec![7.0, -14.0, 3.5]);
    assert!((f.sum_sq() - 7.0 * 5.25).abs() < 1e-12);
    assert_eq!(f.internal_error(), 0.0);
}

#[test]
fn insert_validates_input() {
    let mut e = BicoEngine::new(2, 4).unwrap();
    assert!(matches!(e.insert(&[1.0], 1), Err(crate::Error::DimensionMismatch { .. })));
    assert!(matches!(e.insert(&[1.0, f64::NAN], 1), Err(crate::Error::InvalidInput(_))));
    assert!(e.insert(&[1.0, 2.0], 0).is_err());
    assert_eq!(e.total_weight(), 0);
    assert!(BicoEngine::new(2, 0).is_err());
    assert!(BicoEngine::new(0, 3).is_err());
}

#[test]
fn weighted_insert_equals_unit_copies() {
    let pts = random_points(300, 4, 1, 10.0);
    let mut r = rng::seeded(2);
    let stream: Vec<(Vec<f64>, u64)> =
        pts.into_iter().map(|x| (x, 1 + rng::below(&mut r, 10))).collect();
    let mut weighted = BicoEngine::new(4, 20).unwrap();
    let mut unit = BicoEngine::new(4, 20).unwrap();
    for (x, w) in &stream {
        weighted.insert(x, *w).unwrap();
        for _ in 0..*w {
            unit.insert(x, 1).unwrap();
        }
    }
    assert!(weighted.rebuilds() > 0);
    assert_same_features(&weighted, &unit, 1e-9);
    check_invariants(&weighted, &stream);
}

#[test]
fn budget_respected_on_unit_stream() {
    let pts = random_points(1000, 5, 3, 1.0);
    let mut e = BicoEngine::new(5, 50).unwrap();
    for x in &pts {
        e.insert(x, 1).unwrap();
        assert!(e.len() <= 50);
    }
    assert_eq!(e.total_weight(), 1000);
    let stream: Vec<_> = pts.into_iter().map(|x| (x, 1)).collect();
    check_invariants(&e, &stream);
}

#[test]
fn rebuild_doubles_until_merge() {
    let mut e = BicoEngine::new(2, 2).unwrap();
    e.insert(&[0.0, 0.0], 1).unwrap();
    e.insert(&[10.0, 0.0], 1).unwrap();
    assert_eq!((e.len(), e.threshold()), (2, 0.0));
    e.set_budget(1).unwrap();
    assert_eq!(e.len(), 1);
    let f = e.features().next().unwrap();
    assert_eq!(f.weight(), 2);
    // bootstrap 100 * 1/16, then doubled until radius and threshold admit the merge
    assert!(e.threshold() >= 50.0 && e.rebuilds() > 1);
    assert!((f.internal_error() - 50.0).abs() < 1e-9);
}

#[test]
fn rebuild_collapses_coincident_features() {
    let mut e = BicoEngine::with_threshold(2, 5, 1.0).unwrap();
    for w in 1..=4 {
        e.insert(&[3.0, 3.0], w).unwrap();
    }
    e.rebuild();
    assert_eq!(e.len(), 1);
    assert_eq!(e.features().next().unwrap().internal_error(), 0.0);
}

#[test]
fn rebuild_conserves_moments() {
    let pts = random_points(200, 3, 7, 5.0);
    let mut e = BicoEngine::new(3, 100).unwrap();
    for x in &pts {
        e.insert(x, 2).unwrap();
    }
    let before: (u64, Vec<f64>, f64) = (
        e.features().map(|f| f.weight()).sum(),
        (0..3).map(|j| e.features().map(|f| f.sum()[j]).sum()).collect(),
        e.features().map(|f| f.sum_sq()).sum(),
    );
    e.rebuild();
    let n: u64 = e.features().map(|f| f.weight()).sum();
    assert_eq!(n, before.0);
    for j in 0..3 {
        let s: f64 = e.features().map(|f| f.sum()[j]).sum();
        assert!((s - before.1[j]).abs() <= 1e-9 * before.1[j].abs().max(1.0));
    }
    let q: f64 = e.features().map(|f| f.sum_sq()).sum();
    assert!((q - before.2).abs() <= 1e-9 * before.2);
}

#[test]
fn coreset_extraction() {
    let e = BicoEngine::new(2, 4).unwrap();
    assert!(e.coreset().is_empty());

    let mut e = BicoEngine::new(2, 4).unwrap();
    e.insert(&[1.0, 2.0], 3).unwrap();
    assert_eq!(e.coreset(), vec![WeightedPoint::new(vec![1.0, 2.0], 3)]);

    let pts = random_points(500, 3, 5, 2.0);
    let mut e = BicoEngine::new(3, 30).unwrap();
    for x in &pts {
        e.insert(x, 1).unwrap();
    }
    let cs = e.coreset();
    assert!(cs.len() <= 30);
    assert_eq!(cs.iter().map(|p| p.weight).sum::<u64>(), 500);
}

#[test]
fn cost_identity_against_brute_force() {
    let pts = random_points(100, 6, 11, 3.0);
    let mut r = rng::seeded(12);
    let weights: Vec<u64> = (0..100).map(|_| 1 + rng::below(&mut r, 9)).collect();
    let mut e = BicoEngine::new(6, 100).unwrap();
    for (x, w) in pts.iter().zip(&weights) {
        e.insert(x, *w).unwrap();
    }
    assert_eq!(e.len(), 100);
    for c in random_points(20, 6, 13, 3.0) {
        let cf_cost: f64 = e.features().map(|f| f.cost_to_center(&c).unwrap()).sum();
        let brute: f64 = pts
            .iter()
            .zip(&weights)
            .map(|(x, w)| *w as f64 * crate::linalg::dist_sq(x, &c))
            .sum();
        assert!((cf_cost - brute).abs() <= 1e-10 * brute);
    }
}

/// Places `s` points with centroid 0 and SSE `c` in the plane, then adds
/// copies of a point at squared distance `d2` one at a time, recomputing the
/// SSE from scratch, until the next copy would exceed `t`.
pub(crate) fn sequential_copies_oracle(s: u64, c: f64, t: f64, d2: f64, w: u64) -> u64 {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    if s == 1 {
        pts.push([0.0, 0.0]);
    } else {
        let a = (c / ((s - 1) as f64 * s as f64)).sqrt();
        pts.extend((0..s - 1).map(|_| [0.0, a]));
        pts.push([0.0, -((s - 1) as f64) * a]);
    }
    let x = [d2.sqrt(), 0.0];
    let sse = |pts: &[[f64; 2]]| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        pts.iter().map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2)).sum::<f64>()
    };
    let mut inserted = 0;
    while inserted < w {
        pts.push(x);
        if sse(&pts) > t {
            break;
        }
        inserted += 1;
    }
    inserted
}

#[test]
fn max_copies_matches_sequential_oracle() {
    let mut r = rng::seeded(99);
    for _ in 0..300 {
        let s = 1 + rng::below(&mut r, 50);
        let t = rng::uniform(&mut r, 0.1, 100.0);
        let c = if s == 1 { 0.0 } else { rng::uniform(&mut r, 0.0, t) };
        let d2 = rng::uniform(&mut r, 0.0, 10.0);
        let w = 1 + rng::below(&mut r, 100);
        assert_eq!(
            max_insertable_copies(s, w, c, t, d2),
            sequential_copies_oracle(s, c, t, d2, w),
            "s={s} c={c} t={t} d2={d2} w={w}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_weighted_unit_equivalence(seed in 0u64..100_000, n in 1usize..150, budget in 1usize..25,
                                      d in 1usize..5, maxw in 1u64..8) {
        let pts = random_points(n, d, seed, 4.0);
        let mut r = rng::seeded(seed ^ 0xABCD);
        let stream: Vec<(Vec<f64>, u64)> =
            pts.into_iter().map(|x| (x, 1 + rng::below(&mut r, maxw))).collect();
        let mut weighted = BicoEngine::new(d, budget).unwrap();
        let mut unit = BicoEngine::new(d, budget).unwrap();
        for (x, w) in &stream {
            weighted.insert(x, *w).unwrap();
            for _ in 0..*w {
                unit.insert(x, 1).unwrap();
            }
        }
        assert_same_features(&weighted, &unit, 1e-9);
        check_invariants(&weighted, &stream);
    }

    #[test]
    fn prop_duplicates_stay_together(seed in 0u64..100_000, reps in 1usize..6) {
        // a few locations repeated many times: never more features than locations
        let locs = random_points(4, 3, seed, 10.0);
        let mut e = BicoEngine::new(3, 8).unwrap();
        for _ in 0..reps {
            for x in &locs {
                e.insert(x, 3).unwrap();
            }
        }
        prop_assert!(e.len() <= 4);
        prop_assert_eq!(e.total_weight(), 12 * reps as u64);
    }
}

