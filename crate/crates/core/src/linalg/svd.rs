use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERATIONS: usize = 2;
/// Largest matrix (in entries) the exact backend accepts by default.
pub const EXACT_ENTRY_LIMIT: usize = 4_000_000;

/// Singular values below this fraction of the largest one are reported as 0.
const CLAMP_RATIO: f64 = 1e-12;
/// Components below this magnitude are skipped by the sign convention.
const SIGN_EPS: f64 = 1e-9;

/// Parameters of a rank-`target_rank` truncated SVD.
///
/// `oversample`, `power_iterations` and `seed` only affect the randomized
/// backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SvdTruncation {
    pub target_rank: usize,
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl SvdTruncation {
    pub fn new(target_rank: usize) -> Self {
        Self {
            target_rank,
            oversample: DEFAULT_OVERSAMPLE,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sketch_width(&self) -> usize {
        self.target_rank + self.oversample
    }

    /// Shrinks the oversampling so the sketch fits a `rows x cols` matrix.
    ///
    /// Returns `None` when the target rank is not below `min(rows, cols)`:
    /// projecting such a matrix onto its top-`target_rank` subspace is the
    /// identity, so no decomposition is needed.
    pub fn fitted(&self, rows: usize, cols: usize) -> Option<Self> {
        let max_rank = rows.min(cols);
        if self.target_rank >= max_rank {
            return None;
        }
        Some(Self {
            oversample: self.oversample.min(max_rank - self.target_rank),
            ..*self
        })
    }

    fn validate(&self, rows: usize, cols: usize, width: usize) -> Result<()> {
        if self.target_rank == 0 {
            return Err(Error::InvalidArgument("target rank must be >= 1".into()));
        }
        if width > rows.min(cols) {
            return Err(Error::InvalidArgument(format!(
                "rank {} plus oversampling {} exceeds min({rows}, {cols})",
                self.target_rank,
                width - self.target_rank
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SvdBackend {
    /// Eigendecomposition of the smaller Gram matrix. Meant for small inputs.
    Exact,
    /// Gaussian sketch with power iterations.
    #[default]
    Randomized,
}

/// Rank-`l` best-fit subspace: top right singular vectors plus singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    basis: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl Projector {
    /// Builds a projector from a `d x l` matrix of orthonormal columns.
    pub fn from_parts(right_vectors: &Matrix, singular_values: Vec<f64>) -> Result<Self> {
        let basis = right_vectors.to_dmatrix();
        if singular_values.len() != basis.ncols() {
            return Err(Error::DimensionMismatch {
                expected: basis.ncols(),
                got: singular_values.len(),
            });
        }
        if singular_values.iter().any(|s| *s < 0.0)
            || singular_values.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::InvalidArgument(
                "singular values must be nonnegative and nonincreasing".into(),
            ));
        }
        let gram = basis.tr_mul(&basis);
        let defect = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if defect > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (max deviation {defect:e})"
            )));
        }
        Ok(Self {
            basis,
            singular_values,
        })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// The `d x l` matrix whose columns are the right singular vectors.
    pub fn right_vectors(&self) -> Matrix {
        Matrix::from_dmatrix(&self.basis)
    }

    pub(crate) fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    fn from_columns(mut basis: DMatrix<f64>, mut singular_values: Vec<f64>) -> Self {
        let top = singular_values.first().copied().unwrap_or(0.0);
        for s in singular_values.iter_mut() {
            if *s < CLAMP_RATIO * top || !s.is_finite() {
                *s = 0.0;
            }
        }
        for mut col in basis.column_iter_mut() {
            if let Some(first) = col.iter().find(|v| v.abs() > SIGN_EPS) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        Self {
            basis,
            singular_values,
        }
    }
}

/// Exact top-`rank` right singular vectors via the smaller Gram matrix.
pub fn exact_truncated_svd(a: &Matrix, rank: usize) -> Result<Projector> {
    exact_truncated_svd_with_limit(a, rank, EXACT_ENTRY_LIMIT)
}

pub fn exact_truncated_svd_with_limit(a: &Matrix, rank: usize, limit: usize) -> Result<Projector> {
    let (rows, cols) = (a.rows(), a.cols());
    if rank == 0 || rank > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..=min({rows}, {cols})"
        )));
    }
    let entries = rows * cols;
    if entries > limit {
        return Err(Error::TooLarge { entries, limit });
    }
    let am = a.to_dmatrix();

    if cols <= rows {
        let (vals, vecs) = sorted_eigen(am.tr_mul(&am));
        let sigma = vals[..rank].iter().map(|l| l.max(0.0).sqrt()).collect();
        let basis = vecs.columns(0, rank).into_owned();
        return Ok(Projector::from_columns(basis, sigma));
    }

    // Wide matrix: eigenvectors of A A^T are left singular vectors.
    let (vals, vecs) = sorted_eigen(&am * am.transpose());
    let sigma: Vec<f64> = vals[..rank].iter().map(|l| l.max(0.0).sqrt()).collect();
    let top = sigma[0];
    let mut basis = DMatrix::zeros(cols, rank);
    let mut filled = 0;
    for (j, &s) in sigma.iter().enumerate() {
        if s <= CLAMP_RATIO * top || s == 0.0 {
            break;
        }
        let v = am.tr_mul(&vecs.column(j)) / s;
        basis.set_column(j, &v);
        filled += 1;
    }
    orthonormalize_columns(&mut basis, filled);
    Ok(Projector::from_columns(basis, sigma))
}

fn sorted_eigen(gram: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Re-orthonormalizes the first `filled` columns (two Gram-Schmidt passes) and
/// completes the rest with unit vectors orthogonal to everything before them.
fn orthonormalize_columns(basis: &mut DMatrix<f64>, filled: usize) {
    let (d, l) = basis.shape();
    let mut next_unit = 0;
    for j in 0..l {
        loop {
            if j >= filled {
                let mut e = nalgebra::DVector::zeros(d);
                e[next_unit] = 1.0;
                next_unit += 1;
                basis.set_column(j, &e);
            }
            for _ in 0..2 {
                for i in 0..j {
                    let proj = basis.column(i).dot(&basis.column(j));
                    let ci = basis.column(i).into_owned();
                    basis.column_mut(j).axpy(-proj, &ci, 1.0);
                }
            }
            let norm = basis.column(j).norm();
            if norm > 1e-6 {
                basis.column_mut(j).unscale_mut(norm);
                break;
            }
            assert!(j >= filled, "singular vector collapsed during orthonormalization");
        }
    }
}

fn orth(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Randomized truncated SVD.
///
/// When the matrix has many more rows than the sketch width, both sides are
/// sketched: a Gaussian test matrix compresses the rows to find the row space,
/// and the projected matrix is reduced to a square factor by QR before the
/// small SVD. Otherwise the usual column sketch is used.
pub fn randomized_truncated_svd(a: &Matrix, t: &SvdTruncation) -> Result<Projector> {
    let (rows, cols) = (a.rows(), a.cols());
    let width = t.sketch_width();
    t.validate(rows, cols, width)?;
    let am = a.to_dmatrix();
    let mut rng = rng::seeded(t.seed);

    let (basis, sigma) = if rows > 4 * width {
        let omega = DMatrix::from_fn(rows, width, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = orth(am.tr_mul(&omega));
        for _ in 0..t.power_iterations {
            let z = orth(&am * &y);
            y = orth(am.tr_mul(&z));
        }
        let r = (&am * &y).qr().r();
        let svd = r.svd(false, true);
        let vt = svd.v_t.expect("requested right vectors");
        let (sigma, order) = descending(svd.singular_values.as_slice());
        let small = DMatrix::from_fn(width, t.target_rank, |i, j| vt[(order[j], i)]);
        (y * small, sigma)
    } else {
        let omega = DMatrix::from_fn(cols, width, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut q = orth(&am * &omega);
        for _ in 0..t.power_iterations {
            let z = orth(am.tr_mul(&q));
            q = orth(&am * &z);
        }
        let b = q.tr_mul(&am);
        let svd = b.svd(false, true);
        let vt = svd.v_t.expect("requested right vectors");
        let (sigma, order) = descending(svd.singular_values.as_slice());
        let basis = DMatrix::from_fn(cols, t.target_rank, |i, j| vt[(order[j], i)]);
        (basis, sigma)
    };
    Ok(Projector::from_columns(
        basis,
        sigma.into_iter().take(t.target_rank).collect(),
    ))
}

fn descending(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    (order.iter().map(|&i| values[i]).collect(), order)
}

pub fn truncated_svd(a: &Matrix, t: &SvdTruncation, backend: SvdBackend) -> Result<Projector> {
    match backend {
        SvdBackend::Exact => exact_truncated_svd(a, t.target_rank),
        SvdBackend::Randomized => randomized_truncated_svd(a, t),
    }
}

/// Returns `A V V^T`: every row projected onto the projector's subspace,
/// still expressed in ambient coordinates.
pub fn project(a: &Matrix, p: &Projector) -> Result<Matrix> {
    if a.cols() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: a.cols(),
        });
    }
    if a.is_empty() {
        return Ok(a.clone());
    }
    let coords = &a.to_dmatrix() * p.basis();
    Ok(Matrix::from_dmatrix(&(coords * p.basis().transpose())))
}

/// `||A - A V V^T||_F^2`.
pub fn reconstruction_error(a: &Matrix, p: &Projector) -> Result<f64> {
    let projected = project(a, p)?;
    Ok(a.as_slice()
        .iter()
        .zip(projected.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Best-fit subspace of the multiset holding `weights[i]` copies of row `i`.
///
/// Rows are scaled by `sqrt(w)` before the decomposition; the scaled matrix
/// has the same right singular vectors as the explicitly duplicated one.
/// Project the unscaled points with [`project`].
pub fn weighted_best_fit(
    points: &Matrix,
    weights: &[u64],
    t: &SvdTruncation,
    backend: SvdBackend,
) -> Result<Projector> {
    if weights.len() != points.rows() {
        return Err(Error::DimensionMismatch {
            expected: points.rows(),
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|&w| w == 0) {
        return Err(Error::InvalidArgument(format!("weight of row {i} is zero")));
    }
    if weights.iter().all(|&w| w == 1) {
        return truncated_svd(points, t, backend);
    }
    let factors: Vec<f64> = weights.iter().map(|&w| (w as f64).sqrt()).collect();
    truncated_svd(&points.scale_rows(&factors)?, t, backend)
}

/// The `m` largest singular values of `a`, in nonincreasing order.
///
/// Small matrices go through the exact backend; larger ones through the
/// randomized backend with seed 0.
pub fn spectrum(a: &Matrix, m: usize) -> Result<Vec<f64>> {
    let max_rank = a.rows().min(a.cols());
    if m == 0 || m > max_rank {
        return Err(Error::InvalidArgument(format!(
            "spectrum length {m} outside 1..={max_rank}"
        )));
    }
    if a.rows() * a.cols() <= EXACT_ENTRY_LIMIT {
        return Ok(exact_truncated_svd(a, m)?.singular_values);
    }
    let mut t = SvdTruncation::new(m);
    t.oversample = t.oversample.min(max_rank - m);
    t.power_iterations = 4;
    Ok(randomized_truncated_svd(a, &t)?.singular_values)
}

/// Principal angles (radians, ascending) between the spans of two projectors.
///
/// Computed from the sines, `svd(V_b - V_a V_a^T V_b)`, which stays accurate
/// for nearly identical subspaces.
pub fn principal_angles(a: &Projector, b: &Projector) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (big, small) = if a.rank() >= b.rank() { (a, b) } else { (b, a) };
    let residual = small.basis() - big.basis() * big.basis().tr_mul(small.basis());
    let mut angles: Vec<f64> = residual
        .singular_values()
        .iter()
        .map(|s| s.clamp(0.0, 1.0).asin())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Exact vs randomized reconstruction error at one rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdComparison {
    pub rank: usize,
    pub exact_error: f64,
    pub randomized_error: f64,
    /// `|randomized - exact| / exact`, 0 when both are 0.
    pub relative_deviation: f64,
    pub exact_seconds: f64,
    pub randomized_seconds: f64,
}

pub fn compare_svd_backends(a: &Matrix, t: &SvdTruncation) -> Result<SvdComparison> {
    let start = Instant::now();
    let exact = exact_truncated_svd(a, t.target_rank)?;
    let exact_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let approx = randomized_truncated_svd(a, t)?;
    let randomized_seconds = start.elapsed().as_secs_f64();
    let exact_error = reconstruction_error(a, &exact)?;
    let randomized_error = reconstruction_error(a, &approx)?;
    let relative_deviation = if exact_error > 0.0 {
        (randomized_error - exact_error).abs() / exact_error
    } else if randomized_error == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SvdComparison {
        rank: t.target_rank,
        exact_error,
        randomized_error,
        relative_deviation,
        exact_seconds,
        randomized_seconds,
    })
}
