//! Dense symmetric-matrix utilities: index bookkeeping, sample covariance,
//! Schur complements, and log-determinants.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (candidate counts in the tens), so factorizations are hand-rolled dense
//! Cholesky kernels that feed the operation counters.

use nalgebra::{DMatrix, DVector};

use crate::counters::OpCounters;
use crate::error::{Error, Result};

/// Relative jitter added to a conditioning block when its factorization
/// fails; one retry, then the block is reported as degenerate.
const JITTER_REL: f64 = 1e-10;

/// An ordered set of selected candidate indices, always in original
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    indices: Vec<usize>,
    n: usize,
}

impl Design {
    /// Empty design over `n` candidates.
    pub fn empty(n: usize) -> Self {
        Self {
            indices: Vec::new(),
            n,
        }
    }

    /// Build from explicit indices, validating range and distinctness.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut design = Self::empty(n);
        for idx in indices {
            design.push(idx)?;
        }
        Ok(design)
    }

    /// Append one index, preserving selection order.
    pub fn push(&mut self, index: usize) -> Result<()> {
        if index >= self.n {
            return Err(Error::IndexOutOfRange { index, dim: self.n });
        }
        if self.indices.contains(&index) {
            return Err(Error::Config(format!("index {index} selected twice")));
        }
        self.indices.push(index);
        Ok(())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Indices sorted ascending (selection matrix convention).
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    /// Prefix of the first `k` selections.
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            indices: self.indices[..k.min(self.indices.len())].to_vec(),
            n: self.n,
        }
    }

    /// Complement in ascending order.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.contains(*i)).collect()
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Maps positions of a shrunken matrix back to original candidate indices.
///
/// Kept strictly increasing so shrunken matrices and complements stay in the
/// same (ascending original index) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    surviving: Vec<usize>,
}

impl IndexMap {
    pub fn full(n: usize) -> Self {
        Self {
            surviving: (0..n).collect(),
        }
    }

    pub fn from_surviving(surviving: Vec<usize>) -> Result<Self> {
        if !surviving.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "surviving indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { surviving })
    }

    pub fn len(&self) -> usize {
        self.surviving.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surviving.is_empty()
    }

    /// Original candidate index at shrunken position `pos`.
    pub fn original(&self, pos: usize) -> usize {
        self.surviving[pos]
    }

    pub fn surviving(&self) -> &[usize] {
        &self.surviving
    }

    /// Shrunken position of an original index, if it survives.
    pub fn position_of(&self, original: usize) -> Option<usize> {
        self.surviving.binary_search(&original).ok()
    }

    /// Drop an original index from the surviving set.
    pub fn remove_original(&mut self, original: usize) -> Result<usize> {
        match self.surviving.binary_search(&original) {
            Ok(pos) => {
                self.surviving.remove(pos);
                Ok(pos)
            }
            Err(_) => Err(Error::IndexOutOfRange {
                index: original,
                dim: self.surviving.len(),
            }),
        }
    }
}

/// Dense symmetric matrix. Symmetry is enforced by construction:
/// `(M + Mᵀ)/2` on entry and after every update that could drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Wrap a square matrix, symmetrizing and checking finiteness.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Config(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

/// Restrict `m` to the given rows and columns (`P_rowsᵀ M P_cols`).
pub fn select_submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> Result<DMatrix<f64>> {
    for &r in rows {
        if r >= m.nrows() {
            return Err(Error::IndexOutOfRange {
                index: r,
                dim: m.nrows(),
            });
        }
    }
    for &c in cols {
        if c >= m.ncols() {
            return Err(Error::IndexOutOfRange {
                index: c,
                dim: m.ncols(),
            });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        m[(rows[i], cols[j])]
    }))
}

/// Lower Cholesky factor, counting multiplications and divisions.
///
/// Returns the failing pivot on non-positive-definite input so callers can
/// decide between jitter and a hard error.
pub(crate) fn cholesky_counted(
    m: &DMatrix<f64>,
    counters: &mut OpCounters,
) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    counters.factorizations += 1;
    for c in 0..n {
        let mut diag = m[(c, c)];
        for k in 0..c {
            diag -= l[(c, k)] * l[(c, k)];
        }
        counters.mults += c as u64;
        if !diag.is_finite() || diag <= 0.0 {
            return Err((c, diag));
        }
        let d = diag.sqrt();
        l[(c, c)] = d;
        for r in (c + 1)..n {
            let mut v = m[(r, c)];
            for k in 0..c {
                v -= l[(r, k)] * l[(c, k)];
            }
            l[(r, c)] = v / d;
        }
        counters.mults += ((n - c - 1) * (c + 1)) as u64;
    }
    Ok(l)
}

/// Solve `L W = B` (forward) then `Lᵀ X = W` (backward) for every column of
/// `b`, i.e. `X = (L Lᵀ)⁻¹ B`. Counts multiplications and divisions.
pub(crate) fn cholesky_solve_counted(
    l: &DMatrix<f64>,
    b: &DMatrix<f64>,
    counters: &mut OpCounters,
) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for col in 0..x.ncols() {
        // forward: L w = b
        for r in 0..n {
            let mut v = x[(r, col)];
            for k in 0..r {
                v -= l[(r, k)] * x[(k, col)];
            }
            x[(r, col)] = v / l[(r, r)];
        }
        // backward: Lᵀ y = w
        for r in (0..n).rev() {
            let mut v = x[(r, col)];
            for k in (r + 1)..n {
                v -= l[(k, r)] * x[(k, col)];
            }
            x[(r, col)] = v / l[(r, r)];
        }
    }
    counters.mults += (x.ncols() * n * (n + 1)) as u64;
    x
}

fn factor_block_with_jitter(
    block: &DMatrix<f64>,
    block_indices: &[usize],
    counters: &mut OpCounters,
) -> Result<DMatrix<f64>> {
    match cholesky_counted(block, counters) {
        Ok(l) => Ok(l),
        Err(_) => {
            let dim = block.nrows();
            let mean_diag = block.diagonal().iter().sum::<f64>() / dim as f64;
            let lambda = JITTER_REL * mean_diag;
            let jittered = block + DMatrix::identity(dim, dim) * lambda;
            cholesky_counted(&jittered, counters).map_err(|_| Error::DegenerateBlock {
                indices: block_indices.to_vec(),
            })
        }
    }
}

/// Schur complement `S_{Ā,Ā} − S_{Ā,A} S_{A,A}⁻¹ S_{A,Ā}` for the given
/// conditioning indices (original coordinates, any order).
///
/// The result is indexed by the complement of `conditioned_on` in ascending
/// order; pair it with an [`IndexMap`] built from the same complement.
pub fn schur_complement(s: &SymMatrix, conditioned_on: &[usize]) -> Result<SymMatrix> {
    let mut scratch = OpCounters::new();
    schur_complement_counted(s, conditioned_on, &mut scratch)
}

/// Counted variant of [`schur_complement`].
pub fn schur_complement_counted(
    s: &SymMatrix,
    conditioned_on: &[usize],
    counters: &mut OpCounters,
) -> Result<SymMatrix> {
    let n = s.dim();
    let mut cond = conditioned_on.to_vec();
    cond.sort_unstable();
    cond.dedup();
    if cond.len() != conditioned_on.len() {
        return Err(Error::Config(
            "conditioning indices must be distinct".into(),
        ));
    }
    for &i in &cond {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
    }
    let rest: Vec<usize> = (0..n).filter(|i| !cond.contains(i)).collect();
    if cond.is_empty() {
        return Ok(s.clone());
    }
    if rest.is_empty() {
        return Ok(SymMatrix::zeros(0));
    }

    let s_aa = select_submatrix(s.matrix(), &cond, &cond)?;
    let s_ar = select_submatrix(s.matrix(), &cond, &rest)?;
    let s_rr = select_submatrix(s.matrix(), &rest, &rest)?;

    let l = factor_block_with_jitter(&s_aa, &cond, counters)?;
    // W = S_{A,A}⁻¹ S_{A,Ā}
    let w = cholesky_solve_counted(&l, &s_ar, counters);
    let correction = s_ar.transpose() * w;
    SymMatrix::from_matrix(s_rr - correction)
}

/// Unbiased sample covariance of row-major samples (`M×n`, one sample per
/// row), with the `1/(M−1)` normalizer.
pub fn sample_covariance(samples: &DMatrix<f64>) -> Result<SymMatrix> {
    let m = samples.nrows();
    let n = samples.ncols();
    if m < 2 {
        return Err(Error::InsufficientSamples { got: m, need: 2 });
    }
    let mut mean = DVector::<f64>::zeros(n);
    for r in 0..m {
        for c in 0..n {
            mean[c] += samples[(r, c)];
        }
    }
    mean /= m as f64;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut centered = DVector::<f64>::zeros(n);
    for r in 0..m {
        for c in 0..n {
            centered[c] = samples[(r, c)] - mean[c];
        }
        for i in 0..n {
            for j in i..n {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    cov /= (m - 1) as f64;
    for i in 0..n {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    SymMatrix::from_matrix(cov)
}

/// Log-determinant of a positive-definite matrix via Cholesky.
pub fn logdet_psd(m: &SymMatrix) -> Result<f64> {
    let mut scratch = OpCounters::new();
    logdet_psd_counted(m, &mut scratch)
}

/// Counted variant of [`logdet_psd`].
pub fn logdet_psd_counted(m: &SymMatrix, counters: &mut OpCounters) -> Result<f64> {
    if m.dim() == 0 {
        return Ok(0.0);
    }
    let l = cholesky_counted(m.matrix(), counters).map_err(|(at, pivot)| {
        Error::NotPositiveDefinite {
            dim: m.dim(),
            pivot,
            at,
        }
    })?;
    Ok(2.0 * (0..m.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Inverse of a positive-definite matrix via Cholesky solves.
pub fn invert_pd(m: &SymMatrix) -> Result<SymMatrix> {
    let mut scratch = OpCounters::new();
    let n = m.dim();
    let l = cholesky_counted(m.matrix(), &mut scratch)
        .map_err(|(at, pivot)| Error::NotPositiveDefinite { dim: n, pivot, at })?;
    let inv = cholesky_solve_counted(&l, &DMatrix::identity(n, n), &mut scratch);
    SymMatrix::from_matrix(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Random well-conditioned PD matrix for oracle tests.
    pub(crate) fn random_pd(dim: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
        SymMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn design_rejects_out_of_range_and_duplicates() {
        let mut d = Design::empty(4);
        d.push(2).unwrap();
        assert!(matches!(d.push(4), Err(Error::IndexOutOfRange { .. })));
        assert!(d.push(2).is_err());
        assert_eq!(d.indices(), &[2]);
        assert_eq!(d.complement(), vec![0, 1, 3]);
    }

    #[test]
    fn select_submatrix_identity_case() {
        let id = DMatrix::<f64>::identity(4, 4);
        let sub = select_submatrix(&id, &[0, 2], &[0, 2]).unwrap();
        assert_eq!(sub, DMatrix::identity(2, 2));
    }

    #[test]
    fn select_submatrix_direct_pick() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let sub = select_submatrix(&m, &[1, 2], &[1, 2]).unwrap();
        assert_eq!(sub, DMatrix::from_row_slice(2, 2, &[5.0, 6.0, 6.0, 9.0]));
    }

    #[test]
    fn select_submatrix_full_and_out_of_range() {
        let m = random_pd(5, 7).into_matrix();
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(select_submatrix(&m, &all, &all).unwrap(), m);
        assert!(matches!(
            select_submatrix(&m, &[5], &all),
            Err(Error::IndexOutOfRange { index: 5, dim: 5 })
        ));
    }

    #[test]
    fn schur_identity_block_is_unchanged() {
        let s = SymMatrix::identity(3);
        let out = schur_complement(&s, &[0]).unwrap();
        assert_eq!(out.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn schur_two_by_two_hand_value() {
        // [[2,1],[1,2]] conditioned on {1}: 2 - 1*(1/2)*1 = 1.5
        let s =
            SymMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let out = schur_complement(&s, &[1]).unwrap();
        assert_eq!(out.dim(), 1);
        assert_relative_eq!(out[(0, 0)], 1.5, max_relative = 1e-12);
    }

    /// Dense-inverse oracle: the Schur complement equals the inverse of the
    /// complementary block of the full inverse.
    #[test]
    fn schur_matches_full_inverse_oracle() {
        let s = random_pd(6, 42);
        let cond = [1usize, 4];
        let rest: Vec<usize> = vec![0, 2, 3, 5];
        let schur = schur_complement(&s, &cond).unwrap();

        let full_inv = s.matrix().clone().try_inverse().expect("invertible");
        let block = select_submatrix(&full_inv, &rest, &rest).unwrap();
        let oracle = block.try_inverse().expect("invertible");
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(schur[(i, j)], oracle[(i, j)], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn schur_sequential_matches_one_shot() {
        let s = random_pd(7, 3);
        let one_shot = schur_complement(&s, &[2, 5, 6]).unwrap();

        // Condition index-by-index, tracking survivors.
        let mut cur = s.clone();
        let mut map = IndexMap::full(7);
        for orig in [5usize, 2, 6] {
            let pos = map.position_of(orig).unwrap();
            cur = schur_complement(&cur, &[pos]).unwrap();
            map.remove_original(orig).unwrap();
        }
        assert_eq!(map.surviving(), &[0, 1, 3, 4]);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(cur[(i, j)], one_shot[(i, j)], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn schur_degenerate_block_names_indices() {
        // Rank-one matrix: conditioning block [0] is fine, but conditioning
        // on {0,1} has a singular 2x2 block that jitter cannot rescue at
        // meaningful scale... use an exactly-zero block instead.
        let z = SymMatrix::zeros(3);
        let err = schur_complement(&z, &[0, 2]).unwrap_err();
        match err {
            Error::DegenerateBlock { indices } => assert_eq!(indices, vec![0, 2]),
            other => panic!("expected DegenerateBlock, got {other:?}"),
        }
    }

    #[test]
    fn jitter_rescues_singular_block() {
        // Two exactly duplicated coordinates: the 2x2 conditioning block is
        // singular, so the first factorization fails and the jittered retry
        // must succeed.
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.3, 1.0, 1.0, 0.3, 0.3, 0.3, 1.0]);
        let s = SymMatrix::from_matrix(m).unwrap();
        let mut c = OpCounters::new();
        let out = schur_complement_counted(&s, &[0, 1], &mut c);
        assert!(out.is_ok(), "jitter should rescue: {out:?}");
        assert_eq!(c.factorizations, 2, "failed attempt plus jittered retry");
    }

    #[test]
    fn sample_covariance_zero_variance() {
        let samples = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let cov = sample_covariance(&samples).unwrap();
        assert_eq!(cov.matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn sample_covariance_hand_value() {
        // {(0,0),(2,2)}: mean (1,1), centered {(-1,-1),(1,1)},
        // cov = (1/(2-1)) * 2 * outer = [[2,2],[2,2]]
        let samples = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]);
        let cov = sample_covariance(&samples).unwrap();
        assert_eq!(
            cov.matrix(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0])
        );
    }

    #[test]
    fn sample_covariance_requires_two_samples() {
        let samples = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        assert!(matches!(
            sample_covariance(&samples),
            Err(Error::InsufficientSamples { got: 1, need: 2 })
        ));
    }

    /// Statistical oracle: covariance of draws from a known Gaussian
    /// converges entrywise at O(M^{-1/2}).
    #[test]
    fn sample_covariance_converges_to_truth() {
        let truth = random_pd(3, 11);
        let l = cholesky_counted(truth.matrix(), &mut OpCounters::new()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let m = 40_000usize;
        let mut samples = DMatrix::zeros(m, 3);
        for r in 0..m {
            let z = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let x = &l * z;
            for c in 0..3 {
                samples[(r, c)] = x[c];
            }
        }
        let cov = sample_covariance(&samples).unwrap();
        let scale = truth.matrix().amax();
        let tol = 5.0 * scale / (m as f64).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (cov[(i, j)] - truth[(i, j)]).abs() < tol,
                    "entry ({i},{j}): {} vs {}",
                    cov[(i, j)],
                    truth[(i, j)]
                );
            }
        }
    }

    #[test]
    fn logdet_identity_and_diagonal() {
        assert_relative_eq!(logdet_psd(&SymMatrix::identity(5)).unwrap(), 0.0);
        let d = SymMatrix::from_diagonal(&[2.0, 3.0]);
        assert_relative_eq!(logdet_psd(&d).unwrap(), 6.0f64.ln(), max_relative = 1e-14);
    }

    /// Eigenvalue oracle for the log-determinant.
    #[test]
    fn logdet_matches_eigenvalue_oracle() {
        let s = random_pd(5, 123);
        let eigs = s.matrix().clone().symmetric_eigen().eigenvalues;
        let oracle: f64 = eigs.iter().map(|e| e.ln()).sum();
        assert_relative_eq!(logdet_psd(&s).unwrap(), oracle, max_relative = 1e-10);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m =
            SymMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert!(matches!(
            logdet_psd(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn invert_pd_roundtrip() {
        let s = random_pd(4, 5);
        let inv = invert_pd(&s).unwrap();
        let prod = s.matrix() * inv.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[(i, j)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_counts_mults_and_divs() {
        let s = random_pd(4, 8);
        let mut c = OpCounters::new();
        cholesky_counted(s.matrix(), &mut c).unwrap();
        // (n³−n)/6 multiplications plus n(n−1)/2 divisions for n = 4.
        assert_eq!(c.mults, 10 + 6);
        assert_eq!(c.factorizations, 1);
    }
}
