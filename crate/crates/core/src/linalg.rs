//! Dense complex matrix kernel.
//!
//! Matrices are `nalgebra` dense matrices over `Complex<f64>`. Everything in
//! the crate vectorizes matrices by stacking *rows* (`vec(A)[j*cols + k] =
//! A[(j, k)]`), so the Kronecker product satisfies
//! `kron(A, B) * vec(X) = vec(A X Bᵀ)`. Column stacking is never used.
//!
//! Randomness enters only through explicit 64-bit seeds. The generator is
//! ChaCha20 (`rand_chacha` 0.9, `seed_from_u64`), with complex Gaussian entries
//! drawn as `(x + iy)/√2` for independent standard normals `x, y` in that order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg, Error, Result};
use crate::lapack;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;


/// The three numerical cutoffs shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Singular/eigenvalue cutoff, relative to the largest one.
    pub eps_rank: f64,
    /// Entrywise/Frobenius equality tolerance.
    pub eps_eq: f64,
    /// Acceptance threshold for search objectives (sums of squared moduli).
    pub eps_obj: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps_rank: 1e-9,
            eps_eq: 1e-9,
            eps_obj: 1e-16,
        }
    }
}

impl Tolerance {
    pub fn new(eps_rank: f64, eps_eq: f64, eps_obj: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(eps_rank) && ok(eps_eq) && ok(eps_obj)) || eps_rank > 1.0 {
            return arg(format!(
                "tolerances must be positive with eps_rank <= 1 (got {eps_rank}, {eps_eq}, {eps_obj})"
            ));
        }
        Ok(Tolerance {
            eps_rank,
            eps_eq,
            eps_obj,
        })
    }

    /// Same tolerance with both `eps_rank` and `eps_eq` set to `eps`.
    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new(eps, eps, Self::default().eps_obj)
    }

    pub fn with_eps_eq(self, eps_eq: f64) -> Self {
        Tolerance { eps_eq, ..self }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(2πi k / n)`.
pub fn root_of_unity(k: i64, n: u64) -> C64 {
    let n = n as i64;
    let k = k.rem_euclid(n);
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// Builds a matrix from rows, rejecting ragged input and non-finite entries.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return arg("matrix must have at least one row");
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return arg("matrix must have at least one column");
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return arg(format!(
            "row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        ));
    }
    let m = CMatrix::from_fn(nrows, ncols, |j, k| rows[j][k]);
    check_finite(&m)?;
    Ok(m)
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{}x{} matrix has non-finite entries",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Elementary matrix `E_{j,k}` (0-based indices).
pub fn unit(rows: usize, cols: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    m[(j, k)] = C64::new(1.0, 0.0);
    m
}

pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

/// Row-stacking vectorization.
pub fn vec(a: &CMatrix) -> CVector {
    let cols = a.ncols();
    CVector::from_fn(a.nrows() * cols, |i, _| a[(i / cols, i % cols)])
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return arg(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        ));
    }
    Ok(CMatrix::from_fn(rows, cols, |j, k| v[j * cols + k]))
}

/// `⟨A, B⟩ = Tr(A* B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Tensor product compatible with row-stacking `vec`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Entrywise (Schur) product.
pub fn schur(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return arg(format!(
            "schur product needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        ));
    }
    Ok(a.component_mul(b))
}

/// Block-diagonal direct sum `A ⊕ B`.
pub fn dirsum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut m = CMatrix::zeros(ar + br, ac + bc);
    m.view_mut((0, 0), (ar, ac)).copy_from(a);
    m.view_mut((ar, ac), (br, bc)).copy_from(b);
    m
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(lapack::svd(m, false)?.s))
}

fn rank_of_spectrum(values: &[f64], eps_rank: f64) -> usize {
    let top = values.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > eps_rank * top).count()
}

/// Number of singular values above `eps_rank` times the largest one.
pub fn numerical_rank(m: &CMatrix, tol: &Tolerance) -> Result<usize> {
    check_finite(m)?;
    if m.is_empty() {
        return Ok(0);
    }
    let sv = singular_values(m)?;
    Ok(rank_of_spectrum(sv.as_slice(), tol.eps_rank))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending
/// order with eigenvectors in the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return arg(format!("eigen-decomposition needs a square matrix, got {:?}", m.shape()));
    }
    let n = m.nrows();
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let (vals, vecs) = lapack::hermitian_eigen(&herm)?;
    let values = vals.iter().rev().copied().collect();
    let vectors = CMatrix::from_fn(n, n, |j, k| vecs[(j, n - 1 - k)]);
    Ok((values, vectors))
}

/// Orthonormal basis (in the `⟨A,B⟩ = Tr(A*B)` inner product) of the span of
/// equally shaped matrices, with its dimension decided by `eps_rank`.
pub fn span_basis(
    mats: &[CMatrix],
    rows: usize,
    cols: usize,
    tol: &Tolerance,
) -> Result<Vec<CMatrix>> {
    if mats.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(bad) = mats.iter().find(|m| m.shape() != (rows, cols)) {
        return arg(format!(
            "span_basis expected {rows}x{cols} matrices, got {:?}",
            bad.shape()
        ));
    }
    let stacked = CMatrix::from_fn(rows * cols, mats.len(), |i, k| mats[k][(i / cols, i % cols)]);
    let svd = lapack::svd(&stacked, true)?;
    let rank = rank_of_spectrum(&svd.s, tol.eps_rank);
    let u = svd.u;
    (0..rank)
        .map(|k| unvec(&u.column(k).into_owned(), rows, cols))
        .collect()
}

/// Orthonormal basis of the orthogonal complement, inside `rows × cols`
/// matrices, of the span of an orthonormal family.
pub fn complement_basis(orthonormal: &[CMatrix], rows: usize, cols: usize) -> Result<Vec<CMatrix>> {
    let d = rows * cols;
    let mut proj = CMatrix::identity(d, d);
    for b in orthonormal {
        if b.shape() != (rows, cols) {
            return arg(format!("complement_basis expected {rows}x{cols}, got {:?}", b.shape()));
        }
        let v = vec(b);
        proj -= &v * v.adjoint();
    }
    let keep = d.saturating_sub(orthonormal.len());
    let (_, vecs) = hermitian_eigen(&proj)?;
    (0..keep)
        .map(|k| unvec(&vecs.column(k).into_owned(), rows, cols))
        .collect()
}

/// `‖U*U − 𝟙‖_F`.
pub fn isometry_defect(u: &CMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

/// `max(‖U*U − 𝟙‖_F, ‖UU* − 𝟙‖_F)`; infinite for non-square input.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    isometry_defect(u).max((u * u.adjoint() - identity(u.nrows())).norm())
}

/// Thin QR orthonormalization of the columns of `m` (rows ≥ cols) with the
/// triangular factor's diagonal made real positive, which pins down the
/// phase of each output column.
pub fn orthonormalize_columns(m: &CMatrix) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return arg(format!("cannot orthonormalize {cols} columns in dimension {rows}"));
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag == 0.0 || !mag.is_finite() {
            return Err(Error::Numerical(format!(
                "column {k} is linearly dependent; QR diagonal vanished"
            )));
        }
        let phase = d / mag;
        for j in 0..rows {
            q[(j, k)] *= phase;
        }
    }
    Ok(q)
}

/// Nearest unitary (polar factor) of a square matrix.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return arg(format!("polar_unitary needs a square matrix, got {:?}", m.shape()));
    }
    let svd = lapack::svd(m, true)?;
    Ok(svd.u * svd.vt)
}

/// Complex standard Gaussian matrix from a seeded ChaCha20 stream.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..rows {
        for k in 0..cols {
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            m[(j, k)] = C64::new(x * scale, y * scale);
        }
    }
    m
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Haar-distributed `rows × cols` isometry (`rows ≥ cols`), deterministic in
/// `seed`.
pub fn haar_isometry(rows: usize, cols: usize, seed: u64) -> Result<CMatrix> {
    if cols == 0 || rows < cols {
        return arg(format!(
            "haar_isometry needs rows >= cols >= 1, got {rows}x{cols}"
        ));
    }
    let mut rng = rng_from_seed(seed);
    haar_isometry_with(rows, cols, &mut rng)
}

pub fn haar_isometry_with(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Result<CMatrix> {
    let g = gaussian_matrix(rows, cols, rng);
    orthonormalize_columns(&g)
}

pub fn haar_unitary(n: usize, seed: u64) -> Result<CMatrix> {
    haar_isometry(n, n, seed)
}

/// Index of the reference entry used for phase fixing: the first entry whose
/// modulus is within a relative 1e-6 of the largest modulus.
fn reference_index<'a>(entries: impl Iterator<Item = &'a C64> + Clone) -> Option<usize> {
    let top = entries.clone().map(|z| z.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    entries.into_iter().position(|z| z.norm() >= top * (1.0 - 1e-6))
}

/// Global phase that makes a vector's reference entry real positive.
pub fn vector_phase(v: &[C64]) -> C64 {
    match reference_index(v.iter()) {
        Some(i) => v[i].conj() / v[i].norm(),
        None => C64::new(1.0, 0.0),
    }
}

/// Rescales `m` by a unit scalar so that the reference entry of its first
/// nonzero column is real positive. Applied to unitaries this picks a
/// canonical member of each phase class.
pub fn fix_matrix_phase(m: &CMatrix) -> CMatrix {
    for k in 0..m.ncols() {
        let col: Vec<C64> = m.column(k).iter().cloned().collect();
        if col.iter().any(|z| z.norm() > 0.0) {
            return m * vector_phase(&col);
        }
    }
    m.clone()
}
