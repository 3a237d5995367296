//! Channel representations: Kraus lists, Choi matrices, complementary
//! channels, operator systems, direct sums, and Schur channels.
//!
//! The Choi matrix uses the output⊗input ordering
//! `J(Φ) = Σ_{j,k} Φ(E_{j,k}) ⊗ E_{j,k} = Σ_k vec(A_k) vec(A_k)*`.
//! For example, the identity channel on `M_2` has
//!
//! ```text
//! J = [[1,0,0,1],
//!      [0,0,0,0],
//!      [0,0,0,0],
//!      [1,0,0,1]]
//! ```
//!
//! and entry `((a,b),(c,d))` of `J` is `Φ(E_{b,d})[(a,c)]`.

use crate::error::{arg, Error, Result};
use crate::lapack;
use crate::linalg::{
    self, hermitian_eigen, identity, inner, span_basis, unvec, vec, vector_phase, CMatrix, C64,
    Tolerance,
};

/// A completely positive trace-preserving map `X ↦ Σ A_k X A_k*`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validated constructor: shapes must agree and `Σ A_k* A_k = 𝟙` within
    /// `eps_eq`.
    pub fn new(kraus: Vec<CMatrix>, tol: &Tolerance) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let defect = ch.trace_preservation_defect();
        if defect > tol.eps_eq {
            return Err(Error::Validation(format!(
                "Kraus operators are not trace preserving: ‖Σ A*A − 𝟙‖_F = {defect:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Checks shapes and finiteness only. Intended for maps that are not
    /// channels (adjoints, deliberately broken fixtures).
    pub fn new_unchecked(kraus: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return arg("Kraus list must be nonempty");
        };
        let (dim_out, dim_in) = first.shape();
        if dim_in == 0 || dim_out == 0 {
            return arg("Kraus operators must be nonempty matrices");
        }
        for (k, a) in kraus.iter().enumerate() {
            if a.shape() != (dim_out, dim_in) {
                return arg(format!(
                    "Kraus operator {k} has shape {:?}, expected {:?}",
                    a.shape(),
                    (dim_out, dim_in)
                ));
            }
            linalg::check_finite(a)?;
        }
        Ok(KrausChannel {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(n: usize) -> Self {
        KrausChannel {
            dim_in: n,
            dim_out: n,
            kraus: vec![identity(n)],
        }
    }

    pub fn unitary(u: CMatrix, tol: &Tolerance) -> Result<Self> {
        let defect = linalg::unitarity_defect(&u);
        if defect > tol.eps_eq {
            return Err(Error::Validation(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Self::new_unchecked(vec![u])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<CMatrix> {
        self.kraus
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    /// `‖Σ A_k* A_k − 𝟙‖_F`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.dim_in, self.dim_in);
        for a in &self.kraus {
            sum += a.adjoint() * a;
        }
        (sum - identity(self.dim_in)).norm()
    }

    /// `‖Φ(𝟙) − 𝟙‖_F`, infinite for non-square maps.
    pub fn unitality_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut sum = CMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            sum += a * a.adjoint();
        }
        (sum - identity(self.dim_out)).norm()
    }

    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        self.unitality_defect() <= tol.eps_eq
    }

    /// `Σ A_k X A_k*`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return arg(format!(
                "input has shape {:?}, channel expects {}x{}",
                x.shape(),
                self.dim_in,
                self.dim_in
            ));
        }
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            out += a * x * a.adjoint();
        }
        Ok(out)
    }

    pub fn choi(&self) -> ChoiMatrix {
        choi_of(self)
    }

    /// Equivalent minimal Kraus list: orthogonal operators ordered by
    /// decreasing weight, one per nonzero Choi eigenvalue (cutoff `eps_rank`
    /// relative to the largest eigenvalue).
    ///
    /// Computed from an SVD of the stacked `vec(A_k)` columns, which has the
    /// same left singular vectors as `J(Φ)` without forming it.
    pub fn minimized(&self, tol: &Tolerance) -> Result<KrausChannel> {
        let (m, n) = (self.dim_out, self.dim_in);
        let stacked = CMatrix::from_fn(m * n, self.kraus.len(), |i, k| {
            self.kraus[k][(i / n, i % n)]
        });
        let svd = lapack::svd(&stacked, true)?;
        let (u, sv) = (svd.u, svd.s);
        let top = sv.iter().cloned().fold(0.0, f64::max);
        let mut kraus = Vec::new();
        for (k, &s) in sv.iter().enumerate() {
            if top == 0.0 || s * s <= tol.eps_rank * top * top {
                continue;
            }
            let col: Vec<C64> = u.column(k).iter().cloned().collect();
            let phase = vector_phase(&col);
            let v = u.column(k).into_owned() * (phase * s);
            kraus.push(unvec(&v, m, n)?);
        }
        if kraus.is_empty() {
            return Err(Error::Validation("channel has zero Choi matrix".into()));
        }
        KrausChannel::new_unchecked(kraus)
    }

    /// Rank of the Choi matrix (eigenvalue cutoff `eps_rank`).
    pub fn choi_rank(&self, tol: &Tolerance) -> Result<usize> {
        Ok(self.minimized(tol)?.kraus.len())
    }

    /// The adjoint map `Φ*`, with Kraus operators `A_k*`. Not trace
    /// preserving unless `Φ` is unital.
    pub fn adjoint(&self) -> KrausChannel {
        KrausChannel {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            kraus: self.kraus.iter().map(|a| a.adjoint()).collect(),
        }
    }

    /// `self ∘ inner`, i.e. `X ↦ self(inner(X))`.
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if inner.dim_out != self.dim_in {
            return arg(format!(
                "cannot compose: inner output {} != outer input {}",
                inner.dim_out, self.dim_in
            ));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| inner.kraus.iter().map(move |b| a * b))
            .collect();
        KrausChannel::new_unchecked(kraus)
    }

    /// `X ↦ U Φ(V X V*) U*`.
    pub fn conjugated(&self, u: &CMatrix, v: &CMatrix) -> Result<KrausChannel> {
        if u.shape() != (self.dim_out, self.dim_out) || v.shape() != (self.dim_in, self.dim_in) {
            return arg("conjugating unitaries have the wrong shape");
        }
        KrausChannel::new_unchecked(self.kraus.iter().map(|a| u * a * v).collect())
    }

    /// Kraus list `B_k = Σ_j W(k,j) A_j` for an isometry `W` with
    /// `len(self)` columns; describes the same map.
    pub fn rotated(&self, w: &CMatrix) -> Result<KrausChannel> {
        if w.ncols() != self.kraus.len() {
            return arg(format!(
                "rotation has {} columns, channel has {} Kraus operators",
                w.ncols(),
                self.kraus.len()
            ));
        }
        let kraus = (0..w.nrows())
            .map(|k| {
                let mut b = CMatrix::zeros(self.dim_out, self.dim_in);
                for (j, a) in self.kraus.iter().enumerate() {
                    b += a * w[(k, j)];
                }
                b
            })
            .collect();
        KrausChannel::new_unchecked(kraus)
    }
}

/// Choi matrix `J(Φ)` with output⊗input index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    /// Validated constructor: Hermitian, PSD within `eps_rank`, and the
    /// partial trace over the output equals `𝟙`.
    pub fn new(dim_in: usize, dim_out: usize, matrix: CMatrix, tol: &Tolerance) -> Result<Self> {
        let j = Self::new_unchecked(dim_in, dim_out, matrix)?;
        let herm = (&j.matrix - j.matrix.adjoint()).norm();
        if herm > tol.eps_eq * j.matrix.norm().max(1.0) {
            return Err(Error::Validation(format!(
                "Choi matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let (vals, _) = hermitian_eigen(&j.matrix)?;
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let low = *vals.last().expect("nonempty");
        if low < -tol.eps_rank * top {
            return Err(Error::Validation(format!(
                "Choi matrix is not positive semidefinite: eigenvalue {low:.3e}"
            )));
        }
        let tp = (j.partial_trace_output() - identity(dim_in)).norm();
        if tp > tol.eps_eq {
            return Err(Error::Validation(format!(
                "partial trace over the output differs from identity by {tp:.3e}"
            )));
        }
        Ok(j)
    }

    pub fn new_unchecked(dim_in: usize, dim_out: usize, matrix: CMatrix) -> Result<Self> {
        let d = dim_in * dim_out;
        if dim_in == 0 || dim_out == 0 || matrix.shape() != (d, d) {
            return arg(format!(
                "Choi matrix for {dim_in}->{dim_out} must be {d}x{d}, got {:?}",
                matrix.shape()
            ));
        }
        linalg::check_finite(&matrix)?;
        Ok(ChoiMatrix {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr_out J`, an `n × n` matrix equal to `(Σ A*A)ᵀ`.
    pub fn partial_trace_output(&self) -> CMatrix {
        let (n, m) = (self.dim_in, self.dim_out);
        CMatrix::from_fn(n, n, |b, d| {
            (0..m).map(|a| self.matrix[(a * n + b, a * n + d)]).sum()
        })
    }
}

/// `J(Φ) = Σ_k vec(A_k) vec(A_k)*`.
pub fn choi_of(phi: &KrausChannel) -> ChoiMatrix {
    let d = phi.dim_in * phi.dim_out;
    let mut j = CMatrix::zeros(d, d);
    for a in &phi.kraus {
        let v = vec(a);
        j += &v * v.adjoint();
    }
    ChoiMatrix {
        dim_in: phi.dim_in,
        dim_out: phi.dim_out,
        matrix: j,
    }
}

/// Minimal Kraus list from the Choi eigenpairs, `A_k = unvec(√λ_k v_k)`,
/// ordered by decreasing eigenvalue with each eigenvector's largest entry
/// made real positive.
pub fn minimal_kraus(j: &ChoiMatrix, tol: &Tolerance) -> Result<KrausChannel> {
    let (vals, vecs) = hermitian_eigen(&j.matrix)?;
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Err(Error::Validation("Choi matrix is zero".into()));
    }
    let low = *vals.last().expect("nonempty");
    if low < -tol.eps_rank * top {
        return Err(Error::Validation(format!(
            "Choi matrix is not positive semidefinite: eigenvalue {low:.3e}"
        )));
    }
    let mut kraus = Vec::new();
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda <= tol.eps_rank * top {
            break;
        }
        let col: Vec<C64> = vecs.column(k).iter().cloned().collect();
        let v = vecs.column(k).into_owned() * (vector_phase(&col) * lambda.sqrt());
        kraus.push(unvec(&v, j.dim_out, j.dim_in)?);
    }
    KrausChannel::new(kraus, tol)
}

/// `Σ A_k X A_k*`.
pub fn apply(phi: &KrausChannel, x: &CMatrix) -> Result<CMatrix> {
    phi.apply(x)
}

/// Complementary channel `Ψ: M_n → M_r` of the minimized Kraus list,
/// `Ψ(X)[(j,k)] = Tr(A_j X A_k*) = ⟨A_j* A_k, X⟩`.
///
/// With this orientation, `(V Ψ(X) V*)[(j,j)] = Tr(C_j* C_j X)` for
/// `C_j = Σ_k V(j,k) A_k`, which is what the isometry search relies on.
pub fn complementary(phi: &KrausChannel, tol: &Tolerance) -> Result<KrausChannel> {
    complementary_of_list(&phi.minimized(tol)?)
}

/// Complementary channel built from exactly the given Kraus list (no
/// minimization). Its output dimension is the list length.
pub fn complementary_of_list(phi: &KrausChannel) -> Result<KrausChannel> {
    let r = phi.kraus.len();
    let (m, n) = (phi.dim_out, phi.dim_in);
    let kraus = (0..m)
        .map(|a| CMatrix::from_fn(r, n, |j, b| phi.kraus[j][(a, b)]))
        .collect();
    KrausChannel::new_unchecked(kraus)
}

/// Orthonormal basis of the operator system `S_Φ = span{A_k* A_j}`.
#[derive(Debug, Clone)]
pub struct OperatorSystemBasis {
    pub dim: usize,
    pub basis: Vec<CMatrix>,
}

impl OperatorSystemBasis {
    /// `s = dim(S_Φ)`.
    pub fn s(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b in &self.basis {
            out += b * inner(b, x);
        }
        out
    }
}

pub fn operator_system(phi: &KrausChannel, tol: &Tolerance) -> Result<OperatorSystemBasis> {
    let min = phi.minimized(tol)?;
    operator_system_of_list(&min, tol)
}

/// Operator system of a Kraus list without minimizing it first (the span is
/// the same for every Kraus representation).
pub fn operator_system_of_list(
    phi: &KrausChannel,
    tol: &Tolerance,
) -> Result<OperatorSystemBasis> {
    let n = phi.dim_in;
    let mut products = Vec::with_capacity(phi.kraus.len().pow(2));
    for ak in &phi.kraus {
        let akh = ak.adjoint();
        for aj in &phi.kraus {
            products.push(&akh * aj);
        }
    }
    let basis = span_basis(&products, n, n, tol)?;
    Ok(OperatorSystemBasis { dim: n, basis })
}

/// `Φ ⊕ Ψ` acting on block matrices, with Kraus list
/// `{A_i ⊕ 0} ∪ {0 ⊕ B_j}`.
pub fn direct_sum(phi: &KrausChannel, psi: &KrausChannel) -> Result<KrausChannel> {
    if !phi.is_square() || !psi.is_square() {
        return arg("direct sums are defined for maps M_n -> M_n");
    }
    let (n, m) = (phi.dim_in, psi.dim_in);
    let zero_n = CMatrix::zeros(n, n);
    let zero_m = CMatrix::zeros(m, m);
    let kraus = phi
        .kraus
        .iter()
        .map(|a| linalg::dirsum(a, &zero_m))
        .chain(psi.kraus.iter().map(|b| linalg::dirsum(&zero_n, b)))
        .collect();
    KrausChannel::new_unchecked(kraus)
}

/// Checks that `c` is a correlation matrix: Hermitian, unit diagonal, PSD.
pub fn validate_correlation(c: &CMatrix, tol: &Tolerance) -> Result<()> {
    if !c.is_square() {
        return Err(Error::Validation(format!(
            "correlation matrix must be square, got {:?}",
            c.shape()
        )));
    }
    linalg::check_finite(c)?;
    let herm = (c - c.adjoint()).norm();
    if herm > tol.eps_eq * c.norm().max(1.0) {
        return Err(Error::Validation(format!(
            "correlation matrix is not Hermitian (defect {herm:.3e})"
        )));
    }
    for i in 0..c.nrows() {
        let d = c[(i, i)] - C64::new(1.0, 0.0);
        if d.norm() > tol.eps_eq {
            return Err(Error::Validation(format!(
                "diagonal entry {i} is {} (expected 1)",
                c[(i, i)]
            )));
        }
    }
    let (vals, _) = hermitian_eigen(c)?;
    let top = vals[0].abs().max(vals.last().unwrap().abs());
    let low = *vals.last().unwrap();
    if low < -tol.eps_rank * top {
        return Err(Error::Validation(format!(
            "correlation matrix is not positive semidefinite: eigenvalue {low:.3e}"
        )));
    }
    Ok(())
}

/// Schur channel `X ↦ C ⊙ X` with diagonal Kraus operators
/// `diag(√λ_k v_k)` from the eigen-decomposition of `C`.
pub fn schur_channel(c: &CMatrix, tol: &Tolerance) -> Result<KrausChannel> {
    validate_correlation(c, tol)?;
    let (vals, vecs) = hermitian_eigen(c)?;
    let top = vals[0];
    let n = c.nrows();
    let mut kraus = Vec::new();
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda <= tol.eps_rank * top {
            break;
        }
        let col: Vec<C64> = vecs.column(k).iter().cloned().collect();
        let phase = vector_phase(&col) * lambda.sqrt();
        let d: Vec<C64> = col.iter().map(|z| z * phase).collect();
        kraus.push(linalg::diag(&d));
    }
    let ch = KrausChannel::new_unchecked(kraus)?;
    debug_assert_eq!(ch.dim_in, n);
    let defect = ch.trace_preservation_defect();
    if defect > tol.eps_eq.max(n as f64 * tol.eps_rank * top) {
        return Err(Error::Validation(format!(
            "Schur channel is not trace preserving (defect {defect:.3e})"
        )));
    }
    Ok(ch)
}
