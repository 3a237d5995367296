//! Mixed-unitary decompositions: verification, rank bounds from the
//! operator-system dimension, the uniqueness certificate and its gap
//! construction, equivalence of decompositions, and Schur-equivalence.

use serde::Serialize;

use crate::channels::{self, KrausChannel};
use crate::error::{arg, Error, Result};
use crate::linalg::{
    self, c, complement_basis, fix_matrix_phase, hermitian_eigen, identity, inner, unitarity_defect,
    vec, CMatrix, C64, Tolerance,
};
use crate::search::traceless_image_basis;

/// `Φ(X) = Σ p_k U_k X U_k*`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedUnitaryDecomposition {
    dim: usize,
    probs: Vec<f64>,
    unitaries: Vec<CMatrix>,
}

impl MixedUnitaryDecomposition {
    /// Validated constructor. Terms with weight below `eps_eq` are dropped;
    /// the remaining weights must sum to 1 and every `U_k` must be unitary
    /// within `eps_eq`.
    pub fn new(probs: Vec<f64>, unitaries: Vec<CMatrix>, tol: &Tolerance) -> Result<Self> {
        let raw = Self::new_unchecked(probs, unitaries)?;
        let mut probs = Vec::new();
        let mut unitaries = Vec::new();
        for (p, u) in raw.probs.into_iter().zip(raw.unitaries) {
            if p < -tol.eps_eq {
                return Err(Error::Validation(format!("negative weight {p:.3e}")));
            }
            if p >= tol.eps_eq {
                probs.push(p);
                unitaries.push(u);
            }
        }
        let d = MixedUnitaryDecomposition {
            dim: raw.dim,
            probs,
            unitaries,
        };
        if d.probs.is_empty() {
            return Err(Error::Validation("all weights are below eps_eq".into()));
        }
        d.check_invariants(tol)?;
        Ok(d)
    }

    /// Shapes and lengths only; invariants are left to
    /// [`verify_decomposition`].
    pub fn new_unchecked(probs: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        if probs.is_empty() || probs.len() != unitaries.len() {
            return arg(format!(
                "need matching nonempty weights and unitaries, got {} and {}",
                probs.len(),
                unitaries.len()
            ));
        }
        let dim = unitaries[0].nrows();
        for (k, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return arg(format!("unitary {k} has shape {:?}, expected {dim}x{dim}", u.shape()));
            }
            linalg::check_finite(u)?;
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite()) {
            return arg(format!("non-finite weight {p}"));
        }
        Ok(MixedUnitaryDecomposition {
            dim,
            probs,
            unitaries,
        })
    }

    fn check_invariants(&self, tol: &Tolerance) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > tol.eps_eq {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        if let Some(p) = self.probs.iter().find(|&&p| p < 0.0) {
            return Err(Error::Validation(format!("negative weight {p:.3e}")));
        }
        for (k, u) in self.unitaries.iter().enumerate() {
            let defect = unitarity_defect(u);
            if defect > tol.eps_eq {
                return Err(Error::Validation(format!(
                    "term {k} is not unitary (defect {defect:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// Kraus list `√p_k U_k`.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        KrausChannel::new_unchecked(
            self.probs
                .iter()
                .zip(&self.unitaries)
                .map(|(&p, u)| u * c(p.max(0.0).sqrt(), 0.0))
                .collect(),
        )
    }

    /// `Σ p_k vec(U_k) vec(U_k)*`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim * self.dim;
        let mut j = CMatrix::zeros(d, d);
        for (&p, u) in self.probs.iter().zip(&self.unitaries) {
            let v = vec(u);
            j += (&v * v.adjoint()) * c(p, 0.0);
        }
        j
    }
}

/// Outcome of [`verify_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub ok: bool,
    /// `‖J(Φ) − Σ p_k vec(U_k)vec(U_k)*‖_F`.
    pub choi_residual: f64,
    /// `choi_residual / ‖J(Φ)‖_F`.
    pub relative_residual: f64,
}

/// Checks `Φ = Σ p_k U_k · U_k*` on Choi matrices together with the
/// decomposition's own invariants (weights, unitarity).
pub fn verify_decomposition(
    phi: &KrausChannel,
    d: &MixedUnitaryDecomposition,
    tol: &Tolerance,
) -> Result<Verification> {
    if !phi.is_square() || phi.dim_in() != d.dim {
        return arg(format!(
            "decomposition acts on M_{} but the channel maps M_{} -> M_{}",
            d.dim,
            phi.dim_in(),
            phi.dim_out()
        ));
    }
    let j = phi.choi();
    let norm = j.matrix().norm();
    let choi_residual = (j.matrix() - d.choi()).norm();
    let relative_residual = if norm > 0.0 { choi_residual / norm } else { choi_residual };
    let ok = relative_residual <= tol.eps_eq && d.check_invariants(tol).is_ok();
    Ok(Verification {
        ok,
        choi_residual,
        relative_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankFlags {
    pub extremal: bool,
    pub schur_equivalent: bool,
    pub unique_decomposition_certified: bool,
}

/// Bounds on the mixed-unitary rank `N` of a unital channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankBoundsReport {
    /// Choi rank.
    pub r: usize,
    /// Operator-system dimension.
    pub s: usize,
    pub lower: usize,
    pub upper: usize,
    /// Set only when `N` is pinned exactly.
    pub exact: Option<usize>,
    pub flags: RankFlags,
}

/// Choi rank `r` and operator-system dimension `s`.
pub fn channel_ranks(phi: &KrausChannel, tol: &Tolerance) -> Result<(usize, usize)> {
    let min = phi.minimized(tol)?;
    let os = channels::operator_system_of_list(&min, tol)?;
    Ok((min.kraus().len(), os.s()))
}

fn require_unital(phi: &KrausChannel, tol: &Tolerance, what: &str) -> Result<()> {
    if !phi.is_square() {
        return Err(Error::Refusal(format!(
            "{what} needs a map M_n -> M_n, got M_{} -> M_{}",
            phi.dim_in(),
            phi.dim_out()
        )));
    }
    let defect = phi.unitality_defect();
    if defect > tol.eps_eq {
        return Err(Error::Refusal(format!(
            "{what} needs a unital channel (mixed-unitary channels are unital); ‖Φ(𝟙) − 𝟙‖_F = {defect:.3e}"
        )));
    }
    Ok(())
}

/// `lower = r`, `upper = min(r²−s+1, r²−r+1)` (at most 6 when `r = 3`),
/// with `exact = r` when `s ≤ 3`, when `r ≤ 2`, or when the bounds meet.
///
/// Refuses non-unital input, and input whose bound `r²−s+1` falls below `r`
/// (such a channel is not mixed unitary; this includes every extremal
/// channel with `r ≥ 2`).
pub fn rank_bounds(phi: &KrausChannel, tol: &Tolerance) -> Result<RankBoundsReport> {
    require_unital(phi, tol, "rank bounds")?;
    let (r, s) = channel_ranks(phi, tol)?;
    let os_bound = (r * r + 1).saturating_sub(s);
    if os_bound < r {
        return Err(Error::Refusal(format!(
            "not mixed unitary: r = {r}, s = {s} gives r² − s + 1 = {os_bound} < r"
        )));
    }
    let mut upper = os_bound.min(r * r - r + 1);
    if r == 3 {
        upper = upper.min(6);
    }
    let exact = if s <= 3 || r <= 2 || upper == r {
        Some(r)
    } else {
        None
    };
    let flags = RankFlags {
        extremal: s == r * r,
        schur_equivalent: operator_system_commutes(phi, tol)?,
        unique_decomposition_certified: s == r * r - r + 1,
    };
    Ok(RankBoundsReport {
        r,
        s,
        lower: r,
        upper,
        exact,
        flags,
    })
}

/// `s = r² − r + 1`, which certifies a unique decomposition with `N = r`
/// for unital channels.
pub fn uniqueness_certificate(phi: &KrausChannel, tol: &Tolerance) -> Result<bool> {
    let (r, s) = channel_ranks(phi, tol)?;
    Ok(s == r * r - r + 1)
}

/// Recovers the unique `r`-term decomposition of a certified channel.
///
/// The traceless image `𝓑 = Ψ(𝟙^⊥)` has an `r`-dimensional orthogonal
/// complement spanned by the rank-one projections `w_j w_j*` onto the rows of
/// the sought isometry; a generic Hermitian element of that complement has
/// the `w_j` as its eigenvectors.
pub fn unique_decomposition(
    phi: &KrausChannel,
    tol: &Tolerance,
) -> Result<MixedUnitaryDecomposition> {
    require_unital(phi, tol, "unique decomposition")?;
    let min = phi.minimized(tol)?;
    let r = min.kraus().len();
    let n = min.dim_in();
    let os = channels::operator_system_of_list(&min, tol)?;
    if os.s() != r * r - r + 1 {
        return Err(Error::Refusal(format!(
            "uniqueness certificate fails: s = {} but r² − r + 1 = {}",
            os.s(),
            r * r - r + 1
        )));
    }
    if r == 1 {
        let u = fix_matrix_phase(&min.kraus()[0]);
        return MixedUnitaryDecomposition::new(vec![1.0], vec![u], tol);
    }
    let psi = channels::complementary_of_list(&min)?;
    let image = traceless_image_basis(&psi, tol)?;
    let perp = complement_basis(&image, r, r)?;
    if perp.len() != r {
        return Err(Error::Numerical(format!(
            "complement of the traceless image has dimension {} (expected {r})",
            perp.len()
        )));
    }
    let mut herm_parts = Vec::with_capacity(2 * r);
    for b in &perp {
        herm_parts.push((b + b.adjoint()) * c(0.5, 0.0));
        herm_parts.push((b - b.adjoint()) * c(0.0, -0.5));
    }
    let mut rng = linalg::rng_from_seed(0x6d75_6368);
    for _attempt in 0..16 {
        let coeffs = linalg::gaussian_matrix(herm_parts.len(), 1, &mut rng);
        let mut h = CMatrix::zeros(r, r);
        for (k, part) in herm_parts.iter().enumerate() {
            h += part * c(coeffs[(k, 0)].re, 0.0);
        }
        let (vals, vecs) = hermitian_eigen(&h)?;
        let spread = vals[0] - vals[r - 1];
        let gap = vals.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        if spread == 0.0 || gap < 1e-6 * spread {
            continue;
        }
        let mut probs = Vec::with_capacity(r);
        let mut unitaries = Vec::with_capacity(r);
        for j in 0..r {
            let mut cj = CMatrix::zeros(n, n);
            for (k, a) in min.kraus().iter().enumerate() {
                cj += a * vecs[(k, j)].conj();
            }
            let p = cj.norm_squared() / n as f64;
            probs.push(p);
            unitaries.push(fix_matrix_phase(&(cj / c(p.sqrt(), 0.0))));
        }
        let d = MixedUnitaryDecomposition::new_unchecked(probs, unitaries)?;
        let check = verify_decomposition(phi, &d, tol)?;
        if !check.ok {
            return Err(Error::Numerical(format!(
                "recovered decomposition misses the channel (residual {:.3e})",
                check.choi_residual
            )));
        }
        return MixedUnitaryDecomposition::new(d.probs, d.unitaries, tol);
    }
    Err(Error::Numerical(
        "no Hermitian element with simple spectrum found in the complement".into(),
    ))
}

/// Certified ranks of `Φ ⊕ id_m` for a channel with a unique decomposition.
#[derive(Debug, Clone)]
pub struct GapCertificate {
    pub choi_rank: usize,
    pub mu_rank: usize,
    pub channel: KrausChannel,
    pub decomposition: MixedUnitaryDecomposition,
    pub verification: Verification,
}

/// For `Φ` with `s = r² − r + 1` and `r ≥ 2`, the direct sum with the
/// identity channel on `M_m` has Choi rank `r + 1` and mixed-unitary rank
/// `2r`, witnessed by `{U_k ⊕ 𝟙_m, U_k ⊕ (−𝟙_m)}` at weights `p_k/2`.
pub fn certified_gap_rank(phi: &KrausChannel, m: usize, tol: &Tolerance) -> Result<GapCertificate> {
    if m == 0 {
        return arg("block size m must be positive");
    }
    require_unital(phi, tol, "gap certificate")?;
    let (r, s) = channel_ranks(phi, tol)?;
    if r < 2 {
        return Err(Error::Refusal(
            "gap certificate needs Choi rank r >= 2 (r = 1 is outside the certificate)".into(),
        ));
    }
    if s != r * r - r + 1 {
        return Err(Error::Refusal(format!(
            "uniqueness certificate fails: s = {s} but r² − r + 1 = {}",
            r * r - r + 1
        )));
    }
    let base = unique_decomposition(phi, tol)?;
    let channel = channels::direct_sum(phi, &KrausChannel::identity(m))?;
    let plus = identity(m);
    let minus = identity(m) * c(-1.0, 0.0);
    let mut probs = Vec::with_capacity(2 * r);
    let mut unitaries = Vec::with_capacity(2 * r);
    for (&p, u) in base.probs().iter().zip(base.unitaries()) {
        for block in [&plus, &minus] {
            probs.push(p / 2.0);
            unitaries.push(linalg::dirsum(u, block));
        }
    }
    let decomposition = MixedUnitaryDecomposition::new(probs, unitaries, tol)?;
    let verification = verify_decomposition(&channel, &decomposition, tol)?;
    if !verification.ok {
        return Err(Error::Numerical(format!(
            "gap decomposition residual {:.3e} above tolerance",
            verification.choi_residual
        )));
    }
    Ok(GapCertificate {
        choi_rank: r + 1,
        mu_rank: 2 * r,
        channel,
        decomposition,
        verification,
    })
}

/// `|Tr(U*V)| ≥ n − n·eps`: phase equivalence of unitaries.
pub fn phase_equivalent(u: &CMatrix, v: &CMatrix, eps: f64) -> bool {
    let n = u.nrows() as f64;
    u.shape() == v.shape() && inner(u, v).norm() >= n - n * eps
}

/// Merges phase-equivalent terms, keeping the first representative.
fn grouped(d: &MixedUnitaryDecomposition, eps: f64) -> (Vec<f64>, Vec<CMatrix>) {
    let mut probs: Vec<f64> = Vec::new();
    let mut reps: Vec<CMatrix> = Vec::new();
    for (&p, u) in d.probs.iter().zip(&d.unitaries) {
        match reps.iter().position(|v| phase_equivalent(v, u, eps)) {
            Some(i) => probs[i] += p,
            None => {
                probs.push(p);
                reps.push(u.clone());
            }
        }
    }
    (probs, reps)
}

/// Whether two decompositions agree up to phases of the unitaries and
/// regrouping of equal terms.
pub fn decompositions_equivalent(
    d1: &MixedUnitaryDecomposition,
    d2: &MixedUnitaryDecomposition,
    tol: &Tolerance,
) -> bool {
    if d1.dim != d2.dim {
        return false;
    }
    let eps = tol.eps_eq;
    let (p1, u1) = grouped(d1, eps);
    let (p2, u2) = grouped(d2, eps);
    if p1.len() != p2.len() {
        return false;
    }
    let mut used = vec![false; u1.len()];
    for (q, v) in p2.iter().zip(&u2) {
        // Best overlap among unused representatives, ties to the lower index.
        let mut best: Option<(usize, f64)> = None;
        for (k, u) in u1.iter().enumerate() {
            if used[k] {
                continue;
            }
            let ov = inner(u, v).norm();
            if best.is_none_or(|(_, b)| ov > b) {
                best = Some((k, ov));
            }
        }
        let Some((k, _)) = best else { return false };
        if !phase_equivalent(&u1[k], v, eps) || (p1[k] - q).abs() > eps {
            return false;
        }
        used[k] = true;
    }
    true
}

/// Outcome of [`schur_equivalence_check`]. When equivalent, the witnesses
/// `(U, V)` make `X ↦ UΦ(VXV*)U*` a Schur map.
#[derive(Debug, Clone)]
pub struct SchurEquivalence {
    pub equivalent: bool,
    pub witnesses: Option<(CMatrix, CMatrix)>,
    /// Largest normalized commutator over operator-system basis pairs.
    pub max_commutator: f64,
}

fn max_commutator(basis: &[CMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for b in &basis[i + 1..] {
            let scale = a.norm() * b.norm();
            if scale > 0.0 {
                worst = worst.max((a * b - b * a).norm() / scale);
            }
        }
    }
    worst
}

fn operator_system_commutes(phi: &KrausChannel, tol: &Tolerance) -> Result<bool> {
    let os = channels::operator_system(phi, tol)?;
    Ok(max_commutator(&os.basis) <= tol.eps_eq)
}

/// Tests whether `Φ` is unitarily equivalent to a Schur channel, i.e. whether
/// its operator system is commutative, and if so constructs the witnesses
/// `(U, V)` and checks that `UΦ(V E_kk V*)U* = E_kk` for all `k`.
pub fn schur_equivalence_check(phi: &KrausChannel, tol: &Tolerance) -> Result<SchurEquivalence> {
    if !phi.is_square() {
        return arg("Schur equivalence needs a map M_n -> M_n");
    }
    let n = phi.dim_in();
    let os = channels::operator_system(phi, tol)?;
    let worst = max_commutator(&os.basis);
    if worst > tol.eps_eq {
        return Ok(SchurEquivalence {
            equivalent: false,
            witnesses: None,
            max_commutator: worst,
        });
    }
    // A generic Hermitian element of the commutative *-algebra has the joint
    // eigenvectors of the family as its eigenvectors.
    let mut rng = linalg::rng_from_seed(0x7363_6875);
    let coeffs = linalg::gaussian_matrix(os.basis.len(), 2, &mut rng);
    let mut h = CMatrix::zeros(n, n);
    for (k, b) in os.basis.iter().enumerate() {
        h += (b + b.adjoint()) * c(coeffs[(k, 0)].re, 0.0);
        h += (b - b.adjoint()) * c(0.0, coeffs[(k, 1)].re);
    }
    let (_, v) = hermitian_eigen(&h)?;
    let diag_defect = os
        .basis
        .iter()
        .map(|b| {
            let mut d = v.adjoint() * b * &v;
            for k in 0..n {
                d[(k, k)] = C64::new(0.0, 0.0);
            }
            d.norm()
        })
        .fold(0.0, f64::max);
    if diag_defect > tol.eps_eq.sqrt() {
        return Err(Error::Numerical(format!(
            "commuting operator system did not diagonalize (off-diagonal {diag_defect:.3e})"
        )));
    }
    let mut u = CMatrix::zeros(n, n);
    for k in 0..n {
        let vk = v.column(k).into_owned();
        let pk = phi.apply(&(&vk * vk.adjoint()))?;
        let (_, xs) = hermitian_eigen(&pk)?;
        let x = xs.column(0);
        for j in 0..n {
            u[(k, j)] = x[j].conj();
        }
    }
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let vk = v.column(k).into_owned();
        let out = &u * phi.apply(&(&vk * vk.adjoint()))? * u.adjoint();
        residual = residual.max((out - linalg::unit(n, n, k, k)).norm());
    }
    let threshold = tol.eps_eq.sqrt().max(1e-8);
    if residual > threshold || unitarity_defect(&u) > threshold {
        return Err(Error::Numerical(format!(
            "operator system commutes but the Schur witnesses miss by {residual:.3e}"
        )));
    }
    Ok(SchurEquivalence {
        equivalent: true,
        witnesses: Some((u, v)),
        max_commutator: worst,
    })
}
