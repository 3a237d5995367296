//! Constructive decompositions: unitary conjugation to a zero diagonal,
//! the `s ≤ 3` decomposer (Kraus rotation making every unitary combination
//! appear), and small toroidal decompositions of correlation matrices.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channels::{self, KrausChannel};
use crate::error::{arg, Error, Result};
use crate::lapack;
use crate::linalg::{
    self, c, dirsum, fix_matrix_phase, haar_unitary, identity, trace, unitarity_defect, CMatrix,
    CVector, C64, Tolerance,
};
use crate::mu_analysis::{verify_decomposition, MixedUnitaryDecomposition};

/// Relative diagonal residual required of [`zero_diagonal_unitary`].
const ZERO_DIAG_TARGET: f64 = 1e-8;
/// Choi residual required of [`decompose_low_dim`].
const LOW_DIM_RESIDUAL: f64 = 1e-8;
const FALLBACK_RESTARTS: usize = 64;
const FALLBACK_ITERS: usize = 500;

/// `C = Σ p_k u_k u_k*` with every entry of every `u_k` of modulus one.
#[derive(Debug, Clone, PartialEq)]
pub struct ToroidalDecomposition {
    dim: usize,
    probs: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

impl ToroidalDecomposition {
    /// Validates weights (nonnegative, summing to 1) and unimodularity within
    /// `eps_eq`; terms with weight below `eps_eq` are dropped.
    pub fn new(probs: Vec<f64>, vectors: Vec<Vec<C64>>, tol: &Tolerance) -> Result<Self> {
        if probs.is_empty() || probs.len() != vectors.len() {
            return arg(format!(
                "need matching nonempty weights and vectors, got {} and {}",
                probs.len(),
                vectors.len()
            ));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return arg("vectors must be nonempty");
        }
        let mut kept_p = Vec::new();
        let mut kept_v = Vec::new();
        for (k, (p, v)) in probs.into_iter().zip(vectors).enumerate() {
            if v.len() != dim {
                return arg(format!("vector {k} has length {}, expected {dim}", v.len()));
            }
            if !p.is_finite() || p < -tol.eps_eq {
                return Err(Error::Validation(format!("invalid weight {p} for term {k}")));
            }
            if let Some(z) = v.iter().find(|z| (z.norm() - 1.0).abs() > tol.eps_eq) {
                return Err(Error::Validation(format!(
                    "vector {k} has an entry of modulus {} (expected 1)",
                    z.norm()
                )));
            }
            if p >= tol.eps_eq {
                kept_p.push(p);
                kept_v.push(v);
            }
        }
        let total: f64 = kept_p.iter().sum();
        if kept_p.is_empty() || (total - 1.0).abs() > tol.eps_eq {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        Ok(ToroidalDecomposition {
            dim,
            probs: kept_p,
            vectors: kept_v,
        })
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

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// `Σ p_k u_k u_k*`.
    pub fn correlation(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (&p, v) in self.probs.iter().zip(&self.vectors) {
            let u = CVector::from_column_slice(v);
            m += (&u * u.adjoint()) * c(p, 0.0);
        }
        m
    }

    /// The same decomposition as diagonal unitaries `diag(u_k)`.
    pub fn to_mixed_unitary(&self, tol: &Tolerance) -> Result<MixedUnitaryDecomposition> {
        MixedUnitaryDecomposition::new(
            self.probs.clone(),
            self.vectors.iter().map(|v| linalg::diag(v)).collect(),
            tol,
        )
    }
}

/// Converts a decomposition into diagonal unitaries (such as any
/// decomposition of a Schur channel) into toroidal vectors, normalized so
/// that `u_k(0) = 1`.
pub fn toroidal_from_decomposition(
    d: &MixedUnitaryDecomposition,
    tol: &Tolerance,
) -> Result<ToroidalDecomposition> {
    let n = d.dim();
    let mut vectors = Vec::with_capacity(d.len());
    for (k, u) in d.unitaries().iter().enumerate() {
        let mut off = u.clone();
        for j in 0..n {
            off[(j, j)] = C64::new(0.0, 0.0);
        }
        if off.norm() > 1e-6 {
            return Err(Error::Numerical(format!(
                "term {k} is not diagonal (off-diagonal mass {:.3e})",
                off.norm()
            )));
        }
        let ref_phase = u[(0, 0)].conj() / u[(0, 0)].norm();
        let v: Vec<C64> = (0..n)
            .map(|j| {
                let z = u[(j, j)] * ref_phase;
                z / z.norm()
            })
            .collect();
        vectors.push(v);
    }
    ToroidalDecomposition::new(d.probs().to_vec(), vectors, tol)
}

// ---------------------------------------------------------------------------
// Zero-diagonal conjugation

/// `x* Z y`.
fn form(z: &CMatrix, x: &CVector, y: &CVector) -> C64 {
    x.dotc(&(z * y))
}

/// Given orthonormal `x1, x2` whose values `a_i = x_i* Z x_i` lie on opposite
/// sides of 0 on a common line, returns a unit vector in their span with
/// `v* Z v = 0`.
fn two_point(z: &CMatrix, x1: &CVector, x2: &CVector, tiny: f64) -> CVector {
    let a1 = form(z, x1, x1);
    let a2 = form(z, x2, x2);
    if a1.norm() <= tiny {
        return x1.clone();
    }
    if a2.norm() <= tiny {
        return x2.clone();
    }
    // Rotate so the two values are real with a1 > 0 > a2.
    let s = a1.conj() / a1.norm();
    let k1 = (a1 * s).re;
    let k2 = (a2 * s).re;
    let k12 = form(z, x1, x2) * s;
    let k21 = form(z, x2, x1) * s;
    // Hermitian and anti-Hermitian parts of the off-diagonal entry.
    let h12 = (k12 + k21.conj()) * 0.5;
    let a12 = (k12 - k21.conj()) * C64::new(0.0, -0.5);
    // Choose φ so that the cross term e^{iφ}k12 + e^{-iφ}k21 is real.
    let phi = if a12.norm() > 0.0 {
        std::f64::consts::FRAC_PI_2 - a12.arg()
    } else {
        0.0
    };
    let e = C64::from_polar(1.0, phi);
    let b = 2.0 * (e * h12).re;
    let k2 = k2.min(-f64::MIN_POSITIVE);
    let disc = (b * b - 4.0 * k1 * k2).max(0.0);
    let t = (-b - disc.sqrt()) / (2.0 * k2);
    let w = x1 + x2 * (e * t);
    let norm = w.norm();
    w / c(norm, 0.0)
}

fn basis_vector(n: usize, i: usize) -> CVector {
    CVector::from_fn(n, |j, _| c(if i == j { 1.0 } else { 0.0 }, 0.0))
}

/// Barycentric coordinates of 0 in the triangle `(p1, p2, p3)`.
fn barycentric_zero(p1: C64, p2: C64, p3: C64) -> Option<[f64; 3]> {
    let cross = |a: C64, b: C64| a.re * b.im - a.im * b.re;
    let area = cross(p2 - p1, p3 - p1);
    if area.abs() < 1e-300 {
        return None;
    }
    let l1 = cross(p2, p3) / area;
    let l2 = cross(p3, p1) / area;
    let l3 = cross(p1, p2) / area;
    Some([l1, l2, l3])
}

/// Closed-form search for a unit `v` with `v* Z v = 0` using the diagonal
/// entries, whose convex hull contains 0 when `Tr Z = 0`.
fn closed_form_null_vector(z: &CMatrix, tiny: f64) -> Option<CVector> {
    let n = z.nrows();
    let d: Vec<C64> = (0..n).map(|i| z[(i, i)]).collect();
    if let Some(i) = (0..n).min_by(|&a, &b| d[a].norm().total_cmp(&d[b].norm())) {
        if d[i].norm() <= tiny {
            return Some(basis_vector(n, i));
        }
    }
    // A pair of diagonal entries on opposite sides of 0 along a line.
    let mut best_pair: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let prod = d[i] * d[j].conj();
            let scale = d[i].norm() * d[j].norm();
            let skew = prod.im.abs() / scale;
            if prod.re < 0.0 && skew < 1e-12 && best_pair.is_none_or(|(_, _, s)| skew < s) {
                best_pair = Some((i, j, skew));
            }
        }
    }
    if let Some((i, j, _)) = best_pair {
        return Some(two_point(z, &basis_vector(n, i), &basis_vector(n, j), tiny));
    }
    // Most interior triangle containing 0.
    let mut best: Option<([usize; 3], [f64; 3], f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if let Some(l) = barycentric_zero(d[i], d[j], d[k]) {
                    let m = l[0].min(l[1]).min(l[2]);
                    if m >= 0.0 && best.as_ref().is_none_or(|b| m > b.2) {
                        best = Some(([i, j, k], l, m));
                    }
                }
            }
        }
    }
    let ([i, j, k], _, _) = best?;
    let (p1, p2, p3) = (d[i], d[j], d[k]);
    // q on [p1, p2] collinear with 0 and p3.
    let denom = ((p2 - p1) * p3.conj()).im;
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = (-(p1 * p3.conj()).im / denom).clamp(0.0, 1.0);
    let q = p1 + (p2 - p1) * t;
    let shifted = z - identity(n) * q;
    let xq = two_point(&shifted, &basis_vector(n, i), &basis_vector(n, j), tiny);
    Some(two_point(z, &xq, &basis_vector(n, k), tiny))
}

/// Projected gradient descent on `|v* Z v|²` over the unit sphere.
fn fallback_null_vector(z: &CMatrix, seed: u64, tiny: f64) -> Option<CVector> {
    let n = z.nrows();
    let zh = z.adjoint();
    let results: Vec<(f64, CVector)> = (0..FALLBACK_RESTARTS)
        .into_par_iter()
        .map(|i| {
            let mut rng = linalg::rng_from_seed(seed.wrapping_add(i as u64));
            let g = linalg::gaussian_matrix(n, 1, &mut rng);
            let mut v: CVector = g.column(0).into_owned();
            v /= c(v.norm(), 0.0);
            let obj = |v: &CVector| form(z, v, v).norm_sqr();
            let mut f = obj(&v);
            let mut step = 0.5;
            for _ in 0..FALLBACK_ITERS {
                if f.sqrt() <= tiny {
                    break;
                }
                let d = form(z, &v, &v);
                let mut grad = (z * &v) * d.conj() + (&zh * &v) * d;
                grad *= c(2.0, 0.0);
                let radial = v.dotc(&grad);
                grad -= &v * radial;
                let g2 = grad.norm_squared();
                if g2 == 0.0 {
                    break;
                }
                let mut t = step;
                let mut moved = false;
                for _ in 0..50 {
                    let mut trial = &v - &grad * c(t, 0.0);
                    trial /= c(trial.norm(), 0.0);
                    let ft = obj(&trial);
                    if ft <= f - 1e-4 * t * g2 {
                        v = trial;
                        f = ft;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    break;
                }
                step = (t * 2.0).min(1e3);
            }
            (f, v)
        })
        .collect();
    results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(f, _)| f.sqrt() <= tiny * 1e3)
        .map(|(_, v)| v)
}

/// Unitary `W` with first column `v` (a phased Householder reflection).
fn complete_to_unitary(v: &CVector) -> CMatrix {
    let n = v.len();
    let omega = if v[0].norm() > 0.0 {
        v[0] / v[0].norm()
    } else {
        c(1.0, 0.0)
    };
    let x = v * omega.conj();
    let mut u = -x;
    u[0] += c(1.0, 0.0);
    let un = u.norm_squared();
    let h = if un < 1e-30 {
        identity(n)
    } else {
        identity(n) - (&u * u.adjoint()) * c(2.0 / un, 0.0)
    };
    h * omega
}

fn zero_diag_rec(z: &CMatrix, scale: f64, seed: u64) -> Result<CMatrix> {
    let n = z.nrows();
    if n == 1 {
        return Ok(identity(1));
    }
    let tiny = 1e-15 * scale;
    let v = match closed_form_null_vector(z, tiny) {
        Some(v) if form(z, &v, &v).norm() <= 1e-12 * scale => v,
        _ => fallback_null_vector(z, seed, tiny).ok_or_else(|| {
            Error::Numerical(format!(
                "no unit vector with vanishing quadratic form found in dimension {n}"
            ))
        })?,
    };
    let w = complete_to_unitary(&v);
    let b = w.adjoint() * z * &w;
    let mut sub = b.view((1, 1), (n - 1, n - 1)).into_owned();
    // Keep the trailing block exactly traceless.
    let drift = trace(&sub) / c((n - 1) as f64, 0.0);
    for i in 0..n - 1 {
        sub[(i, i)] -= drift;
    }
    let inner = zero_diag_rec(&sub, scale, seed.wrapping_add(1_000))?;
    Ok(dirsum(&identity(1), &inner) * w.adjoint())
}

/// Unitary `U` with `(U Z U*)(j,j) = 0` for all `j`, for traceless `Z`.
///
/// Deflation: find a unit `v` with `v* Z v = 0` (closed form from two or
/// three diagonal entries whose hull contains 0, with a projected-gradient
/// fallback), extend it to a unitary, and recurse on the trailing block.
pub fn zero_diagonal_unitary(z: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    if !z.is_square() || z.nrows() == 0 {
        return arg(format!("need a nonempty square matrix, got {:?}", z.shape()));
    }
    linalg::check_finite(z)?;
    let n = z.nrows();
    let scale = z.norm();
    if scale == 0.0 {
        return Ok(identity(n));
    }
    let tr = trace(z);
    if tr.norm() > tol.eps_eq * scale {
        return arg(format!("matrix is not traceless (trace {tr})"));
    }
    let mut z0 = z.clone();
    for i in 0..n {
        z0[(i, i)] -= tr / c(n as f64, 0.0);
    }
    let u = zero_diag_rec(&z0, scale, 0x7a64)?;
    let out = &u * z * u.adjoint();
    let worst = (0..n).map(|j| out[(j, j)].norm()).fold(0.0, f64::max);
    let defect = unitarity_defect(&u);
    if worst > ZERO_DIAG_TARGET * scale || defect > tol.eps_eq {
        return Err(Error::Numerical(format!(
            "zero-diagonal residual {worst:.3e}, unitarity defect {defect:.3e}"
        )));
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Low-dimensional operator systems

/// Orthonormal traceless Hermitian matrices spanning `S ∩ 𝟙^⊥` (real
/// orthonormalization of the Hermitian and anti-Hermitian parts).
fn traceless_hermitian_directions(
    basis: &[CMatrix],
    n: usize,
    tol: &Tolerance,
) -> Result<Vec<CMatrix>> {
    let mut parts = Vec::with_capacity(2 * basis.len());
    for b in basis {
        let t = trace(b) / c(n as f64, 0.0);
        let b0 = b - identity(n) * t;
        parts.push((&b0 + b0.adjoint()) * c(0.5, 0.0));
        parts.push((&b0 - b0.adjoint()) * c(0.0, -0.5));
    }
    let real = DMatrix::<f64>::from_fn(2 * n * n, parts.len(), |i, k| {
        let z = parts[k][((i / 2) / n, (i / 2) % n)];
        if i % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    let (u, sv) = lapack::real_svd(&real)?;
    let top = sv.first().copied().unwrap_or(0.0);
    let mut dirs = Vec::new();
    for k in 0..sv.len() {
        if top == 0.0 || sv[k] <= tol.eps_rank * top.max(1.0) {
            break;
        }
        if dirs.len() == 2 {
            return Err(Error::Refusal(format!(
                "operator system has more than two traceless Hermitian directions (singular value {:.3e})",
                sv[k]
            )));
        }
        let col = u.column(k);
        let m = CMatrix::from_fn(n, n, |a, b| {
            let i = 2 * (a * n + b);
            c(col[i], col[i + 1])
        });
        dirs.push((&m + m.adjoint()) * c(0.5, 0.0));
    }
    Ok(dirs)
}

/// `r`-term decomposition of a unital channel whose operator system has
/// dimension `s ≤ 3`.
///
/// With `S_Φ = span{𝟙, H, K}` for traceless Hermitian `H, K`, a unitary `U`
/// making `U(Ψ(H) + iΨ(K))U*` zero on the diagonal rotates the minimal Kraus
/// operators into multiples of unitaries, `B_k = Σ_j U(k,j) A_j`.
pub fn decompose_low_dim(phi: &KrausChannel, tol: &Tolerance) -> Result<MixedUnitaryDecomposition> {
    decompose_low_dim_inner(phi, tol, None)
}

/// As [`decompose_low_dim`], after first rotating the minimal Kraus list by
/// a Haar-random unitary drawn from `seed`. Different seeds exercise
/// different intermediate choices.
pub fn decompose_low_dim_seeded(
    phi: &KrausChannel,
    tol: &Tolerance,
    seed: u64,
) -> Result<MixedUnitaryDecomposition> {
    decompose_low_dim_inner(phi, tol, Some(seed))
}

fn decompose_low_dim_inner(
    phi: &KrausChannel,
    tol: &Tolerance,
    seed: Option<u64>,
) -> Result<MixedUnitaryDecomposition> {
    if !phi.is_square() {
        return Err(Error::Refusal("decomposition needs a map M_n -> M_n".into()));
    }
    let defect = phi.unitality_defect();
    if defect > tol.eps_eq {
        return Err(Error::Refusal(format!(
            "channel is not unital (‖Φ(𝟙) − 𝟙‖_F = {defect:.3e})"
        )));
    }
    let n = phi.dim_in();
    let mut min = phi.minimized(tol)?;
    let r = min.kraus().len();
    let os = channels::operator_system_of_list(&min, tol)?;
    if os.s() > 3 {
        return Err(Error::Refusal(format!(
            "operator system has dimension {} > 3",
            os.s()
        )));
    }
    if let Some(seed) = seed {
        min = min.rotated(&haar_unitary(r, seed)?)?;
    }
    let dirs = traceless_hermitian_directions(&os.basis, n, tol)?;
    let psi = channels::complementary_of_list(&min)?;
    let mut z = CMatrix::zeros(r, r);
    for (dir, coeff) in dirs.iter().zip([c(1.0, 0.0), c(0.0, 1.0)]) {
        z += psi.apply(dir)? * coeff;
    }
    let u = zero_diagonal_unitary(&z, tol)?;
    let rotated = min.rotated(&u)?;
    let mut probs = Vec::with_capacity(r);
    let mut unitaries = Vec::with_capacity(r);
    for (k, b) in rotated.kraus().iter().enumerate() {
        let p = b.norm_squared() / n as f64;
        let uk = b / c(p.sqrt(), 0.0);
        let defect = unitarity_defect(&uk);
        if defect > tol.eps_eq.max(LOW_DIM_RESIDUAL) {
            return Err(Error::Numerical(format!(
                "rotated Kraus operator {k} is not a multiple of a unitary (defect {defect:.3e})"
            )));
        }
        probs.push(p);
        unitaries.push(fix_matrix_phase(&uk));
    }
    let d = MixedUnitaryDecomposition::new_unchecked(probs, unitaries)?;
    let check = verify_decomposition(phi, &d, tol)?;
    if check.choi_residual > LOW_DIM_RESIDUAL {
        return Err(Error::Numerical(format!(
            "low-dimension decomposition residual {:.3e}",
            check.choi_residual
        )));
    }
    let loose = tol.with_eps_eq(tol.eps_eq.max(LOW_DIM_RESIDUAL));
    let (p, us) = (d.probs().to_vec(), d.unitaries().to_vec());
    MixedUnitaryDecomposition::new(p, us, &loose)
}

/// `rank(C)`-term toroidal decomposition of a correlation matrix of size at
/// most 3.
pub fn toroidal_decompose_small(cm: &CMatrix, tol: &Tolerance) -> Result<ToroidalDecomposition> {
    toroidal_small_inner(cm, tol, None)
}

/// As [`toroidal_decompose_small`] with a seeded internal Kraus rotation.
pub fn toroidal_decompose_small_seeded(
    cm: &CMatrix,
    tol: &Tolerance,
    seed: u64,
) -> Result<ToroidalDecomposition> {
    toroidal_small_inner(cm, tol, Some(seed))
}

fn toroidal_small_inner(
    cm: &CMatrix,
    tol: &Tolerance,
    seed: Option<u64>,
) -> Result<ToroidalDecomposition> {
    if cm.nrows() > 3 {
        return Err(Error::Refusal(format!(
            "toroidal construction covers dimension <= 3, got {}",
            cm.nrows()
        )));
    }
    let phi = channels::schur_channel(cm, tol)?;
    let d = decompose_low_dim_inner(&phi, tol, seed)?;
    let loose = tol.with_eps_eq(tol.eps_eq.max(LOW_DIM_RESIDUAL));
    toroidal_from_decomposition(&d, &loose)
}
