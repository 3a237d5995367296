//! Reference channels, correlation matrices, and decompositions with known
//! ranks, plus seeded random fixtures.

use crate::channels::{self, KrausChannel};
use crate::constructive::ToroidalDecomposition;
use crate::error::{arg, Error, Result};
use crate::linalg::{
    self, c, diag, dirsum, haar_isometry, haar_unitary, identity, root_of_unity, unit, CMatrix,
    CVector, C64, Tolerance,
};
use crate::mu_analysis::MixedUnitaryDecomposition;

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn tol() -> Tolerance {
    Tolerance::default()
}

/// Cyclic shift `U = Σ_a E_{a+1,a}` and clock `V = diag(ζ^a)` on `C^p`.
pub fn shift_and_clock(p: usize) -> (CMatrix, CMatrix) {
    let shift = CMatrix::from_fn(p, p, |j, k| {
        if j == (k + 1) % p {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let clock = diag(&(0..p).map(|a| root_of_unity(a as i64, p as u64)).collect::<Vec<_>>());
    (shift, clock)
}

/// The unitaries `W_a = U^a V^{a²}`, `a = 0..p−1`.
pub fn weyl_unitaries(p: usize) -> Result<Vec<CMatrix>> {
    if p % 2 == 0 || !is_prime(p) {
        return arg(format!("Weyl channel needs an odd prime, got {p}"));
    }
    let (u, v) = shift_and_clock(p);
    Ok((0..p)
        .map(|a| u.pow(a as u32) * v.pow((a * a % p) as u32))
        .collect())
}

/// `Φ(X) = (1/p) Σ_a W_a X W_a*` for an odd prime `p`.
pub fn weyl_channel(p: usize) -> Result<KrausChannel> {
    let s = c(1.0 / (p as f64).sqrt(), 0.0);
    let kraus = weyl_unitaries(p)?.into_iter().map(|w| w * s).collect();
    KrausChannel::new(kraus, &tol())
}

pub fn weyl_decomposition(p: usize) -> Result<MixedUnitaryDecomposition> {
    let ws = weyl_unitaries(p)?;
    MixedUnitaryDecomposition::new(vec![1.0 / p as f64; p], ws, &tol())
}

/// `W_0, W_1, W_2` for `p = 3` written out entrywise.
pub fn weyl3_literal() -> [CMatrix; 3] {
    let z = root_of_unity(1, 3);
    let z2 = root_of_unity(2, 3);
    let o = c(1.0, 0.0);
    let n = c(0.0, 0.0);
    [
        identity(3),
        CMatrix::from_row_slice(3, 3, &[n, n, z2, o, n, n, n, z, n]),
        CMatrix::from_row_slice(3, 3, &[n, z, n, n, n, z2, o, n, n]),
    ]
}

/// `weyl_channel(p) ⊕ id_m`: Choi rank `p + 1`, mixed-unitary rank `2p`.
pub fn gap_channel(p: usize, m: usize) -> Result<KrausChannel> {
    if m == 0 {
        return arg("block size m must be positive");
    }
    channels::direct_sum(&weyl_channel(p)?, &KrausChannel::identity(m))
}

/// The six unitaries `W_a ⊕ (±1)` at weight 1/6 decomposing
/// `gap_channel(3, 1)`, written out entrywise.
pub fn gap3_literal_decomposition() -> MixedUnitaryDecomposition {
    let w = weyl3_literal();
    let mut us = Vec::with_capacity(6);
    for wa in &w {
        for sign in [1.0, -1.0] {
            us.push(dirsum(wa, &CMatrix::from_element(1, 1, c(sign, 0.0))));
        }
    }
    MixedUnitaryDecomposition::new(vec![1.0 / 6.0; 6], us, &tol()).expect("literal is valid")
}

fn real_matrix(n: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_fn(n, n, |j, k| c(entries[j * n + k], 0.0))
}

/// Rank-2 correlation matrix with a unique toroidal decomposition.
pub fn corr_b3() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(3, &[1.0, h, h, h, 1.0, 0.0, h, 0.0, 1.0])
}

/// `B = ½uu* + ½vv*` for [`corr_b3`].
pub fn corr_b3_decomposition() -> ToroidalDecomposition {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = vec![c(1.0, 0.0), c(h, h), c(h, -h)];
    let v = vec![c(1.0, 0.0), c(h, -h), c(h, h)];
    ToroidalDecomposition::new(vec![0.5, 0.5], vec![u, v], &tol()).expect("literal is valid")
}

/// `B ⊕ 1`: rank 3, toroidal rank 4.
pub fn corr_c4() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(
        4,
        &[
            1.0, h, h, 0.0, //
            h, 1.0, 0.0, 0.0, //
            h, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// `corr_c4() ⊗ 𝟙_2` with the correlation factor as the inner index, i.e.
/// `kron(𝟙_2, C)`: two diagonal copies of `C`. This is the ordering the
/// exponent table below reconstructs.
pub fn corr_c4_tensor_i2() -> CMatrix {
    linalg::kron(&identity(2), &corr_c4())
}

/// Exponents (in units of 2π/24) of the six unimodular vectors decomposing
/// `corr_c4() ⊗ 𝟙_2`.
pub const CTENSOR_EXPONENTS: [[i64; 8]; 6] = [
    [0, 3, -3, 0, 0, 3, -3, 0],
    [0, -3, 3, 12, 12, 9, -9, 0],
    [8, 11, 5, -8, 0, 3, -3, -8],
    [0, 3, -3, -8, 8, 11, 5, -8],
    [0, -3, 3, -4, 4, 1, 7, 8],
    [4, 1, 7, 8, 0, -3, 3, -4],
];

/// `corr_c4_tensor_i2() = (1/6) Σ u_j u_j*` with `u_j(k) = exp(2πi A(j,k)/24)`: toroidal
/// rank 6 although the factors have toroidal ranks 4 and 2.
pub fn toroidal_ctensor_i2() -> ToroidalDecomposition {
    let vectors = CTENSOR_EXPONENTS
        .iter()
        .map(|row| row.iter().map(|&a| root_of_unity(a, 24)).collect())
        .collect();
    ToroidalDecomposition::new(vec![1.0 / 6.0; 6], vectors, &tol()).expect("literal is valid")
}

/// `d + 1` mutually unbiased bases of `C^d`.
#[derive(Debug, Clone)]
pub struct MubFamily {
    pub d: usize,
    /// `bases[t][j]` is the vector `u_{t,j}`; the standard basis comes last.
    pub bases: Vec<Vec<CVector>>,
}

impl MubFamily {
    /// Largest deviation from orthonormality within bases and from
    /// `|⟨u,v⟩| = 1/√d` across bases.
    pub fn unbiasedness_defect(&self) -> f64 {
        let target = 1.0 / (self.d as f64).sqrt();
        let mut worst: f64 = 0.0;
        for (s, bs) in self.bases.iter().enumerate() {
            for (t, bt) in self.bases.iter().enumerate() {
                for (i, u) in bs.iter().enumerate() {
                    for (j, v) in bt.iter().enumerate() {
                        let ov = u.dotc(v).norm();
                        let want = if s != t {
                            target
                        } else if i == j {
                            1.0
                        } else {
                            0.0
                        };
                        worst = worst.max((ov - want).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Pauli eigenbases for `d = 2`; quadratic-phase bases
/// `u_{k,j}(a) = ζ^{k a² + j a}/√d` plus the standard basis for odd primes.
pub fn mub_family(d: usize) -> Result<MubFamily> {
    if !is_prime(d) {
        return Err(Error::Refusal(format!(
            "mutually unbiased bases are built for prime d only, got {d}"
        )));
    }
    let s = 1.0 / (d as f64).sqrt();
    let standard: Vec<CVector> = (0..d)
        .map(|j| CVector::from_fn(d, |a, _| c(if a == j { 1.0 } else { 0.0 }, 0.0)))
        .collect();
    let mut bases = Vec::with_capacity(d + 1);
    if d == 2 {
        let v = |a: C64, b: C64| CVector::from_vec(vec![a * s, b * s]);
        let one = c(1.0, 0.0);
        bases.push(vec![v(one, one), v(one, -one)]);
        bases.push(vec![v(one, c(0.0, 1.0)), v(one, c(0.0, -1.0))]);
    } else {
        for k in 0..d {
            bases.push(
                (0..d)
                    .map(|j| {
                        CVector::from_fn(d, |a, _| {
                            root_of_unity((k * a * a + j * a) as i64, d as u64) * s
                        })
                    })
                    .collect(),
            );
        }
    }
    bases.push(standard);
    let fam = MubFamily { d, bases };
    let defect = fam.unbiasedness_defect();
    if defect > 1e-10 {
        return Err(Error::Numerical(format!(
            "constructed bases are not mutually unbiased (defect {defect:.3e})"
        )));
    }
    Ok(fam)
}

/// Correlation matrix built from mutually unbiased bases, with its `d`-term
/// toroidal decomposition.
#[derive(Debug, Clone)]
pub struct MubCorrelation {
    /// `C = AA*`, `d² × d²`, rank `d`.
    pub c: CMatrix,
    pub decomposition: ToroidalDecomposition,
}

/// `A = Σ (e_k ⊗ e_j) u_{k,j}*` over the first `d` bases, `C = AA*`, and
/// `v_k = √d A u_{d+1,k}` at weights `1/d`.
pub fn mub_correlation(d: usize) -> Result<MubCorrelation> {
    let fam = mub_family(d)?;
    let a = CMatrix::from_fn(d * d, d, |row, col| fam.bases[row / d][row % d][col].conj());
    let c_mat = &a * a.adjoint();
    let sd = (d as f64).sqrt();
    let vectors = fam.bases[d]
        .iter()
        .map(|u| (&a * u * c(sd, 0.0)).iter().cloned().collect())
        .collect();
    let decomposition = ToroidalDecomposition::new(vec![1.0 / d as f64; d], vectors, &tol())?;
    Ok(MubCorrelation {
        c: c_mat,
        decomposition,
    })
}

/// The Hermitian orthonormal basis `H_{j,k}` of `M_n`: `E_jj` on the
/// diagonal, `(E_jk + E_kj)/√2` above it, `(iE_jk − iE_kj)/√2` below it.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    pub n: usize,
    matrices: Vec<CMatrix>,
}

impl HermitianBasis {
    /// `H_{j,k}`, 0-based.
    pub fn get(&self, j: usize, k: usize) -> &CMatrix {
        &self.matrices[j * self.n + k]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }
}

pub fn hermitian_basis(n: usize) -> Result<HermitianBasis> {
    if n == 0 {
        return arg("dimension must be positive");
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut matrices = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let m = if j == k {
                unit(n, n, j, j)
            } else if j < k {
                (unit(n, n, j, k) + unit(n, n, k, j)) * c(h, 0.0)
            } else {
                (unit(n, n, j, k) - unit(n, n, k, j)) * c(0.0, h)
            };
            matrices.push(m);
        }
    }
    Ok(HermitianBasis { n, matrices })
}

/// Partition of the edges of `K_n` (`n` even, vertices `1..n`) into `n − 1`
/// perfect matchings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneFactorization {
    pub n: usize,
    /// Each matching lists `n/2` pairs `(a, b)` with `a < b`, sorted.
    pub matchings: Vec<Vec<(usize, usize)>>,
}

impl OneFactorization {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.matchings.len() != n - 1 {
            return Err(Error::Validation(format!(
                "{} matchings, expected {}",
                self.matchings.len(),
                n - 1
            )));
        }
        let mut seen = vec![vec![false; n + 1]; n + 1];
        for m in &self.matchings {
            let mut covered = vec![false; n + 1];
            for &(a, b) in m {
                if !(1 <= a && a < b && b <= n) {
                    return Err(Error::Validation(format!("bad edge ({a},{b})")));
                }
                if covered[a] || covered[b] {
                    return Err(Error::Validation("matching covers a vertex twice".into()));
                }
                covered[a] = true;
                covered[b] = true;
                if seen[a][b] {
                    return Err(Error::Validation(format!("edge ({a},{b}) repeated")));
                }
                seen[a][b] = true;
            }
            if covered[1..].iter().any(|&x| !x) {
                return Err(Error::Validation("matching is not perfect".into()));
            }
        }
        Ok(())
    }
}

/// Circle method: vertex `n` stays fixed while the others rotate.
pub fn one_factorization(n: usize) -> Result<OneFactorization> {
    if n == 0 || n % 2 == 1 {
        return arg(format!("one-factorization needs an even positive n, got {n}"));
    }
    let m = n - 1;
    let mut matchings = Vec::with_capacity(m);
    for round in 0..m {
        let mut pairs = vec![(round + 1, n)];
        for k in 1..n / 2 {
            let a = (round + k) % m + 1;
            let b = (round + m - k) % m + 1;
            pairs.push((a.min(b), a.max(b)));
        }
        pairs.sort();
        matchings.push(pairs);
    }
    let f = OneFactorization { n, matchings };
    f.validate()?;
    Ok(f)
}

/// Symmetric Werner–Holevo channel `Φ₀(X) = (Tr(X)𝟙 + Xᵀ)/(n+1)`, Kraus
/// operators `√(2/(n+1)) H_{j,k}` for `j ≤ k`.
pub fn wh_symmetric(n: usize) -> Result<KrausChannel> {
    let h = hermitian_basis(n)?;
    let s = c((2.0 / (n as f64 + 1.0)).sqrt(), 0.0);
    let mut kraus = Vec::new();
    for j in 0..n {
        for k in j..n {
            kraus.push(h.get(j, k) * s);
        }
    }
    KrausChannel::new(kraus, &tol())
}

/// Antisymmetric Werner–Holevo channel `Φ₁(X) = (Tr(X)𝟙 − Xᵀ)/(n−1)`,
/// Kraus operators `√(2/(n−1)) H_{j,k}` for `j > k`.
pub fn wh_antisymmetric(n: usize) -> Result<KrausChannel> {
    if n < 2 {
        return Err(Error::Refusal(
            "antisymmetric Werner–Holevo channel needs n >= 2".into(),
        ));
    }
    let h = hermitian_basis(n)?;
    let s = c((2.0 / (n as f64 - 1.0)).sqrt(), 0.0);
    let mut kraus = Vec::new();
    for j in 0..n {
        for k in 0..j {
            kraus.push(h.get(j, k) * s);
        }
    }
    KrausChannel::new(kraus, &tol())
}

#[derive(Debug, Clone)]
pub struct WernerHolevo {
    pub phi0: KrausChannel,
    pub phi1: KrausChannel,
}

pub fn wh_channels(n: usize) -> Result<WernerHolevo> {
    Ok(WernerHolevo {
        phi0: wh_symmetric(n)?,
        phi1: wh_antisymmetric(n)?,
    })
}

/// `U_{ℓ,a} = √2 Σ_b ζ^{2ab} F_{ℓ,b}` for one matching `F_{ℓ,1..m}`, with
/// `a, b = 1..m` and `ζ = exp(2πi/(2m))`.
fn matching_unitaries(fs: &[CMatrix], n: usize) -> Vec<CMatrix> {
    let m = fs.len();
    let root = 2 * m as u64;
    (1..=m)
        .map(|a| {
            let mut u = CMatrix::zeros(n, n);
            for (b, f) in fs.iter().enumerate() {
                u += f * (root_of_unity((2 * a * (b + 1)) as i64, root) * std::f64::consts::SQRT_2);
            }
            u
        })
        .collect()
}

/// `n(n−1)/2` skew-symmetric, pairwise orthogonal unitaries at uniform weight
/// decomposing `Φ₁` for even `n`.
pub fn wh_antisym_decomposition(n: usize) -> Result<MixedUnitaryDecomposition> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::Refusal(format!(
            "the antisymmetric Werner–Holevo channel is not mixed unitary for odd n (got {n})"
        )));
    }
    let h = hermitian_basis(n)?;
    let fact = one_factorization(n)?;
    let mut us = Vec::with_capacity(n * (n - 1) / 2);
    for matching in &fact.matchings {
        // Edge {a < b} is represented by H_{b,a}.
        let fs: Vec<CMatrix> = matching.iter().map(|&(a, b)| h.get(b - 1, a - 1).clone()).collect();
        us.extend(matching_unitaries(&fs, n));
    }
    let w = 2.0 / (n * (n - 1)) as f64;
    MixedUnitaryDecomposition::new(vec![w; us.len()], us, &tol())
}

/// `V_j = Σ_k ζ^{jk} E_kk`, `j = 1..n`, `ζ = exp(2πi/n)`.
fn diagonal_fourier_unitaries(n: usize) -> Vec<CMatrix> {
    (1..=n)
        .map(|j| {
            diag(
                &(1..=n)
                    .map(|k| root_of_unity((j * k) as i64, n as u64))
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// `n(n+1)/2` symmetric, pairwise orthogonal unitaries at uniform weight
/// decomposing `Φ₀` for even `n`.
pub fn wh_sym_even_decomposition(n: usize) -> Result<MixedUnitaryDecomposition> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::Refusal(format!(
            "even-n construction needs even n (got {n}); use the odd-n construction"
        )));
    }
    let h = hermitian_basis(n)?;
    let fact = one_factorization(n)?;
    let mut us = Vec::with_capacity(n * (n + 1) / 2);
    for matching in &fact.matchings {
        let fs: Vec<CMatrix> = matching.iter().map(|&(a, b)| h.get(a - 1, b - 1).clone()).collect();
        us.extend(matching_unitaries(&fs, n));
    }
    us.extend(diagonal_fourier_unitaries(n));
    let w = 2.0 / (n * (n + 1)) as f64;
    MixedUnitaryDecomposition::new(vec![w; us.len()], us, &tol())
}

/// `n(n+3)/2`-term decomposition of `Φ₀` for odd `n`, from a
/// one-factorization of `K_{n+1}` (vertex 0 contributing `E_kk/√2`) at weight
/// `2/(n+1)²`, plus the diagonal Fourier unitaries at weight `1/(n(n+1))`.
pub fn wh_sym_odd_decomposition(n: usize) -> Result<MixedUnitaryDecomposition> {
    if n % 2 == 0 {
        return Err(Error::Refusal(format!(
            "odd-n construction needs odd n (got {n}); use the even-n construction"
        )));
    }
    let h = hermitian_basis(n)?;
    let fact = one_factorization(n + 1)?;
    let half = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut us = Vec::new();
    for matching in &fact.matchings {
        // Vertex v of K_{n+1} is labelled v − 1, so label 0 is the extra vertex.
        let fs: Vec<CMatrix> = matching
            .iter()
            .map(|&(a, b)| {
                let (j, k) = (a - 1, b - 1);
                if j == 0 {
                    h.get(k - 1, k - 1) * half
                } else {
                    h.get(j - 1, k - 1).clone()
                }
            })
            .collect();
        us.extend(matching_unitaries(&fs, n));
    }
    let nf = n as f64;
    let mut probs = vec![2.0 / ((nf + 1.0) * (nf + 1.0)); us.len()];
    let vs = diagonal_fourier_unitaries(n);
    probs.extend(std::iter::repeat_n(1.0 / (nf * (nf + 1.0)), vs.len()));
    us.extend(vs);
    MixedUnitaryDecomposition::new(probs, us, &tol())
}

/// `α = 3/8 + i√15/8`.
pub fn wh_sym3_alpha() -> C64 {
    c(3.0 / 8.0, 15f64.sqrt() / 8.0)
}

/// Six symmetric, pairwise orthogonal unitaries decomposing `Φ₀` on `M_3` at
/// weight 1/6.
pub fn wh_sym3_decomposition() -> MixedUnitaryDecomposition {
    let z = root_of_unity(1, 3);
    let z2 = root_of_unity(2, 3);
    let one = c(1.0, 0.0);
    let h = c(0.5, 0.0);
    let a = wh_sym3_alpha();
    let m = |s: [[f64; 3]; 3]| {
        CMatrix::from_fn(3, 3, |j, k| if j == k { h } else { a * s[j][k] })
    };
    let us = vec![
        diag(&[one, z, z2]),
        diag(&[one, z2, z]),
        m([[0.0, -1.0, -1.0], [-1.0, 0.0, -1.0], [-1.0, -1.0, 0.0]]),
        m([[0.0, 1.0, -1.0], [1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]]),
        m([[0.0, 1.0, 1.0], [1.0, 0.0, -1.0], [1.0, -1.0, 0.0]]),
        m([[0.0, -1.0, 1.0], [-1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]),
    ];
    MixedUnitaryDecomposition::new(vec![1.0 / 6.0; 6], us, &tol()).expect("literal is valid")
}

/// Projector `(𝟙 ± SWAP)/2` on `C^n ⊗ C^n`, built from the swap matrix.
pub fn symmetric_projector(n: usize, antisymmetric: bool) -> CMatrix {
    let d = n * n;
    let swap = CMatrix::from_fn(d, d, |row, col| {
        let (a, b) = (row / n, row % n);
        if col == b * n + a {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let sign = if antisymmetric { -1.0 } else { 1.0 };
    (CMatrix::identity(d, d) + swap * c(sign, 0.0)) * c(0.5, 0.0)
}

/// Random rank-`rank` `n × n` correlation matrix: Gaussian rows normalized
/// to unit length, `C = GG*`.
pub fn random_correlation(n: usize, rank: usize, seed: u64) -> Result<CMatrix> {
    if n == 0 || rank == 0 || rank > n {
        return arg(format!("need 1 <= rank <= n, got rank {rank}, n {n}"));
    }
    let mut g = linalg::gaussian_matrix(n, rank, &mut linalg::rng_from_seed(seed));
    for mut row in g.row_iter_mut() {
        let norm = row.norm();
        row /= c(norm, 0.0);
    }
    let mut cm = &g * g.adjoint();
    for i in 0..n {
        cm[(i, i)] = c(1.0, 0.0);
    }
    Ok(cm)
}

/// Random unital channel of Choi rank at most 2:
/// `X ↦ U(D₀VXV*D₀* + D₁VXV*D₁*)U*` with Haar `U, V` and diagonal `D₀, D₁`
/// satisfying `|D₀(k)|² + |D₁(k)|² = 1`.
pub fn random_unital_rank2(n: usize, seed: u64) -> Result<KrausChannel> {
    if n == 0 {
        return arg("dimension must be positive");
    }
    let u = haar_unitary(n, seed.wrapping_mul(3).wrapping_add(1))?;
    let v = haar_unitary(n, seed.wrapping_mul(3).wrapping_add(2))?;
    let g = linalg::gaussian_matrix(n, 3, &mut linalg::rng_from_seed(seed.wrapping_mul(3)));
    let mut d0 = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    for k in 0..n {
        let theta = std::f64::consts::FRAC_PI_2 * (0.1 + 0.8 * (g[(k, 0)].re.tanh() * 0.5 + 0.5));
        d0.push(C64::from_polar(theta.cos(), g[(k, 1)].arg()));
        d1.push(C64::from_polar(theta.sin(), g[(k, 2)].arg()));
    }
    let kraus = vec![&u * diag(&d0) * &v, &u * diag(&d1) * &v];
    KrausChannel::new(kraus, &tol())
}

/// Random channel `M_n → M_n` with `r` Kraus operators cut from a Haar
/// isometry.
pub fn random_channel(n: usize, r: usize, seed: u64) -> Result<KrausChannel> {
    let w = haar_isometry(n * r, n, seed)?;
    let kraus = (0..r)
        .map(|k| CMatrix::from_fn(n, n, |j, l| w[(k * n + j, l)]))
        .collect();
    KrausChannel::new(kraus, &tol())
}
