//! Numerical search for mixed-unitary decompositions of a given size.
//!
//! A unital channel with minimal Kraus list `A_1..A_r` is a mixture of `N`
//! unitaries iff some isometry `V ∈ M_{N,r}` makes `V B V*` zero on the
//! diagonal for every `B` in the traceless image `Ψ(𝟙^⊥)` of its
//! complementary channel. We minimize
//!
//! ```text
//! f(V) = Σ_k Σ_j |(V B_k V*)(j,j)|²
//! ```
//!
//! over the Stiefel manifold by Riemannian gradient descent with a QR
//! retraction and Armijo backtracking, from Haar-random starts.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{self, KrausChannel};
use crate::error::{arg, Error, Result};
use crate::linalg::{
    self, c, fix_matrix_phase, haar_isometry, orthonormalize_columns, polar_unitary,
    span_basis, unit, unitarity_defect, CMatrix, C64, Tolerance,
};
use crate::mu_analysis::{
    rank_bounds, verify_decomposition, MixedUnitaryDecomposition, RankBoundsReport,
};

/// Restarts are run in batches of this size; the search stops after the
/// first batch that produces a hit. Fixed so results do not depend on the
/// thread count.
const BATCH: usize = 8;
/// Once below the acceptance threshold, keep polishing down to this value.
const POLISH_TARGET: f64 = 1e-30;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Unitarity slack when turning an isometry into a decomposition.
const UNITARITY_SLACK: f64 = 1e-6;
/// Choi residual required of a decomposition before a search reports a hit.
const RESIDUAL_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_beta: f64,
    pub seed: u64,
    pub objective_tol: f64,
    /// Wall-clock budget in seconds, checked between restart batches.
    pub time_budget: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 50,
            max_iters: 2000,
            step_init: 0.1,
            armijo_beta: 0.5,
            seed: 0,
            objective_tol: 1e-16,
            time_budget: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return arg("restarts and max_iters must be positive");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return arg(format!("step_init must be positive, got {}", self.step_init));
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0) {
            return arg(format!("armijo_beta must lie in (0,1), got {}", self.armijo_beta));
        }
        if !(self.objective_tol > 0.0 && self.objective_tol.is_finite()) {
            return arg("objective_tol must be positive");
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return arg("time_budget must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NotFound,
    BudgetExhausted,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Found => "found",
            SearchStatus::NotFound => "not_found",
            SearchStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// Best `N × r` isometry seen.
    pub isometry: Option<CMatrix>,
    pub objective: f64,
    pub decomposition: Option<MixedUnitaryDecomposition>,
    /// Final objective of each restart that ran, by restart index.
    pub restart_log: Vec<f64>,
}

/// Orthonormal basis of `Ψ(X)` over traceless `X`.
pub fn traceless_image_basis(psi: &KrausChannel, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    let (n, r) = (psi.dim_in(), psi.dim_out());
    let mut images = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                images.push(psi.apply(&unit(n, n, j, k))?);
            } else if j + 1 < n {
                let x = unit(n, n, j, j) - unit(n, n, j + 1, j + 1);
                images.push(psi.apply(&x)?);
            }
        }
    }
    // Inputs have unit norm, so images below eps_rank are roundoff.
    images.retain(|m| m.norm() > tol.eps_rank);
    if images.is_empty() {
        return Ok(Vec::new());
    }
    span_basis(&images, r, r, tol)
}

/// Row-major copies of the basis for the inner loops.
struct Problem {
    r: usize,
    basis: Vec<Vec<C64>>,
}

impl Problem {
    fn new(basis: &[CMatrix], r: usize) -> Self {
        let flat = basis
            .iter()
            .map(|b| {
                let mut v = Vec::with_capacity(r * r);
                for a in 0..r {
                    for k in 0..r {
                        v.push(b[(a, k)]);
                    }
                }
                v
            })
            .collect();
        Problem { r, basis: flat }
    }

    /// Objective, and the Euclidean gradient `G` (with `df = Re Tr(G* dV)`)
    /// when requested.
    fn eval(&self, v: &CMatrix, mut grad: Option<&mut CMatrix>) -> f64 {
        let (nn, r) = (v.nrows(), self.r);
        if let Some(g) = grad.as_deref_mut() {
            g.fill(C64::new(0.0, 0.0));
        }
        let mut row = vec![C64::new(0.0, 0.0); r];
        let mut w = vec![C64::new(0.0, 0.0); r];
        let mut u = vec![C64::new(0.0, 0.0); r];
        let mut f = 0.0;
        for j in 0..nn {
            for a in 0..r {
                row[a] = v[(j, a)];
            }
            for b in &self.basis {
                // w = row·B, u = row·B*
                for k in 0..r {
                    w[k] = C64::new(0.0, 0.0);
                    u[k] = C64::new(0.0, 0.0);
                }
                for a in 0..r {
                    let ra = row[a];
                    let brow = &b[a * r..(a + 1) * r];
                    for k in 0..r {
                        w[k] += ra * brow[k];
                        u[k] += ra * b[k * r + a].conj();
                    }
                }
                let mut d = C64::new(0.0, 0.0);
                for k in 0..r {
                    d += w[k] * row[k].conj();
                }
                f += d.norm_sqr();
                if let Some(g) = grad.as_deref_mut() {
                    let dc = d.conj();
                    for k in 0..r {
                        g[(j, k)] += (dc * w[k] + d * u[k]) * 2.0;
                    }
                }
            }
        }
        f
    }
}

/// `f(V) = Σ_k Σ_j |(V B_k V*)(j,j)|²`.
pub fn objective(basis: &[CMatrix], v: &CMatrix) -> f64 {
    Problem::new(basis, v.ncols()).eval(v, None)
}

/// Euclidean gradient `G` of [`objective`] in the real inner product
/// `⟨X, Y⟩ = Re Tr(X* Y)`, so that `f(V + tE) = f(V) + t⟨G, E⟩ + O(t²)`.
pub fn euclidean_gradient(basis: &[CMatrix], v: &CMatrix) -> CMatrix {
    let mut g = CMatrix::zeros(v.nrows(), v.ncols());
    Problem::new(basis, v.ncols()).eval(v, Some(&mut g));
    g
}

/// Projection of `G` onto the tangent space of the Stiefel manifold at `V`.
pub fn riemannian_gradient(v: &CMatrix, g: &CMatrix) -> CMatrix {
    let vg = v.adjoint() * g;
    let sym = (&vg + vg.adjoint()) * c(0.5, 0.0);
    g - v * sym
}

struct RestartOutcome {
    objective: f64,
    isometry: CMatrix,
}

fn run_restart(problem: &Problem, nn: usize, cfg: &SearchConfig, seed: u64) -> Result<RestartOutcome> {
    let r = problem.r;
    let mut v = haar_isometry(nn, r, seed)?;
    let mut g = CMatrix::zeros(nn, r);
    let mut f = problem.eval(&v, Some(&mut g));
    let mut step = cfg.step_init;
    for _ in 0..cfg.max_iters {
        if f <= POLISH_TARGET {
            break;
        }
        let rg = riemannian_gradient(&v, &g);
        let gnorm2 = rg.norm_squared();
        if gnorm2 == 0.0 || !gnorm2.is_finite() {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = orthonormalize_columns(&(&v - &rg * c(t, 0.0)))?;
            let ft = problem.eval(&trial, None);
            if ft <= f - ARMIJO_C * t * gnorm2 {
                accepted = Some((trial, ft));
                break;
            }
            t *= cfg.armijo_beta;
        }
        let Some((trial, ft)) = accepted else { break };
        v = trial;
        f = problem.eval(&v, Some(&mut g));
        debug_assert!(f <= ft * (1.0 + 1e-12) + 1e-300);
        // Let the step grow back after successful iterations.
        step = (t / cfg.armijo_beta).min(1e6);
    }
    Ok(RestartOutcome {
        objective: f,
        isometry: v,
    })
}

/// Minimizes `f` over `N × r` isometries from `cfg.restarts` random starts
/// (restart `i` seeded with `cfg.seed + i`). Restarts run in parallel in
/// fixed batches; the merge keeps the best objective, ties to the lowest
/// restart index.
pub fn search_isometry(
    basis: &[CMatrix],
    r: usize,
    n_terms: usize,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    if r == 0 {
        return arg("Kraus count r must be positive");
    }
    if n_terms < r {
        return arg(format!("N = {n_terms} is smaller than the Choi rank r = {r}"));
    }
    if let Some(b) = basis.iter().find(|b| b.shape() != (r, r)) {
        return arg(format!("basis matrices must be {r}x{r}, got {:?}", b.shape()));
    }
    let problem = Problem::new(basis, r);
    let start = Instant::now();
    let mut log = Vec::new();
    let mut best: Option<(f64, CMatrix)> = None;
    let mut out_of_time = false;
    let mut next = 0;
    while next < cfg.restarts {
        if let Some(budget) = cfg.time_budget {
            if next > 0 && start.elapsed().as_secs_f64() > budget {
                out_of_time = true;
                break;
            }
        }
        let end = (next + BATCH).min(cfg.restarts);
        let outcomes: Vec<Result<RestartOutcome>> = (next..end)
            .into_par_iter()
            .map(|i| run_restart(&problem, n_terms, cfg, cfg.seed.wrapping_add(i as u64)))
            .collect();
        for o in outcomes {
            let o = o?;
            log.push(o.objective);
            if best.as_ref().is_none_or(|(b, _)| o.objective < *b) {
                best = Some((o.objective, o.isometry));
            }
        }
        next = end;
        if best.as_ref().is_some_and(|(b, _)| *b <= cfg.objective_tol) {
            break;
        }
    }
    let (objective, isometry) = best.expect("at least one restart ran");
    let status = if objective <= cfg.objective_tol {
        SearchStatus::Found
    } else if out_of_time {
        SearchStatus::BudgetExhausted
    } else {
        SearchStatus::NotFound
    };
    Ok(SearchResult {
        status,
        isometry: Some(isometry),
        objective,
        decomposition: None,
        restart_log: log,
    })
}

/// Decomposition induced by an isometry: `C_j = Σ_k V(j,k) A_k`,
/// `p_j = ‖C_j‖²/n`, `U_j = C_j/√p_j` (projected to the nearest unitary).
/// Terms with `p_j ≤ eps_eq` are dropped and the rest renormalized.
pub fn decomposition_from_isometry(
    phi_minimal: &KrausChannel,
    v: &CMatrix,
    tol: &Tolerance,
) -> Result<MixedUnitaryDecomposition> {
    let r = phi_minimal.kraus().len();
    let n = phi_minimal.dim_in();
    if v.ncols() != r || !phi_minimal.is_square() {
        return arg(format!(
            "isometry has {} columns but the channel has {r} Kraus operators",
            v.ncols()
        ));
    }
    let defect = linalg::isometry_defect(v);
    if defect > tol.eps_eq.max(1e-9) {
        return arg(format!("V is not an isometry (defect {defect:.3e})"));
    }
    let mut probs = Vec::new();
    let mut unitaries = Vec::new();
    for j in 0..v.nrows() {
        let mut cj = CMatrix::zeros(n, n);
        for (k, a) in phi_minimal.kraus().iter().enumerate() {
            cj += a * v[(j, k)];
        }
        let p = cj.norm_squared() / n as f64;
        if p <= tol.eps_eq {
            continue;
        }
        let uj = cj / c(p.sqrt(), 0.0);
        let defect = unitarity_defect(&uj);
        if defect > UNITARITY_SLACK {
            return Err(Error::Numerical(format!(
                "term {j} is not unitary (defect {defect:.3e})"
            )));
        }
        probs.push(p);
        unitaries.push(fix_matrix_phase(&polar_unitary(&uj)?));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numerical("isometry produced no terms".into()));
    }
    for p in &mut probs {
        *p /= total;
    }
    MixedUnitaryDecomposition::new(probs, unitaries, tol)
}

/// Searches for an `N`-term decomposition of `Φ`. A hit requires both the
/// objective threshold and a decomposition that reconstructs `Φ` (Choi
/// residual ≤ 1e-8, unitarity within 1e-6).
pub fn search_decomposition(
    phi: &KrausChannel,
    n_terms: usize,
    cfg: &SearchConfig,
    tol: &Tolerance,
) -> Result<SearchResult> {
    if !phi.is_square() {
        return arg("search needs a map M_n -> M_n");
    }
    let min = phi.minimized(tol)?;
    let r = min.kraus().len();
    let psi = channels::complementary_of_list(&min)?;
    let basis = traceless_image_basis(&psi, tol)?;
    let mut result = search_isometry(&basis, r, n_terms, cfg)?;
    if result.status == SearchStatus::Found {
        let v = result.isometry.as_ref().expect("found has isometry");
        let accepted = decomposition_from_isometry(&min, v, tol).ok().filter(|d| {
            verify_decomposition(phi, d, tol)
                .map(|ver| ver.choi_residual <= RESIDUAL_SLACK)
                .unwrap_or(false)
        });
        match accepted {
            Some(d) => result.decomposition = Some(d),
            None => result.status = SearchStatus::NotFound,
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchAttempt {
    pub n: usize,
    pub status: SearchStatus,
    pub objective: f64,
    pub restart_log: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MuRankSearch {
    pub n_found: Option<usize>,
    pub decomposition: Option<MixedUnitaryDecomposition>,
    pub bounds: RankBoundsReport,
    /// One entry per candidate size tried, in increasing order. Failures
    /// are diagnostics only and never certify a lower bound.
    pub attempts: Vec<SearchAttempt>,
}

/// Scans `N` upward from the Choi rank (or the certified value) to the
/// upper bound and stops at the first size with a verified decomposition.
pub fn murank_search(phi: &KrausChannel, cfg: &SearchConfig, tol: &Tolerance) -> Result<MuRankSearch> {
    let bounds = rank_bounds(phi, tol)?;
    let first = bounds.exact.unwrap_or(bounds.lower);
    let mut attempts = Vec::new();
    for n in first..=bounds.upper {
        let res = search_decomposition(phi, n, cfg, tol)?;
        attempts.push(SearchAttempt {
            n,
            status: res.status,
            objective: res.objective,
            restart_log: res.restart_log.clone(),
        });
        if res.status == SearchStatus::Found {
            return Ok(MuRankSearch {
                n_found: Some(n),
                decomposition: res.decomposition,
                bounds,
                attempts,
            });
        }
    }
    Ok(MuRankSearch {
        n_found: None,
        decomposition: None,
        bounds,
        attempts,
    })
}
