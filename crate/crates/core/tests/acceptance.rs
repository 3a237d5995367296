//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so that the report is always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use muchan::channels::{self, KrausChannel};
use muchan::constructive::{
    toroidal_decompose_small, toroidal_from_decomposition, zero_diagonal_unitary,
};
use muchan::gallery;
use muchan::linalg::{self, c, dirsum, identity, numerical_rank, unitarity_defect, CMatrix};
use muchan::mu_analysis::{
    certified_gap_rank, channel_ranks, decompositions_equivalent, rank_bounds,
    schur_equivalence_check, unique_decomposition, verify_decomposition,
    MixedUnitaryDecomposition,
};
use muchan::search::{
    euclidean_gradient, murank_search, objective, search_decomposition, SearchConfig,
    SearchStatus,
};
use muchan::Tolerance;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rank(m: &CMatrix) -> usize {
    numerical_rank(m, &tol()).expect("rank")
}

fn residual(phi: &KrausChannel, d: &MixedUnitaryDecomposition) -> f64 {
    verify_decomposition(phi, d, &tol()).expect("verify").choi_residual
}

/// `C̄ ⊙ C`.
fn gram_square(cm: &CMatrix) -> CMatrix {
    cm.map(|z| c(z.norm_sqr(), 0.0))
}

fn is_symmetric(u: &CMatrix, eps: f64) -> bool {
    (u - u.transpose()).norm() <= eps
}

fn pairwise_orthogonal(us: &[CMatrix], eps: f64) -> bool {
    us.iter()
        .enumerate()
        .all(|(i, a)| us[i + 1..].iter().all(|b| linalg::inner(a, b).norm() <= eps))
}

fn weyl_fixture() -> Outcome {
    for p in [3usize, 5, 7] {
        let phi = gallery::weyl_channel(p).map_err(|e| e.to_string())?;
        let (r, s) = channel_ranks(&phi, &tol()).map_err(|e| e.to_string())?;
        ensure!(r == p && s == p * p - p + 1, "p = {p}: got r = {r}, s = {s}");
    }
    let phi = gallery::weyl_channel(3).unwrap();
    let scale = c(3f64.sqrt(), 0.0);
    let mut worst: f64 = 0.0;
    for (a, w) in phi.kraus().iter().zip(gallery::weyl3_literal().iter()) {
        for (x, y) in (a * scale).iter().zip(w.iter()) {
            worst = worst.max((x - y).norm());
        }
    }
    ensure!(worst <= 1e-12, "p = 3 Kraus list differs from W_a by {worst:.2e}");
    let recovered = unique_decomposition(&phi, &tol()).map_err(|e| e.to_string())?;
    ensure!(
        decompositions_equivalent(&recovered, &gallery::weyl_decomposition(3).unwrap(), &tol()),
        "recovered decomposition is not the Weyl one"
    );
    Ok(format!("p = 3, 5, 7 ranks exact; W_a entrywise {worst:.1e}"))
}

fn gap_separation() -> Outcome {
    let mut notes = Vec::new();
    for (p, want_r, want_n) in [(3usize, 4usize, 6usize), (5, 6, 10)] {
        let g = gallery::gap_channel(p, 1).unwrap();
        let (r, _) = channel_ranks(&g, &tol()).unwrap();
        ensure!(r == want_r, "gap({p},1) Choi rank {r}, expected {want_r}");
        let cert = certified_gap_rank(&gallery::weyl_channel(p).unwrap(), 1, &tol())
            .map_err(|e| e.to_string())?;
        ensure!(
            cert.choi_rank == want_r && cert.mu_rank == want_n,
            "gap({p},1) certified ({}, {})",
            cert.choi_rank,
            cert.mu_rank
        );
        let res = residual(&g, &cert.decomposition);
        ensure!(res <= 1e-10, "gap({p},1) residual {res:.2e}");
        let reference = if p == 3 {
            gallery::gap3_literal_decomposition()
        } else {
            let ws = gallery::weyl_unitaries(p).unwrap();
            let mut us = Vec::new();
            for w in &ws {
                for sign in [1.0, -1.0] {
                    us.push(dirsum(w, &CMatrix::from_element(1, 1, c(sign, 0.0))));
                }
            }
            MixedUnitaryDecomposition::new(vec![1.0 / (2 * p) as f64; 2 * p], us, &tol()).unwrap()
        };
        ensure!(
            decompositions_equivalent(&cert.decomposition, &reference, &tol()),
            "gap({p},1) decomposition not equivalent to the reference"
        );
        notes.push(format!("({want_r},{want_n}) res {res:.1e}"));
    }
    Ok(notes.join(", "))
}

fn search_separation() -> Outcome {
    let g = gallery::gap_channel(3, 1).unwrap();
    let cfg = SearchConfig {
        restarts: 200,
        seed: 0,
        ..SearchConfig::default()
    };
    let res = murank_search(&g, &cfg, &tol()).map_err(|e| e.to_string())?;
    ensure!(res.n_found == Some(6), "found N = {:?}", res.n_found);
    let mut log = Vec::new();
    for n in [4usize, 5] {
        let a = res
            .attempts
            .iter()
            .find(|a| a.n == n)
            .ok_or_else(|| format!("no attempt at N = {n}"))?;
        ensure!(a.status == SearchStatus::NotFound, "N = {n}: {:?}", a.status);
        log.push(format!("N={n} best {:.3}", a.objective));
    }
    let d = res.decomposition.as_ref().unwrap();
    ensure!(residual(&g, d) <= 1e-8, "N = 6 residual {:.2e}", residual(&g, d));
    Ok(format!("N=6 found; {} (non-certifying)", log.join(", ")))
}

fn correlation_fixtures() -> Outcome {
    let c4 = gallery::corr_c4();
    ensure!(rank(&c4) == 3, "rank(C4) = {}", rank(&c4));
    let phi = channels::schur_channel(&c4, &tol()).unwrap();
    let cfg = SearchConfig::default();
    let res = search_decomposition(&phi, 4, &cfg, &tol()).map_err(|e| e.to_string())?;
    ensure!(res.status == SearchStatus::Found, "N = 4 search: {:?}", res.status);
    let d = res.decomposition.unwrap();
    let t = toroidal_from_decomposition(&d, &tol()).map_err(|e| e.to_string())?;
    let search_res = (t.correlation() - &c4).norm();
    ensure!(search_res <= 1e-8, "N = 4 toroidal residual {search_res:.2e}");
    let ct = gallery::corr_c4_tensor_i2();
    ensure!(rank(&ct) == 6, "rank(C4 x I2) = {}", rank(&ct));
    let swapped = linalg::kron(&c4, &identity(2));
    ensure!(rank(&swapped) == 6, "rank(kron(C4, I2)) = {}", rank(&swapped));
    let lit = (gallery::toroidal_ctensor_i2().correlation() - &ct).norm();
    ensure!(lit <= 1e-10, "six-vector literal residual {lit:.2e}");
    Ok(format!("N=4 residual {search_res:.1e}; tensor literal {lit:.1e}"))
}

fn mub_fixtures() -> Outcome {
    for d in [2usize, 3, 5] {
        let fam = gallery::mub_family(d).map_err(|e| e.to_string())?;
        let defect = fam.unbiasedness_defect();
        ensure!(defect <= 1e-10, "d = {d}: unbiasedness defect {defect:.2e}");
        let mc = gallery::mub_correlation(d).unwrap();
        let rec = (mc.decomposition.correlation() - &mc.c).norm();
        ensure!(rec <= 1e-10, "d = {d}: reconstruction {rec:.2e}");
        let rk = rank(&gram_square(&mc.c));
        ensure!(rk == d * d - d + 1, "d = {d}: rank(conj(C) o C) = {rk}");
    }
    Ok("d = 2, 3, 5".into())
}

fn werner_holevo_even() -> Outcome {
    for n in [2usize, 4, 6, 8] {
        let wh = gallery::wh_channels(n).unwrap();
        let anti = gallery::wh_antisym_decomposition(n).map_err(|e| e.to_string())?;
        ensure!(anti.len() == n * (n - 1) / 2, "n = {n}: {} antisym terms", anti.len());
        ensure!(
            anti.unitaries().iter().all(|u| (u + u.transpose()).norm() <= 1e-10
                && unitarity_defect(u) <= 1e-10),
            "n = {n}: antisym term not skew-symmetric unitary"
        );
        ensure!(pairwise_orthogonal(anti.unitaries(), 1e-10), "n = {n}: antisym not orthogonal");
        let r1 = residual(&wh.phi1, &anti);
        ensure!(r1 <= 1e-10, "n = {n}: antisym residual {r1:.2e}");
        let sym = gallery::wh_sym_even_decomposition(n).map_err(|e| e.to_string())?;
        ensure!(sym.len() == n * (n + 1) / 2, "n = {n}: {} sym terms", sym.len());
        ensure!(
            sym.unitaries().iter().all(|u| is_symmetric(u, 1e-10) && unitarity_defect(u) <= 1e-10),
            "n = {n}: sym term not symmetric unitary"
        );
        ensure!(pairwise_orthogonal(sym.unitaries(), 1e-10), "n = {n}: sym not orthogonal");
        let r0 = residual(&wh.phi0, &sym);
        ensure!(r0 <= 1e-10, "n = {n}: sym residual {r0:.2e}");
    }
    Ok("n = 2, 4, 6, 8".into())
}

fn werner_holevo_odd() -> Outcome {
    for n in [3usize, 5, 7] {
        let phi0 = gallery::wh_symmetric(n).unwrap();
        let d = gallery::wh_sym_odd_decomposition(n).map_err(|e| e.to_string())?;
        ensure!(d.len() == n * (n + 3) / 2, "n = {n}: {} terms", d.len());
        let r = residual(&phi0, &d);
        ensure!(r <= 1e-10, "n = {n}: residual {r:.2e}");
    }
    let d3 = gallery::wh_sym3_decomposition();
    ensure!(d3.len() == 6, "six-term construction has {} terms", d3.len());
    ensure!(
        d3.unitaries().iter().all(|u| is_symmetric(u, 1e-10) && unitarity_defect(u) <= 1e-10),
        "six-term construction: not symmetric unitaries"
    );
    ensure!(pairwise_orthogonal(d3.unitaries(), 1e-10), "six-term construction: not orthogonal");
    let r = residual(&gallery::wh_symmetric(3).unwrap(), &d3);
    ensure!(r <= 1e-10, "six-term residual {r:.2e}");
    Ok(format!("n = 3, 5, 7; six-term residual {r:.1e}"))
}

fn low_dimension_constructive() -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut worst_mod: f64 = 0.0;
    let mut checked_unique = 0;
    for rk in [2usize, 3] {
        for i in 0..200u64 {
            let seed = 10_000 * rk as u64 + i;
            let cm = gallery::random_correlation(3, rk, seed).unwrap();
            let want = rank(&cm);
            ensure!(want == rk, "seed {seed}: fixture rank {want}");
            let t = toroidal_decompose_small(&cm, &tol())
                .map_err(|e| format!("seed {seed}: {e}"))?;
            ensure!(t.len() == want, "seed {seed}: N = {} for rank {want}", t.len());
            worst_res = worst_res.max((t.correlation() - &cm).norm());
            for v in t.vectors() {
                for z in v {
                    worst_mod = worst_mod.max((z.norm() - 1.0).abs());
                }
            }
            let unimodular_offdiag = (0..3)
                .any(|j| (0..3).any(|k| j != k && (cm[(j, k)].norm() - 1.0).abs() <= 1e-6));
            if rk == 2 && !unimodular_offdiag {
                let g = rank(&gram_square(&cm));
                ensure!(g == 3, "seed {seed}: rank(conj(C) o C) = {g}");
                checked_unique += 1;
            }
        }
    }
    ensure!(worst_res <= 1e-8, "worst reconstruction {worst_res:.2e}");
    ensure!(worst_mod <= 1e-8, "worst modulus defect {worst_mod:.2e}");
    Ok(format!(
        "400 matrices, residual {worst_res:.1e}, modulus {worst_mod:.1e}, {checked_unique} rank-2 unique"
    ))
}

fn zero_diagonal_robustness() -> Outcome {
    let mut worst_u: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for n in 2..=8usize {
        let mut rng = linalg::rng_from_seed(500 + n as u64);
        for _ in 0..1000 {
            let mut z = linalg::gaussian_matrix(n, n, &mut rng);
            let shift = linalg::trace(&z) / c(n as f64, 0.0);
            for i in 0..n {
                z[(i, i)] -= shift;
            }
            let u = zero_diagonal_unitary(&z, &tol()).map_err(|e| format!("n = {n}: {e}"))?;
            worst_u = worst_u.max(unitarity_defect(&u));
            let w = &u * &z * u.adjoint();
            let d = (0..n).map(|i| w[(i, i)].norm()).fold(0.0, f64::max) / z.norm();
            worst_d = worst_d.max(d);
        }
    }
    ensure!(worst_u <= 1e-10, "unitarity defect {worst_u:.2e}");
    ensure!(worst_d <= 1e-8, "relative diagonal {worst_d:.2e}");
    Ok(format!("7000 matrices, unitarity {worst_u:.1e}, diagonal {worst_d:.1e}"))
}

fn witnesses_diagonalize(phi: &KrausChannel, u: &CMatrix, v: &CMatrix) -> bool {
    let conj = phi.conjugated(u, v).expect("shapes match");
    conj.kraus().iter().all(|a| {
        let off: f64 = a
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx % a.nrows() != idx / a.nrows())
            .map(|(_, z)| z.norm_sqr())
            .sum();
        off.sqrt() <= 1e-8 * a.norm().max(1.0)
    })
}

fn schur_equivalence() -> Outcome {
    let mut cases: Vec<(String, KrausChannel)> = (0..200u64)
        .map(|s| (format!("random rank-2 #{s}"), gallery::random_unital_rank2(3, s).unwrap()))
        .collect();
    let mut corrs = vec![
        ("corrB3".to_string(), gallery::corr_b3()),
        ("corrC4".to_string(), gallery::corr_c4()),
        ("ctensor2".to_string(), gallery::corr_c4_tensor_i2()),
        ("dephasing 3".to_string(), identity(3)),
    ];
    for d in [2usize, 3] {
        corrs.push((format!("mubcorr {d}"), gallery::mub_correlation(d).unwrap().c));
    }
    for (name, cm) in corrs {
        cases.push((name, channels::schur_channel(&cm, &tol()).unwrap()));
    }
    for (name, phi) in &cases {
        let res = schur_equivalence_check(phi, &tol()).map_err(|e| format!("{name}: {e}"))?;
        ensure!(res.equivalent, "{name}: reported not Schur-equivalent");
        let (u, v) = res.witnesses.as_ref().ok_or_else(|| format!("{name}: no witnesses"))?;
        ensure!(witnesses_diagonalize(phi, u, v), "{name}: witnesses do not diagonalize");
    }
    let weyl = schur_equivalence_check(&gallery::weyl_channel(3).unwrap(), &tol())
        .map_err(|e| e.to_string())?;
    ensure!(!weyl.equivalent, "weyl(3) reported Schur-equivalent");
    Ok(format!("{} Schur-equivalent channels verified; weyl(3) rejected", cases.len()))
}

fn bound_consistency() -> Result<usize, String> {
    let mut fixtures: Vec<(String, KrausChannel, usize)> = Vec::new();
    for p in [3usize, 5, 7] {
        fixtures.push((format!("weyl {p}"), gallery::weyl_channel(p).unwrap(), p));
    }
    for (p, n) in [(3usize, 6usize), (5, 10)] {
        fixtures.push((format!("gap {p}"), gallery::gap_channel(p, 1).unwrap(), n));
    }
    for n in [2usize, 4, 6] {
        let wh = gallery::wh_channels(n).unwrap();
        fixtures.push((format!("wh1 {n}"), wh.phi1, n * (n - 1) / 2));
        fixtures.push((format!("wh0 {n}"), wh.phi0, n * (n + 1) / 2));
    }
    for n in [3usize, 5] {
        fixtures.push((format!("wh0 {n}"), gallery::wh_symmetric(n).unwrap(), n * (n + 3) / 2));
    }
    let schur = |cm: &CMatrix| channels::schur_channel(cm, &tol()).unwrap();
    fixtures.push(("wh0 3 six-term".into(), gallery::wh_symmetric(3).unwrap(), 6));
    fixtures.push(("corrB3".into(), schur(&gallery::corr_b3()), 2));
    fixtures.push(("corrC4".into(), schur(&gallery::corr_c4()), 4));
    fixtures.push(("ctensor2".into(), schur(&gallery::corr_c4_tensor_i2()), 6));
    for d in [2usize, 3, 5] {
        fixtures.push((format!("mubcorr {d}"), schur(&gallery::mub_correlation(d).unwrap().c), d));
    }
    for (name, phi, known) in &fixtures {
        let b = rank_bounds(phi, &tol()).map_err(|e| format!("{name}: {e}"))?;
        let cap = (b.r * b.r + 1 - b.s).min(b.r * b.r - b.r + 1);
        ensure!(
            b.r <= *known && *known <= cap && *known <= b.upper,
            "{name}: r = {}, s = {}, upper = {}, known N = {known}",
            b.r,
            b.s,
            b.upper
        );
    }
    Ok(fixtures.len())
}

/// Two Kraus lists of one channel give complementary channels related by a
/// partial isometry; recover it by Procrustes and measure the mismatch.
fn complementary_freedom() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let phi = gallery::random_channel(3, 3, seed).unwrap();
        let w = linalg::haar_isometry(5, 3, 1000 + seed).unwrap();
        let other = KrausChannel::new(
            (0..5)
                .map(|k| {
                    let mut b = CMatrix::zeros(3, 3);
                    for (j, a) in phi.kraus().iter().enumerate() {
                        b += a * w[(k, j)];
                    }
                    b
                })
                .collect(),
            &tol(),
        )
        .map_err(|e| e.to_string())?;
        let psi = channels::complementary_of_list(&phi).unwrap();
        let psi2 = channels::complementary_of_list(&other).unwrap();
        let rows = |ch: &KrausChannel| {
            CMatrix::from_fn(ch.kraus().len(), 9, |k, i| ch.kraus()[k][(i / 3, i % 3)])
        };
        let cross = rows(&other) * rows(&phi).adjoint();
        let svd = cross.svd(true, true);
        let v = svd.u.unwrap() * svd.v_t.unwrap();
        let mut rng = linalg::rng_from_seed(77 + seed);
        for _ in 0..5 {
            let x = linalg::gaussian_matrix(3, 3, &mut rng);
            let lhs = psi2.apply(&x).unwrap();
            let rhs = &v * psi.apply(&x).unwrap() * v.adjoint();
            worst = worst.max((lhs - rhs).norm() / x.norm());
        }
    }
    ensure!(worst <= 1e-8, "complementary mismatch {worst:.2e}");
    Ok(worst)
}

fn gradient_agreement() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = linalg::rng_from_seed(3000 + seed);
        let r = 2 + (seed % 3) as usize;
        let n_terms = r + (seed % 4) as usize;
        let basis: Vec<CMatrix> = (0..3).map(|_| linalg::gaussian_matrix(r, r, &mut rng)).collect();
        let v = linalg::haar_isometry_with(n_terms, r, &mut rng).unwrap();
        let e = linalg::gaussian_matrix(n_terms, r, &mut rng);
        let g = euclidean_gradient(&basis, &v);
        let analytic = (g.adjoint() * &e).trace().re;
        let h = 1e-6;
        let step = &e * c(h, 0.0);
        let fd = (objective(&basis, &(&v + &step)) - objective(&basis, &(&v - &step))) / (2.0 * h);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-8));
    }
    ensure!(worst <= 1e-5, "relative gradient mismatch {worst:.2e}");
    Ok(worst)
}

fn property_suite() -> Outcome {
    let n = bound_consistency()?;
    let comp = complementary_freedom()?;
    let grad = gradient_agreement()?;
    Ok(format!(
        "bounds on {n} fixtures; complementary {comp:.1e}; gradient {grad:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("weyl fixture", weyl_fixture),
        ("gap-channel separation", gap_separation),
        ("search reproduces separation", search_separation),
        ("correlation fixtures", correlation_fixtures),
        ("MUB fixtures", mub_fixtures),
        ("Werner-Holevo even n", werner_holevo_even),
        ("Werner-Holevo odd n", werner_holevo_odd),
        ("low-dimension constructive", low_dimension_constructive),
        ("zero-diagonal robustness", zero_diagonal_robustness),
        ("Schur equivalence", schur_equivalence),
        ("property suite", property_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {label} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {label} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
