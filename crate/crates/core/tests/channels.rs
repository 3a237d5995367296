use muchan::channels::{self, KrausChannel};
use muchan::gallery;
use muchan::linalg::{self, c, hermitian_eigen, identity, CMatrix};
use muchan::Tolerance;
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn random_input(n: usize, seed: u64) -> CMatrix {
    linalg::gaussian_matrix(n, n, &mut linalg::rng_from_seed(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn choi_is_psd_with_trace_n(n in 1usize..5, r in 1usize..5, seed in any::<u64>()) {
        let phi = gallery::random_channel(n, r, seed).unwrap();
        let j = phi.choi();
        let (vals, _) = hermitian_eigen(j.matrix()).unwrap();
        prop_assert!(*vals.last().unwrap() >= -1e-12);
        prop_assert!((linalg::trace(j.matrix()) - c(n as f64, 0.0)).norm() < 1e-10);
        prop_assert!((j.partial_trace_output() - identity(n)).norm() < 1e-10);
    }

    #[test]
    fn minimized_list_describes_the_same_map(n in 1usize..4, r in 1usize..6, seed in any::<u64>()) {
        let phi = gallery::random_channel(n, r, seed).unwrap();
        let min = phi.minimized(&tol()).unwrap();
        prop_assert!(min.kraus().len() <= (n * n).min(r));
        prop_assert!((min.choi().matrix() - phi.choi().matrix()).norm() < 1e-10);
        for (i, a) in min.kraus().iter().enumerate() {
            for b in &min.kraus()[i + 1..] {
                prop_assert!(linalg::inner(a, b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kraus_rotation_preserves_the_map(n in 1usize..4, r in 1usize..4, extra in 0usize..3, seed in any::<u64>()) {
        let phi = gallery::random_channel(n, r, seed).unwrap();
        let w = linalg::haar_isometry(r + extra, r, seed ^ 0x55).unwrap();
        let rot = phi.rotated(&w).unwrap();
        prop_assert!((rot.choi().matrix() - phi.choi().matrix()).norm() < 1e-10);
        let x = random_input(n, seed);
        prop_assert!((rot.apply(&x).unwrap() - phi.apply(&x).unwrap()).norm() < 1e-10 * x.norm().max(1.0));
    }

    #[test]
    fn complementary_preserves_trace_and_diagonal(n in 1usize..4, r in 1usize..4, seed in any::<u64>()) {
        let phi = gallery::random_channel(n, r, seed).unwrap();
        let psi = channels::complementary_of_list(&phi).unwrap();
        prop_assert_eq!(psi.dim_out(), r);
        let x = random_input(n, seed.wrapping_add(1));
        let y = psi.apply(&x).unwrap();
        prop_assert!((linalg::trace(&y) - linalg::trace(&x)).norm() < 1e-10 * x.norm().max(1.0));
        for j in 0..r {
            let a = &phi.kraus()[j];
            let want = linalg::trace(&(a.adjoint() * a * &x));
            prop_assert!((y[(j, j)] - want).norm() < 1e-10 * x.norm().max(1.0));
        }
    }

    #[test]
    fn direct_sum_acts_blockwise(n in 1usize..3, m in 1usize..3, seed in any::<u64>()) {
        let phi = gallery::random_channel(n, 2, seed).unwrap();
        let psi = gallery::random_channel(m, 3, seed.wrapping_add(9)).unwrap();
        let sum = channels::direct_sum(&phi, &psi).unwrap();
        let x = random_input(n, seed);
        let y = random_input(m, seed.wrapping_add(2));
        let out = sum.apply(&linalg::dirsum(&x, &y)).unwrap();
        let want = linalg::dirsum(&phi.apply(&x).unwrap(), &psi.apply(&y).unwrap());
        prop_assert!((out - want).norm() < 1e-10 * (x.norm() + y.norm()));
    }

    #[test]
    fn schur_channel_is_entrywise_product(n in 1usize..5, rank in 1usize..5, seed in any::<u64>()) {
        let rank = rank.min(n);
        let cm = gallery::random_correlation(n, rank, seed).unwrap();
        let phi = channels::schur_channel(&cm, &tol()).unwrap();
        let x = random_input(n, seed);
        let want = cm.component_mul(&x);
        prop_assert!((phi.apply(&x).unwrap() - want).norm() < 1e-10 * x.norm().max(1.0));
        prop_assert_eq!(phi.choi_rank(&tol()).unwrap(), rank);
    }
}

#[test]
fn weyl_choi_rank_and_complement() {
    let phi = gallery::weyl_channel(3).unwrap();
    assert_eq!(phi.choi_rank(&tol()).unwrap(), 3);
    let min = channels::minimal_kraus(&phi.choi(), &tol()).unwrap();
    assert_eq!(min.kraus().len(), 3);
    for (i, a) in min.kraus().iter().enumerate() {
        for b in &min.kraus()[i + 1..] {
            assert!(linalg::inner(a, b).norm() < 1e-12);
        }
    }
    // Ψ(X)(j,k) = (1/3) Tr(W_k* W_j X) for the unnormalized W_a.
    let w = gallery::weyl3_literal();
    let psi = channels::complementary_of_list(&phi).unwrap();
    let x = random_input(3, 4);
    let y = psi.apply(&x).unwrap();
    for j in 0..3 {
        for k in 0..3 {
            let want = linalg::trace(&(w[k].adjoint() * &w[j] * &x)) / c(3.0, 0.0);
            assert!((y[(j, k)] - want).norm() < 1e-12);
        }
    }
}

#[test]
fn channel_identities_on_small_inputs() {
    let t = tol();
    let ones = CMatrix::from_element(3, 3, c(1.0, 0.0));
    let id = channels::schur_channel(&ones, &t).unwrap();
    assert_eq!(id.choi_rank(&t).unwrap(), 1);
    let x = random_input(3, 8);
    assert!((id.apply(&x).unwrap() - &x).norm() < 1e-12);

    let phi1 = gallery::wh_antisymmetric(2).unwrap();
    let e11 = linalg::unit(2, 2, 0, 0);
    assert!((phi1.apply(&e11).unwrap() - linalg::unit(2, 2, 1, 1)).norm() < 1e-12);

    let gap = gallery::gap_channel(3, 1).unwrap();
    assert_eq!(gap.choi_rank(&t).unwrap(), 4);
    assert!(gap.is_unital(&t));
}

#[test]
fn dependent_kraus_operator_is_absorbed() {
    let base = gallery::random_channel(3, 4, 21).unwrap();
    let mut ops: Vec<CMatrix> = base.kraus().to_vec();
    let combo = (&ops[0] + &ops[1]) * c(0.5, 0.0);
    ops.push(combo);
    let total: CMatrix = ops.iter().map(|a| a.adjoint() * a).sum();
    let (vals, vecs) = hermitian_eigen(&total).unwrap();
    let inv_sqrt = &vecs * CMatrix::from_diagonal(&inv_sqrt_diag(&vals)) * vecs.adjoint();
    let ops: Vec<CMatrix> = ops.iter().map(|a| a * &inv_sqrt).collect();
    let phi = KrausChannel::new(ops, &tol()).unwrap();
    assert_eq!(phi.kraus().len(), 5);
    assert_eq!(phi.choi_rank(&tol()).unwrap(), 4);
}

fn inv_sqrt_diag(vals: &[f64]) -> linalg::CVector {
    linalg::CVector::from_iterator(vals.len(), vals.iter().map(|v| c(1.0 / v.sqrt(), 0.0)))
}
