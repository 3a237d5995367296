use muchan::channels::{self, KrausChannel};
use muchan::gallery;
use muchan::linalg::{self, c, haar_unitary, identity, root_of_unity, CMatrix};
use muchan::mu_analysis::{
    certified_gap_rank, channel_ranks, decompositions_equivalent, rank_bounds,
    schur_equivalence_check, unique_decomposition, uniqueness_certificate, verify_decomposition,
    MixedUnitaryDecomposition,
};
use muchan::{Error, Tolerance};
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn dephasing(n: usize) -> KrausChannel {
    channels::schur_channel(&identity(n), &tol()).unwrap()
}

#[test]
fn weyl_operator_system_dimensions() {
    for (p, s) in [(3usize, 7usize), (5, 21)] {
        let phi = gallery::weyl_channel(p).unwrap();
        assert_eq!(channel_ranks(&phi, &tol()).unwrap(), (p, s));
        assert!(uniqueness_certificate(&phi, &tol()).unwrap());
    }
}

#[test]
fn bounds_examples() {
    let b = rank_bounds(&gallery::weyl_channel(3).unwrap(), &tol()).unwrap();
    assert_eq!((b.r, b.s, b.upper, b.exact), (3, 7, 3, Some(3)));
    assert!(b.flags.unique_decomposition_certified && !b.flags.extremal);

    for n in 2..=3 {
        let b = rank_bounds(&dephasing(n), &tol()).unwrap();
        assert_eq!(b.exact, Some(n));
    }
    let b = rank_bounds(&dephasing(4), &tol()).unwrap();
    assert_eq!((b.r, b.s, b.upper, b.exact), (4, 4, 13, None));
    assert!(b.flags.schur_equivalent);
    assert!(!uniqueness_certificate(&dephasing(4), &tol()).unwrap());

    let rank2 = gallery::random_unital_rank2(3, 12).unwrap();
    let b = rank_bounds(&rank2, &tol()).unwrap();
    assert_eq!((b.r, b.exact), (2, Some(2)));

    assert!(uniqueness_certificate(&KrausChannel::identity(3), &tol()).unwrap());
}

#[test]
fn extremal_unital_channel_is_refused() {
    // Φ₁ on M_3 has r = 3 and s = 9 = r², so r² − s + 1 = 1 < r.
    let phi1 = gallery::wh_antisymmetric(3).unwrap();
    match rank_bounds(&phi1, &tol()) {
        Err(Error::Refusal(msg)) => assert!(msg.contains("not mixed unitary")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unique_decomposition_is_reproducible() {
    let phi = gallery::weyl_channel(5).unwrap();
    let a = unique_decomposition(&phi, &tol()).unwrap();
    let b = unique_decomposition(&phi, &tol()).unwrap();
    assert_eq!(a, b);
    assert!(verify_decomposition(&phi, &a, &tol()).unwrap().ok);
    assert!(decompositions_equivalent(&a, &gallery::weyl_decomposition(5).unwrap(), &tol()));
}

#[test]
fn unique_decomposition_survives_unitary_conjugation() {
    let u = haar_unitary(3, 1).unwrap();
    let v = haar_unitary(3, 2).unwrap();
    let phi = gallery::weyl_channel(3).unwrap().conjugated(&u, &v).unwrap();
    let d = unique_decomposition(&phi, &tol()).unwrap();
    assert_eq!(d.len(), 3);
    assert!(verify_decomposition(&phi, &d, &tol()).unwrap().ok);
    let expected: Vec<CMatrix> = gallery::weyl_unitaries(3)
        .unwrap()
        .iter()
        .map(|w| &u * w * &v)
        .collect();
    let reference = MixedUnitaryDecomposition::new(vec![1.0 / 3.0; 3], expected, &tol()).unwrap();
    assert!(decompositions_equivalent(&d, &reference, &tol()));
}

#[test]
fn gap_certificates_from_mub_correlations() {
    for (d, want) in [(2usize, (3usize, 4usize)), (3, (4, 6))] {
        let phi = channels::schur_channel(&gallery::mub_correlation(d).unwrap().c, &tol()).unwrap();
        let cert = certified_gap_rank(&phi, 1, &tol()).unwrap();
        assert_eq!((cert.choi_rank, cert.mu_rank), want);
        assert!(cert.verification.ok);
        assert_eq!(cert.decomposition.len(), want.1);
    }
}

#[test]
fn gap_certificate_needs_its_hypothesis() {
    match certified_gap_rank(&dephasing(4), 1, &tol()) {
        Err(Error::Refusal(_)) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn distinct_dephasing_decompositions_are_not_equivalent() {
    let z = linalg::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
    let s = linalg::diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
    let s_inv = linalg::diag(&[c(1.0, 0.0), c(0.0, -1.0)]);
    let a = MixedUnitaryDecomposition::new(vec![0.5, 0.5], vec![identity(2), z], &tol()).unwrap();
    let b = MixedUnitaryDecomposition::new(vec![0.5, 0.5], vec![s, s_inv], &tol()).unwrap();
    assert!(verify_decomposition(&dephasing(2), &a, &tol()).unwrap().ok);
    assert!(verify_decomposition(&dephasing(2), &b, &tol()).unwrap().ok);
    assert!(!decompositions_equivalent(&a, &b, &tol()));
}

#[test]
fn weyl_is_not_schur_equivalent() {
    let res = schur_equivalence_check(&gallery::weyl_channel(3).unwrap(), &tol()).unwrap();
    assert!(!res.equivalent);
    assert!(res.witnesses.is_none());
    assert!(res.max_commutator > 0.1);
}

fn split_and_rephase(d: &MixedUnitaryDecomposition, perm_seed: u64) -> MixedUnitaryDecomposition {
    let mut probs = Vec::new();
    let mut us = Vec::new();
    for (k, (p, u)) in d.probs().iter().zip(d.unitaries()).enumerate() {
        let phase = root_of_unity((perm_seed as i64 + 3 * k as i64) % 7, 7);
        if k == 0 {
            probs.extend([p / 2.0, p / 2.0]);
            us.extend([u * phase, u * phase.conj()]);
        } else {
            probs.push(*p);
            us.push(u * phase);
        }
    }
    let n = probs.len();
    let shift = (perm_seed as usize) % n;
    probs.rotate_left(shift);
    us.rotate_left(shift);
    MixedUnitaryDecomposition::new(probs, us, &tol()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equivalence_ignores_phases_order_and_splitting(p in prop::sample::select(vec![3usize, 5, 7]), seed in 0u64..1000) {
        let d = gallery::weyl_decomposition(p).unwrap();
        let e = split_and_rephase(&d, seed);
        prop_assert!(decompositions_equivalent(&d, &e, &tol()));
        prop_assert!(decompositions_equivalent(&e, &d, &tol()));
    }

    #[test]
    fn schur_check_is_invariant_under_conjugation(n in 2usize..5, rank in 1usize..4, seed in 0u64..10_000) {
        let rank = rank.min(n);
        let cm = gallery::random_correlation(n, rank, seed).unwrap();
        let phi = channels::schur_channel(&cm, &tol()).unwrap();
        let u = haar_unitary(n, seed.wrapping_mul(2)).unwrap();
        let v = haar_unitary(n, seed.wrapping_mul(2) + 1).unwrap();
        let conj = phi.conjugated(&u, &v).unwrap();
        let res = schur_equivalence_check(&conj, &tol()).unwrap();
        prop_assert!(res.equivalent);
        let (wu, wv) = res.witnesses.unwrap();
        let back = conj.conjugated(&wu, &wv).unwrap();
        for a in back.kraus() {
            let off = a.norm_squared() - (0..n).map(|i| a[(i, i)].norm_sqr()).sum::<f64>();
            prop_assert!(off.max(0.0).sqrt() <= 1e-8);
        }
    }

    #[test]
    fn rank2_unital_channels_are_exact_or_extremal(n in 2usize..6, seed in 0u64..10_000) {
        let phi = gallery::random_unital_rank2(n, seed).unwrap();
        let (r, s) = channel_ranks(&phi, &tol()).unwrap();
        prop_assert!(r <= 2);
        match rank_bounds(&phi, &tol()) {
            Ok(b) => {
                prop_assert!(s < 4);
                prop_assert_eq!(b.exact, Some(r));
                prop_assert!(b.flags.schur_equivalent);
            }
            // s = 4 = r² needs at least four independent diagonal entries.
            Err(Error::Refusal(_)) => prop_assert!(s == 4 && n >= 4),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
