use proptest::prelude::*;

use partdist::classical::{j_func, weak_submajorize};
use partdist::decay::{absorb_constant, decay_rate};
use partdist::io::{self, MatrixFile};
use partdist::matops::{self, CMatrix};
use partdist::measurement::{classify, lift, outcome_distribution, random_rank_one_povm, Family, Povm};
use partdist::quantum;
use partdist::state::{
    random_bipartite_operator, random_bipartite_state, random_hermitian, random_mixed, random_pure, random_unitary,
    DensityMatrix, OperatorKind, Seed,
};
use partdist::verify::{check_lemma1, check_partial_trace_monotonicity};

fn state(d: usize, seed: u64, rank: usize) -> DensityMatrix {
    if rank == 1 {
        random_pure(d, Seed(seed))
    } else {
        random_mixed(d, rank.min(d), Seed(seed)).unwrap()
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn ky_fan_is_a_unitarily_invariant_norm(d in 2usize..5, seed in any::<u64>()) {
        let a = random_hermitian(d, Seed(seed)).into_matrix();
        let b = random_hermitian(d, Seed(seed ^ 1)).into_matrix();
        let u = random_unitary(d, Seed(seed ^ 2));
        let v = random_unitary(d, Seed(seed ^ 3));
        let mut prev = 0.0;
        for k in 1..=d {
            let na = matops::ky_fan_norm(&a, k).unwrap();
            prop_assert!(na >= prev - 1e-12);
            prev = na;
            let nb = matops::ky_fan_norm(&b, k).unwrap();
            prop_assert!(matops::ky_fan_norm(&(&a + &b), k).unwrap() <= na + nb + 1e-9);
            let rotated = &u * &a * &v;
            prop_assert!((matops::ky_fan_norm(&rotated, k).unwrap() - na).abs() < 1e-9);
        }
        prop_assert!((matops::ky_fan_norm(&a, d).unwrap() - matops::trace_norm(&a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn distance_and_fidelity_ladders(d in 2usize..5, seed in any::<u64>(), r0 in 1usize..5, r1 in 1usize..5) {
        let a = state(d, seed, r0);
        let b = state(d, seed.wrapping_add(1), r1);
        let f0 = quantum::fidelity(&a, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f0));
        let mut prev_d = 0.0;
        let mut prev_f = f64::INFINITY;
        for k in 0..=d {
            let dk = quantum::partitioned_trace_distance(&a, &b, k).unwrap();
            let fk = quantum::partial_fidelity(&a, &b, k).unwrap();
            prop_assert!(dk >= prev_d - 1e-12 && fk <= prev_f + 1e-12);
            prop_assert!((dk - quantum::partitioned_trace_distance(&b, &a, k).unwrap()).abs() < 1e-12);
            prop_assert!((fk - quantum::partial_fidelity(&b, &a, k).unwrap()).abs() < 1e-9);
            prev_d = dk;
            prev_f = fk;
        }
        let dtr = quantum::trace_distance(&a, &b).unwrap();
        prop_assert!((prev_d - dtr).abs() < 1e-12 && dtr <= 1.0 + 1e-9);
        // Fuchs-van de Graaf sandwich.
        prop_assert!(1.0 - f0 <= dtr + 1e-9);
        prop_assert!(dtr <= (1.0 - f0 * f0).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn helstrom_attains_pe(d in 2usize..5, seed in any::<u64>(), rank in 1usize..5) {
        let a = state(d, seed, rank);
        let b = state(d, seed.wrapping_add(7), 1);
        let pe = quantum::pe_quantum(&a, &b).unwrap();
        prop_assert!((quantum::helstrom_pe(&a, &b).unwrap() - pe).abs() < 1e-9);
        let povm = random_rank_one_povm(d, d + 2, Seed(seed)).unwrap();
        let (p0, p1) = quantum::induced_pair(&a, &b, &povm).unwrap();
        prop_assert!(partdist::classical::pe_classical(&p0, &p1).unwrap() >= pe - 1e-9);
    }

    #[test]
    fn lift_commutes_with_statistics(n in 2usize..4, d in 2usize..4, seed in any::<u64>()) {
        let rt = random_bipartite_state(n, d, n * d, Seed(seed)).unwrap();
        let povm = random_rank_one_povm(d, d + 1, Seed(seed ^ 5)).unwrap();
        let lifted = lift(&povm, n).unwrap();
        let p = outcome_distribution(rt.state(), &lifted).unwrap();
        let q = outcome_distribution(&rt.reduced(), &povm).unwrap();
        for (x, y) in p.probs().iter().zip(q.probs()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        for t in lifted.traces().iter().zip(povm.traces()) {
            prop_assert!((t.0 - n as f64 * t.1).abs() < 1e-10);
        }
    }

    #[test]
    fn classify_ignores_element_order(d in 2usize..4, m in 0usize..6, seed in any::<u64>(), shift in 0usize..8) {
        let povm = random_rank_one_povm(d, d + m % (d * d - d + 1), Seed(seed)).unwrap();
        let mut elements: Vec<CMatrix> = povm.elements().to_vec();
        let len = elements.len();
        elements.rotate_left(shift % len);
        prop_assert_eq!(classify(&Povm::new(elements).unwrap()), classify(&povm));
    }

    #[test]
    fn partial_trace_never_helps(n in 2usize..4, d in 2usize..4, seed in any::<u64>()) {
        let a = random_bipartite_state(n, d, 2, Seed(seed)).unwrap();
        let b = random_bipartite_state(n, d, n * d, Seed(seed ^ 9)).unwrap();
        for k in 0..=d {
            let (dist, fid) = check_partial_trace_monotonicity(&a, &b, k).unwrap();
            prop_assert!(dist >= -1e-9 && fid >= -1e-9, "k={} {} {}", k, dist, fid);
        }
    }

    #[test]
    fn partial_trace_kyfan_holds_for_all_kinds(n in 2usize..4, d in 2usize..4, seed in any::<u64>(), kind in 0usize..3) {
        let kind = [OperatorKind::General, OperatorKind::Hermitian, OperatorKind::TracelessHermitian][kind];
        let at = random_bipartite_operator(n, d, Seed(seed), kind);
        for k in 1..=d {
            prop_assert!(check_lemma1(&at, k).unwrap() >= -1e-9);
        }
        let f = matops::lr_factorization(&at).unwrap();
        prop_assert!(f.residuals.max() <= matops::lr_bound(&at));
    }

    #[test]
    fn matrix_files_round_trip_exactly(d in 1usize..5, seed in any::<u64>()) {
        let m = random_unitary(d, Seed(seed));
        let back: MatrixFile = io::from_json(&io::to_json(&MatrixFile::from_matrix(&m)).unwrap()).unwrap();
        prop_assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn absorbed_envelope_dominates(c in 0.01f64..1e4, eps in 0.01f64..0.99, extra in 0usize..50) {
        let a = absorb_constant(c, eps).unwrap();
        prop_assert!(a.epsilon < 1.0 && a.epsilon >= eps);
        let m = a.n + extra;
        prop_assert!(c * eps.powi(m as i32) <= a.epsilon.powi(m as i32) * (1.0 + 1e-12));
    }

    #[test]
    fn geometric_sequences_recover_their_base(eps in 0.05f64..0.95, c in 0.5f64..2.0) {
        let v: Vec<f64> = (1..=30).map(|n| c * eps.powi(n)).collect();
        let r = decay_rate(&v, 10).unwrap();
        prop_assert!(r.indistinguishable);
        let lo = eps * c.min(1.0).powf(1.0 / 10.0);
        let hi = eps * c.max(1.0).powf(1.0 / 10.0);
        prop_assert!(r.rate >= lo - 1e-12 && r.rate <= hi + 1e-12);
    }

    #[test]
    fn prefix_sums_define_weak_submajorization(v in prop::collection::vec(0.0f64..1.0, 1..6), bump in 0.0f64..1.0) {
        let bigger: Vec<f64> = v.iter().map(|x| x + bump).collect();
        prop_assert!(weak_submajorize(&v, &bigger));
        prop_assert!(weak_submajorize(&v, &v));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn sd_estimate_is_sandwiched(d in 2usize..4, seed in any::<u64>(), rank in 1usize..4, fam in 0usize..2) {
        let a = state(d, seed, rank);
        let b = state(d, seed.wrapping_add(3), 1);
        let family = [Family::A, Family::B][fam];
        let est = quantum::estimate_sd(&a, &b, family, 3, Seed(seed)).unwrap();
        let dtr = quantum::trace_distance(&a, &b).unwrap();
        prop_assert!(est.value >= -1e-12 && est.value <= dtr + 1e-9);
        prop_assert_eq!(classify(&est.best_povm).contains(family), true);
        prop_assert!((quantum::sd_povm(&a, &b, &est.best_povm).unwrap() - est.value).abs() < 1e-12);
        if family == Family::B {
            // The Helstrom start alone gives J(PE).
            let pe = quantum::pe_quantum(&a, &b).unwrap();
            prop_assert!(est.value >= j_func(pe.clamp(0.0, 1.0)).unwrap() - 1e-9);
        }
    }
}
