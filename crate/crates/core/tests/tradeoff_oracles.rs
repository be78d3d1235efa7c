mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{distance_to_uniform, random_dist, sorted_outcomes, strings, subset_delta};
use socint::dist::{entropy, FiniteDistribution};
use socint::randomness::{converse_check_extractor, linear_grid};
use socint::sources::TypeClassTable;
use socint::tradeoff::{build_joint_pair, delta_uniform_gap, verify_tradeoff, Encoder};
use socint::Error;

fn outcome_table(p: &[f64]) -> TypeClassTable {
    TypeClassTable::from_outcomes(&FiniteDistribution::from_probs(p.to_vec()).unwrap(), 1)
}

#[test]
fn delta_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..400 {
        let k = rng.random_range(1..=12);
        let p = if k == 1 {
            FiniteDistribution::from_probs(vec![1.0]).unwrap()
        } else {
            random_dist(&mut rng, k)
        };
        let got = delta_uniform_gap(&outcome_table(p.probs())).value;
        let want = subset_delta(p.probs());
        assert!((got - want).abs() < 1e-12, "k={k}: {got} vs {want}");
    }
}

#[test]
fn delta_with_ties_and_zeros() {
    for p in [
        vec![0.25, 0.25, 0.25, 0.25],
        vec![0.5, 0.25, 0.25],
        vec![0.3, 0.3, 0.2, 0.2, 0.0, 0.0],
        vec![0.9, 0.05, 0.05],
        vec![0.125; 8],
    ] {
        let got = delta_uniform_gap(&outcome_table(&p)).value;
        assert!((got - subset_delta(&p)).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn class_level_delta_matches_outcome_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=5);
        let p = random_dist(&mut rng, d);
        let classes = TypeClassTable::iid(&p, n as u64).unwrap();
        let outcomes = sorted_outcomes(&p, n);
        let a = delta_uniform_gap(&classes).value;
        let b = delta_uniform_gap(&outcome_table(&outcomes)).value;
        assert!((a - b).abs() < 1e-12, "d={d} n={n}");
        if outcomes.len() <= 12 {
            assert!((a - subset_delta(&outcomes)).abs() < 1e-12);
        }
    }
}

/// MAP error and output law of an arbitrary map from outcomes to `m` bins.
fn map_performance(p: &[f64], phi: &[usize], m: usize) -> (f64, Vec<f64>) {
    let mut loads = vec![0.0; m];
    let mut best = vec![0.0f64; m];
    for (&q, &b) in p.iter().zip(phi) {
        loads[b] += q;
        best[b] = best[b].max(q);
    }
    (1.0 - best.iter().sum::<f64>(), loads)
}

#[test]
fn tradeoff_holds_for_arbitrary_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let k = rng.random_range(2..=10);
        let p = random_dist(&mut rng, k);
        let m = rng.random_range(1..=k + 2);
        let phi: Vec<usize> = (0..k).map(|_| rng.random_range(0..m)).collect();
        let (err, loads) = map_performance(p.probs(), &phi, m);
        let dist = distance_to_uniform(&loads);
        let delta = subset_delta(p.probs());
        assert!(err + dist >= delta - 1e-12, "{err} + {dist} < {delta}");
        // converse for extractors
        let t = outcome_table(p.probs());
        for lp in linear_grid(0.0, (m as f64).ln() + 3.0, 20) {
            assert!(converse_check_extractor(&t, (m as f64).ln(), dist, lp).holds);
        }
    }
}

#[test]
fn joint_pairs_satisfy_the_tradeoff() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(1..=8u64);
        let p = random_dist(&mut rng, d);
        let t = TypeClassTable::iid(&p, n).unwrap();
        let a = entropy(&p) + rng.random_range(-0.5..0.5);
        let b = rng.random_range(-2.0..2.0);
        let pair = build_joint_pair(&t, a, b);
        let check = pair.verify(&t);
        assert!(check.holds, "d={d} n={n} a={a} b={b}: {check:?}");
        assert!(check.code_error <= pair.inverse_only_error + 1e-12);
        assert!((0.0..=1.0).contains(&check.extractor_distance));
        if let Some(c) = pair.spread_achievability {
            assert!(c.holds, "{c:?}");
        }
        assert!(check.extractor_distance <= pair.proof_bound + 1e-12 || pair.proof_bound >= 1.0);
    }
}

#[test]
fn joint_pair_on_small_source_matches_enumeration() {
    // n = 3, a large enough that every outcome is kept injectively
    let p = FiniteDistribution::bernoulli(0.3).unwrap();
    let t = TypeClassTable::iid(&p, 3).unwrap();
    let pair = build_joint_pair(&t, 10.0, 0.0);
    assert_eq!(pair.code_error, 0.0);
    let loads: Vec<f64> = strings(&p, 3).into_iter().map(|x| x.1).collect();
    assert!((pair.extractor_distance - distance_to_uniform(&loads)).abs() < 1e-12);
}

#[test]
fn mismatched_encoders_are_rejected() {
    let p = FiniteDistribution::bernoulli(0.2).unwrap();
    let t = TypeClassTable::iid(&p, 4).unwrap();
    let e1 = Encoder::of_extractor(&t, 2f64.ln());
    let e2 = Encoder::of_extractor(&t, 3f64.ln());
    assert!(matches!(
        verify_tradeoff((&e1, 0.1), (&e2, 0.1), &t),
        Err(Error::EncoderMismatch)
    ));
    assert!(verify_tradeoff((&e1, 0.1), (&e1, 0.2), &t).is_ok());
}
