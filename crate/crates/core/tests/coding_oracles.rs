mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_dist, sorted_outcomes, strings};
use socint::coding::{build_threshold_code, converse_check_code, min_log_size_for_error};
use socint::dist::{entropy, FiniteDistribution};
use socint::randomness::linear_grid;
use socint::sources::TypeClassTable;

fn shapes(rng: &mut ChaCha8Rng) -> (usize, u32) {
    match rng.random_range(0..3) {
        0 => (2, rng.random_range(1..=10)),
        1 => (3, rng.random_range(1..=6)),
        _ => (4, rng.random_range(1..=5)),
    }
}

#[test]
fn smallest_code_matches_exhaustive_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut compared = 0;
    for _ in 0..300 {
        let (d, n) = shapes(&mut rng);
        let p = random_dist(&mut rng, d);
        let t = TypeClassTable::iid(&p, n as u64).unwrap();
        let q = sorted_outcomes(&p, n);
        let eps: f64 = rng.random_range(0.0..0.9);
        // smallest M whose top-M mass leaves at most eps
        let mut tail: f64 = q.iter().sum();
        let mut m = 0;
        while tail > eps && m < q.len() {
            tail -= q[m];
            m += 1;
        }
        if (tail - eps).abs() < 1e-9
            || (tail + q.get(m.wrapping_sub(1)).copied().unwrap_or(0.0) - eps).abs() < 1e-9
        {
            continue;
        }
        let got = min_log_size_for_error(&t, eps).exp().round() as usize;
        assert_eq!(got, m.max(1), "d={d} n={n} eps={eps}");
        compared += 1;
    }
    assert!(compared > 250);
}

#[test]
fn threshold_code_error_is_the_top_m_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let (d, n) = shapes(&mut rng);
        let p = random_dist(&mut rng, d);
        let t = TypeClassTable::iid(&p, n as u64).unwrap();
        let q = sorted_outcomes(&p, n);
        let mut kept = 0.0;
        for m in 1..=q.len() {
            kept += q[m - 1];
            let c = build_threshold_code(&t, (m as f64).ln());
            assert!((c.error - (1.0 - kept).max(0.0)).abs() < 1e-12, "m={m}");
            assert_eq!(c.exact_size, Some(m as u64));
        }
    }
}

#[test]
fn achievability_and_converse_hold_for_every_code() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (d, n) = shapes(&mut rng);
        let p = random_dist(&mut rng, d);
        let t = TypeClassTable::iid(&p, n as u64).unwrap();
        let total = d.pow(n);
        let m = rng.random_range(1..=total);
        let log_m = (m as f64).ln();
        let c = build_threshold_code(&t, log_m);
        // a threshold code keeps at least everything above 1/M
        assert!(1.0 - c.error >= t.mass_above(log_m) - 1e-12);
        for lp in linear_grid(0.0, log_m + 4.0, 20) {
            assert!(converse_check_code(&t, c.log_size, c.error, lp).holds);
        }
        // and the converse holds for an arbitrary codebook of the same size
        let all = strings(&p, n);
        let mut kept = 0.0;
        for _ in 0..m {
            kept += all[rng.random_range(0..all.len())].1;
        }
        let kept = kept.min(1.0);
        for lp in linear_grid(0.0, log_m + 4.0, 20) {
            assert!(converse_check_code(&t, log_m, 1.0 - kept, lp).holds);
        }
    }
}

#[test]
fn type_table_matches_string_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (d, n) in [(2, 12), (2, 7), (3, 7), (4, 5), (5, 4)] {
        let p = random_dist(&mut rng, d);
        let t = TypeClassTable::iid(&p, n as u64).unwrap();
        let mut by_type: std::collections::BTreeMap<Vec<u32>, (u128, f64)> = Default::default();
        for (s, pr) in strings(&p, n) {
            let mut comp = vec![0u32; d];
            for x in s {
                comp[x] += 1;
            }
            let e = by_type.entry(comp).or_default();
            e.0 += 1;
            e.1 += pr;
        }
        assert_eq!(t.len(), by_type.len());
        for c in t.classes() {
            let (cnt, mass) = by_type[&c.composition];
            assert_eq!(c.exact_count, Some(cnt));
            assert!((c.prob() - mass).abs() < 1e-12);
        }
        assert!((t.total_probability() - 1.0).abs() < 1e-12);
        assert!((t.entropy() - n as f64 * entropy(&p)).abs() < 1e-10);
    }
}

#[test]
fn zero_probability_symbols_are_impossible_classes() {
    let p = FiniteDistribution::from_probs(vec![0.6, 0.0, 0.4]).unwrap();
    let t = TypeClassTable::iid(&p, 4).unwrap();
    let possible = t.classes().iter().filter(|c| c.is_possible()).count();
    assert_eq!(possible, 5);
    assert_eq!(min_log_size_for_error(&t, 0.0), 16f64.ln());
}

#[test]
fn uniform_source_offsets_are_the_integer_rounding() {
    // flat spectrum: the second-order terms are ±ln(1 − eps)/√n, vanishing with n
    let p = FiniteDistribution::uniform(4).unwrap();
    let h = 4f64.ln();
    for n in [10u64, 20, 40] {
        let t = TypeClassTable::iid(&p, n).unwrap();
        let want = 0.5f64.ln() / (n as f64).sqrt();
        let code = socint::coding::second_order_coefficient(min_log_size_for_error(&t, 0.5), n, h);
        let ext = socint::randomness::max_log_size_for_distance(&t, 0.5).unwrap();
        let ext = socint::coding::second_order_coefficient(ext.log_size, n, h);
        assert!((code - want).abs() < 1e-9, "n={n}: {code}");
        assert!((ext + want).abs() < 1e-6, "n={n}: {ext}");
    }
}
