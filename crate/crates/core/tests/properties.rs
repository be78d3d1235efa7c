use proptest::prelude::*;

use socint::coding::build_threshold_code;
use socint::dist::{entropy, varentropy, FiniteDistribution};
use socint::logspace::{log_add, log_sum_exp, CompensatedSum};
use socint::sources::TypeClassTable;
use socint::spectrum::{quantile_rate, std_normal_cdf, std_normal_quantile, SpectrumCDF};
use socint::tradeoff::delta_uniform_gap;

fn dist() -> impl Strategy<Value = FiniteDistribution> {
    prop::collection::vec(0.001f64..1.0, 2..6).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let k = p.len();
        p[k - 1] = 1.0 - p[..k - 1].iter().sum::<f64>();
        FiniteDistribution::from_probs(p).unwrap()
    })
}

proptest! {
    #[test]
    fn log_sum_exp_matches_direct(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
        let folded = xs.iter().fold(f64::NEG_INFINITY, |a, &b| log_add(a, b));
        prop_assert!((folded - direct).abs() < 1e-12);
    }

    #[test]
    fn shifted_log_sum_exp(xs in prop::collection::vec(-5.0f64..5.0, 1..10), shift in -800.0f64..800.0) {
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        prop_assert!((log_sum_exp(&moved) - shift - log_sum_exp(&xs)).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_cancels(x in 1.0f64..1e15, k in 1usize..50) {
        let mut s = CompensatedSum::new();
        s.add(x);
        for _ in 0..k {
            s.add(1e-3);
        }
        s.add(-x);
        prop_assert!((s.value() - k as f64 * 1e-3).abs() < 1e-9);
    }

    #[test]
    fn entropy_is_bounded(p in dist()) {
        let h = entropy(&p);
        prop_assert!(h >= 0.0 && h <= (p.len() as f64).ln() + 1e-12);
        prop_assert!(varentropy(&p) >= 0.0);
    }

    #[test]
    fn normal_quantile_inverts_cdf(eps in 1e-9f64..(1.0 - 1e-9)) {
        let x = std_normal_quantile(eps).unwrap();
        prop_assert!((std_normal_cdf(x) - eps).abs() < 1e-12 * eps.max(1e-3) / 1e-3);
    }

    #[test]
    fn spectrum_is_a_distribution(p in dist(), n in 1u64..30, eps in 0.01f64..0.99) {
        let t = TypeClassTable::iid(&p, n).unwrap();
        let f = SpectrumCDF::from_table(&t);
        let c = f.cumulative();
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((c[c.len() - 1] - 1.0).abs() < 1e-9);
        let q = quantile_rate(&f, eps).unwrap();
        prop_assert!(q >= f.min_value() && q <= f.max_value());
        prop_assert!(f.cdf(q) >= eps - 1e-12);
    }

    #[test]
    fn delta_is_between_zero_and_one_minus_top(p in dist(), n in 1u64..6) {
        let t = TypeClassTable::iid(&p, n).unwrap();
        let top = t.classes().iter().map(|c| c.element_prob()).fold(0.0, f64::max);
        let d = delta_uniform_gap(&t).value;
        prop_assert!(d >= -1e-15 && d <= 1.0 - top + 1e-12);
    }

    #[test]
    fn code_error_decreases_with_size(p in dist(), n in 1u64..10, k in 0.0f64..8.0) {
        let t = TypeClassTable::iid(&p, n).unwrap();
        let small = build_threshold_code(&t, k);
        let large = build_threshold_code(&t, k + 0.5);
        prop_assert!(large.error <= small.error + 1e-15);
    }

    #[test]
    fn text_round_trip(p in dist()) {
        let text: Vec<String> = p.probs().iter().enumerate().map(|(i, x)| format!("s{i}:{x:?}")).collect();
        let q = FiniteDistribution::parse_text(&text.join(",")).unwrap();
        prop_assert_eq!(q.probs(), p.probs());
        prop_assert_eq!(q.labels()[0].as_str(), "s0");
    }
}
