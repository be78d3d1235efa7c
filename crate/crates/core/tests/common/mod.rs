#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use socint::dist::FiniteDistribution;

pub fn random_dist(rng: &mut ChaCha8Rng, d: usize) -> FiniteDistribution {
    let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    let head: f64 = p[..d - 1].iter().sum();
    p[d - 1] = 1.0 - head;
    FiniteDistribution::from_probs(p).unwrap()
}

/// Every string of length `n` as (symbols, probability), in lexicographic order.
pub fn strings(p: &FiniteDistribution, n: u32) -> Vec<(Vec<usize>, f64)> {
    let d = p.len();
    let total = d.pow(n);
    (0..total)
        .map(|mut k| {
            let mut s = vec![0; n as usize];
            for slot in s.iter_mut().rev() {
                *slot = k % d;
                k /= d;
            }
            let pr = s.iter().map(|&x| p.probs()[x]).product();
            (s, pr)
        })
        .collect()
}

/// Outcome probabilities of `P^n`, descending.
pub fn sorted_outcomes(p: &FiniteDistribution, n: u32) -> Vec<f64> {
    let mut v: Vec<f64> = strings(p, n).into_iter().map(|x| x.1).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `min_S ½ Σ |p(x) − 1_S(x)/|S||` by enumerating every nonempty subset.
pub fn subset_delta(p: &[f64]) -> f64 {
    let k = p.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let m = mask.count_ones() as f64;
        let d: f64 = (0..k)
            .map(|i| {
                let u = if mask >> i & 1 == 1 { 1.0 / m } else { 0.0 };
                (p[i] - u).abs()
            })
            .sum();
        best = best.min(0.5 * d);
    }
    best
}

/// Half the L1 distance from a load vector to uniform on its length.
pub fn distance_to_uniform(loads: &[f64]) -> f64 {
    let u = 1.0 / loads.len() as f64;
    0.5 * loads.iter().map(|q| (q - u).abs()).sum::<f64>()
}
