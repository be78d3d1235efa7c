//! Small-scale reference values checked against the library.

use crate::coding::{build_threshold_code, min_log_size_for_error};
use crate::dist::{entropy, renyi_psi, varentropy, FiniteDistribution};
use crate::randomness::{
    build_extractor, build_kl_optimal_code, extractor_distance, s_star_family, s_star_second_order,
    HasProfile,
};
use crate::sources::{markov_entropy_rate, markov_varentropy, MarkovSource, TypeClassTable};
use crate::spectrum::{gaussian_second_order, quantile_rate, std_normal_cdf, SpectrumCDF};
use crate::tradeoff::{build_joint_pair, delta_uniform_gap};
use crate::universal::{universal_code_error, universal_type_code};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn near(name: &'static str, got: crate::Result<f64>, want: f64, tol: f64) -> CheckOutcome {
    match got {
        Ok(g) => CheckOutcome {
            name,
            pass: (g - want).abs() <= tol,
            detail: format!("got {g:.9}, want {want} ± {tol:e}"),
        },
        Err(e) => CheckOutcome {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn holds(name: &'static str, ok: crate::Result<bool>, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        pass: matches!(ok, Ok(true)),
        detail: match ok {
            Err(e) => format!("error: {e}"),
            Ok(_) => detail,
        },
    }
}

pub fn run_selfcheck() -> Vec<CheckOutcome> {
    let b11 = FiniteDistribution::bernoulli(0.11).expect("valid");
    let t2 = TypeClassTable::iid(&b11, 2).expect("small table");
    let h = entropy(&b11);
    let sym = MarkovSource::parse_text("0.8,0.2;0.2,0.8").expect("valid chain");
    let p4 = FiniteDistribution::from_probs(vec![0.4, 0.3, 0.2, 0.1]).expect("valid");
    let t4 = TypeClassTable::from_outcomes(&p4, 1);
    let mut out = vec![
        near("entropy Bernoulli(0.11)", Ok(h), 0.346515, 1e-6),
        near(
            "varentropy Bernoulli(0.11)",
            Ok(varentropy(&b11)),
            0.427940,
            1e-6,
        ),
        near(
            "psi Bernoulli(0.11) s=0.5",
            renyi_psi(&b11, 0.5),
            0.242994,
            1e-6,
        ),
        near(
            "Markov entropy rate q=0.2",
            markov_entropy_rate(&sym),
            0.500402,
            1e-6,
        ),
        near(
            "Markov varentropy q=0.2",
            markov_varentropy(&sym),
            0.307490,
            1e-6,
        ),
        near(
            "spectrum quantile n=2 eps=0.9",
            quantile_rate(&SpectrumCDF::from_table(&t2), 0.9),
            1.161904,
            1e-6,
        ),
        near("normal cdf", Ok(std_normal_cdf(1.959964)), 0.975, 1e-6),
        near(
            "gaussian second order V=1",
            gaussian_second_order(1.0, 0.975),
            1.959964,
            1e-6,
        ),
        near(
            "threshold code M=1 error",
            Ok(build_threshold_code(&t2, 0.0).error),
            0.2079,
            1e-12,
        ),
        near(
            "threshold code M=3 error",
            Ok(build_threshold_code(&t2, 3f64.ln()).error),
            0.0121,
            1e-12,
        ),
        near(
            "min code size eps=0.01",
            Ok(min_log_size_for_error(&t2, 0.01)),
            4f64.ln(),
            1e-12,
        ),
        near(
            "greedy distance M=3",
            build_extractor(&t4, 3).map(|e| extractor_distance(&e)),
            1.0 / 15.0,
            1e-12,
        ),
        near(
            "greedy distance M=2",
            build_extractor(&t4, 2).map(|e| e.profile().distance()),
            0.0,
            1e-12,
        ),
        near(
            "delta (0.5,0.25,0.25)",
            FiniteDistribution::from_probs(vec![0.5, 0.25, 0.25])
                .map(|p| delta_uniform_gap(&TypeClassTable::from_outcomes(&p, 1)).value),
            1.0 / 6.0,
            1e-12,
        ),
        near(
            "S* Bernoulli(0.11) delta=0.1",
            s_star_family(&b11, 0.1).map(|s| s.s_star),
            0.446515,
            1e-6,
        ),
        near(
            "S*2 Bernoulli(0.11) delta=0.1",
            s_star_family(&b11, 0.1).map(|s| s.s_star_2),
            0.5852,
            1e-3,
        ),
        near(
            "S*2 uniform(4)",
            FiniteDistribution::uniform(4)
                .and_then(|p| s_star_family(&p, 0.3))
                .map(|s| s.s_star_2),
            4f64.ln(),
            1e-6,
        ),
        near(
            "second-order S* at phi(0)",
            s_star_second_order(1.0, 0.398_942_280_401_432_7).map(|s| s.s_star_2nd),
            0.0,
            1e-8,
        ),
        near(
            "KL code injective error n=2 a=1",
            Ok(build_kl_optimal_code(&t2, 1.0).injective.error),
            0.2079,
            1e-12,
        ),
        near(
            "universal code error n=2",
            universal_type_code(2, 2, 2f64.ln(), 0.0).and_then(|c| universal_code_error(&c, &b11)),
            0.0,
            0.0,
        ),
    ];
    let t16 = TypeClassTable::iid(&b11, 16);
    out.push(holds(
        "trade-off pair n=16",
        t16.map(|t| build_joint_pair(&t, h, 0.0).verify(&t).holds),
        "ε(Φ) + ε(Ψ) >= δ(p_n)".into(),
    ));
    out
}
