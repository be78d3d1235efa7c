//! Irreducible Markov sources.
//!
//! Transition matrices use the column-stochastic convention `Q[j][i]` =
//! probability of moving to state `j` from state `i`: column `i` holds the
//! outgoing distribution of input state `i`. Most libraries store the
//! transpose.

use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};
use crate::linalg::solve_refined;
use crate::logspace::{log_sum_exp, CompensatedSum};

const COLUMN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSource {
    /// `columns[i][j] = Q_{j,i}`.
    columns: Vec<Vec<f64>>,
    initial: FiniteDistribution,
}

impl MarkovSource {
    /// Builds a source from the columns of `Q` and an initial distribution.
    pub fn new(columns: Vec<Vec<f64>>, initial: FiniteDistribution) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(Error::Empty);
        }
        if initial.len() != d {
            return Err(Error::Shape(format!(
                "initial distribution has {} states, matrix has {d}",
                initial.len()
            )));
        }
        for (i, col) in columns.iter().enumerate() {
            if col.len() != d {
                return Err(Error::Shape(format!(
                    "column {i} has {} entries",
                    col.len()
                )));
            }
            if col.iter().any(|&q| !q.is_finite() || q < 0.0) {
                return Err(Error::NotStochastic {
                    column: i,
                    sum: f64::NAN,
                });
            }
            let s = crate::logspace::sum(col);
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::NotStochastic { column: i, sum: s });
            }
        }
        let src = MarkovSource { columns, initial };
        src.check_irreducible()?;
        Ok(src)
    }

    /// Uses the stationary distribution as the initial distribution.
    pub fn stationary_start(columns: Vec<Vec<f64>>) -> Result<Self> {
        let d = columns.len();
        let tmp = MarkovSource::new(columns, FiniteDistribution::uniform(d.max(1))?)?;
        let pi = markov_stationary(&tmp)?;
        Ok(MarkovSource {
            columns: tmp.columns,
            initial: pi,
        })
    }

    /// Row-major `Q_{j,i}` (row `j` lists `Q_{j,1..d}`) converted to columns.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::stationary_start(transpose(&rows)?)
    }

    /// Text form `q11,q12;q21,q22`: rows of `Q_{j,i}` separated by `;`.
    pub fn parse_text(text: &str) -> Result<Self> {
        let rows = text
            .trim()
            .trim_matches('"')
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(crate::dist::parse_probability)
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    /// JSON list of columns: `[[Q_11, Q_21], [Q_12, Q_22]]`.
    pub fn parse_json(text: &str) -> Result<Self> {
        let cols: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::stationary_start(cols)
    }

    pub fn with_initial(&self, initial: FiniteDistribution) -> Result<Self> {
        MarkovSource::new(self.columns.clone(), initial)
    }

    pub fn states(&self) -> usize {
        self.columns.len()
    }

    /// `Q_{to, from}`.
    pub fn q(&self, to: usize, from: usize) -> f64 {
        self.columns[from][to]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn initial(&self) -> &FiniteDistribution {
        &self.initial
    }

    /// Relabels states by `perm` (new index `perm[i]` for old state `i`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let d = self.states();
        let mut cols = vec![vec![0.0; d]; d];
        let mut init = vec![0.0; d];
        for i in 0..d {
            init[perm[i]] = self.initial.probs()[i];
            for j in 0..d {
                cols[perm[i]][perm[j]] = self.q(j, i);
            }
        }
        MarkovSource::new(cols, FiniteDistribution::from_probs(init)?)
    }

    fn check_irreducible(&self) -> Result<()> {
        let d = self.states();
        for start in 0..d {
            let mut seen = vec![false; d];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for j in 0..d {
                    if !seen[j] && self.q(j, i) > 0.0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::NotIrreducible(start));
            }
        }
        Ok(())
    }

    fn column_entropy(&self, i: usize) -> f64 {
        crate::dist::entropy_of(&self.columns[i])
    }
}

fn transpose(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("transition matrix must be square".into()));
    }
    Ok((0..d)
        .map(|i| rows.iter().map(|r| r[i]).collect())
        .collect())
}

/// Stationary distribution `π` with `Qπ = π`.
///
/// Solved directly from `(I - Q)π = 0, Σπ = 1`, which also covers periodic
/// chains where plain power iteration oscillates.
pub fn markov_stationary(src: &MarkovSource) -> Result<FiniteDistribution> {
    let d = src.states();
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|i| f64::from(u8::from(i == j)) - src.q(j, i))
                .collect()
        })
        .collect();
    let mut b = vec![0.0; d];
    a[d - 1] = vec![1.0; d];
    b[d - 1] = 1.0;
    let mut pi = solve_refined(&a, &b)?;
    for x in pi.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = crate::logspace::sum(&pi);
    for x in pi.iter_mut() {
        *x /= s;
    }
    let labels = src.initial.labels().to_vec();
    FiniteDistribution::new(labels, pi)
}

/// Entropy rate `H(Q) = -Σ_{j,i} π_i Q_{j,i} ln Q_{j,i}` under the stationary law.
pub fn markov_entropy_rate(src: &MarkovSource) -> Result<f64> {
    let pi = markov_stationary(src)?;
    Ok(entropy_rate_with(src, pi.probs()))
}

fn entropy_rate_with(src: &MarkovSource, pi: &[f64]) -> f64 {
    (0..src.states())
        .map(|i| pi[i] * src.column_entropy(i))
        .collect::<CompensatedSum>()
        .value()
        .max(0.0)
}

struct Centered {
    pi: Vec<f64>,
    /// `x[i][j] = -ln Q_{j,i} - H(Q)` (0 where `Q_{j,i} = 0`).
    x: Vec<Vec<f64>>,
    /// `g[i] = E[x | from i]`.
    g: Vec<f64>,
}

fn centered(src: &MarkovSource) -> Result<Centered> {
    let pi = markov_stationary(src)?.probs().to_vec();
    let h = entropy_rate_with(src, &pi);
    let d = src.states();
    let x: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let q = src.q(j, i);
                    if q > 0.0 {
                        -q.ln() - h
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let g = (0..d)
        .map(|i| (0..d).map(|j| src.q(j, i) * x[i][j]).sum())
        .collect();
    Ok(Centered { pi, x, g })
}

fn single_step_variance(src: &MarkovSource, c: &Centered) -> f64 {
    let d = src.states();
    let mut s = CompensatedSum::new();
    for i in 0..d {
        for j in 0..d {
            s.add(c.pi[i] * src.q(j, i) * c.x[i][j] * c.x[i][j]);
        }
    }
    s.value()
}

fn finish_variance(v: f64) -> Result<f64> {
    if v < -1e-12 {
        return Err(Error::NegativeVariance(v));
    }
    Ok(v.max(0.0))
}

/// Asymptotic variance `lim Var[-ln Q^n(ω)]/n` of the block log-likelihood.
///
/// Single-step variance plus twice the sum of all lagged covariances, the
/// latter through the Poisson equation `u^T (I - Q) = g^T`, `u·π = 0`. When
/// lags beyond one vanish (for example when all columns have equal entropy)
/// this equals [`markov_varentropy_lag1`].
pub fn markov_varentropy(src: &MarkovSource) -> Result<f64> {
    let c = centered(src)?;
    let d = src.states();
    // (I - Q + π 1^T)^T u = g; row i, column j: δ_ij - Q_{j,i} + π_j
    let a_t: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| f64::from(u8::from(i == j)) - src.q(j, i) + c.pi[j])
                .collect()
        })
        .collect();
    let u = solve_refined(&a_t, &c.g)?;
    let mut cross = CompensatedSum::new();
    for i in 0..d {
        for j in 0..d {
            cross.add(c.pi[i] * src.q(j, i) * c.x[i][j] * u[j]);
        }
    }
    finish_variance(single_step_variance(src, &c) + 2.0 * cross.value())
}

/// Single-step variance plus only the lag-1 cross-covariance term
/// `2 Σ_{k,j,i} Q_{k,j} Q_{j,i} π_i x(k,j) x(j,i)`.
pub fn markov_varentropy_lag1(src: &MarkovSource) -> Result<f64> {
    let c = centered(src)?;
    let d = src.states();
    let mut cross = CompensatedSum::new();
    for i in 0..d {
        for j in 0..d {
            cross.add(c.pi[i] * src.q(j, i) * c.x[i][j] * c.g[j]);
        }
    }
    finish_variance(single_step_variance(src, &c) + 2.0 * cross.value())
}

/// Exact mean and variance of `-ln Q^n(ω_1..ω_n)` (initial term included),
/// by a transfer recursion carrying mass, first and second moments per state.
pub fn markov_loglik_moments(src: &MarkovSource, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            range: "n >= 1",
        });
    }
    let d = src.states();
    if d > 64 {
        return Err(Error::CapExceeded {
            what: "moment recursion states",
            required: d as f64,
            cap: 64.0,
        });
    }
    let pi = markov_stationary(src)?;
    let h = entropy_rate_with(src, pi.probs());
    let init = src.initial();
    let h0 = crate::dist::entropy_of(init.probs());
    // moments of the centered sum S = L - h0 - (t-1) h
    let mut mass: Vec<f64> = init.probs().to_vec();
    let mut m1: Vec<f64> = init
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { p * (-p.ln() - h0) } else { 0.0 })
        .collect();
    let mut m2: Vec<f64> = init
        .probs()
        .iter()
        .map(|&p| {
            if p > 0.0 {
                let l = -p.ln() - h0;
                p * l * l
            } else {
                0.0
            }
        })
        .collect();
    let step: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let q = src.q(j, i);
                    if q > 0.0 {
                        -q.ln() - h
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    for _ in 1..n {
        let mut nm = vec![0.0; d];
        let mut n1 = vec![0.0; d];
        let mut n2 = vec![0.0; d];
        for i in 0..d {
            if mass[i] == 0.0 && m1[i] == 0.0 && m2[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let q = src.q(j, i);
                if q == 0.0 {
                    continue;
                }
                let l = step[i][j];
                nm[j] += q * mass[i];
                n1[j] += q * (m1[i] + l * mass[i]);
                n2[j] += q * (m2[i] + 2.0 * l * m1[i] + l * l * mass[i]);
            }
        }
        mass = nm;
        m1 = n1;
        m2 = n2;
    }
    let e1 = crate::logspace::sum(&m1);
    let e2 = crate::logspace::sum(&m2);
    let mean = e1 + h0 + (n - 1) as f64 * h;
    Ok((mean, (e2 - e1 * e1).max(0.0)))
}

/// `ψ̄(s) = ln ρ(Q^{∘s})`, the log Perron root of the entrywise power.
///
/// Power iteration runs on `Q^{∘s} + I` so periodic chains converge too.
pub fn markov_psi(src: &MarkovSource, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "(0, 1]",
        });
    }
    let d = src.states();
    let a: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|i| {
                    let q = src.q(j, i);
                    (if q > 0.0 { (s * q.ln()).exp() } else { 0.0 }) + f64::from(u8::from(i == j))
                })
                .collect()
        })
        .collect();
    let mut v = vec![1.0 / d as f64; d];
    let mut lambda = 0.0;
    for _ in 0..1_000_000 {
        let w: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| a[j][i] * v[i]).sum())
            .collect();
        let norm: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        v = next;
        lambda = norm;
        if delta < 1e-15 {
            break;
        }
    }
    let rho = lambda - 1.0;
    Ok(rho.ln())
}

/// Log-sum-exp based `ψ` for a stationary i.i.d. embedding, used in tests.
#[allow(dead_code)]
pub(crate) fn iid_psi(p: &[f64], s: f64) -> f64 {
    let v: Vec<f64> = p.iter().filter(|&&x| x > 0.0).map(|x| s * x.ln()).collect();
    log_sum_exp(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(q: f64) -> MarkovSource {
        MarkovSource::stationary_start(vec![vec![1.0 - q, q], vec![q, 1.0 - q]]).unwrap()
    }

    fn iid_embedded(p: &[f64]) -> MarkovSource {
        MarkovSource::stationary_start(vec![p.to_vec(); p.len()]).unwrap()
    }

    fn cycle3() -> MarkovSource {
        MarkovSource::stationary_start(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    fn residual(src: &MarkovSource, pi: &[f64]) -> f64 {
        (0..src.states())
            .map(|j| ((0..src.states()).map(|i| src.q(j, i) * pi[i]).sum::<f64>() - pi[j]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn stationary_examples() {
        let pi = markov_stationary(&sym(0.3)).unwrap();
        assert!((pi.probs()[0] - 0.5).abs() < 1e-15);
        let src = MarkovSource::stationary_start(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let pi = markov_stationary(&src).unwrap();
        assert!((pi.probs()[0] - 5.0 / 6.0).abs() < 1e-14);
        assert!(residual(&src, pi.probs()) <= 1e-12);
        let emb = iid_embedded(&[0.2, 0.3, 0.5]);
        let pi = markov_stationary(&emb).unwrap();
        for (a, b) in pi.probs().iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        let c = cycle3();
        assert!(residual(&c, markov_stationary(&c).unwrap().probs()) <= 1e-12);
    }

    #[test]
    fn rejects_reducible_and_non_stochastic() {
        let reducible = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        assert!(matches!(
            MarkovSource::stationary_start(reducible),
            Err(Error::NotIrreducible(_))
        ));
        assert!(matches!(
            MarkovSource::stationary_start(vec![vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(Error::NotStochastic { column: 0, .. })
        ));
    }

    #[test]
    fn entropy_rate_examples() {
        assert!(markov_entropy_rate(&cycle3()).unwrap().abs() < 1e-15);
        assert!((markov_entropy_rate(&sym(0.2)).unwrap() - 0.500402).abs() < 1e-6);
        let emb = iid_embedded(&[0.89, 0.11]);
        assert!((markov_entropy_rate(&emb).unwrap() - 0.346515).abs() < 1e-6);
    }

    #[test]
    fn varentropy_examples() {
        assert!(markov_varentropy(&cycle3()).unwrap().abs() < 1e-12);
        let v = markov_varentropy(&sym(0.2)).unwrap();
        let b = crate::dist::varentropy(&FiniteDistribution::bernoulli(0.2).unwrap());
        assert!((v - b).abs() < 1e-9);
        assert!((v - 0.307490).abs() < 1e-6);
        let emb = iid_embedded(&[0.89, 0.11]);
        assert!((markov_varentropy(&emb).unwrap() - 0.427940).abs() < 1e-6);
        assert!((markov_varentropy_lag1(&emb).unwrap() - 0.427940).abs() < 1e-6);
    }

    #[test]
    fn text_form_is_row_major() {
        let src = MarkovSource::parse_text("0.9,0.5;0.1,0.5").unwrap();
        assert_eq!(src.q(1, 0), 0.1);
        let pi = markov_stationary(&src).unwrap();
        assert!((pi.probs()[0] - 5.0 / 6.0).abs() < 1e-14);
        let json = MarkovSource::parse_json("[[0.9,0.1],[0.5,0.5]]").unwrap();
        assert_eq!(json.columns(), src.columns());
    }

    #[test]
    fn psi_of_iid_embedding_matches_iid_psi() {
        let p = [0.6, 0.3, 0.1];
        let emb = iid_embedded(&p);
        for s in [0.1, 0.5, 0.9, 1.0] {
            assert!((markov_psi(&emb, s).unwrap() - iid_psi(&p, s)).abs() < 1e-10);
        }
        assert!(markov_psi(&sym(0.2), 1.0).unwrap().abs() < 1e-12);
    }
}
