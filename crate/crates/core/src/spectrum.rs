//! Exact information spectrum: the law of `-(1/n) ln p_n(ω)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::logspace::CompensatedSum;
use crate::sources::TypeClassTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub mass: f64,
}

/// Right-continuous CDF over atoms sorted by value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCDF {
    n: u64,
    atoms: Vec<Atom>,
    cumulative: Vec<f64>,
    /// `tail[i]` = mass of atoms `i..`, summed from the largest value down.
    #[serde(skip)]
    tail: Vec<f64>,
}

/// Which side of an atom a quantile lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bound {
    /// `inf{a : F(a) >= eps}`.
    #[default]
    Inclusive,
    /// `inf{a : F(a) > eps}`.
    Exclusive,
}

impl SpectrumCDF {
    /// Builds the spectrum of a table. Classes with equal per-element log
    /// probability merge into one atom (exact equality).
    pub fn from_table(table: &TypeClassTable) -> Self {
        let n = table.n();
        let mut atoms: Vec<(f64, CompensatedSum)> = Vec::new();
        // descending probability = ascending spectrum value
        for (_, c) in table.descending_possible() {
            match atoms.last_mut() {
                Some((lp, acc)) if *lp == c.per_element_log_prob => acc.add(c.prob()),
                _ => {
                    let mut acc = CompensatedSum::new();
                    acc.add(c.prob());
                    atoms.push((c.per_element_log_prob, acc));
                }
            }
        }
        let atoms = atoms
            .into_iter()
            .map(|(lp, m)| Atom {
                value: -lp / n as f64,
                mass: m.value(),
            })
            .filter(|a| a.mass > 0.0)
            .collect();
        Self::from_sorted_atoms(n, atoms)
    }

    /// A single atom of mass one, the spectrum limit of an i.i.d. source.
    pub fn point_mass(value: f64) -> Self {
        Self::from_sorted_atoms(1, vec![Atom { value, mass: 1.0 }])
    }

    /// Builds from arbitrary `(value, mass)` pairs; equal values merge.
    pub fn from_atoms(n: u64, mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms
            .iter()
            .any(|a| !a.value.is_finite() || !(a.mass >= 0.0))
        {
            return Err(Error::Shape(
                "atoms need finite values and non-negative masses".into(),
            ));
        }
        atoms.retain(|a| a.mass > 0.0);
        if atoms.is_empty() {
            return Err(Error::Empty);
        }
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(m) if m.value == a.value => m.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let total: f64 = crate::logspace::sum(&merged.iter().map(|a| a.mass).collect::<Vec<_>>());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized {
                sum: total,
                tol: 1e-9,
            });
        }
        Ok(Self::from_sorted_atoms(n, merged))
    }

    fn from_sorted_atoms(n: u64, atoms: Vec<Atom>) -> Self {
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = CompensatedSum::new();
        for a in &atoms {
            acc.add(a.mass);
            cumulative.push(acc.value());
        }
        let mut tail = vec![0.0; atoms.len()];
        let mut acc = CompensatedSum::new();
        for i in (0..atoms.len()).rev() {
            acc.add(atoms[i].mass);
            tail[i] = acc.value();
        }
        SpectrumCDF {
            n,
            atoms,
            cumulative,
            tail,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn min_value(&self) -> f64 {
        self.atoms[0].value
    }

    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].value
    }

    /// `F(a) = p_n{-(1/n) ln p_n <= a}`.
    pub fn cdf(&self, a: f64) -> f64 {
        let k = self.atoms.partition_point(|x| x.value <= a);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `p_n{-(1/n) ln p_n < a}`.
    pub fn cdf_strict(&self, a: f64) -> f64 {
        let k = self.atoms.partition_point(|x| x.value < a);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `p_n{-(1/n) ln p_n >= a}`, summed from the small end.
    pub fn tail_mass(&self, a: f64) -> f64 {
        let k = self.atoms.partition_point(|x| x.value < a);
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// `p_n{-(1/n) ln p_n > a}`, summed from the small end.
    pub fn tail_mass_strict(&self, a: f64) -> f64 {
        let k = self.atoms.partition_point(|x| x.value <= a);
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    /// `Σ_{x <= a} (a - x) mass(x)`.
    pub(crate) fn lower_partial_moment(&self, a: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|x| x.value <= a)
            .map(|x| (a - x.value) * x.mass)
            .collect::<CompensatedSum>()
            .value()
    }

    /// CSV with header `value,mass,cumulative`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,mass,cumulative\n");
        for (a, c) in self.atoms.iter().zip(&self.cumulative) {
            let _ = writeln!(out, "{},{},{}", a.value, a.mass, c);
        }
        out
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1]",
        })
    }
}

/// Smallest atom value whose cumulative mass reaches `eps` (inclusive).
pub fn quantile_rate(f: &SpectrumCDF, eps: f64) -> Result<f64> {
    quantile_rate_with(f, eps, Bound::Inclusive)
}

pub fn quantile_rate_with(f: &SpectrumCDF, eps: f64, bound: Bound) -> Result<f64> {
    check_eps(eps)?;
    let k = match bound {
        Bound::Inclusive => f.cumulative.partition_point(|&c| c < eps),
        Bound::Exclusive => f.cumulative.partition_point(|&c| c <= eps),
    };
    // rounding can leave the last cumulative a hair below 1
    Ok(f.atoms[k.min(f.atoms.len() - 1)].value)
}

/// `√n (quantile_rate(F, eps) - a)`.
pub fn second_order_quantile(f: &SpectrumCDF, eps: f64, a: f64) -> Result<f64> {
    Ok((f.n as f64).sqrt() * (quantile_rate(f, eps)? - a))
}

/// `-(1/n) ln p_n{-(1/n) ln p_n >= a}`; `+inf` for an empty tail.
pub fn sigma_exponent(f: &SpectrumCDF, a: f64) -> f64 {
    if a <= f.min_value() {
        return 0.0;
    }
    let t = f.tail_mass(a);
    if t <= 0.0 {
        f64::INFINITY
    } else {
        (-t.ln() / f.n as f64).max(0.0)
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Acklam's rational approximation followed by one Newton step.
pub fn std_normal_quantile(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1)",
        });
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| ((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5];
    let tail_den = |q: f64| (((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0;
    let x = if eps < P_LOW {
        let q = (-2.0 * eps.ln()).sqrt();
        tail(q) / tail_den(q)
    } else if eps <= 1.0 - P_LOW {
        let q = eps - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - eps).ln()).sqrt();
        -tail(q) / tail_den(q)
    };
    let pdf = std_normal_pdf(x);
    if pdf > 0.0 {
        // compare in the smaller tail to keep relative precision
        let step = if x > 0.0 {
            (std_normal_cdf(-x) - (1.0 - eps)) / pdf
        } else {
            (eps - std_normal_cdf(x)) / pdf
        };
        Ok(x + step)
    } else {
        Ok(x)
    }
}

/// `√V Φ⁻¹(eps)`; zero when `V = 0`.
pub fn gaussian_second_order(v: f64, eps: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::NegativeVariance(v));
    }
    let q = std_normal_quantile(eps)?;
    Ok(if v == 0.0 { 0.0 } else { v.sqrt() * q })
}
