//! Exact laws of sums of i.i.d. discrete variables.

use serde::{Deserialize, Serialize};

use super::check_probs;
use crate::error::{Error, Result};

/// Controls atom merging and the size cap of [`iid_sum_law_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumLawOptions {
    /// Values closer than `merge_tol * max(1, |v|)` collapse into one atom.
    pub merge_tol: f64,
    /// Maximum number of distinct atoms before giving up.
    pub max_atoms: usize,
}

impl Default for SumLawOptions {
    fn default() -> Self {
        Self {
            merge_tol: 1e-12,
            max_atoms: 10_000_000,
        }
    }
}

/// Exact law of `S = V_1 + ... + V_n` for i.i.d. `V_i` with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidSumDist {
    atom_values: Vec<f64>,
    atom_probs: Vec<f64>,
    n: usize,
    merge_tol: f64,
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl IidSumDist {
    pub fn atom_values(&self) -> &[f64] {
        &self.atom_values
    }

    pub fn atom_probs(&self) -> &[f64] {
        &self.atom_probs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distinct support points of the sum, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Which strict tail to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// `P(S > t)`
    Above,
    /// `P(S < t)`
    Below,
}

pub fn iid_sum_law(values: &[f64], probs: &[f64], n: usize) -> Result<IidSumDist> {
    iid_sum_law_with(values, probs, n, SumLawOptions::default())
}

pub fn iid_sum_law_with(values: &[f64], probs: &[f64], n: usize, opts: SumLawOptions) -> Result<IidSumDist> {
    if n == 0 {
        return Err(Error::DomainError("sum of zero variables".into()));
    }
    if values.len() != probs.len() || values.is_empty() {
        return Err(Error::InvalidDistribution(
            "atom values and probabilities differ in length".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("atom values must be finite".into()));
    }
    check_probs(probs, 1e-10)?;

    let atoms = merge(
        values
            .iter()
            .copied()
            .zip(probs.iter().copied())
            .filter(|&(_, p)| p > 0.0)
            .collect(),
        opts.merge_tol,
    );
    let mut law = atoms.clone();
    for _ in 1..n {
        let mut next = Vec::with_capacity(law.len() * atoms.len());
        for &(v, p) in &law {
            for &(a, q) in &atoms {
                next.push((v + a, p * q));
            }
        }
        law = merge(next, opts.merge_tol);
        if law.len() > opts.max_atoms {
            return Err(Error::Overflow {
                atoms: law.len(),
                cap: opts.max_atoms,
            });
        }
    }
    let (vals, ps) = law.into_iter().unzip();
    Ok(IidSumDist {
        atom_values: values.to_vec(),
        atom_probs: probs.to_vec(),
        n,
        merge_tol: opts.merge_tol,
        values: vals,
        probs: ps,
    })
}

fn merge(mut pts: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    let mut anchor = f64::NEG_INFINITY;
    for (v, p) in pts {
        match out.last_mut() {
            Some(last) if v - anchor <= tol * anchor.abs().max(1.0) => last.1 += p,
            _ => {
                anchor = v;
                out.push((v, p));
            }
        }
    }
    out
}

/// Strict tail probability `P(S > t)` or `P(S < t)`.
///
/// Support points within the accumulated rounding slack of `t` count as equal
/// to `t` and are excluded from both tails.
pub fn tail_probability(d: &IidSumDist, threshold: f64, tail: Tail) -> f64 {
    let eps = d.merge_tol * (d.n as f64).max(1.0) * threshold.abs().max(1.0);
    let mass: f64 = d
        .values
        .iter()
        .zip(&d.probs)
        .filter(|(&v, _)| match tail {
            Tail::Above => v > threshold + eps,
            Tail::Below => v < threshold - eps,
        })
        .map(|(_, &p)| p)
        .sum();
    mass.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn brute_force(values: &[f64], probs: &[f64], n: usize, t: f64) -> (f64, f64) {
        let k = values.len();
        let (mut above, mut below) = (0.0, 0.0);
        for code in 0..k.pow(n as u32) {
            let (mut s, mut p, mut c) = (0.0, 1.0, code);
            for _ in 0..n {
                s += values[c % k];
                p *= probs[c % k];
                c /= k;
            }
            if s > t {
                above += p;
            } else if s < t {
                below += p;
            }
        }
        (above, below)
    }

    #[test]
    fn degenerate_single_atom() {
        let d = iid_sum_law(&[0.7], &[1.0], 9).unwrap();
        assert_eq!(d.values().len(), 1);
        assert_eq!(tail_probability(&d, 9.0 * 0.7, Tail::Above), 0.0);
        assert_eq!(tail_probability(&d, 9.0 * 0.7, Tail::Below), 0.0);
    }

    #[test]
    fn fair_signs() {
        let d = iid_sum_law(&[-1.0, 1.0], &[0.5, 0.5], 2).unwrap();
        assert_abs_diff_eq!(tail_probability(&d, 0.0, Tail::Above), 0.25, epsilon = 1e-15);
        let d = iid_sum_law(&[-1.0, 1.0], &[0.5, 0.5], 10).unwrap();
        let got = tail_probability(&d, 0.0, Tail::Above);
        assert_abs_diff_eq!(got, 386.0 / 1024.0, epsilon = 1e-14);
        assert_abs_diff_eq!(got, 0.37695, epsilon = 1e-5);
        assert_abs_diff_eq!(got, brute_force(&[-1.0, 1.0], &[0.5, 0.5], 10, 0.0).0, epsilon = 1e-14);
    }

    #[test]
    fn overflow_is_reported() {
        let opts = SumLawOptions {
            max_atoms: 50,
            ..Default::default()
        };
        let r = iid_sum_law_with(&[0.0, 1.0, std::f64::consts::PI], &[0.3, 0.3, 0.4], 12, opts);
        assert!(matches!(r, Err(Error::Overflow { cap: 50, .. })));
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(iid_sum_law(&[0.0, 1.0], &[0.6, 0.6], 3).is_err());
        assert!(iid_sum_law(&[0.0], &[1.0], 0).is_err());
        assert!(iid_sum_law(&[f64::NAN], &[1.0], 2).is_err());
    }

    #[test]
    fn larger_brute_force_cases() {
        let v = [-1.5, 0.25, 2.0];
        let p = [0.2, 0.5, 0.3];
        let d = iid_sum_law(&v, &p, 10).unwrap();
        for t in [-3.0, 0.0, 2.5, 7.0] {
            let (a, b) = brute_force(&v, &p, 10, t);
            assert_abs_diff_eq!(tail_probability(&d, t, Tail::Above), a, epsilon = 1e-12);
            assert_abs_diff_eq!(tail_probability(&d, t, Tail::Below), b, epsilon = 1e-12);
        }
        let v = [-2.0, -1.0, 1.0, 3.0];
        let p = [0.1, 0.4, 0.3, 0.2];
        let d = iid_sum_law(&v, &p, 8).unwrap();
        for t in [-5.0, 0.0, 4.0] {
            let (a, b) = brute_force(&v, &p, 8, t);
            assert_abs_diff_eq!(tail_probability(&d, t, Tail::Above), a, epsilon = 1e-12);
            assert_abs_diff_eq!(tail_probability(&d, t, Tail::Below), b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d.mean(), 8.0 * 0.3, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn tails_match_enumeration(
            vals in proptest::collection::vec(-4i32..5, 2..=4),
            w in proptest::collection::vec(0.05f64..1.0, 4),
            n in 1usize..=7,
            t in -10i32..10,
        ) {
            let k = vals.len();
            let v: Vec<f64> = vals.iter().map(|&x| x as f64 * 0.5).collect();
            let s: f64 = w[..k].iter().sum();
            let p: Vec<f64> = w[..k].iter().map(|x| x / s).collect();
            let d = iid_sum_law(&v, &p, n).unwrap();
            let t = t as f64 * 0.5;
            let (a, b) = brute_force(&v, &p, n, t);
            prop_assert!((tail_probability(&d, t, Tail::Above) - a).abs() < 1e-12);
            prop_assert!((tail_probability(&d, t, Tail::Below) - b).abs() < 1e-12);
            prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
