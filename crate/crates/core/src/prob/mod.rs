//! Finite-alphabet probability kernel.
//!
//! Dense probability vectors and tables, the divergences used throughout the
//! crate, and exact laws of sums of i.i.d. discrete variables. All logarithms
//! are base 2 unless a function name says otherwise.

mod joint;
mod sum;

pub use joint::{mutual_information, JointDist};
pub use sum::{iid_sum_law, iid_sum_law_with, tail_probability, IidSumDist, SumLawOptions, Tail};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance used when checking derived identities (chain rules and the like).
pub const IDENTITY_TOL: f64 = 1e-10;

/// A probability vector over an ordered, finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    support: Vec<String>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(support: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(support, probs, NORM_TOL)
    }

    pub fn with_tolerance(support: Vec<String>, probs: Vec<f64>, tol: f64) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} symbols but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        for (i, a) in support.iter().enumerate() {
            if support[..i].contains(a) {
                return Err(Error::InvalidDistribution(format!("duplicate symbol {a:?}")));
            }
        }
        check_probs(&probs, tol)?;
        Ok(Self { support, probs })
    }

    /// Distribution over the symbols `"0"`, `"1"`, ... in order.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let support = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(support, probs)
    }

    /// Bern(p) over `{"0", "1"}` with `P("1") = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!("Bernoulli parameter {p} outside [0, 1]")));
        }
        Self::from_probs(vec![1.0 - p, p])
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::from_probs(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(support: Vec<String>, index: usize) -> Result<Self> {
        let mut probs = vec![0.0; support.len()];
        *probs
            .get_mut(index)
            .ok_or_else(|| Error::InvalidDistribution(format!("index {index} outside support")))? = 1.0;
        Self::new(support, probs)
    }

    /// Build without validation, for laws derived from already valid ones.
    pub(crate) fn new_unchecked(support: Vec<String>, probs: Vec<f64>) -> Self {
        Self { support, probs }
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.support.iter().position(|s| s == symbol)
    }

    /// Product law over pairs; pair symbols are written `a|b`, second index fastest.
    pub fn product(&self, other: &DiscreteDist) -> DiscreteDist {
        let mut support = Vec::with_capacity(self.len() * other.len());
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for (a, pa) in self.support.iter().zip(&self.probs) {
            for (b, pb) in other.support.iter().zip(&other.probs) {
                support.push(format!("{a}|{b}"));
                probs.push(pa * pb);
            }
        }
        DiscreteDist { support, probs }
    }

    /// The `n`-fold product law, materialized densely.
    pub fn power(&self, n: usize) -> Result<DiscreteDist> {
        if n == 0 {
            return Err(Error::DomainError("power of order 0".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.product(self);
        }
        Ok(out)
    }

    fn same_alphabet(&self, other: &DiscreteDist) -> Result<()> {
        if self.support != other.support {
            return Err(Error::SupportMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }
}

fn check_probs(probs: &[f64], tol: f64) -> Result<()> {
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("entry {p} outside [0, 1]")));
        }
        total += p;
    }
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("mass {total} differs from 1")));
    }
    Ok(())
}

/// KL divergence `D(p || q)` in bits.
pub fn kl_divergence(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    p.same_alphabet(q)?;
    kl_bits(&p.probs, &q.probs)
}

/// KL divergence in nats, for inequalities whose constants depend on the base.
pub fn kl_divergence_nats(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    Ok(kl_divergence(p, q)? * std::f64::consts::LN_2)
}

pub fn tv_distance(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    p.same_alphabet(q)?;
    Ok(tv_slices(&p.probs, &q.probs))
}

pub fn chi_squared(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    p.same_alphabet(q)?;
    chi_squared_slices(&p.probs, &q.probs)
}

pub fn entropy(p: &DiscreteDist) -> f64 {
    entropy_slice(&p.probs)
}

/// `H_b(x) = -x log x - (1 - x) log(1 - x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(entropy_slice(&[x, 1.0 - x]))
}

pub(crate) fn kl_bits(p: &[f64], q: &[f64]) -> Result<f64> {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::AbsoluteContinuityViolation { index: i, p: pi });
        }
        acc += pi * (pi / qi).log2();
    }
    // Rounding can leave a tiny negative value when p and q nearly coincide.
    Ok(acc.max(0.0))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) fn chi_squared_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if qi == 0.0 {
            if pi > 0.0 {
                return Err(Error::AbsoluteContinuityViolation { index: i, p: pi });
            }
            continue;
        }
        acc += (pi - qi) * (pi - qi) / qi;
    }
    Ok(acc)
}

pub(crate) fn entropy_slice(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bern(p: f64) -> DiscreteDist {
        DiscreteDist::bernoulli(p).unwrap()
    }

    // Independent two-term oracle, written out by hand.
    fn kl_bern_oracle(p: f64, q: f64) -> f64 {
        p * (p / q).ln() / std::f64::consts::LN_2 + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln() / std::f64::consts::LN_2
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        let d = kl_divergence(&bern(0.5), &bern(0.25)).unwrap();
        assert_abs_diff_eq!(d, 0.20752, epsilon = 1e-5);
        assert_abs_diff_eq!(d, kl_bern_oracle(0.5, 0.25), epsilon = 1e-14);
        let d = kl_divergence(&bern(0.10), &bern(0.67)).unwrap();
        assert_abs_diff_eq!(d, kl_bern_oracle(0.10, 0.67), epsilon = 1e-14);
        assert_abs_diff_eq!(d, 1.0283, epsilon = 1e-4);
    }

    #[test]
    fn kl_errors() {
        let p = DiscreteDist::from_probs(vec![0.5, 0.5]).unwrap();
        let q = DiscreteDist::from_probs(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::AbsoluteContinuityViolation { index: 1, .. })
        ));
        let r = DiscreteDist::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(kl_divergence(&p, &r), Err(Error::SupportMismatch { .. })));
        // p(x) = 0 terms are skipped even when q(x) = 0.
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&bern(0.4), &bern(0.4)).unwrap(), 0.0);
        assert_abs_diff_eq!(tv_distance(&bern(0.3), &bern(0.5)).unwrap(), 0.2, epsilon = 1e-15);
        let s: Vec<String> = vec!["a".into(), "b".into()];
        let a = DiscreteDist::point_mass(s.clone(), 0).unwrap();
        let b = DiscreteDist::point_mass(s, 1).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn chi_squared_examples() {
        assert_eq!(chi_squared(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            chi_squared(&bern(0.4), &bern(0.3)).unwrap(),
            0.01 / 0.3 + 0.01 / 0.7,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(chi_squared(&bern(1.0), &bern(0.5)).unwrap(), 1.0, epsilon = 1e-14);
        assert!(chi_squared(&bern(0.5), &bern(1.0)).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.1).unwrap(), 0.46900, epsilon = 1e-5);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DiscreteDist::from_probs(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::from_probs(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDist::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec!["a".into()], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::from_probs(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(DiscreteDist::from_probs(vec![0.5, 0.5 + 1e-11]).is_err());
    }

    #[test]
    fn power_matches_product() {
        let p = bern(0.2);
        let p3 = p.power(3).unwrap();
        assert_eq!(p3.len(), 8);
        assert_abs_diff_eq!(p3.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p3.prob(7), 0.008, epsilon = 1e-15);
        // KL is additive over products.
        let q = bern(0.35);
        let d1 = kl_divergence(&p, &q).unwrap();
        let d3 = kl_divergence(&p3, &q.power(3).unwrap()).unwrap();
        assert_abs_diff_eq!(d3, 3.0 * d1, epsilon = 1e-12);
    }

    fn dist_strategy(k: usize) -> impl Strategy<Value = DiscreteDist> {
        proptest::collection::vec(0.01f64..1.0, k).prop_map(|w| {
            let s: f64 = w.iter().sum();
            DiscreteDist::from_probs(w.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_zero_iff_equal((p, q) in (2usize..6).prop_flat_map(|k| (dist_strategy(k), dist_strategy(k)))) {
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
            if tv_distance(&p, &q).unwrap() > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn tv_is_a_metric((p, q, r) in (2usize..6).prop_flat_map(|k| (dist_strategy(k), dist_strategy(k), dist_strategy(k)))) {
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert_eq!(pq, tv_distance(&q, &p).unwrap());
            prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
            let pr = tv_distance(&p, &r).unwrap();
            let rq = tv_distance(&r, &q).unwrap();
            prop_assert!(pq <= pr + rq + 1e-15);
        }

        #[test]
        fn pinsker_in_nats((p, q) in (2usize..6).prop_flat_map(|k| (dist_strategy(k), dist_strategy(k)))) {
            let tv = tv_distance(&p, &q).unwrap();
            let d = kl_divergence_nats(&p, &q).unwrap();
            prop_assert!(tv * tv <= 0.5 * d + 1e-15);
        }

        #[test]
        fn entropy_bounded_by_log_support(p in (2usize..8).prop_flat_map(dist_strategy)) {
            let h = entropy(&p);
            let cap = (p.len() as f64).log2();
            prop_assert!(h <= cap + 1e-12);
            let u = DiscreteDist::uniform(p.len()).unwrap();
            prop_assert!((entropy(&u) - cap).abs() < 1e-12);
            if tv_distance(&p, &u).unwrap() > 1e-6 {
                prop_assert!(h < cap);
            }
        }
    }
}
