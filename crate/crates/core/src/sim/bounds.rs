//! Non-asymptotic reliability and resolvability bounds on a rate plan, and
//! the concentration inequalities used to control them.
//!
//! All logarithms are base 2. Probability terms are evaluated exactly from the
//! law of a sum of i.i.d. per-symbol information densities.

use serde::{Deserialize, Serialize};

use super::plan::RatePlan;
use crate::channel::BinaryMacPair;
use crate::covert::{reliability_atoms, resolvability_atoms, Subset};
use crate::error::{Error, Result};
use crate::prob::{iid_sum_law, tail_probability, DiscreteDist, Tail};

/// Right-hand side of a union bound, kept term by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// Slack `mu` used in the thresholds.
    pub mu: f64,
    /// Thresholds `gamma_T` or `eta_T` for `T = {1}, {2}, {1,2}` (bits).
    pub thresholds: [f64; 3],
    /// `2^{-gamma_T} M_T N_T` or `2^{eta_T} / N_T`.
    pub exponential: [f64; 3],
    /// Tail probabilities of the information density sums.
    pub probability: [f64; 3],
    /// Multiplier of the probability terms (1 for reliability).
    pub prefactor: f64,
    pub value: f64,
}

impl BoundTerms {
    fn assemble(mu: f64, thresholds: [f64; 3], exponential: [f64; 3], probability: [f64; 3], prefactor: f64) -> Self {
        let value = exponential.iter().sum::<f64>() + prefactor * probability.iter().sum::<f64>();
        Self {
            mu,
            thresholds,
            exponential,
            probability,
            prefactor,
            value,
        }
    }
}

fn subset_product(t: Subset, f: impl Fn(usize) -> f64) -> f64 {
    t.members().iter().map(|&u| f(u)).product()
}

fn check_mu(mu: f64, limit: f64, name: &str) -> Result<()> {
    if !(mu > 0.0 && mu < limit) {
        return Err(Error::DomainError(format!(
            "mu = {mu} must lie in (0, {name} = {limit})"
        )));
    }
    Ok(())
}

/// Reliability bound on the ensemble-average error with `mu = mu1 / 2`.
pub fn reliability_rhs(plan: &RatePlan, mac: &BinaryMacPair) -> Result<BoundTerms> {
    reliability_rhs_with(plan, mac, plan.mu1 / 2.0)
}

/// `sum_T 2^{-gamma_T} M_T N_T + sum_T P(sum_t i_T(X_t; Y_t) < gamma_T)` with
/// `gamma_T = (1 - mu) n I(X_T; Y | X_{T^c})`.
pub fn reliability_rhs_with(plan: &RatePlan, mac: &BinaryMacPair, mu: f64) -> Result<BoundTerms> {
    check_mu(mu, plan.mu1, "mu1")?;
    let n = plan.n as f64;
    let mut thresholds = [0.0; 3];
    let mut exponential = [0.0; 3];
    let mut probability = [0.0; 3];
    for (k, t) in Subset::ALL.into_iter().enumerate() {
        let gamma = (1.0 - mu) * n * plan.info.info_y[k];
        let sizes = subset_product(t, |u| plan.sizes[u].key as f64 * plan.sizes[u].randomness as f64);
        thresholds[k] = gamma;
        exponential[k] = (-gamma).exp2() * sizes;
        let (values, probs) = reliability_atoms(mac, &plan.config, t);
        probability[k] = tail_probability(&iid_sum_law(&values, &probs, plan.n)?, gamma, Tail::Below);
    }
    Ok(BoundTerms::assemble(mu, thresholds, exponential, probability, 1.0))
}

/// Resolvability bound on the warden's divergence with `mu = mu2 / 2`.
pub fn resolvability_rhs(plan: &RatePlan, mac: &BinaryMacPair) -> Result<BoundTerms> {
    resolvability_rhs_with(plan, mac, plan.mu2 / 2.0)
}

/// `sum_T 2^{eta_T} / N_T + n log2(4 / (prod_u (1 - rho_u alpha) v_min))
/// sum_T P(sum_t log2 W_{Z|X_T}/Q_Z > eta_T)` with `eta_T = (1 + mu) n I(X_T; Z)`
/// and `v_min = min_z Q_0(z)`.
pub fn resolvability_rhs_with(plan: &RatePlan, mac: &BinaryMacPair, mu: f64) -> Result<BoundTerms> {
    check_mu(mu, plan.mu2, "mu2")?;
    let n = plan.n as f64;
    let cfg = &plan.config;
    let v_min = mac.q(0).probs().iter().copied().fold(f64::INFINITY, f64::min);
    if v_min <= 0.0 {
        return Err(Error::DomainError(
            "Q_0 has a zero entry, the prefactor is infinite".into(),
        ));
    }
    let idle: f64 = (0..2).map(|u| 1.0 - cfg.active_prob(u)).product();
    let prefactor = n * (4.0 / (idle * v_min)).log2();
    let mut thresholds = [0.0; 3];
    let mut exponential = [0.0; 3];
    let mut probability = [0.0; 3];
    for (k, t) in Subset::ALL.into_iter().enumerate() {
        let eta = (1.0 + mu) * n * plan.info.info_z[k];
        thresholds[k] = eta;
        exponential[k] = eta.exp2() / subset_product(t, |u| plan.sizes[u].randomness as f64);
        let (values, probs) = resolvability_atoms(mac, cfg, t);
        probability[k] = tail_probability(&iid_sum_law(&values, &probs, plan.n)?, eta, Tail::Above);
    }
    Ok(BoundTerms::assemble(
        mu,
        thresholds,
        exponential,
        probability,
        prefactor,
    ))
}

/// Bernstein: `P(sum U_i > t) <= exp(-t^2 / 2 / (V + c t / 3))` for zero-mean
/// `|U_i| <= c` with variance sum `V`.
pub fn bernstein_bound(c: f64, variance_sum: f64, t: f64) -> Result<f64> {
    if !(c > 0.0 && t > 0.0 && variance_sum >= 0.0) {
        return Err(Error::DomainError(format!(
            "Bernstein needs c > 0, t > 0, V >= 0 (c = {c}, t = {t}, V = {variance_sum})"
        )));
    }
    Ok((-0.5 * t * t / (variance_sum + c * t / 3.0)).exp())
}

/// Hoeffding: `P(sum U_i - E >= v) <= exp(-2 v^2 / sum (b_i - a_i)^2)` for
/// `U_i` in `[a_i, b_i]`.
pub fn hoeffding_bound(ranges: &[(f64, f64)], v: f64) -> Result<f64> {
    if ranges.is_empty() || v <= 0.0 {
        return Err(Error::DomainError(
            "Hoeffding needs at least one range and v > 0".into(),
        ));
    }
    let mut width = 0.0;
    for &(a, b) in ranges {
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(Error::DomainError(format!("invalid range [{a}, {b}]")));
        }
        width += (b - a) * (b - a);
    }
    if width == 0.0 {
        return Ok(0.0);
    }
    Ok((-2.0 * v * v / width).exp())
}

/// One-shot source resolvability: `P(sum_t log2 1/Q(X_t) >= gamma) + sqrt(2^gamma / M)`
/// for `M` codewords drawn i.i.d. from `Q^n`.
pub fn oneshot_resolvability_bound(gamma: f64, m: f64, per_symbol: &DiscreteDist, n: usize) -> Result<f64> {
    if !(gamma > 0.0 && m >= 1.0) {
        return Err(Error::DomainError(format!(
            "one-shot bound needs gamma > 0 and M >= 1 (gamma = {gamma}, M = {m})"
        )));
    }
    let (values, probs): (Vec<f64>, Vec<f64>) = per_symbol
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| (-p.log2(), p))
        .unzip();
    let law = iid_sum_law(&values, &probs, n)?;
    let tail = 1.0 - tail_probability(&law, gamma, Tail::Below);
    let covering = if m.is_infinite() {
        0.0
    } else {
        (gamma.exp2() / m).sqrt()
    };
    Ok(tail.clamp(0.0, 1.0) + covering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covert::{CovertConfig, Rho};
    use crate::sim::plan::{rate_plan, UserSizes};
    use approx::assert_relative_eq;

    fn plan(n: usize, alpha: f64) -> RatePlan {
        let mac = BinaryMacPair::table1_channel1();
        let cfg = CovertConfig::new(Rho::new(0.28, 0.72).unwrap(), alpha).unwrap();
        match rate_plan(&mac, &cfg, n, 0.2, 0.2, 0.2) {
            Ok(p) => p,
            Err(Error::InfeasiblePlan(p)) => *p,
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn hoeffding_single_unit_range() {
        assert_relative_eq!(
            hoeffding_bound(&[(0.0, 1.0)], 1.0).unwrap(),
            (-2.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            hoeffding_bound(&[(0.0, 1.0)], 1.0).unwrap(),
            0.135_335_283,
            epsilon = 1e-9
        );
        assert!(hoeffding_bound(&[(1.0, 0.0)], 1.0).is_err());
    }

    #[test]
    fn bernstein_decreases_to_zero() {
        let mut last = 1.0;
        for t in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let b = bernstein_bound(1.0, 2.0, t).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(last < 1e-100);
        assert!(bernstein_bound(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn oneshot_vanishes_above_support() {
        let q = DiscreteDist::bernoulli(0.2).unwrap();
        // The largest per-sequence surprisal is 5 log2(5) < 12.
        assert_eq!(oneshot_resolvability_bound(12.0, f64::INFINITY, &q, 5).unwrap(), 0.0);
        let finite = oneshot_resolvability_bound(12.0, 1e12, &q, 5).unwrap();
        assert_relative_eq!(finite, (4096.0f64 / 1e12).sqrt(), epsilon = 1e-15);
        assert!(oneshot_resolvability_bound(0.0, 2.0, &q, 5).is_err());
    }

    #[test]
    fn terms_are_nonnegative_and_probabilities_bounded() {
        let mac = BinaryMacPair::table1_channel1();
        for n in [8, 12, 16] {
            let p = plan(n, 0.2);
            for b in [reliability_rhs(&p, &mac).unwrap(), resolvability_rhs(&p, &mac).unwrap()] {
                assert!(b.value >= 0.0 && b.value.is_finite());
                assert!(b.probability.iter().all(|q| (0.0..=1.0).contains(q)));
                assert!(b.exponential.iter().all(|e| *e >= 0.0));
            }
        }
    }

    #[test]
    fn degenerate_legitimate_channel_is_vacuous() {
        let mac = BinaryMacPair::from_roles(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            [vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
            [vec![0.67, 0.33], vec![0.38, 0.62], vec![0.52, 0.48], vec![0.85, 0.15]],
            (0, 0),
        )
        .unwrap();
        let cfg = CovertConfig::new(Rho::new(0.5, 0.5).unwrap(), 0.2).unwrap();
        let s = UserSizes::new(1, 1, 1);
        let p = RatePlan::with_sizes(&mac, &cfg, 8, (0.2, 0.2, 0.2), [s, s]).unwrap();
        let b = reliability_rhs(&p, &mac).unwrap();
        assert!(b.thresholds.iter().all(|g| g.abs() < 1e-12));
        assert!(b.exponential.iter().all(|e| (e - 1.0).abs() < 1e-9));
        assert!(b.value >= 1.0);
    }

    #[test]
    fn mu_must_stay_below_plan_slack() {
        let mac = BinaryMacPair::table1_channel1();
        let p = plan(8, 0.2);
        assert!(reliability_rhs_with(&p, &mac, 0.3).is_err());
        assert!(resolvability_rhs_with(&p, &mac, 0.0).is_err());
    }
}
