//! Exact evaluation of a fixed code pair by full enumeration over output
//! sequences.
//!
//! Both the auxiliary scheme and the protocol put a product weight
//! `omega_1(e1) omega_2(e2)` on codebook entry pairs and then run the channel,
//! so one weighted kernel serves both. The auxiliary weights are uniform; the
//! protocol weights are `Q^n(x) / |preimage(x)|`, leaving the remaining mass on
//! inputs that match no codeword.

use rayon::prelude::*;

use super::auxiliary::{argmax_keys, check_alphabets, likelihoods, Decoder, RoleTable};
use super::codebook::{product_prob, Codebook, CodebookPair};
use super::report::{Estimate, Mode, Scheme, SecrecyKind, SimReport};
use crate::channel::BinaryMacPair;
use crate::covert::{output_dists, CovertConfig};
use crate::error::{Error, Result};
use crate::prob::kl_divergence;

/// Default number of enumeration terms allowed.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "COVERTKEY_BUDGET";

/// Active enumeration budget.
pub fn budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v >= 0.0)
        .map_or(DEFAULT_BUDGET, |v| v as u128)
}

fn pow(base: usize, n: usize) -> u128 {
    (0..n).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

fn index_space(cb: &CodebookPair) -> u128 {
    cb.users[0]
        .sizes
        .codewords()
        .saturating_mul(cb.users[1].sizes.codewords())
}

/// `G M1 N1 M2 N2 |Y|^n |Z|^n`, the size of a full enumeration.
pub fn enumeration_terms(cb: &CodebookPair, mac: &BinaryMacPair) -> u128 {
    index_space(cb)
        .saturating_mul(pow(mac.y_alphabet().len(), cb.n))
        .saturating_mul(pow(mac.z_alphabet().len(), cb.n))
}

fn within_budget(required: u128) -> Result<()> {
    let budget = budget();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Every sequence in `alphabet^n`, last position slowest.
fn for_each_sequence(alphabet: usize, n: usize, mut f: impl FnMut(&[u8])) {
    let mut seq = vec![0u8; n];
    loop {
        f(&seq);
        let mut t = 0;
        loop {
            if t == n {
                return;
            }
            seq[t] += 1;
            if (seq[t] as usize) < alphabet {
                break;
            }
            seq[t] = 0;
            t += 1;
        }
    }
}

fn product_law(dist: &[f64], seq: &[u8]) -> f64 {
    seq.iter().map(|&s| dist[s as usize]).product()
}

/// Per-entry weights of one user.
pub(crate) fn uniform_weights(c: &Codebook) -> Vec<f64> {
    vec![1.0 / c.len() as f64; c.len()]
}

/// Likelihood-encoder weights `Q^n(x) / |preimage(x)|` and the covered mass
/// `Q^n(codebook)`.
pub(crate) fn protocol_weights(c: &Codebook, n: usize, p: f64) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; c.len()];
    let mut covered = 0.0;
    for (x, mult) in c.distinct() {
        let q = product_prob(n, x.count_ones(), p);
        covered += q;
        for &i in c.preimage(x) {
            w[i as usize] = q / mult as f64;
        }
    }
    (w, covered)
}

fn weights_for(cb: &CodebookPair, cfg: &CovertConfig, scheme: Scheme) -> [Vec<f64>; 2] {
    match scheme {
        Scheme::Auxiliary => [uniform_weights(&cb.users[0]), uniform_weights(&cb.users[1])],
        Scheme::Protocol => std::array::from_fn(|u| protocol_weights(&cb.users[u], cb.n, cfg.active_prob(u)).0),
    }
}

/// Probability that Charlie decodes both keys correctly under the weights.
fn correct_mass(cb: &CodebookPair, mac: &BinaryMacPair, decoder: Decoder, weights: &[Vec<f64>; 2]) -> f64 {
    let table = RoleTable::legitimate(mac);
    let [c1, c2] = &cb.users;
    let (g1, g2) = (c1.sizes.public, c2.sizes.public);
    let per1 = (c1.sizes.key * c1.sizes.randomness) as usize;
    let per2 = (c2.sizes.key * c2.sizes.randomness) as usize;
    let (n1, n2) = (c1.sizes.randomness as usize, c2.sizes.randomness as usize);
    let partial: Vec<f64> = (0..g1 * g2)
        .into_par_iter()
        .map(|flat| {
            let w = (flat / g2, flat % g2);
            let om1 = &weights[0][w.0 as usize * per1..(w.0 as usize + 1) * per1];
            let om2 = &weights[1][w.1 as usize * per2..(w.1 as usize + 1) * per2];
            let mut acc = 0.0;
            for_each_sequence(table.symbols(), cb.n, |y| {
                let l = likelihoods(cb, &table, w, y);
                let (k1, k2) = argmax_keys(&l, cb, decoder);
                for j1 in 0..n1 {
                    let e1 = k1 as usize * n1 + j1;
                    for j2 in 0..n2 {
                        let e2 = k2 as usize * n2 + j2;
                        acc += om1[e1] * om2[e2] * l[e1 * per2 + e2];
                    }
                }
            });
            acc
        })
        .collect();
    partial.iter().sum()
}

/// Exact error probability of the auxiliary scheme with uniform indices.
/// Needs `G M1 N1 M2 N2 |Y|^n` terms within budget.
pub fn exact_error(cb: &CodebookPair, mac: &BinaryMacPair, decoder: Decoder) -> Result<f64> {
    check_alphabets(mac)?;
    within_budget(index_space(cb).saturating_mul(pow(mac.y_alphabet().len(), cb.n)))?;
    let weights = [uniform_weights(&cb.users[0]), uniform_weights(&cb.users[1])];
    Ok((1.0 - correct_mass(cb, mac, decoder, &weights)).clamp(0.0, 1.0))
}

/// TV and KL (bits) between the weighted `(W, K1, K2, Z)` law and uniform
/// indices times `Q_Z^n`. Mass not carried by the weights is a separate
/// outcome; the KL is `None` when that mass is positive.
fn weighted_secrecy(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    weights: &[Vec<f64>; 2],
) -> (f64, Option<f64>) {
    let table = RoleTable::warden(mac);
    let (_, qz) = output_dists(mac, cfg);
    let qz = qz.probs().to_vec();
    let [c1, c2] = &cb.users;
    let (g1, g2) = (c1.sizes.public, c2.sizes.public);
    let (m1, n1) = (c1.sizes.key as usize, c1.sizes.randomness as usize);
    let (m2, n2) = (c2.sizes.key as usize, c2.sizes.randomness as usize);
    let (per1, per2) = (m1 * n1, m2 * n2);
    let u = 1.0 / (g1 as f64 * g2 as f64 * m1 as f64 * m2 as f64);
    let partial: Vec<(f64, f64, f64)> = (0..g1 * g2)
        .into_par_iter()
        .map(|flat| {
            let w = (flat / g2, flat % g2);
            let s1 = c1.slice(w.0);
            let s2 = c2.slice(w.1);
            let om1 = &weights[0][w.0 as usize * per1..(w.0 as usize + 1) * per1];
            let om2 = &weights[1][w.1 as usize * per2..(w.1 as usize + 1) * per2];
            let (mut tv, mut kl, mut mass) = (0.0, 0.0, 0.0);
            for_each_sequence(table.symbols(), cb.n, |z| {
                let reference = u * product_law(&qz, z);
                for k1 in 0..m1 {
                    for k2 in 0..m2 {
                        let mut p = 0.0;
                        for j1 in 0..n1 {
                            let e1 = k1 * n1 + j1;
                            for j2 in 0..n2 {
                                let e2 = k2 * n2 + j2;
                                let o = om1[e1] * om2[e2];
                                if o > 0.0 {
                                    p += o * table.likelihood(s1[e1], s2[e2], z);
                                }
                            }
                        }
                        tv += (p - reference).abs();
                        mass += p;
                        if p > 0.0 {
                            kl += p * (p / reference).log2();
                        }
                    }
                }
            });
            (tv, kl, mass)
        })
        .collect();
    let (tv, kl, mass) = partial
        .iter()
        .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let outside = (1.0 - mass).max(0.0);
    let kl = (outside <= 1e-12).then_some(kl.max(0.0));
    ((0.5 * (tv + outside)).clamp(0.0, 1.0), kl)
}

fn secrecy_terms(cb: &CodebookPair, mac: &BinaryMacPair) -> u128 {
    index_space(cb).saturating_mul(pow(mac.z_alphabet().len(), cb.n))
}

/// Exact auxiliary secrecy `(TV, KL in bits)`. Needs `G M1 N1 M2 N2 |Z|^n`
/// terms within budget.
pub fn aux_secrecy(cb: &CodebookPair, mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<(f64, f64)> {
    check_alphabets(mac)?;
    within_budget(secrecy_terms(cb, mac))?;
    let (tv, kl) = weighted_secrecy(cb, mac, cfg, &weights_for(cb, cfg, Scheme::Auxiliary));
    Ok((tv, kl.unwrap_or(f64::INFINITY)))
}

/// Exact protocol secrecy. The KL part is `None` when some input sequence has
/// an empty preimage.
pub fn protocol_secrecy(cb: &CodebookPair, mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<(f64, Option<f64>)> {
    check_alphabets(mac)?;
    within_budget(secrecy_terms(cb, mac))?;
    Ok(weighted_secrecy(cb, mac, cfg, &weights_for(cb, cfg, Scheme::Protocol)))
}

/// `TV(P~_{X_i}, Q_{X_i}^n)` for both users. Only codewords carry excess
/// mass, so the sum runs over the codebook alone and is exact for any `n`.
pub fn source_tv(cb: &CodebookPair, cfg: &CovertConfig) -> [f64; 2] {
    std::array::from_fn(|u| {
        let c = &cb.users[u];
        let total = c.len() as f64;
        c.distinct()
            .into_iter()
            .map(|(x, mult)| (mult as f64 / total - product_prob(cb.n, x.count_ones(), cfg.active_prob(u))).max(0.0))
            .sum()
    })
}

/// `n D(Q_Z || Q_0)` in bits, the protocol's covertness metric.
pub fn covertness_kl(mac: &BinaryMacPair, cfg: &CovertConfig, n: usize) -> Result<f64> {
    let (_, qz) = output_dists(mac, cfg);
    Ok(n as f64 * kl_divergence(&qz, mac.q(0))?)
}

/// `D(P~_Z || Q_0^n)` in bits for the auxiliary scheme, enumerated over
/// distinct codeword pairs.
pub fn aux_covertness_kl(cb: &CodebookPair, mac: &BinaryMacPair) -> Result<f64> {
    check_alphabets(mac)?;
    let d1 = cb.users[0].distinct();
    let d2 = cb.users[1].distinct();
    let nz = mac.z_alphabet().len();
    within_budget(((d1.len() * d2.len()) as u128).saturating_mul(pow(nz, cb.n)))?;
    let table = RoleTable::warden(mac);
    let q0 = mac.q(0).probs().to_vec();
    let (t1, t2) = (cb.users[0].len() as f64, cb.users[1].len() as f64);
    let mut kl = 0.0;
    let mut bad = false;
    for_each_sequence(nz, cb.n, |z| {
        let mut p = 0.0;
        for &(x1, a) in &d1 {
            for &(x2, b) in &d2 {
                p += (a as f64 / t1) * (b as f64 / t2) * table.likelihood(x1, x2, z);
            }
        }
        if p > 0.0 {
            let q = product_law(&q0, z);
            if q == 0.0 {
                bad = true;
            } else {
                kl += p * (p / q).log2();
            }
        }
    });
    if bad {
        return Err(Error::AbsoluteContinuityViolation { index: 0, p: 1.0 });
    }
    Ok(kl.max(0.0))
}

/// Exact metrics of the auxiliary scheme: error probability, secrecy distance,
/// both source-simulation distances and the warden's divergence.
pub fn exact_metrics(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    decoder: Decoder,
) -> Result<SimReport> {
    check_alphabets(mac)?;
    within_budget(enumeration_terms(cb, mac))?;
    let p_err = exact_error(cb, mac, decoder)?;
    let (tv, kl) = aux_secrecy(cb, mac, cfg)?;
    let [tv1, tv2] = source_tv(cb, cfg);
    Ok(SimReport {
        scheme: Scheme::Auxiliary,
        mode: Mode::Exact,
        decoder,
        trials: 0,
        p_err: Estimate::exact(p_err),
        empty_preimage_rate: 0.0,
        secrecy_tv: Some(tv),
        secrecy_kind: SecrecyKind::Exact,
        secrecy_kl: Some(kl),
        source_tv_1: tv1,
        source_tv_2: tv2,
        covertness_kl: aux_covertness_kl(cb, mac)?,
    })
}

/// Exact metrics of the key generation protocol run on this code pair.
pub fn exact_protocol_metrics(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    decoder: Decoder,
) -> Result<SimReport> {
    check_alphabets(mac)?;
    within_budget(enumeration_terms(cb, mac))?;
    let weights = weights_for(cb, cfg, Scheme::Protocol);
    let covered: [f64; 2] = std::array::from_fn(|u| protocol_weights(&cb.users[u], cb.n, cfg.active_prob(u)).1);
    // Entry pairs carry covered[0] * covered[1]; everything else is an empty preimage.
    let p_err = (1.0 - correct_mass(cb, mac, decoder, &weights)).clamp(0.0, 1.0);
    let (tv, kl) = weighted_secrecy(cb, mac, cfg, &weights);
    let [tv1, tv2] = source_tv(cb, cfg);
    Ok(SimReport {
        scheme: Scheme::Protocol,
        mode: Mode::Exact,
        decoder,
        trials: 0,
        p_err: Estimate::exact(p_err),
        empty_preimage_rate: (1.0 - covered[0] * covered[1]).clamp(0.0, 1.0),
        secrecy_tv: Some(tv),
        secrecy_kind: SecrecyKind::Exact,
        secrecy_kl: kl,
        source_tv_1: tv1,
        source_tv_2: tv2,
        covertness_kl: covertness_kl(mac, cfg, cb.n)?,
    })
}
