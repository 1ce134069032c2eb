//! The key generation protocol. Alice and Bob draw i.i.d. covert inputs, which
//! traverse both channels; each then samples `(w_i, k_i, j_i)` uniformly from
//! the codewords equal to its input and broadcasts `w_i`. Charlie decodes the
//! keys from `(w, y)` with the auxiliary decoder.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auxiliary::{check_alphabets, decode_with, Decoder, RoleTable};
use super::codebook::{sample_word, Codebook, CodebookPair, Entry};
use super::exact;
use super::report::{Mode, Scheme, SecrecyKind, SimReport};
use super::rng;
use super::stats;
use crate::channel::BinaryMacPair;
use crate::covert::CovertConfig;
use crate::error::{Error, Result};

/// One protocol run. Index fields are `None` when the user's input matched no
/// codeword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub x1: u64,
    pub x2: u64,
    pub y: Vec<u8>,
    pub z: Vec<u8>,
    pub entry1: Option<Entry>,
    pub entry2: Option<Entry>,
    pub k_hat: Option<(u64, u64)>,
    pub empty_preimage: [bool; 2],
}

impl TrialRecord {
    /// Keys were not both recovered, or some preimage was empty.
    pub fn is_failure(&self) -> bool {
        match (self.entry1, self.entry2, self.k_hat) {
            (Some(e1), Some(e2), Some(k)) => k != (e1.k, e2.k),
            _ => true,
        }
    }

    pub fn has_empty_preimage(&self) -> bool {
        self.empty_preimage[0] || self.empty_preimage[1]
    }
}

fn pick<R: Rng>(c: &Codebook, x: u64, rng: &mut R) -> Option<Entry> {
    let pre = c.preimage(x);
    if pre.is_empty() {
        None
    } else {
        Some(c.entry(pre[rng.gen_range(0..pre.len())] as usize))
    }
}

fn run_with<R: Rng>(
    cb: &CodebookPair,
    tables: &(RoleTable, RoleTable),
    cfg: &CovertConfig,
    decoder: Decoder,
    rng: &mut R,
) -> TrialRecord {
    let n = cb.n;
    let x1 = sample_word(rng, n, cfg.active_prob(0));
    let x2 = sample_word(rng, n, cfg.active_prob(1));
    let y = tables.0.sample(x1, x2, n, rng);
    let z = tables.1.sample(x1, x2, n, rng);
    let entry1 = pick(&cb.users[0], x1, rng);
    let entry2 = pick(&cb.users[1], x2, rng);
    let k_hat = match (entry1, entry2) {
        (Some(e1), Some(e2)) => Some(decode_with(cb, &tables.0, decoder, (e1.w, e2.w), &y)),
        _ => None,
    };
    TrialRecord {
        x1,
        x2,
        y,
        z,
        entry1,
        entry2,
        k_hat,
        empty_preimage: [entry1.is_none(), entry2.is_none()],
    }
}

/// Trial `index` of the run keyed by `seed`.
pub fn protocol_run(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    decoder: Decoder,
    seed: u64,
    index: u64,
) -> Result<TrialRecord> {
    check_alphabets(mac)?;
    let tables = (RoleTable::legitimate(mac), RoleTable::warden(mac));
    Ok(run_with(
        cb,
        &tables,
        cfg,
        decoder,
        &mut rng::stream(seed, rng::PROTOCOL_TRIALS, index),
    ))
}

/// Trials `0..trials`, in order.
pub fn protocol_trials(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    decoder: Decoder,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    check_alphabets(mac)?;
    let tables = (RoleTable::legitimate(mac), RoleTable::warden(mac));
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            run_with(
                cb,
                &tables,
                cfg,
                decoder,
                &mut rng::stream(seed, rng::PROTOCOL_TRIALS, t),
            )
        })
        .collect())
}

/// Monte Carlo protocol metrics. The secrecy distance is exact when a full
/// enumeration fits the budget, otherwise it is the auxiliary value plus both
/// source-simulation distances when that fits, otherwise unavailable.
pub fn protocol_metrics(
    cb: &CodebookPair,
    mac: &BinaryMacPair,
    cfg: &CovertConfig,
    trials: u64,
    seed: u64,
    decoder: Decoder,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::DomainError("trials must be at least 1".into()));
    }
    check_alphabets(mac)?;
    let tables = (RoleTable::legitimate(mac), RoleTable::warden(mac));
    let (failures, empty) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = run_with(
                cb,
                &tables,
                cfg,
                decoder,
                &mut rng::stream(seed, rng::PROTOCOL_TRIALS, t),
            );
            (u64::from(r.is_failure()), u64::from(r.has_empty_preimage()))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let [tv1, tv2] = exact::source_tv(cb, cfg);
    let full = exact::enumeration_terms(cb, mac) <= exact::budget();
    let (secrecy_tv, secrecy_kl, kind) = if full {
        let (tv, kl) = exact::protocol_secrecy(cb, mac, cfg)?;
        (Some(tv), kl, SecrecyKind::Exact)
    } else {
        match exact::aux_secrecy(cb, mac, cfg) {
            Ok((tv, _)) => (Some((tv + tv1 + tv2).min(1.0)), None, SecrecyKind::Bound),
            Err(Error::BudgetExceeded { .. }) => (None, None, SecrecyKind::Unavailable),
            Err(e) => return Err(e),
        }
    };
    Ok(SimReport {
        scheme: Scheme::Protocol,
        mode: Mode::MonteCarlo,
        decoder,
        trials,
        p_err: stats::wilson_estimate(failures, trials),
        empty_preimage_rate: empty as f64 / trials as f64,
        secrecy_tv,
        secrecy_kind: kind,
        secrecy_kl,
        source_tv_1: tv1,
        source_tv_2: tv2,
        covertness_kl: exact::covertness_kl(mac, cfg, cb.n)?,
    })
}
