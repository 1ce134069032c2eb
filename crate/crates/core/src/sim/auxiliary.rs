//! The auxiliary forward scheme: Alice and Bob transmit `f_i(w_i, k_i, j_i)`,
//! Charlie sees `(w, y)` and estimates both keys.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{CodebookPair, Entry};
use super::report::{Mode, Scheme, SecrecyKind, SimReport};
use super::rng;
use super::stats;
use crate::channel::BinaryMacPair;
use crate::covert::CovertConfig;
use crate::error::{Error, Result};

/// How Charlie estimates `(k1, k2)` from `(w, y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Maximize `sum_j W^n(y | f1(w1,k1,j1), f2(w2,k2,j2))` over `(k1, k2)`.
    #[default]
    KeyPosterior,
    /// Maximize the likelihood over full `(k1, j1, k2, j2)` tuples.
    JointMl,
}

impl Decoder {
    pub fn as_str(self) -> &'static str {
        match self {
            Decoder::KeyPosterior => "key_posterior",
            Decoder::JointMl => "joint_ml",
        }
    }
}

/// Per-role output tables, `table[role][symbol]`.
#[derive(Debug, Clone)]
pub(crate) struct RoleTable {
    rows: [Vec<f64>; 4],
}

impl RoleTable {
    pub(crate) fn legitimate(mac: &BinaryMacPair) -> Self {
        Self {
            rows: std::array::from_fn(|r| mac.p(r).probs().to_vec()),
        }
    }

    pub(crate) fn warden(mac: &BinaryMacPair) -> Self {
        Self {
            rows: std::array::from_fn(|r| mac.q(r).probs().to_vec()),
        }
    }

    pub(crate) fn symbols(&self) -> usize {
        self.rows[0].len()
    }

    /// `W^n(seq | x1, x2)` for codeword masks `x1`, `x2`.
    pub(crate) fn likelihood(&self, x1: u64, x2: u64, seq: &[u8]) -> f64 {
        let mut l = 1.0;
        for (t, &s) in seq.iter().enumerate() {
            let role = ((x1 >> t) & 1) | (((x2 >> t) & 1) << 1);
            l *= self.rows[role as usize][s as usize];
        }
        l
    }

    /// Draw an output sequence for inputs `x1`, `x2`.
    pub(crate) fn sample<R: Rng>(&self, x1: u64, x2: u64, n: usize, rng: &mut R) -> Vec<u8> {
        (0..n)
            .map(|t| {
                let role = ((x1 >> t) & 1) | (((x2 >> t) & 1) << 1);
                sample_symbol(&self.rows[role as usize], rng.gen())
            })
            .collect()
    }
}

/// Inverse-CDF draw from `probs` with `u` in `[0, 1)`.
pub(crate) fn sample_symbol(probs: &[f64], u: f64) -> u8 {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u8;
        }
    }
    // Rounding left a sliver above the last cumulative value.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
}

pub(crate) fn check_alphabets(mac: &BinaryMacPair) -> Result<()> {
    if mac.y_alphabet().len() > 256 || mac.z_alphabet().len() > 256 {
        return Err(Error::DomainError(
            "simulation supports output alphabets of at most 256 symbols".into(),
        ));
    }
    Ok(())
}

/// Charlie's estimate of `(k1, k2)` given `w = (w1, w2)` and `y`. Ties go to
/// the lowest `(k1, k2)` in lexicographic order.
pub fn decode(codebooks: &CodebookPair, mac: &BinaryMacPair, decoder: Decoder, w: (u64, u64), y: &[u8]) -> (u64, u64) {
    decode_with(codebooks, &RoleTable::legitimate(mac), decoder, w, y)
}

pub(crate) fn decode_with(
    codebooks: &CodebookPair,
    table: &RoleTable,
    decoder: Decoder,
    w: (u64, u64),
    y: &[u8],
) -> (u64, u64) {
    let l = likelihoods(codebooks, table, w, y);
    argmax_keys(&l, codebooks, decoder)
}

/// `W^n(y | f1(w1, e1), f2(w2, e2))` for every pair of slice entries, user 1 outer.
pub(crate) fn likelihoods(codebooks: &CodebookPair, table: &RoleTable, w: (u64, u64), y: &[u8]) -> Vec<f64> {
    let s1 = codebooks.users[0].slice(w.0);
    let s2 = codebooks.users[1].slice(w.1);
    let mut out = Vec::with_capacity(s1.len() * s2.len());
    for &x1 in s1 {
        for &x2 in s2 {
            out.push(table.likelihood(x1, x2, y));
        }
    }
    out
}

/// Relative margin within which two key scores count as tied; equal sums
/// accumulated in different orders then still go to the lowest key pair.
const TIE_TOL: f64 = 1e-12;

/// Decision rule applied to a table from [`likelihoods`].
pub(crate) fn argmax_keys(l: &[f64], codebooks: &CodebookPair, decoder: Decoder) -> (u64, u64) {
    let [c1, c2] = &codebooks.users;
    let (m1, n1) = (c1.sizes.key as usize, c1.sizes.randomness as usize);
    let (m2, n2) = (c2.sizes.key as usize, c2.sizes.randomness as usize);
    let row = m2 * n2;
    let mut best = (0, 0);
    let mut best_score = f64::NEG_INFINITY;
    for k1 in 0..m1 {
        for k2 in 0..m2 {
            let mut score = match decoder {
                Decoder::KeyPosterior => 0.0,
                Decoder::JointMl => f64::NEG_INFINITY,
            };
            for j1 in 0..n1 {
                let base = (k1 * n1 + j1) * row + k2 * n2;
                for &v in &l[base..base + n2] {
                    match decoder {
                        Decoder::KeyPosterior => score += v,
                        Decoder::JointMl => score = score.max(v),
                    }
                }
            }
            if score > best_score * (1.0 + TIE_TOL) {
                best_score = score;
                best = (k1 as u64, k2 as u64);
            }
        }
    }
    best
}

/// Indices chosen for one round of the auxiliary scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxIndices {
    pub w: (u64, u64),
    pub k: (u64, u64),
    pub j: (u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxOutcome {
    pub y: Vec<u8>,
    pub z: Vec<u8>,
    pub k_hat: (u64, u64),
}

impl AuxOutcome {
    pub fn is_error(&self, indices: &AuxIndices) -> bool {
        self.k_hat != indices.k
    }
}

fn check_indices(codebooks: &CodebookPair, idx: &AuxIndices) -> Result<()> {
    let [c1, c2] = &codebooks.users;
    let ok = idx.w.0 < c1.sizes.public
        && idx.w.1 < c2.sizes.public
        && idx.k.0 < c1.sizes.key
        && idx.k.1 < c2.sizes.key
        && idx.j.0 < c1.sizes.randomness
        && idx.j.1 < c2.sizes.randomness;
    if ok {
        Ok(())
    } else {
        Err(Error::DomainError(format!("indices {idx:?} out of range")))
    }
}

/// One transmission: send both codewords through both channels and decode.
pub fn aux_round(
    codebooks: &CodebookPair,
    mac: &BinaryMacPair,
    decoder: Decoder,
    indices: AuxIndices,
    seed: u64,
) -> Result<AuxOutcome> {
    check_alphabets(mac)?;
    check_indices(codebooks, &indices)?;
    let tables = (RoleTable::legitimate(mac), RoleTable::warden(mac));
    Ok(round_with(
        codebooks,
        &tables,
        decoder,
        indices,
        &mut rng::stream(seed, rng::AUX_TRIALS, 0),
    ))
}

fn round_with<R: Rng>(
    codebooks: &CodebookPair,
    tables: &(RoleTable, RoleTable),
    decoder: Decoder,
    idx: AuxIndices,
    rng: &mut R,
) -> AuxOutcome {
    let [c1, c2] = &codebooks.users;
    let x1 = c1.word(Entry {
        w: idx.w.0,
        k: idx.k.0,
        j: idx.j.0,
    });
    let x2 = c2.word(Entry {
        w: idx.w.1,
        k: idx.k.1,
        j: idx.j.1,
    });
    let y = tables.0.sample(x1, x2, codebooks.n, rng);
    let z = tables.1.sample(x1, x2, codebooks.n, rng);
    let k_hat = decode_with(codebooks, &tables.0, decoder, idx.w, &y);
    AuxOutcome { y, z, k_hat }
}

/// Draw uniform indices for trial `t`.
fn draw_indices<R: Rng>(codebooks: &CodebookPair, rng: &mut R) -> AuxIndices {
    let [c1, c2] = &codebooks.users;
    AuxIndices {
        w: (rng.gen_range(0..c1.sizes.public), rng.gen_range(0..c2.sizes.public)),
        k: (rng.gen_range(0..c1.sizes.key), rng.gen_range(0..c2.sizes.key)),
        j: (
            rng.gen_range(0..c1.sizes.randomness),
            rng.gen_range(0..c2.sizes.randomness),
        ),
    }
}

/// Monte Carlo estimate of the auxiliary scheme's error probability. The
/// secrecy, source and covertness terms are enumerated exactly, so this fails
/// with `BudgetExceeded` when they are too large.
pub fn aux_metrics(
    codebooks: &CodebookPair,
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
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, rng::AUX_TRIALS, t);
            let idx = draw_indices(codebooks, &mut r);
            u64::from(round_with(codebooks, &tables, decoder, idx, &mut r).is_error(&idx))
        })
        .sum();
    let (tv, kl) = super::exact::aux_secrecy(codebooks, mac, cfg)?;
    let [tv1, tv2] = super::exact::source_tv(codebooks, cfg);
    let covertness = super::exact::aux_covertness_kl(codebooks, mac)?;
    Ok(SimReport {
        scheme: Scheme::Auxiliary,
        mode: Mode::MonteCarlo,
        decoder,
        trials,
        p_err: stats::wilson_estimate(errors, trials),
        empty_preimage_rate: 0.0,
        secrecy_tv: Some(tv),
        secrecy_kind: SecrecyKind::Exact,
        secrecy_kl: Some(kl),
        source_tv_1: tv1,
        source_tv_2: tv2,
        covertness_kl: covertness,
    })
}
