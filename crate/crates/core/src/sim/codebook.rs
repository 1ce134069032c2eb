//! Random codebooks `f_i(w_i, k_i, j_i)`.
//!
//! Codewords are bit masks over role symbols: bit `t` set means the user sends
//! its meaningful symbol at time `t`. Block lengths are limited to 64.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::UserSizes;
use super::rng;
use crate::covert::CovertConfig;
use crate::error::{Error, Result};

/// Longest supported block length.
pub const MAX_N: usize = 64;

/// Default cap on the number of stored codewords per user.
pub const DEFAULT_CODEWORD_CAP: u128 = 1 << 24;

/// Flat index of `(w, k, j)`; `j` varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub w: u64,
    pub k: u64,
    pub j: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub sizes: UserSizes,
    words: Vec<u64>,
    #[serde(skip)]
    preimages: HashMap<u64, Vec<u32>>,
}

impl Codebook {
    /// Build from explicit codewords listed in flat index order.
    pub fn from_words(sizes: UserSizes, words: Vec<u64>) -> Result<Self> {
        if sizes.codewords() != words.len() as u128 {
            return Err(Error::DomainError(format!(
                "{} codewords given for sizes {sizes:?}",
                words.len()
            )));
        }
        if words.len() > u32::MAX as usize {
            return Err(Error::BudgetExceeded {
                required: words.len() as u128,
                budget: u32::MAX as u128,
            });
        }
        let mut preimages: HashMap<u64, Vec<u32>> = HashMap::new();
        for (i, &x) in words.iter().enumerate() {
            preimages.entry(x).or_default().push(i as u32);
        }
        Ok(Self {
            sizes,
            words,
            preimages,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn index(&self, e: Entry) -> usize {
        ((e.w * self.sizes.key + e.k) * self.sizes.randomness + e.j) as usize
    }

    pub fn entry(&self, index: usize) -> Entry {
        let i = index as u64;
        let j = i % self.sizes.randomness;
        let k = (i / self.sizes.randomness) % self.sizes.key;
        let w = i / (self.sizes.randomness * self.sizes.key);
        Entry { w, k, j }
    }

    pub fn word(&self, e: Entry) -> u64 {
        self.words[self.index(e)]
    }

    /// Flat indices of all entries whose codeword equals `x`, ascending.
    pub fn preimage(&self, x: u64) -> &[u32] {
        self.preimages.get(&x).map_or(&[], Vec::as_slice)
    }

    /// Distinct codewords with their multiplicities, sorted by codeword.
    pub fn distinct(&self) -> Vec<(u64, usize)> {
        let mut v: Vec<(u64, usize)> = self.preimages.iter().map(|(&x, p)| (x, p.len())).collect();
        v.sort_unstable();
        v
    }

    /// Codewords sharing the public index `w`, in `(k, j)` order.
    pub fn slice(&self, w: u64) -> &[u64] {
        let per = (self.sizes.key * self.sizes.randomness) as usize;
        &self.words[w as usize * per..(w as usize + 1) * per]
    }

    fn rebuild(&mut self) {
        let mut preimages: HashMap<u64, Vec<u32>> = HashMap::new();
        for (i, &x) in self.words.iter().enumerate() {
            preimages.entry(x).or_default().push(i as u32);
        }
        self.preimages = preimages;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookPair {
    pub n: usize,
    pub seed: u64,
    pub users: [Codebook; 2],
}

impl CodebookPair {
    pub fn new(n: usize, seed: u64, users: [Codebook; 2]) -> Result<Self> {
        check_n(n)?;
        Ok(Self { n, seed, users })
    }

    /// `G = G_1 G_2`.
    pub fn public_size(&self) -> u64 {
        self.users[0].sizes.public * self.users[1].sizes.public
    }

    /// Restore lookup tables after deserialization.
    pub fn rebuild_indices(&mut self) {
        for u in &mut self.users {
            u.rebuild();
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::DomainError(format!("block length {n} outside 1..={MAX_N}")));
    }
    Ok(())
}

/// Draw a codeword with i.i.d. symbols, meaningful with probability `p`.
pub fn sample_word<R: Rng>(rng: &mut R, n: usize, p: f64) -> u64 {
    let mut x = 0u64;
    for t in 0..n {
        if rng.gen::<f64>() < p {
            x |= 1 << t;
        }
    }
    x
}

/// Sample both codebooks. Codeword `i` of user `u` depends only on
/// `(seed, u, i)`.
pub fn sample_codebooks(n: usize, sizes: [UserSizes; 2], cfg: &CovertConfig, seed: u64) -> Result<CodebookPair> {
    sample_codebooks_capped(n, sizes, cfg, seed, DEFAULT_CODEWORD_CAP)
}

pub fn sample_codebooks_capped(
    n: usize,
    sizes: [UserSizes; 2],
    cfg: &CovertConfig,
    seed: u64,
    cap: u128,
) -> Result<CodebookPair> {
    check_n(n)?;
    let mut users = Vec::with_capacity(2);
    for (u, domain) in [rng::CODEBOOK_1, rng::CODEBOOK_2].into_iter().enumerate() {
        let count = sizes[u].codewords();
        if count > cap {
            return Err(Error::BudgetExceeded {
                required: count,
                budget: cap,
            });
        }
        let p = cfg.active_prob(u);
        let words: Vec<u64> = (0..count as u64)
            .into_par_iter()
            .map(|i| sample_word(&mut rng::stream(seed, domain, i), n, p))
            .collect();
        users.push(Codebook::from_words(sizes[u], words)?);
    }
    let users: [Codebook; 2] = users.try_into().expect("two users");
    Ok(CodebookPair { n, seed, users })
}

/// `Q_X^n(x)` for a mask with `ones` meaningful symbols.
pub fn product_prob(n: usize, ones: u32, p: f64) -> f64 {
    p.powi(ones as i32) * (1.0 - p).powi(n as i32 - ones as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covert::Rho;

    fn cfg(alpha: f64) -> CovertConfig {
        CovertConfig::new(Rho::new(0.28, 0.72).unwrap(), alpha).unwrap()
    }

    #[test]
    fn zero_alpha_gives_innocent_words() {
        let s = UserSizes::new(3, 2, 2);
        let cb = sample_codebooks(10, [s, s], &cfg(0.0), 5).unwrap();
        assert!(cb.users.iter().all(|u| u.words().iter().all(|&x| x == 0)));
        assert_eq!(cb.users[0].preimage(0).len(), 12);
    }

    #[test]
    fn seeded_codebooks_are_reproducible() {
        let s = UserSizes::new(4, 3, 5);
        let a = sample_codebooks(16, [s, s], &cfg(0.25), 11).unwrap();
        let b = sample_codebooks(16, [s, s], &cfg(0.25), 11).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| sample_codebooks(16, [s, s], &cfg(0.25), 11).unwrap());
        assert_eq!(a.users[0].words(), c.users[0].words());
        assert_eq!(a.users[1].words(), c.users[1].words());
        let d = sample_codebooks(16, [s, s], &cfg(0.25), 12).unwrap();
        assert_ne!(a.users[0].words(), d.users[0].words());
    }

    #[test]
    fn symbol_frequency_within_three_sigma() {
        let s = UserSizes::new(64, 8, 8);
        let c = cfg(0.25);
        let cb = sample_codebooks(40, [s, s], &c, 3).unwrap();
        for u in 0..2 {
            let ones: u64 = cb.users[u].words().iter().map(|x| u64::from(x.count_ones())).sum();
            let trials = (cb.users[u].len() * 40) as f64;
            let p = c.active_prob(u);
            let sigma = (trials * p * (1.0 - p)).sqrt();
            assert!(
                (ones as f64 - trials * p).abs() < 3.0 * sigma,
                "user {u}: {ones} vs {}",
                trials * p
            );
        }
    }

    #[test]
    fn index_round_trip() {
        let s = UserSizes::new(3, 4, 5);
        let cb = Codebook::from_words(s, (0..60).collect()).unwrap();
        for i in 0..60 {
            assert_eq!(cb.index(cb.entry(i)), i);
        }
        assert_eq!(cb.entry(23), Entry { w: 1, k: 0, j: 3 });
        assert_eq!(cb.slice(2), &(40..60).collect::<Vec<u64>>()[..]);
        assert_eq!(cb.preimage(17), &[17]);
        assert!(cb.preimage(99).is_empty());
    }

    #[test]
    fn caps_and_lengths() {
        let s = UserSizes::new(1 << 20, 1 << 10, 1);
        assert!(matches!(
            sample_codebooks(8, [s, s], &cfg(0.1), 1),
            Err(Error::BudgetExceeded { .. })
        ));
        let s = UserSizes::new(1, 1, 1);
        assert!(sample_codebooks(65, [s, s], &cfg(0.1), 1).is_err());
        assert!(Codebook::from_words(UserSizes::new(2, 1, 1), vec![0]).is_err());
    }
}
