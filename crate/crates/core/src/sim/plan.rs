//! Integer codebook sizes for a block length and slack triple.
//!
//! For every nonempty user subset `T` the sizes must satisfy
//!
//! * reliability: `log2(N_T M_T) <= (1 - mu1) n I(X_T; Y | X_{T^c})`
//! * resolvability: `log2(N_T) >= (1 + mu2) n I(X_T; Z)`
//! * source simulation: `log2(G_i N_i M_i) >= (1 + mu3) n H(X_i)` per user
//!
//! with `N_T`, `M_T` the products over `T`.

use serde::{Deserialize, Serialize};

use crate::channel::BinaryMacPair;
use crate::covert::{covert_joint, CovertConfig, Subset, AX_Y, AX_Z};
use crate::error::{Error, Result};
use crate::prob;

/// Slack allowed when comparing a rounded size against its real target.
const CHECK_TOL: f64 = 1e-9;

/// Sizes of one user's index sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSizes {
    /// `G_i`, public-message alphabet size.
    pub public: u64,
    /// `M_i`, key alphabet size.
    pub key: u64,
    /// `N_i`, local randomness alphabet size.
    pub randomness: u64,
}

impl UserSizes {
    pub fn new(public: u64, key: u64, randomness: u64) -> Self {
        Self {
            public,
            key,
            randomness,
        }
    }

    /// Number of codewords `G_i M_i N_i`.
    pub fn codewords(&self) -> u128 {
        u128::from(self.public) * u128::from(self.key) * u128::from(self.randomness)
    }
}

/// Exact single-letter informations the plan is built from (bits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanInformation {
    /// `I(X_T; Y | X_{T^c})` for `T = {1}, {2}, {1,2}`.
    pub info_y: [f64; 3],
    /// `I(X_T; Z)` for `T = {1}, {2}, {1,2}`.
    pub info_z: [f64; 3],
    /// `H(X_1)`, `H(X_2)`.
    pub entropy: [f64; 2],
}

impl PlanInformation {
    pub fn compute(mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<Self> {
        let joint = covert_joint(mac, cfg);
        let mut info_y = [0.0; 3];
        let mut info_z = [0.0; 3];
        for (k, t) in Subset::ALL.into_iter().enumerate() {
            info_y[k] = prob::mutual_information(&joint, t.members(), &[AX_Y], t.complement())?;
            info_z[k] = prob::mutual_information(&joint, t.members(), &[AX_Z], &[])?;
        }
        let h = |u| prob::binary_entropy(cfg.active_prob(u));
        Ok(Self {
            info_y,
            info_z,
            entropy: [h(0)?, h(1)?],
        })
    }
}

/// One inequality of the plan, evaluated on the chosen sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    /// Log-size side (bits).
    pub size_log: f64,
    /// Real-valued target (bits).
    pub target: f64,
    /// Margin in the direction the inequality requires; negative means violated.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    pub n: usize,
    pub config: CovertConfig,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub sizes: [UserSizes; 2],
    pub info: PlanInformation,
    pub checks: Vec<ConstraintCheck>,
}

impl RatePlan {
    /// Evaluate the constraints on caller-chosen sizes without rounding or
    /// rejecting anything.
    pub fn with_sizes(
        mac: &BinaryMacPair,
        cfg: &CovertConfig,
        n: usize,
        mu: (f64, f64, f64),
        sizes: [UserSizes; 2],
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("block length must be positive".into()));
        }
        if sizes.iter().any(|s| s.public == 0 || s.key == 0 || s.randomness == 0) {
            return Err(Error::DomainError("index set sizes must be positive".into()));
        }
        let info = PlanInformation::compute(mac, cfg)?;
        let checks = evaluate(&info, n, mu, &sizes);
        Ok(Self {
            n,
            config: *cfg,
            mu1: mu.0,
            mu2: mu.1,
            mu3: mu.2,
            sizes,
            info,
            checks,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }

    pub fn failure_summary(&self) -> String {
        let failed: Vec<String> = self
            .failed_checks()
            .map(|c| format!("{} (log size {:.4} vs target {:.4})", c.name, c.size_log, c.target))
            .collect();
        if failed.is_empty() {
            "all constraints hold".into()
        } else {
            format!("n = {}: {}", self.n, failed.join("; "))
        }
    }

    /// `G = G_1 G_2`.
    pub fn public_size(&self) -> u128 {
        u128::from(self.sizes[0].public) * u128::from(self.sizes[1].public)
    }

    /// Total key bits `log2(M_1 M_2)`.
    pub fn key_bits(&self) -> f64 {
        (self.sizes[0].key as f64).log2() + (self.sizes[1].key as f64).log2()
    }
}

fn evaluate(info: &PlanInformation, n: usize, mu: (f64, f64, f64), sizes: &[UserSizes; 2]) -> Vec<ConstraintCheck> {
    let nf = n as f64;
    let lg = |v: u64| (v as f64).log2();
    let mut checks = Vec::with_capacity(8);
    let mut push = |name: String, size_log: f64, target: f64, upper: bool| {
        let slack = if upper { target - size_log } else { size_log - target };
        checks.push(ConstraintCheck {
            name,
            size_log,
            target,
            slack,
            holds: slack >= -CHECK_TOL,
        });
    };
    for (k, t) in Subset::ALL.into_iter().enumerate() {
        let log_n: f64 = t.members().iter().map(|&u| lg(sizes[u].randomness)).sum();
        let log_m: f64 = t.members().iter().map(|&u| lg(sizes[u].key)).sum();
        push(
            format!("reliability T={}", t.label()),
            log_n + log_m,
            (1.0 - mu.0) * nf * info.info_y[k],
            true,
        );
        push(
            format!("resolvability T={}", t.label()),
            log_n,
            (1.0 + mu.1) * nf * info.info_z[k],
            false,
        );
    }
    for u in 0..2 {
        let s = &sizes[u];
        push(
            format!("source simulation user {}", u + 1),
            lg(s.public) + lg(s.key) + lg(s.randomness),
            (1.0 + mu.2) * nf * info.entropy[u],
            false,
        );
    }
    checks
}

/// Round the size targets to integers (N up, M down, G up) and verify every
/// subset constraint. An infeasible rounding is returned inside the error so
/// callers can inspect or still use the candidate sizes.
pub fn rate_plan(mac: &BinaryMacPair, cfg: &CovertConfig, n: usize, mu1: f64, mu2: f64, mu3: f64) -> Result<RatePlan> {
    if !(mu1 > 0.0 && mu1 < 1.0) {
        return Err(Error::DomainError(format!("mu1 = {mu1} outside (0, 1)")));
    }
    if !(mu2 > 0.0 && mu3 > 0.0) {
        return Err(Error::DomainError("mu2 and mu3 must be positive".into()));
    }
    if n == 0 {
        return Err(Error::DomainError("block length must be positive".into()));
    }
    let info = PlanInformation::compute(mac, cfg)?;
    let nf = n as f64;
    let mut sizes = [UserSizes::new(1, 1, 1); 2];
    for u in 0..2 {
        // Single-user subsets come first in `Subset::ALL`, so user u is entry u.
        let n_i = pow2_ceil((1.0 + mu2) * nf * info.info_z[u])?;
        let reliable = 2f64.powf((1.0 - mu1) * nf * info.info_y[u]);
        let m_i = ((reliable / n_i as f64).floor() as u64).max(1);
        let source = 2f64.powf((1.0 + mu3) * nf * info.entropy[u]);
        let g_i = to_u64((source / (n_i as f64 * m_i as f64)).ceil())?.max(1);
        sizes[u] = UserSizes::new(g_i, m_i, n_i);
    }
    let checks = evaluate(&info, n, (mu1, mu2, mu3), &sizes);
    let plan = RatePlan {
        n,
        config: *cfg,
        mu1,
        mu2,
        mu3,
        sizes,
        info,
        checks,
    };
    if plan.is_feasible() {
        Ok(plan)
    } else {
        Err(Error::InfeasiblePlan(Box::new(plan)))
    }
}

fn pow2_ceil(bits: f64) -> Result<u64> {
    // Snap targets that sit on an integer up to rounding noise, so 2^3 gives 8 not 9.
    let r = bits.round();
    let bits = if (bits - r).abs() < 1e-12 { r } else { bits };
    to_u64(2f64.powf(bits).ceil()).map(|v| v.max(1))
}

fn to_u64(v: f64) -> Result<u64> {
    if v.is_finite() && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(Error::DomainError(format!(
            "index set size {v:e} does not fit in 64 bits"
        )))
    }
}
