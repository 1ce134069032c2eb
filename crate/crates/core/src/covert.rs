//! The covert input process and its small-amplitude expansions.
//!
//! Each user transmits its meaningful symbol with probability `rho_i * alpha`
//! and its innocent symbol otherwise, independently across users and channel
//! uses. Inputs are indexed by role (0 innocent, 1 meaningful).

use serde::{Deserialize, Serialize};

use crate::channel::BinaryMacPair;
use crate::error::{Error, Result};
use crate::prob::{self, DiscreteDist, JointDist};

/// Axis of `X1` in [`covert_joint`].
pub const AX_X1: usize = 0;
/// Axis of `X2` in [`covert_joint`].
pub const AX_X2: usize = 1;
/// Axis of `Y` in [`covert_joint`].
pub const AX_Y: usize = 2;
/// Axis of `Z` in [`covert_joint`].
pub const AX_Z: usize = 3;

/// Weight split between the two users, a point of the closed simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    pub rho1: f64,
    pub rho2: f64,
}

impl Rho {
    pub fn new(rho1: f64, rho2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho1) || !(0.0..=1.0).contains(&rho2) {
            return Err(Error::DomainError(format!("weights ({rho1}, {rho2}) outside [0, 1]")));
        }
        if (rho1 + rho2 - 1.0).abs() > 1e-12 {
            return Err(Error::DomainError(format!("weights ({rho1}, {rho2}) do not sum to 1")));
        }
        Ok(Self { rho1, rho2 })
    }

    /// The split `(rho1, 1 - rho1)`.
    pub fn from_rho1(rho1: f64) -> Result<Self> {
        Self::new(rho1, 1.0 - rho1)
    }

    pub fn get(&self, user: usize) -> f64 {
        if user == 0 {
            self.rho1
        } else {
            self.rho2
        }
    }

    /// `n` evenly spaced splits with `rho1` running over `[lo, hi]`.
    pub fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<Rho>> {
        if n == 0 {
            return Err(Error::DomainError("empty weight grid".into()));
        }
        if n == 1 {
            return Ok(vec![Rho::from_rho1(lo)?]);
        }
        (0..n)
            .map(|k| Rho::from_rho1(lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .collect()
    }
}

/// A weight split together with the per-use amplitude `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertConfig {
    pub rho: Rho,
    pub alpha: f64,
}

impl CovertConfig {
    pub fn new(rho: Rho, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::DomainError(format!("alpha = {alpha} outside [0, 1)")));
        }
        Ok(Self { rho, alpha })
    }

    /// `Q_{X_i}(x_{i1})` for user `i` (0-based).
    pub fn active_prob(&self, user: usize) -> f64 {
        self.rho.get(user) * self.alpha
    }

    /// `Q_{X_i}` indexed by role.
    pub fn input_probs(&self, user: usize) -> [f64; 2] {
        let a = self.active_prob(user);
        [1.0 - a, a]
    }
}

/// `(Q_{X1}, Q_{X2})` over the role alphabet `{"0": innocent, "1": meaningful}`.
pub fn input_dists(cfg: &CovertConfig) -> (DiscreteDist, DiscreteDist) {
    let d = |u| DiscreteDist::from_probs(cfg.input_probs(u).to_vec()).expect("valid Bernoulli");
    (d(0), d(1))
}

/// `(Q_Y, Q_Z)`, the output laws induced by the covert inputs.
pub fn output_dists(mac: &BinaryMacPair, cfg: &CovertConfig) -> (DiscreteDist, DiscreteDist) {
    let mix = |rows: [&DiscreteDist; 4], support: &[String]| {
        let mut out = vec![0.0; support.len()];
        for (role, row) in rows.into_iter().enumerate() {
            let w = role_weight(cfg, role);
            for (o, p) in out.iter_mut().zip(row.probs()) {
                *o += w * p;
            }
        }
        DiscreteDist::new_unchecked(support.to_vec(), out)
    };
    (
        mix(std::array::from_fn(|r| mac.p(r)), mac.y_alphabet()),
        mix(std::array::from_fn(|r| mac.q(r)), mac.z_alphabet()),
    )
}

/// Probability of the input role pair under the covert process.
pub fn role_weight(cfg: &CovertConfig, role: usize) -> f64 {
    cfg.input_probs(0)[role & 1] * cfg.input_probs(1)[role >> 1]
}

/// `zeta(z) = sum_i rho_i (Q_i(z) - Q_0(z))`.
pub fn zeta(mac: &BinaryMacPair, rho: &Rho, z: usize) -> f64 {
    rho.rho1 * (mac.q(1).prob(z) - mac.q(0).prob(z)) + rho.rho2 * (mac.q(2).prob(z) - mac.q(0).prob(z))
}

pub fn zeta_vec(mac: &BinaryMacPair, rho: &Rho) -> Vec<f64> {
    (0..mac.z_alphabet().len()).map(|z| zeta(mac, rho, z)).collect()
}

/// `chi(rho) = sum_z zeta(z)^2 / Q_0(z)`. Symbols with `Q_0(z) = 0` are skipped,
/// since absolute continuity forces `zeta(z) = 0` there.
pub fn chi(mac: &BinaryMacPair, rho: &Rho) -> f64 {
    weighted_square(&zeta_vec(mac, rho), mac.q(0).probs())
}

/// `kappa(rho) = sqrt(2 / chi(rho))`.
pub fn kappa(mac: &BinaryMacPair, rho: &Rho) -> Result<f64> {
    let c = chi(mac, rho);
    if c <= 1e-15 {
        return Err(Error::DegenerateChannel(format!(
            "chi({}, {}) = {c:e}: the warden's law does not move with the inputs",
            rho.rho1, rho.rho2
        )));
    }
    Ok((2.0 / c).sqrt())
}

/// `zeta_n(z) = (Q_Z(z) - Q_0(z)) / alpha`.
pub fn zeta_n(mac: &BinaryMacPair, cfg: &CovertConfig, z: usize) -> Result<f64> {
    Ok(zeta_n_vec(mac, cfg)?[z])
}

pub fn zeta_n_vec(mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<Vec<f64>> {
    if cfg.alpha == 0.0 {
        return Err(Error::DomainError("zeta_n needs alpha > 0".into()));
    }
    let (_, qz) = output_dists(mac, cfg);
    Ok(qz
        .probs()
        .iter()
        .zip(mac.q(0).probs())
        .map(|(a, b)| (a - b) / cfg.alpha)
        .collect())
}

pub fn chi_n(mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<f64> {
    Ok(weighted_square(&zeta_n_vec(mac, cfg)?, mac.q(0).probs()))
}

fn weighted_square(v: &[f64], q0: &[f64]) -> f64 {
    v.iter().zip(q0).filter(|(_, &q)| q > 0.0).map(|(z, q)| z * z / q).sum()
}

/// A rule assigning the amplitude `alpha_n` to each block length.
pub trait AlphaSchedule: Send + Sync {
    fn alpha(&self, n: usize) -> Result<f64>;
}

/// `alpha_n = 1 / (log2(n) sqrt(n))`, which is `o(1/sqrt n)` and `omega(log n / n)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DefaultSchedule;

impl AlphaSchedule for DefaultSchedule {
    fn alpha(&self, n: usize) -> Result<f64> {
        alpha_schedule(n)
    }
}

/// The same amplitude at every block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantAlpha(pub f64);

impl AlphaSchedule for ConstantAlpha {
    fn alpha(&self, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(Error::DomainError("block length must be positive".into()));
        }
        Ok(self.0)
    }
}

impl<F> AlphaSchedule for F
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    fn alpha(&self, n: usize) -> Result<f64> {
        Ok(self(n))
    }
}

pub fn alpha_schedule(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DomainError(format!("alpha schedule needs n >= 2, got {n}")));
    }
    let n = n as f64;
    Ok(1.0 / (n.log2() * n.sqrt()))
}

/// Joint law of `(X1, X2, Y, Z)` for one channel use.
pub fn covert_joint(mac: &BinaryMacPair, cfg: &CovertConfig) -> JointDist {
    joint_from_inputs(mac, [0, 1, 2, 3].map(|r| role_weight(cfg, r)))
}

/// Joint law of `(X1, X2, Y, Z)` for an arbitrary input law given by role index.
pub fn joint_from_inputs(mac: &BinaryMacPair, inputs: [f64; 4]) -> JointDist {
    let (ny, nz) = (mac.y_alphabet().len(), mac.z_alphabet().len());
    let mut probs = Vec::with_capacity(4 * ny * nz);
    for r1 in 0..2 {
        for r2 in 0..2 {
            let role = r1 + 2 * r2;
            for y in 0..ny {
                for z in 0..nz {
                    probs.push(inputs[role] * mac.p(role).prob(y) * mac.q(role).prob(z));
                }
            }
        }
    }
    let axes = vec![
        vec!["0".to_string(), "1".to_string()],
        vec!["0".to_string(), "1".to_string()],
        mac.y_alphabet().to_vec(),
        mac.z_alphabet().to_vec(),
    ];
    JointDist::with_tolerance(axes, probs, 1e-10).expect("product of valid laws")
}

/// A nonempty subset of the two users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subset {
    One,
    Two,
    Both,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::One, Subset::Two, Subset::Both];

    /// Member users, 0-based (also the joint axes of their inputs).
    pub fn members(self) -> &'static [usize] {
        match self {
            Subset::One => &[0],
            Subset::Two => &[1],
            Subset::Both => &[0, 1],
        }
    }

    pub fn complement(self) -> &'static [usize] {
        match self {
            Subset::One => &[1],
            Subset::Two => &[0],
            Subset::Both => &[],
        }
    }

    pub fn contains(self, user: usize) -> bool {
        self.members().contains(&user)
    }

    pub fn label(self) -> &'static str {
        match self {
            Subset::One => "{1}",
            Subset::Two => "{2}",
            Subset::Both => "{1,2}",
        }
    }
}

/// Per-symbol information densities, as `(values in bits, probabilities)`.
pub type Atoms = (Vec<f64>, Vec<f64>);

/// Law of `log2 W_{Y|X1X2}(Y|X) / W_{Y|X_{T^c}}(Y|X_{T^c})` under the covert joint.
pub fn reliability_atoms(mac: &BinaryMacPair, cfg: &CovertConfig, t: Subset) -> Atoms {
    let ny = mac.y_alphabet().len();
    let mut out = (Vec::new(), Vec::new());
    for role in 0..4 {
        let w = role_weight(cfg, role);
        for y in 0..ny {
            let p = w * mac.p(role).prob(y);
            if p > 0.0 {
                let cond = y_given_complement(mac, cfg, t, role, y);
                out.0.push((mac.p(role).prob(y) / cond).log2());
                out.1.push(p);
            }
        }
    }
    out
}

/// Law of `log2 W_{Z|X_T}(Z|X_T) / Q_Z(Z)` under the covert joint.
pub fn resolvability_atoms(mac: &BinaryMacPair, cfg: &CovertConfig, t: Subset) -> Atoms {
    let (_, qz) = output_dists(mac, cfg);
    let nz = mac.z_alphabet().len();
    let mut out = (Vec::new(), Vec::new());
    for xt in subset_assignments(t) {
        let weight: f64 = t
            .members()
            .iter()
            .zip(&xt)
            .map(|(&u, &r)| cfg.input_probs(u)[r])
            .product();
        if weight == 0.0 {
            continue;
        }
        for z in 0..nz {
            let cond = z_given_subset(mac, cfg, t, &xt, z);
            let p = weight * cond;
            if p > 0.0 {
                out.0.push((cond / qz.prob(z)).log2());
                out.1.push(p);
            }
        }
    }
    out
}

fn subset_assignments(t: Subset) -> Vec<Vec<usize>> {
    match t {
        Subset::Both => vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
        _ => vec![vec![0], vec![1]],
    }
}

/// `W_{Y|X_{T^c}}(y | x_{T^c})`, averaging the inputs in `T` over the covert law.
fn y_given_complement(mac: &BinaryMacPair, cfg: &CovertConfig, t: Subset, role: usize, y: usize) -> f64 {
    let mut acc = 0.0;
    for other in 0..4 {
        let mut w = 1.0;
        let mut keep = true;
        for u in 0..2 {
            let (r, r_other) = ((role >> u) & 1, (other >> u) & 1);
            if t.contains(u) {
                w *= cfg.input_probs(u)[r_other];
            } else if r != r_other {
                keep = false;
            }
        }
        if keep {
            acc += w * mac.p(other).prob(y);
        }
    }
    acc
}

/// `W_{Z|X_T}(z | x_T)`, averaging the inputs outside `T` over the covert law.
fn z_given_subset(mac: &BinaryMacPair, cfg: &CovertConfig, t: Subset, xt: &[usize], z: usize) -> f64 {
    let mut acc = 0.0;
    for role in 0..4 {
        let mut w = 1.0;
        let mut keep = true;
        for u in 0..2 {
            let r = (role >> u) & 1;
            match t.members().iter().position(|&m| m == u) {
                Some(k) => keep &= xt[k] == r,
                None => w *= cfg.input_probs(u)[r],
            }
        }
        if keep {
            acc += w * mac.q(role).prob(z);
        }
    }
    acc
}

/// Exact value against its first-order prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub exact: f64,
    pub prediction: f64,
    pub residual: f64,
    /// Residual divided by the claimed order (`alpha^2` or `alpha^3`); absent when `alpha = 0`.
    pub scaled: Option<f64>,
}

impl Expansion {
    fn new(exact: f64, prediction: f64, scale: f64) -> Self {
        let residual = exact - prediction;
        let scaled = (scale > 0.0).then(|| residual / scale);
        Self {
            exact,
            prediction,
            residual,
            scaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetExpansion {
    pub subset: Subset,
    /// `I(X_T; Y | X_{T^c})` against `sum rho_t alpha D(P_t||P_0)`.
    pub info_y: Expansion,
    /// `I(X_T; Z)` against `sum rho_t alpha D(Q_t||Q_0)`.
    pub info_z: Expansion,
    /// `I(X_T; Y, Z | X_{T^c})` against the sum of both predictions.
    pub info_yz: Expansion,
    pub var_y: f64,
    pub var_y_over_alpha: Option<f64>,
    pub var_z: f64,
    pub var_z_over_alpha: Option<f64>,
    /// Largest `|log-ratio - I|` over the support, reliability side.
    pub max_dev_y: f64,
    /// Largest `|log-ratio - I|` over the support, resolvability side.
    pub max_dev_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub config: CovertConfig,
    pub chi: f64,
    pub chi_n: Option<f64>,
    pub divergence_bits: f64,
    /// `D(Q_Z||Q_0)` in nats against `alpha^2 chi_n / 2`, residual over `alpha^3`.
    pub divergence: Expansion,
    pub subsets: Vec<SubsetExpansion>,
    /// `I(Y; Z | X1, X2)`, zero because the two channels act independently.
    pub conditional_yz_info: f64,
}

pub fn expansion_report(mac: &BinaryMacPair, cfg: &CovertConfig) -> Result<ExpansionReport> {
    let alpha = cfg.alpha;
    let joint = covert_joint(mac, cfg);
    let (_, qz) = output_dists(mac, cfg);
    let divergence_bits = prob::kl_divergence(&qz, mac.q(0))?;
    let chi_n = if alpha > 0.0 { Some(chi_n(mac, cfg)?) } else { None };
    let divergence = Expansion::new(
        divergence_bits * std::f64::consts::LN_2,
        0.5 * alpha * alpha * chi_n.unwrap_or(0.0),
        alpha.powi(3),
    );

    let d = |f: fn(&BinaryMacPair, usize) -> &DiscreteDist, role: usize| prob::kl_divergence(f(mac, role), f(mac, 0));
    let mut subsets = Vec::with_capacity(3);
    for t in Subset::ALL {
        let (mut pred_y, mut pred_z) = (0.0, 0.0);
        for &u in t.members() {
            let role = 1 << u;
            pred_y += cfg.active_prob(u) * d(BinaryMacPair::p, role)?;
            pred_z += cfg.active_prob(u) * d(BinaryMacPair::q, role)?;
        }
        let info_y = prob::mutual_information(&joint, t.members(), &[AX_Y], t.complement())?;
        let info_z = prob::mutual_information(&joint, t.members(), &[AX_Z], &[])?;
        let info_yz = prob::mutual_information(&joint, t.members(), &[AX_Y, AX_Z], t.complement())?;
        let a2 = alpha * alpha;

        let (var_y, max_dev_y) = spread(&reliability_atoms(mac, cfg, t), info_y);
        let (var_z, max_dev_z) = spread(&resolvability_atoms(mac, cfg, t), info_z);
        let per_alpha = |v: f64| (alpha > 0.0).then(|| v / alpha);
        subsets.push(SubsetExpansion {
            subset: t,
            info_y: Expansion::new(info_y, pred_y, a2),
            info_z: Expansion::new(info_z, pred_z, a2),
            info_yz: Expansion::new(info_yz, pred_y + pred_z, a2),
            var_y,
            var_y_over_alpha: per_alpha(var_y),
            var_z,
            var_z_over_alpha: per_alpha(var_z),
            max_dev_y,
            max_dev_z,
        });
    }

    Ok(ExpansionReport {
        config: *cfg,
        chi: chi(mac, &cfg.rho),
        chi_n,
        divergence_bits,
        divergence,
        subsets,
        conditional_yz_info: prob::mutual_information(&joint, &[AX_Y], &[AX_Z], &[AX_X1, AX_X2])?,
    })
}

/// Variance of the atoms and their largest deviation from `center`.
fn spread(atoms: &Atoms, center: f64) -> (f64, f64) {
    let (v, p) = atoms;
    let mean: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
    let var = v.iter().zip(p).map(|(a, b)| b * (a - mean).powi(2)).sum();
    let dev = v.iter().map(|a| (a - center).abs()).fold(0.0, f64::max);
    (var, dev)
}

/// `max |x| / min |x|`, or infinity when the values change sign or include zero.
pub fn ratio_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let same_sign = values.iter().all(|&v| v > 0.0) || values.iter().all(|&v| v < 0.0);
    if !same_sign {
        return f64::INFINITY;
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let hi = abs.iter().copied().fold(0.0, f64::max);
    let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ch1() -> BinaryMacPair {
        BinaryMacPair::table1_channel1()
    }

    fn ch2() -> BinaryMacPair {
        BinaryMacPair::table1_channel2()
    }

    fn cfg(rho1: f64, alpha: f64) -> CovertConfig {
        CovertConfig::new(Rho::from_rho1(rho1).unwrap(), alpha).unwrap()
    }

    #[test]
    fn input_laws() {
        let (a, b) = input_dists(&cfg(0.5, 0.0));
        assert_eq!(a.probs(), &[1.0, 0.0]);
        assert_eq!(b.probs(), &[1.0, 0.0]);
        let (a, b) = input_dists(&cfg(0.5, 0.02));
        assert_abs_diff_eq!(a.prob(1), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(b.prob(1), 0.01, epsilon = 1e-15);
        let c = CovertConfig::new(Rho::new(0.28, 0.72).unwrap(), 0.01).unwrap();
        let (a, b) = input_dists(&c);
        assert_abs_diff_eq!(a.prob(1), 0.0028, epsilon = 1e-15);
        assert_abs_diff_eq!(b.prob(1), 0.0072, epsilon = 1e-15);
    }

    #[test]
    fn config_rejects_out_of_range() {
        assert!(Rho::new(0.5, 0.6).is_err());
        assert!(Rho::new(-0.1, 1.1).is_err());
        assert!(CovertConfig::new(Rho::from_rho1(0.5).unwrap(), 1.0).is_err());
        assert!(CovertConfig::new(Rho::from_rho1(0.5).unwrap(), -0.1).is_err());
    }

    #[test]
    fn outputs_at_zero_alpha_are_innocent() {
        let (qy, qz) = output_dists(&ch1(), &cfg(0.3, 0.0));
        assert_eq!(qy.probs(), ch1().p(0).probs());
        assert_eq!(qz.probs(), ch1().q(0).probs());
    }

    #[test]
    fn output_mixture_matches_four_term_oracle() {
        let c = cfg(0.5, 0.1);
        let (qy, qz) = output_dists(&ch2(), &c);
        let (a, b) = (0.05, 0.05);
        let oracle = (1.0 - a) * (1.0 - b) * 0.3 + a * (1.0 - b) * 0.4 + (1.0 - a) * b * 0.4 + a * b * 0.8;
        assert_abs_diff_eq!(qz.prob(1), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(qy.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let zn = zeta_n(&ch2(), &c, 1).unwrap();
        assert_abs_diff_eq!(zn, (oracle - 0.3) / 0.1, epsilon = 1e-13);
    }

    #[test]
    fn example_two_chi_is_flat() {
        for rho in Rho::grid(0.0, 1.0, 101).unwrap() {
            assert_abs_diff_eq!(chi(&ch2(), &rho), 0.01 / 0.3 + 0.01 / 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(kappa(&ch2(), &rho).unwrap(), 42f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn chi_is_chi_squared_of_mixture() {
        for rho1 in [0.1, 0.28, 0.5, 0.9] {
            let rho = Rho::from_rho1(rho1).unwrap();
            let mac = ch1();
            let mix: Vec<f64> = (0..2)
                .map(|z| rho.rho1 * mac.q(1).prob(z) + rho.rho2 * mac.q(2).prob(z))
                .collect();
            let mix = DiscreteDist::from_probs(mix).unwrap();
            let oracle =
                prob::chi_squared(&mix, &DiscreteDist::from_probs(mac.q(0).probs().to_vec()).unwrap()).unwrap();
            assert_abs_diff_eq!(chi(&mac, &rho), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_kappa() {
        let row = vec![0.4, 0.6];
        let mac = BinaryMacPair::from_roles(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            [vec![0.5, 0.5], vec![0.2, 0.8], vec![0.3, 0.7], vec![0.1, 0.9]],
            [row.clone(), row.clone(), row.clone(), vec![0.9, 0.1]],
            (0, 0),
        )
        .unwrap();
        let rho = Rho::from_rho1(0.4).unwrap();
        assert!(zeta_vec(&mac, &rho).iter().all(|&z| z == 0.0));
        assert_eq!(chi(&mac, &rho), 0.0);
        assert!(matches!(kappa(&mac, &rho), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn chi_n_converges() {
        let mac = ch1();
        let rho = Rho::new(0.28, 0.72).unwrap();
        let target = chi(&mac, &rho);
        let mut prev = f64::INFINITY;
        for k in 2..=5 {
            let gap = (chi_n(&mac, &cfg(0.28, 10f64.powi(-k))).unwrap() - target).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-5);
        assert!(matches!(chi_n(&mac, &cfg(0.28, 0.0)), Err(Error::DomainError(_))));
    }

    #[test]
    fn single_user_zeta_n() {
        let mac = ch1();
        let c = CovertConfig::new(Rho::new(1.0, 0.0).unwrap(), 1e-4).unwrap();
        let zn = zeta_n_vec(&mac, &c).unwrap();
        for (z, v) in zn.iter().enumerate() {
            assert_abs_diff_eq!(*v, mac.q(1).prob(z) - mac.q(0).prob(z), epsilon = 1e-12);
        }
    }

    #[test]
    fn schedule_values() {
        assert_eq!(alpha_schedule(4).unwrap(), 0.25);
        assert_eq!(alpha_schedule(256).unwrap(), 0.0078125);
        assert!(alpha_schedule(1).is_err());
        assert!(DefaultSchedule.alpha(0).is_err());
        assert_eq!(ConstantAlpha(0.1).alpha(7).unwrap(), 0.1);
        let custom = |n: usize| 1.0 / n as f64;
        assert_eq!(custom.alpha(8).unwrap(), 0.125);
    }

    #[test]
    fn schedule_scaling_regime() {
        let mut last_sqrt = f64::INFINITY;
        let mut last_lin = 0.0;
        for n in [256usize, 4096, 65536, 1 << 24, 1 << 40] {
            let a = alpha_schedule(n).unwrap();
            let nf = n as f64;
            let s = a * nf.sqrt();
            let l = a * nf / nf.log2();
            assert!(s < last_sqrt && l > last_lin);
            last_sqrt = s;
            last_lin = l;
        }
        assert!(last_sqrt < 0.06);
        assert!(last_lin > 100.0);
    }

    #[test]
    fn zero_alpha_report_is_zero() {
        let r = expansion_report(&ch1(), &cfg(0.28, 0.0)).unwrap();
        assert_eq!(r.divergence_bits, 0.0);
        assert!(r.chi_n.is_none());
        for s in &r.subsets {
            assert_eq!(s.info_y.exact, 0.0);
            assert_eq!(s.info_z.exact, 0.0);
            assert_eq!(s.info_yz.exact, 0.0);
            assert!(s.info_y.scaled.is_none());
        }
    }

    #[test]
    fn expansion_residuals_scale() {
        let mac = ch1();
        let reports: Vec<ExpansionReport> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&a| expansion_report(&mac, &cfg(0.28, a)).unwrap())
            .collect();
        let div: Vec<f64> = reports.iter().map(|r| r.divergence.scaled.unwrap()).collect();
        assert!(ratio_spread(&div) < 4.0, "{div:?}");
        for k in 0..3 {
            for pick in [
                |s: &SubsetExpansion| s.info_y.scaled.unwrap(),
                |s: &SubsetExpansion| s.info_z.scaled.unwrap(),
                |s: &SubsetExpansion| s.info_yz.scaled.unwrap(),
                |s: &SubsetExpansion| s.var_y_over_alpha.unwrap(),
                |s: &SubsetExpansion| s.var_z_over_alpha.unwrap(),
            ] {
                let v: Vec<f64> = reports.iter().map(|r| pick(&r.subsets[k])).collect();
                assert!(ratio_spread(&v) < 4.0, "{v:?}");
            }
            let devs: Vec<f64> = reports
                .iter()
                .map(|r| r.subsets[k].max_dev_y.max(r.subsets[k].max_dev_z))
                .collect();
            assert!(devs.windows(2).all(|w| w[1] <= w[0] * 1.5 + 1e-9), "{devs:?}");
        }
        for r in &reports {
            assert!(r.conditional_yz_info.abs() < 1e-12);
        }
    }

    #[test]
    fn atoms_reproduce_information() {
        let mac = ch1();
        let c = cfg(0.4, 0.2);
        let joint = covert_joint(&mac, &c);
        for t in Subset::ALL {
            let (v, p) = reliability_atoms(&mac, &c, t);
            let mean: f64 = v.iter().zip(&p).map(|(a, b)| a * b).sum();
            let info = prob::mutual_information(&joint, t.members(), &[AX_Y], t.complement()).unwrap();
            assert_abs_diff_eq!(mean, info, epsilon = 1e-12);
            let (v, p) = resolvability_atoms(&mac, &c, t);
            let mean: f64 = v.iter().zip(&p).map(|(a, b)| a * b).sum();
            let info = prob::mutual_information(&joint, t.members(), &[AX_Z], &[]).unwrap();
            assert_abs_diff_eq!(mean, info, epsilon = 1e-12);
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn zeta_sums_to_zero(rho1 in 0.0f64..=1.0, alpha in 1e-4f64..0.9) {
            for mac in [ch1(), ch2()] {
                let rho = Rho::from_rho1(rho1).unwrap();
                prop_assert!(zeta_vec(&mac, &rho).iter().sum::<f64>().abs() < 1e-12);
                let c = CovertConfig::new(rho, alpha).unwrap();
                prop_assert!(zeta_n_vec(&mac, &c).unwrap().iter().sum::<f64>().abs() < 1e-10);
            }
        }

        #[test]
        fn channels_conditionally_independent(rho1 in 0.0f64..=1.0, alpha in 0.0f64..0.9) {
            let c = CovertConfig::new(Rho::from_rho1(rho1).unwrap(), alpha).unwrap();
            let j = covert_joint(&ch1(), &c);
            prop_assert!(prob::mutual_information(&j, &[AX_Y], &[AX_Z], &[AX_X1, AX_X2]).unwrap() < 1e-12);
        }
    }
}
