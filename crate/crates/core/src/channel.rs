//! Binary-input two-user MAC pairs: the legitimate channel `W_{Y|X1X2}` and the
//! warden's channel `W_{Z|X1X2}`.
//!
//! Inputs are addressed by role. Role index `r = r1 + 2*r2`, where `r_i = 0`
//! selects user i's innocent symbol and `r_i = 1` its meaningful one, so row 0
//! is `P_0`/`Q_0`, row 1 is `P_1`/`Q_1` (user 1 active), row 2 is `P_2`/`Q_2`
//! and row 3 is `P_3`/`Q_3`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::DiscreteDist;

/// Rank tolerance used by [`validate`].
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMacPair {
    y_alphabet: Vec<String>,
    z_alphabet: Vec<String>,
    innocent: (u8, u8),
    w_y: [DiscreteDist; 4],
    w_z: [DiscreteDist; 4],
}

/// On-disk channel description. Rows are keyed by the literal input pair `"x1,x2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub y_alphabet: Vec<String>,
    pub z_alphabet: Vec<String>,
    pub w_y: BTreeMap<String, Vec<f64>>,
    pub w_z: BTreeMap<String, Vec<f64>>,
    pub innocent: [u8; 2],
    pub meaningful: [u8; 2],
}

impl BinaryMacPair {
    /// Build from rows given in role order `[P0, P1, P2, P3]` and `[Q0, Q1, Q2, Q3]`.
    pub fn from_roles(
        y_alphabet: Vec<String>,
        z_alphabet: Vec<String>,
        w_y: [Vec<f64>; 4],
        w_z: [Vec<f64>; 4],
        innocent: (u8, u8),
    ) -> Result<Self> {
        if innocent.0 > 1 || innocent.1 > 1 {
            return Err(Error::InvalidChannel("input symbols must be 0 or 1".into()));
        }
        let rows = |alph: &Vec<String>, rows: [Vec<f64>; 4], name: &str| -> Result<[DiscreteDist; 4]> {
            let mut out = Vec::with_capacity(4);
            for (r, row) in rows.into_iter().enumerate() {
                let d = DiscreteDist::new(alph.clone(), row)
                    .map_err(|e| Error::InvalidChannel(format!("{name} row for role {r}: {e}")))?;
                out.push(d);
            }
            Ok(out.try_into().expect("four rows"))
        };
        let w_y = rows(&y_alphabet, w_y, "w_y")?;
        let w_z = rows(&z_alphabet, w_z, "w_z")?;
        Ok(Self {
            y_alphabet,
            z_alphabet,
            innocent,
            w_y,
            w_z,
        })
    }

    pub fn from_file(file: &ChannelFile) -> Result<Self> {
        let [a, b] = file.innocent;
        if file.meaningful != [1 - a.min(1), 1 - b.min(1)] || a > 1 || b > 1 {
            return Err(Error::InvalidChannel(
                "innocent and meaningful symbols must be the two binary inputs of each user".into(),
            ));
        }
        let pick = |table: &BTreeMap<String, Vec<f64>>, name: &str| -> Result<[Vec<f64>; 4]> {
            if table.len() != 4 {
                return Err(Error::InvalidChannel(format!("{name} must have exactly 4 rows")));
            }
            let mut out: Vec<Vec<f64>> = Vec::with_capacity(4);
            for role in 0..4 {
                let (x1, x2) = input_for_role((a, b), role);
                let key = format!("{x1},{x2}");
                let row = table
                    .get(&key)
                    .ok_or_else(|| Error::InvalidChannel(format!("{name} lacks row {key:?}")))?;
                out.push(row.clone());
            }
            Ok(out.try_into().expect("four rows"))
        };
        Self::from_roles(
            file.y_alphabet.clone(),
            file.z_alphabet.clone(),
            pick(&file.w_y, "w_y")?,
            pick(&file.w_z, "w_z")?,
            (a, b),
        )
    }

    pub fn to_file(&self) -> ChannelFile {
        let table = |rows: &[DiscreteDist; 4]| -> BTreeMap<String, Vec<f64>> {
            (0..4)
                .map(|role| {
                    let (x1, x2) = input_for_role(self.innocent, role);
                    (format!("{x1},{x2}"), rows[role].probs().to_vec())
                })
                .collect()
        };
        ChannelFile {
            y_alphabet: self.y_alphabet.clone(),
            z_alphabet: self.z_alphabet.clone(),
            w_y: table(&self.w_y),
            w_z: table(&self.w_z),
            innocent: [self.innocent.0, self.innocent.1],
            meaningful: [1 - self.innocent.0, 1 - self.innocent.1],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("channel serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// First reference channel pair `W^(1)`.
    pub fn table1_channel1() -> Self {
        Self::binary_table([0.67, 0.10, 0.27, 0.56], [0.33, 0.62, 0.48, 0.15])
    }

    /// Second reference channel pair `W^(2)`.
    pub fn table1_channel2() -> Self {
        Self::binary_table([0.1, 0.3, 0.2, 0.9], [0.3, 0.4, 0.4, 0.8])
    }

    /// Binary-output pair from `W(1|x1,x2)` listed in role order, innocent symbols 0.
    fn binary_table(y_one: [f64; 4], z_one: [f64; 4]) -> Self {
        // Write the complement with decimal rounding so that 1 - 0.67 is stored as 0.33.
        let row = |p: f64| vec![((1.0 - p) * 1e9).round() / 1e9, p];
        Self::from_roles(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            y_one.map(row),
            z_one.map(row),
            (0, 0),
        )
        .expect("reference rows are valid")
    }

    pub fn y_alphabet(&self) -> &[String] {
        &self.y_alphabet
    }

    pub fn z_alphabet(&self) -> &[String] {
        &self.z_alphabet
    }

    pub fn innocent(&self) -> (u8, u8) {
        self.innocent
    }

    pub fn meaningful(&self) -> (u8, u8) {
        (1 - self.innocent.0, 1 - self.innocent.1)
    }

    /// `W_{Y|X1X2}(.|role)`; `p(0)` is `P_0` and so on.
    pub fn p(&self, role: usize) -> &DiscreteDist {
        &self.w_y[role]
    }

    /// `W_{Z|X1X2}(.|role)`; `q(0)` is `Q_0` and so on.
    pub fn q(&self, role: usize) -> &DiscreteDist {
        &self.w_z[role]
    }

    pub fn w_y(&self, r1: usize, r2: usize, y: usize) -> f64 {
        self.w_y[r1 + 2 * r2].prob(y)
    }

    pub fn w_z(&self, r1: usize, r2: usize, z: usize) -> f64 {
        self.w_z[r1 + 2 * r2].prob(z)
    }
}

/// Literal input pair `(x1, x2)` that realizes a role index.
pub fn input_for_role(innocent: (u8, u8), role: usize) -> (u8, u8) {
    let r1 = (role & 1) as u8;
    let r2 = ((role >> 1) & 1) as u8;
    (innocent.0 ^ r1, innocent.1 ^ r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Rank of the matrix with rows `Q_1, Q_2, Q_3`.
    pub span_rank: usize,
    /// Rank of the same matrix with `Q_0` appended.
    pub span_rank_with_q0: usize,
    /// Rank of the matrix with rows `Q_1 - Q_0, Q_2 - Q_0`.
    pub difference_rank: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        write!(
            f,
            "rank[Q1;Q2;Q3] = {}, rank[Q0;Q1;Q2;Q3] = {}, rank[Q1-Q0;Q2-Q0] = {}",
            self.span_rank, self.span_rank_with_q0, self.difference_rank
        )
    }
}

/// Check the modelling assumptions on a channel pair.
///
/// Absolute continuity `P_i << P_0` and `Q_i << Q_0` is checked for every
/// active role. Nondegeneracy requires that `Q_0` is not a mixture of `Q_1`
/// and `Q_2`, which is what keeps `chi(rho) > 0` for every weight split. Never
/// fails; problems are listed in the report.
pub fn validate(mac: &BinaryMacPair) -> ValidationReport {
    let mut checks = Vec::new();
    for role in 1..4 {
        for (label, rows) in [("P", &mac.w_y), ("Q", &mac.w_z)] {
            let bad: Vec<usize> = (0..rows[0].len())
                .filter(|&k| rows[role].prob(k) > 0.0 && rows[0].prob(k) == 0.0)
                .collect();
            checks.push(Check {
                name: format!("{label}{role} << {label}0"),
                passed: bad.is_empty(),
                detail: if bad.is_empty() {
                    "absolutely continuous".into()
                } else {
                    format!("mass where {label}0 vanishes at symbols {bad:?}")
                },
            });
        }
    }

    let q = |r: usize| mac.w_z[r].probs().to_vec();
    let diff = |r: usize| q(r).iter().zip(q(0)).map(|(a, b)| a - b).collect::<Vec<_>>();
    let (d1, d2) = (diff(1), diff(2));
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let difference_rank = matrix_rank(vec![d1.clone(), d2.clone()], RANK_TOL);
    let dot: f64 = d1.iter().zip(&d2).map(|(a, b)| a * b).sum();
    let (passed, detail) = if norm(&d1) <= RANK_TOL {
        (
            false,
            "Q1 = Q0, so the split rho = (1, 0) leaves the warden's law unchanged".to_string(),
        )
    } else if norm(&d2) <= RANK_TOL {
        (
            false,
            "Q2 = Q0, so the split rho = (0, 1) leaves the warden's law unchanged".to_string(),
        )
    } else if difference_rank < 2 && dot < 0.0 {
        let c = norm(&d1) / (norm(&d1) + norm(&d2));
        (
            false,
            format!("Q0 = {:.6} Q1 + {:.6} Q2 lies between Q1 and Q2", 1.0 - c, c),
        )
    } else {
        (true, "Q0 is not a mixture of Q1 and Q2".to_string())
    };
    checks.push(Check {
        name: "Q0 not a combination of Q1, Q2".into(),
        passed,
        detail,
    });

    ValidationReport {
        checks,
        span_rank: matrix_rank(vec![q(1), q(2), q(3)], RANK_TOL),
        span_rank_with_q0: matrix_rank(vec![q(0), q(1), q(2), q(3)], RANK_TOL),
        difference_rank,
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting.
pub fn matrix_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len())
            .filter(|&r| rows[r][c].abs() > tol)
            .max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs()))
        else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][c] / rows[rank][c];
                for k in c..cols {
                    rows[r][k] -= f * rows[rank][k];
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
