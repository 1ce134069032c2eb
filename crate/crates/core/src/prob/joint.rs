//! Joint tables over several named axes.

use serde::{Deserialize, Serialize};

use super::{check_probs, DiscreteDist, NORM_TOL};
use crate::error::{Error, Result};

/// A dense joint law over several finite alphabets.
///
/// The table is stored row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    axes: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl JointDist {
    pub fn new(axes: Vec<Vec<String>>, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(axes, probs, NORM_TOL)
    }

    pub fn with_tolerance(axes: Vec<Vec<String>>, probs: Vec<f64>, tol: f64) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::InvalidDistribution("joint needs nonempty axes".into()));
        }
        let cells: usize = axes.iter().map(Vec::len).product();
        if cells != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "axes describe {cells} cells but {} probabilities given",
                probs.len()
            )));
        }
        check_probs(&probs, tol)?;
        Ok(Self { axes, probs })
    }

    /// Product of independent marginals, one axis per factor.
    pub fn product(factors: &[&DiscreteDist]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidDistribution("product of no factors".into()));
        }
        let mut probs = vec![1.0];
        for f in factors {
            probs = probs
                .iter()
                .flat_map(|a| f.probs().iter().map(move |b| a * b))
                .collect();
        }
        let axes = factors.iter().map(|f| f.support().to_vec()).collect();
        Ok(Self { axes, probs })
    }

    pub fn axes(&self) -> &[Vec<String>] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Probability of the cell at the given multi-index.
    pub fn prob(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (i, axis) in index.iter().zip(&self.axes) {
            flat = flat * axis.len() + i;
        }
        self.probs[flat]
    }

    /// Joint marginal over `keep`, with axes reordered as listed.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist> {
        self.check_axes(&[keep])?;
        if keep.is_empty() {
            return Err(Error::DomainError("marginal over no axes".into()));
        }
        let probs = self.project(keep);
        let axes = keep.iter().map(|&a| self.axes[a].clone()).collect();
        Ok(JointDist { axes, probs })
    }

    pub fn marginal_dist(&self, axis: usize) -> Result<DiscreteDist> {
        self.check_axes(&[&[axis]])?;
        Ok(DiscreteDist::new_unchecked(
            self.axes[axis].clone(),
            self.project(&[axis]),
        ))
    }

    fn check_axes(&self, groups: &[&[usize]]) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for &a in groups.iter().flat_map(|g| g.iter()) {
            if a >= self.rank() {
                return Err(Error::InvalidAxis {
                    axis: a,
                    rank: self.rank(),
                });
            }
            if seen[a] {
                return Err(Error::AxisOverlap(a));
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Marginal table over `keep` (in that order, last fastest).
    fn project(&self, keep: &[usize]) -> Vec<f64> {
        let shape = self.shape();
        let mut stride = vec![0usize; self.rank()];
        let mut s = 1;
        for &a in keep.iter().rev() {
            stride[a] = s;
            s *= shape[a];
        }
        let mut out = vec![0.0; s];
        let mut idx = vec![0usize; self.rank()];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] += p;
            // Odometer increment, last axis fastest.
            for a in (0..self.rank()).rev() {
                idx[a] += 1;
                target += stride[a];
                if idx[a] < shape[a] {
                    break;
                }
                target -= stride[a] * shape[a];
                idx[a] = 0;
            }
        }
        out
    }
}

/// Conditional mutual information `I(left; right | cond)` in bits.
///
/// The three groups must be disjoint; `cond` may be empty.
pub fn mutual_information(joint: &JointDist, left: &[usize], right: &[usize], cond: &[usize]) -> Result<f64> {
    joint.check_axes(&[left, right, cond])?;
    let shape = joint.shape();
    let size = |g: &[usize]| g.iter().map(|&a| shape[a]).product::<usize>();
    let (dl, dr, dc) = (size(left), size(right), size(cond));
    let order: Vec<usize> = left.iter().chain(right).chain(cond).copied().collect();
    let p = if order.is_empty() {
        vec![1.0]
    } else {
        joint.project(&order)
    };

    let mut p_lc = vec![0.0; dl * dc];
    let mut p_rc = vec![0.0; dr * dc];
    let mut p_c = vec![0.0; dc];
    for l in 0..dl {
        for r in 0..dr {
            for c in 0..dc {
                let v = p[(l * dr + r) * dc + c];
                p_lc[l * dc + c] += v;
                p_rc[r * dc + c] += v;
                p_c[c] += v;
            }
        }
    }
    let mut acc = 0.0;
    for l in 0..dl {
        for r in 0..dr {
            for c in 0..dc {
                let v = p[(l * dr + r) * dc + c];
                if v > 0.0 {
                    acc += v * (v * p_c[c] / (p_lc[l * dc + c] * p_rc[r * dc + c])).log2();
                }
            }
        }
    }
    Ok(acc.max(0.0))
}
