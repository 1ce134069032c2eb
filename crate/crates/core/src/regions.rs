//! Covert (CSK) and wiretap (WSK) secret-key rate regions.
//!
//! Each parameter point yields a polytope `{r1 <= b1, r2 <= b2, r1 + r2 <= bs}`
//! (a rectangle when `bs` is infinite). A region is the union over a parameter
//! grid, represented by its exact upper envelope: a polyline with horizontal,
//! slope -1 and vertical pieces, from `(0, r2max)` down to `(r1max, 0)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::BinaryMacPair;
use crate::covert::{self, joint_from_inputs, Rho, Subset, AX_Y, AX_Z};
use crate::error::{Error, Result};
use crate::prob::{self, DiscreteDist};

/// Default number of weight splits in a CSK sweep.
pub const DEFAULT_RHO_POINTS: usize = 1001;
/// Default Bernoulli grid size per user in a WSK sweep.
pub const DEFAULT_WSK_POINTS: usize = 101;
/// Default number of plotting samples along a boundary.
pub const DEFAULT_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    CskInner,
    CskOuter,
    WskInner,
    WskOuter,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::CskInner => "csk_inner",
            RegionKind::CskOuter => "csk_outer",
            RegionKind::WskInner => "wsk_inner",
            RegionKind::WskOuter => "wsk_outer",
        }
    }
}

/// The parameter that produced a polytope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// CSK weight split `(rho1, 1 - rho1)`.
    Rho { rho1: f64 },
    /// WSK product input law, `P(X1 = 1)` and `P(X2 = 1)`.
    Inputs { px1: f64, px2: f64 },
    /// WSK correlated input law over `(x1, x2)` in the order 00, 10, 01, 11.
    Joint { pxx: [f64; 4] },
}

/// One polytope of a union, with its origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub b1: f64,
    pub b2: f64,
    pub bs: f64,
    pub provenance: Provenance,
}

impl Polytope {
    pub fn rectangle(corner: RatePair, provenance: Provenance) -> Self {
        Self {
            b1: corner.r1,
            b2: corner.r2,
            bs: f64::INFINITY,
            provenance,
        }
    }

    fn height(&self) -> f64 {
        self.b2.min(self.bs)
    }

    fn width(&self) -> f64 {
        self.b1.min(self.bs)
    }

    /// Where the flat top ends and the slope -1 face starts.
    fn knee(&self) -> f64 {
        (self.bs - self.height()).clamp(0.0, self.width())
    }

    /// Largest `r2` in the polytope at `r1`, if `r1` is within its extent.
    pub fn top(&self, r1: f64) -> Option<f64> {
        (0.0..=self.width())
            .contains(&r1)
            .then(|| self.height().min(self.bs - r1))
    }

    pub fn contains(&self, p: RatePair, tol: f64) -> bool {
        p.r1 >= -tol && p.r2 >= -tol && p.r1 <= self.b1 + tol && p.r2 <= self.b2 + tol && p.r1 + p.r2 <= self.bs + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub rate: RatePair,
    pub provenance: Provenance,
    /// True when the point is a vertex of the polytope it is attributed to.
    pub corner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub kind: RegionKind,
    /// Envelope vertices, `r1` ascending and `r2` non-increasing.
    pub points: Vec<BoundaryPoint>,
    /// Every polytope of the union, in grid order.
    pub polytopes: Vec<Polytope>,
}

impl RegionBoundary {
    /// Largest `r2` in the region at `r1`, or `None` past the region's extent.
    pub fn value_at(&self, r1: f64) -> Option<f64> {
        let last = self.points.last()?;
        if r1 < 0.0 || r1 > last.rate.r1 {
            return None;
        }
        let i = self.points.partition_point(|p| p.rate.r1 < r1);
        let hi = &self.points[i].rate;
        if hi.r1 == r1 || i == 0 {
            return Some(hi.r2);
        }
        let lo = &self.points[i - 1].rate;
        let t = (r1 - lo.r1) / (hi.r1 - lo.r1);
        Some(lo.r2 + t * (hi.r2 - lo.r2))
    }

    pub fn max_r1(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.rate.r1)
    }

    pub fn max_r2(&self) -> f64 {
        self.points.first().map_or(0.0, |p| p.rate.r2)
    }

    /// `count` evenly spaced samples of the envelope over `[0, max_r1]`.
    pub fn sample(&self, count: usize) -> Vec<RatePair> {
        let w = self.max_r1();
        (0..count)
            .map(|k| {
                let r1 = if count > 1 {
                    (w * k as f64 / (count - 1) as f64).min(w)
                } else {
                    0.0
                };
                RatePair {
                    r1,
                    r2: self.value_at(r1).unwrap_or(0.0),
                }
            })
            .collect()
    }

    /// Boundary vertices as CSV: `kind,r1,r2,rho1` or `kind,r1,r2,px1,px2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_provenanced_csv(self.kind, self.points.iter().map(|p| (p.rate, p.provenance)), out)
    }

    /// Every polytope's extreme point as CSV, same columns as [`Self::write_csv`].
    pub fn write_corners_csv<W: Write>(&self, out: W) -> Result<()> {
        let corners = self.polytopes.iter().map(|p| {
            (
                RatePair {
                    r1: p.width(),
                    r2: p.height(),
                },
                p.provenance,
            )
        });
        write_provenanced_csv(self.kind, corners, out)
    }

    /// Plot samples as CSV: `kind,r1,r2`.
    pub fn write_samples_csv<W: Write>(&self, count: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "r1", "r2"])?;
        for s in self.sample(count) {
            w.write_record([self.kind.as_str().to_string(), s.r1.to_string(), s.r2.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn write_provenanced_csv<W: Write>(
    kind: RegionKind,
    rows: impl Iterator<Item = (RatePair, Provenance)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: &[&str] = match kind {
        RegionKind::CskInner | RegionKind::CskOuter => &["kind", "r1", "r2", "rho1"],
        _ => &["kind", "r1", "r2", "px1", "px2"],
    };
    w.write_record(header)?;
    for (rate, prov) in rows {
        let mut rec = vec![kind.as_str().to_string(), rate.r1.to_string(), rate.r2.to_string()];
        match prov {
            Provenance::Rho { rho1 } => rec.push(rho1.to_string()),
            Provenance::Inputs { px1, px2 } => {
                rec.push(px1.to_string());
                rec.push(px2.to_string());
            }
            Provenance::Joint { pxx } => {
                rec.push((pxx[1] + pxx[3]).to_string());
                rec.push((pxx[2] + pxx[3]).to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Inner corner `(rho_i kappa {D(P_i||P_0) - D(Q_i||Q_0)}^+)_i`.
pub fn csk_inner_corner(mac: &BinaryMacPair, rho: &Rho) -> Result<RatePair> {
    let k = covert::kappa(mac, rho)?;
    let gap = |role| -> Result<f64> {
        Ok((prob::kl_divergence(mac.p(role), mac.p(0))? - prob::kl_divergence(mac.q(role), mac.q(0))?).max(0.0))
    };
    Ok(RatePair {
        r1: rho.rho1 * k * gap(1)?,
        r2: rho.rho2 * k * gap(2)?,
    })
}

/// Outer corner `(rho_i kappa D(P_i||P_0))_i`.
pub fn csk_outer_corner(mac: &BinaryMacPair, rho: &Rho) -> Result<RatePair> {
    let k = covert::kappa(mac, rho)?;
    Ok(RatePair {
        r1: rho.rho1 * k * prob::kl_divergence(mac.p(1), mac.p(0))?,
        r2: rho.rho2 * k * prob::kl_divergence(mac.p(2), mac.p(0))?,
    })
}

/// The default weight grid: 1001 points with `rho1` in `[0.001, 0.999]`.
pub fn default_rho_grid() -> Vec<Rho> {
    Rho::grid(0.001, 0.999, DEFAULT_RHO_POINTS).expect("valid default grid")
}

/// Union of the CSK rectangles over `grid`, inner (`outer = false`) or outer.
pub fn csk_region(mac: &BinaryMacPair, grid: &[Rho], outer: bool) -> Result<RegionBoundary> {
    if grid.is_empty() {
        return Err(Error::DomainError("empty weight grid".into()));
    }
    let polytopes = grid
        .par_iter()
        .map(|rho| {
            let corner = if outer {
                csk_outer_corner(mac, rho)?
            } else {
                csk_inner_corner(mac, rho)?
            };
            Ok(Polytope::rectangle(corner, Provenance::Rho { rho1: rho.rho1 }))
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if outer {
        RegionKind::CskOuter
    } else {
        RegionKind::CskInner
    };
    region_union(kind, polytopes)
}

/// Per-subset WSK bounds in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WskConstraintSet {
    pub bound_1: f64,
    pub bound_2: f64,
    pub bound_sum: f64,
}

impl WskConstraintSet {
    fn polytope(&self, provenance: Provenance) -> Polytope {
        Polytope {
            b1: self.bound_1,
            b2: self.bound_2,
            bs: self.bound_sum,
            provenance,
        }
    }

    pub fn get(&self, t: Subset) -> f64 {
        match t {
            Subset::One => self.bound_1,
            Subset::Two => self.bound_2,
            Subset::Both => self.bound_sum,
        }
    }
}

/// Product input law as a role-indexed table; `p_xi` is over the literal symbols `0, 1`.
fn product_inputs(mac: &BinaryMacPair, p_x1: &DiscreteDist, p_x2: &DiscreteDist) -> Result<[f64; 4]> {
    for d in [p_x1, p_x2] {
        if d.len() != 2 {
            return Err(Error::DomainError("WSK inputs must be binary".into()));
        }
    }
    let (a, b) = mac.innocent();
    let role = |d: &DiscreteDist, innocent: u8, r: usize| d.prob(usize::from(innocent) ^ r);
    Ok([0, 1, 2, 3].map(|r| role(p_x1, a, r & 1) * role(p_x2, b, r >> 1)))
}

/// Inner bounds `{I(X_T;Y|X_{T^c}) - I(X_T;Z)}^+` or outer bounds `I(X_T;Y,X_{T^c}|Z)`
/// for a product input law.
pub fn wsk_constraints(
    mac: &BinaryMacPair,
    p_x1: &DiscreteDist,
    p_x2: &DiscreteDist,
    outer: bool,
) -> Result<WskConstraintSet> {
    constraints_for(mac, product_inputs(mac, p_x1, p_x2)?, outer)
}

/// Same as [`wsk_constraints`] for a correlated input law over literal
/// `(x1, x2)` in the order 00, 10, 01, 11.
pub fn wsk_constraints_correlated(mac: &BinaryMacPair, pxx: [f64; 4], outer: bool) -> Result<WskConstraintSet> {
    let total: f64 = pxx.iter().sum();
    if pxx.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > prob::NORM_TOL {
        return Err(Error::InvalidDistribution(format!("input law {pxx:?}")));
    }
    let (a, b) = mac.innocent();
    let flip = usize::from(a) | (usize::from(b) << 1);
    constraints_for(mac, [0, 1, 2, 3].map(|r| pxx[r ^ flip]), outer)
}

fn constraints_for(mac: &BinaryMacPair, inputs: [f64; 4], outer: bool) -> Result<WskConstraintSet> {
    let joint = joint_from_inputs(mac, inputs);
    let bound = |t: Subset| -> Result<f64> {
        if outer {
            let right: Vec<usize> = [AX_Y].iter().chain(t.complement()).copied().collect();
            prob::mutual_information(&joint, t.members(), &right, &[AX_Z])
        } else {
            let y = prob::mutual_information(&joint, t.members(), &[AX_Y], t.complement())?;
            let z = prob::mutual_information(&joint, t.members(), &[AX_Z], &[])?;
            Ok((y - z).max(0.0))
        }
    };
    Ok(WskConstraintSet {
        bound_1: bound(Subset::One)?,
        bound_2: bound(Subset::Two)?,
        bound_sum: bound(Subset::Both)?,
    })
}

/// `k x k` product Bernoulli grid with parameters evenly spaced on `[0, 1]`.
pub fn bernoulli_grid(k: usize) -> Vec<(DiscreteDist, DiscreteDist)> {
    let ps: Vec<f64> = if k <= 1 {
        vec![0.5]
    } else {
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    };
    let mut out = Vec::with_capacity(ps.len() * ps.len());
    for &a in &ps {
        for &b in &ps {
            out.push((
                DiscreteDist::bernoulli(a).expect("p in [0, 1]"),
                DiscreteDist::bernoulli(b).expect("p in [0, 1]"),
            ));
        }
    }
    out
}

/// Inner and outer WSK regions over a grid of product input laws.
pub fn wsk_region_sweep(
    mac: &BinaryMacPair,
    grid: &[(DiscreteDist, DiscreteDist)],
) -> Result<(RegionBoundary, RegionBoundary)> {
    if grid.is_empty() {
        return Err(Error::DomainError("empty input-law grid".into()));
    }
    let pairs = grid
        .par_iter()
        .map(|(p1, p2)| {
            let prov = Provenance::Inputs {
                px1: p1.prob(1),
                px2: p2.prob(1),
            };
            Ok((
                wsk_constraints(mac, p1, p2, false)?.polytope(prov),
                wsk_constraints(mac, p1, p2, true)?.polytope(prov),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (inner, outer): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((
        region_union(RegionKind::WskInner, inner)?,
        region_union(RegionKind::WskOuter, outer)?,
    ))
}

/// Inner and outer WSK regions over correlated input laws.
pub fn wsk_region_sweep_correlated(mac: &BinaryMacPair, grid: &[[f64; 4]]) -> Result<(RegionBoundary, RegionBoundary)> {
    if grid.is_empty() {
        return Err(Error::DomainError("empty input-law grid".into()));
    }
    let pairs = grid
        .par_iter()
        .map(|&pxx| {
            let prov = Provenance::Joint { pxx };
            Ok((
                wsk_constraints_correlated(mac, pxx, false)?.polytope(prov),
                wsk_constraints_correlated(mac, pxx, true)?.polytope(prov),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (inner, outer): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((
        region_union(RegionKind::WskInner, inner)?,
        region_union(RegionKind::WskOuter, outer)?,
    ))
}

/// Upper envelope of a union of polytopes.
pub fn region_union(kind: RegionKind, polytopes: Vec<Polytope>) -> Result<RegionBoundary> {
    let raw = envelope(&polytopes);
    if raw.iter().all(|&(x, y, _)| x <= 0.0 && y <= 0.0) {
        return Err(Error::EmptyRegion);
    }
    let points = simplify(raw)
        .into_iter()
        .map(|(x, y, src)| {
            let p = &polytopes[src];
            let vertices = [
                (0.0, p.height()),
                (p.knee(), p.height()),
                (p.width(), p.top(p.width()).unwrap_or(0.0)),
                (p.width(), 0.0),
            ];
            let corner = vertices
                .iter()
                .any(|&(vx, vy)| (vx - x).abs() <= 1e-12 && (vy - y).abs() <= 1e-12);
            BoundaryPoint {
                rate: RatePair { r1: x, r2: y },
                provenance: p.provenance,
                corner,
            }
        })
        .collect();
    Ok(RegionBoundary {
        kind,
        points,
        polytopes,
    })
}

#[derive(PartialEq)]
struct BySum(f64, usize);

impl Eq for BySum {}

impl PartialOrd for BySum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BySum {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties go to the lower grid index so results do not depend on input order quirks.
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Envelope vertices `(r1, r2, source index)` by a left-to-right sweep.
///
/// Between consecutive breakpoints every live polytope top is either flat
/// (knee to the right) or has slope -1 (knee to the left), so the envelope is
/// `max(H, S - r1)` with `H` the best flat height and `S` the best sum bound.
fn envelope(polys: &[Polytope]) -> Vec<(f64, f64, usize)> {
    let live: Vec<usize> = (0..polys.len())
        .filter(|&i| polys[i].width() >= 0.0 && polys[i].height() >= 0.0)
        .collect();
    if live.is_empty() {
        return Vec::new();
    }
    let mut xs: Vec<f64> = vec![0.0];
    for &i in &live {
        xs.push(polys[i].knee());
        xs.push(polys[i].width());
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    // Flat heights, suffix maxima over knees sorted ascending.
    let mut by_knee = live.clone();
    by_knee.sort_by(|&a, &b| polys[a].knee().total_cmp(&polys[b].knee()).then(a.cmp(&b)));
    let mut suffix: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, usize::MAX); by_knee.len() + 1];
    for k in (0..by_knee.len()).rev() {
        let i = by_knee[k];
        let h = polys[i].height();
        suffix[k] = if h > suffix[k + 1].0 || (h == suffix[k + 1].0 && i < suffix[k + 1].1) {
            (h, i)
        } else {
            suffix[k + 1]
        };
    }
    let flat_best = |x: f64| {
        let k = by_knee.partition_point(|&i| polys[i].knee() < x);
        suffix[k]
    };

    let start = flat_best(0.0);
    let mut out = vec![(0.0, start.0, start.1)];
    let mut heap: BinaryHeap<BySum> = BinaryHeap::new();
    let mut next_knee = 0;
    for j in 0..xs.len() - 1 {
        let (x0, x1) = (xs[j], xs[j + 1]);
        while next_knee < by_knee.len() && polys[by_knee[next_knee]].knee() <= x0 {
            let i = by_knee[next_knee];
            heap.push(BySum(polys[i].bs, i));
            next_knee += 1;
        }
        while heap.peek().is_some_and(|t| polys[t.1].width() < x1) {
            heap.pop();
        }
        let (h, hi) = flat_best(x1);
        let slope = heap.peek().map(|t| (t.0, t.1));
        let value = |x: f64| -> (f64, usize) {
            match slope {
                // The cap keeps r2 from creeping above the source's flat top by rounding.
                Some((s, si)) if s - x > h => ((s - x).min(polys[si].height()), si),
                _ => (h, hi),
            }
        };
        if h == f64::NEG_INFINITY && slope.is_none() {
            break;
        }
        let (right, src) = value(x0);
        out.push((x0, right, src));
        if let Some((s, si)) = slope {
            let cross = s - h;
            if cross > x0 && cross < x1 && h > f64::NEG_INFINITY {
                out.push((cross, h, si));
            }
        }
        let (end, src) = value(x1);
        out.push((x1, end, src));
    }
    if let Some(&(x, y, src)) = out.last() {
        if y > 0.0 {
            out.push((x, 0.0, src));
        }
    }
    out
}

/// Drop repeated points and interior points of straight runs.
fn simplify(pts: Vec<(f64, f64, usize)>) -> Vec<(f64, f64, usize)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(&(x, y, _)) = out.last() {
            if x == p.0 && y == p.1 {
                continue;
            }
        }
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let (dx1, dy1) = (b.0 - a.0, b.1 - a.1);
            let (dx2, dy2) = (p.0 - b.0, p.1 - b.1);
            let cross = dx1 * dy2 - dy1 * dx2;
            let scale = (dx1.abs() + dy1.abs()) * (dx2.abs() + dy2.abs());
            if cross.abs() <= 1e-12 * scale && dx1 * dx2 + dy1 * dy2 > 0.0 && b.2 == p.2 {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}
