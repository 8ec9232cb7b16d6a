use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spacetime::{dist_p_unchecked, greedy_cover, least_squares, quantile_sorted, PointCloud, SpaceTimePoint};
use crate::vecops::dist;

/// Time as a function of space on (part of) a cloud: `u(x_p) = t_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderGraph {
    /// Indices into the source cloud.
    pub members: Vec<usize>,
    pub domain: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `sup |Δt| / |Δx|^2` over member pairs.
    pub constant: f64,
    pub witness: Option<(usize, usize)>,
    /// `(ε, γ(ε))` with `γ(ε)` the same supremum over pairs with `|Δx| <= ε`;
    /// `ε` decreasing.
    pub gamma: Vec<(f64, f64)>,
    pub vanishing: bool,
    /// The ratio grows without bound as `|Δx|` shrinks (e.g. a non-flat
    /// line `t = a x`); `constant` is then only the value seen at the
    /// sampling resolution.
    pub unbounded: bool,
}

impl HolderGraph {
    /// `γ(ε)` at the smallest tabulated `ε' >= ε`.
    pub fn gamma_at(&self, eps: f64) -> f64 {
        self.gamma
            .iter()
            .rev()
            .find(|(e, _)| *e >= eps)
            .map(|g| g.1)
            .unwrap_or(self.constant)
    }

    /// Parabolic Lipschitz constant of `x -> (x, u(x))` over the domain.
    pub fn parabolic_lipschitz_constant(&self) -> f64 {
        let n = self.members.len();
        let mut best: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                let dx = dist(&self.domain[a], &self.domain[b]);
                if dx > 0.0 {
                    let dt = (self.values[a] - self.values[b]).abs();
                    best = best.max(dx.max(dt.sqrt()) / dx);
                }
            }
        }
        best
    }
}

/// Result of fitting a 2-Hölder time function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TwoHolderFit {
    Single(HolderGraph),
    /// Some spatial point carries several times; the cloud is split into
    /// sheets, the `m`-th holding the `m`-th earliest time over each spatial
    /// point.
    MultiValued(Vec<HolderGraph>),
}

impl TwoHolderFit {
    pub fn single(&self) -> Option<&HolderGraph> {
        match self {
            TwoHolderFit::Single(g) => Some(g),
            TwoHolderFit::MultiValued(_) => None,
        }
    }
}

/// Pairs of the member set with positive spatial separation, as
/// `(|Δx|, |Δt| / |Δx|^2, i, j)` sorted by separation.
pub(crate) fn ratio_pairs(cloud: &PointCloud, members: &[usize]) -> Vec<(f64, f64, usize, usize)> {
    let mut out = Vec::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let (p, q) = (cloud.point(i), cloud.point(j));
            let dx = dist(&p.x, &q.x);
            if dx > 0.0 {
                out.push((dx, (p.t - q.t).abs() / (dx * dx), i, j));
            }
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Whether the per-dyadic-shell maximum ratio grows at least like
/// `|Δx|^{-1/2}` over the three finest non-empty shells.
pub(crate) fn ratio_unbounded(pairs: &[(f64, f64, usize, usize)]) -> bool {
    let Some(top) = pairs.last().map(|p| p.0) else {
        return false;
    };
    let mut shells: Vec<(f64, f64)> = Vec::new();
    for &(dx, ratio, _, _) in pairs {
        let m = (top / dx).log2().floor();
        let lo = top * 0.5f64.powf(m);
        match shells.iter_mut().find(|s| s.0 == lo) {
            Some(s) => s.1 = s.1.max(ratio),
            None => shells.push((lo, ratio)),
        }
    }
    let mut fine: Vec<(f64, f64)> = shells.into_iter().filter(|s| s.1 > 0.0).collect();
    fine.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if fine.len() < 3 {
        return false;
    }
    let fine = &fine[..fine.len().min(4)];
    let xs: Vec<f64> = fine.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = fine.iter().map(|s| s.1.ln()).collect();
    let (slope, _, _) = least_squares(&xs, &ys);
    slope <= -0.5
}

fn holder_graph(cloud: &PointCloud, members: Vec<usize>) -> HolderGraph {
    let pairs = ratio_pairs(cloud, &members);
    let mut constant: f64 = 0.0;
    let mut witness = None;
    for &(_, r, i, j) in &pairs {
        if r > constant {
            constant = r;
            witness = Some((i, j));
        }
    }
    let mut gamma = Vec::new();
    if let (Some(lo), Some(hi)) = (pairs.first(), pairs.last()) {
        let (lo, hi) = (lo.0, hi.0);
        let count = 12;
        let mut prefix = Vec::with_capacity(pairs.len());
        let mut run: f64 = 0.0;
        for p in &pairs {
            run = run.max(p.1);
            prefix.push(run);
        }
        for s in 0..count {
            let eps = if hi > lo {
                hi * (lo / hi).powf(s as f64 / (count - 1) as f64)
            } else {
                hi
            };
            let n = pairs.partition_point(|p| p.0 <= eps * (1.0 + 1e-12));
            gamma.push((eps, if n == 0 { 0.0 } else { prefix[n - 1] }));
            if hi <= lo {
                break;
            }
        }
    }
    let eps: Vec<f64> = gamma.iter().map(|g| g.0).collect();
    let vals: Vec<f64> = gamma.iter().map(|g| g.1).collect();
    let unbounded = ratio_unbounded(&pairs);
    let vanishing = !unbounded && super::is_vanishing(&eps, &vals);
    HolderGraph {
        domain: members.iter().map(|&i| cloud.point(i).x.clone()).collect(),
        values: members.iter().map(|&i| cloud.point(i).t).collect(),
        members,
        constant,
        witness,
        gamma,
        vanishing,
        unbounded,
    }
}

/// Groups of indices sharing a spatial position (within `1e-12` relative).
fn spatial_groups(cloud: &PointCloud) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let key = |i: usize| cloud.point(i).x.clone();
    order.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let x = &cloud.point(i).x;
        let scale = 1e-12 * (1.0 + crate::vecops::norm(x));
        match groups.last_mut() {
            Some(g) if dist(&cloud.point(g[0]).x, x) <= scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Fits `t = u(x)` on the cloud. When the spatial projection is not
/// injective the cloud is split into single-valued sheets instead.
pub fn two_holder_fit(cloud: &PointCloud) -> TwoHolderFit {
    let groups = spatial_groups(cloud);
    let multi = groups
        .iter()
        .any(|g| g.iter().any(|&i| cloud.point(i).t != cloud.point(g[0]).t));
    if !multi {
        return TwoHolderFit::Single(holder_graph(cloud, (0..cloud.len()).collect()));
    }
    let mut sheets: Vec<Vec<usize>> = Vec::new();
    for mut g in groups {
        g.sort_by(|&a, &b| cloud.point(a).t.partial_cmp(&cloud.point(b).t).unwrap());
        g.dedup_by(|a, b| cloud.point(*a).t == cloud.point(*b).t);
        for (m, i) in g.into_iter().enumerate() {
            if sheets.len() <= m {
                sheets.push(Vec::new());
            }
            sheets[m].push(i);
        }
    }
    TwoHolderFit::MultiValued(
        sheets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                holder_graph(cloud, s)
            })
            .collect(),
    )
}

/// Connected components of the cloud under single linkage at parabolic
/// distance `link`; labels are component ranks in first-appearance order.
pub fn connected_components(cloud: &PointCloud, link: f64) -> Vec<usize> {
    let n = cloud.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if label[j] == usize::MAX && dist_p_unchecked(cloud.point(i), cloud.point(j)) <= link {
                    label[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Verdict on one connected component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub label: usize,
    pub size: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub spread: f64,
    pub time_slice: bool,
}

/// One row of the covering bound on the time image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCoverRow {
    pub eps: f64,
    /// Spatial `ε`-cover size of the domain.
    pub count: usize,
    pub gamma: f64,
    /// `γ(ε) N(ε) ε^2`, an upper bound for the 1-dimensional measure of
    /// the time image.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSliceReport {
    pub holder_constant: f64,
    pub cover: Vec<TimeCoverRow>,
    /// Bound at the finest reliable scale.
    pub h1_estimate: f64,
    pub components: Vec<ComponentVerdict>,
    pub distinct_times: usize,
}

impl TimeSliceReport {
    pub fn all_time_slices(&self) -> bool {
        self.components.iter().all(|c| c.time_slice)
    }
}

/// Covering check on the time image of a set with 2-Hölder time function of
/// vanishing constant, plus per-component time spreads.
///
/// Components come from the cloud's labels, or single linkage at three
/// times the median nearest-neighbour distance. A component is declared a
/// time-slice when its spread is at most `tol`.
pub fn time_slice_test(cloud: &PointCloud, tol: f64) -> Result<TimeSliceReport> {
    if !(tol >= 0.0) {
        return Err(invalid("tol", "tolerance must be non-negative"));
    }
    let fit = two_holder_fit(cloud);
    let g = fit
        .single()
        .ok_or_else(|| Error::HypothesisUnverified("spatial projection is not injective".into()))?;
    if g.unbounded {
        return Err(Error::HypothesisUnverified(
            "time is not a 2-Hölder function of space".into(),
        ));
    }
    if !g.vanishing {
        return Err(Error::HypothesisUnverified(
            "2-Hölder constant does not vanish at small scales".into(),
        ));
    }
    let spatial = PointCloud::new(
        cloud
            .points()
            .iter()
            .map(|p| SpaceTimePoint::new(p.x.clone(), 0.0))
            .collect(),
    )?;
    let floor = spatial.sampling_floor();
    let hi = g.gamma.first().map(|e| e.0).unwrap_or(0.0);
    let mut cover = Vec::new();
    if hi > 0.0 {
        let lo = floor.max(hi * 1e-4);
        let count = 10;
        for s in 0..count {
            let eps = hi * (lo / hi).powf(s as f64 / (count - 1) as f64);
            let n = greedy_cover(&spatial, eps).len();
            let gamma = g.gamma_at(eps);
            cover.push(TimeCoverRow {
                eps,
                count: n,
                gamma,
                bound: gamma * n as f64 * eps * eps,
            });
        }
        let tail: Vec<f64> = cover
            .iter()
            .rev()
            .take(3)
            .map(|r| r.count as f64 * r.eps * r.eps)
            .collect();
        // finest sum first; shrinking sums are fine, growth is not
        if tail[0] > 2.0 * tail[tail.len() - 1] {
            return Err(Error::HypothesisUnverified(
                "2-dimensional spatial covering sums are not bounded".into(),
            ));
        }
    }
    let h1_estimate = cover.last().map(|r| r.bound).unwrap_or(0.0);

    let labels: Vec<usize> = match cloud.labels() {
        Some(l) => l.to_vec(),
        None => {
            let mut nn: Vec<f64> = cloud
                .nearest_neighbor_distances()
                .into_iter()
                .filter(|d| d.is_finite())
                .collect();
            nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let link = if nn.is_empty() {
                0.0
            } else {
                3.0 * quantile_sorted(&nn, 0.5)
            };
            connected_components(cloud, link)
        }
    };
    let mut ids: Vec<usize> = labels.clone();
    ids.sort_unstable();
    ids.dedup();
    let components = ids
        .into_iter()
        .map(|label| {
            let ts: Vec<f64> = labels
                .iter()
                .zip(cloud.points())
                .filter(|(l, _)| **l == label)
                .map(|(_, p)| p.t)
                .collect();
            let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
            let t_max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ComponentVerdict {
                label,
                size: ts.len(),
                t_min,
                t_max,
                spread: t_max - t_min,
                time_slice: t_max - t_min <= tol,
            }
        })
        .collect();
    let mut times: Vec<f64> = cloud.points().iter().map(|p| p.t).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    Ok(TimeSliceReport {
        holder_constant: g.constant,
        cover,
        h1_estimate,
        components,
        distinct_times: times.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: Vec<(Vec<f64>, f64)>) -> PointCloud {
        PointCloud::new(pts.into_iter().map(|(x, t)| SpaceTimePoint::new(x, t)).collect()).unwrap()
    }

    #[test]
    fn slice_subset_has_zero_constant() {
        let c = cloud((0..50).map(|i| (vec![i as f64 * 0.1, 0.3], 2.0)).collect());
        let g = two_holder_fit(&c);
        let g = g.single().unwrap();
        assert_eq!(g.constant, 0.0);
        assert!(g.vanishing && !g.unbounded);
    }

    #[test]
    fn tilted_line_is_unbounded() {
        let c = cloud(
            (0..=200)
                .map(|i| {
                    let x = i as f64 / 200.0;
                    (vec![x], 0.5 * x)
                })
                .collect(),
        );
        let g = two_holder_fit(&c);
        let g = g.single().unwrap();
        assert!(g.unbounded);
        assert!((g.constant - 0.5 * 200.0).abs() < 1e-6);
    }

    #[test]
    fn repeated_positions_split_into_sheets() {
        let c = cloud(vec![(vec![0.0], 0.0), (vec![0.0], 1.0), (vec![1.0], 0.5)]);
        match two_holder_fit(&c) {
            TwoHolderFit::MultiValued(s) => {
                assert_eq!(s.len(), 2);
                assert_eq!(s[0].members, vec![0, 2]);
                assert_eq!(s[1].members, vec![1]);
            }
            other => panic!("expected sheets, got {other:?}"),
        }
    }

    #[test]
    fn connected_slice_disk_is_a_time_slice() {
        let mut pts = Vec::new();
        for i in -10i32..=10 {
            for j in -10i32..=10 {
                let (x, y) = (i as f64 * 0.05, j as f64 * 0.05);
                if x * x + y * y <= 0.25 {
                    pts.push((vec![x, y, 0.0], 1.5));
                }
            }
        }
        let r = time_slice_test(&cloud(pts), 1e-9).unwrap();
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].spread, 0.0);
        assert!(r.all_time_slices());
        assert_eq!(r.h1_estimate, 0.0);
    }

    #[test]
    fn components_by_linkage() {
        let c = cloud(vec![(vec![0.0], 0.0), (vec![0.1], 0.0), (vec![5.0], 0.0)]);
        assert_eq!(connected_components(&c, 0.2), vec![0, 0, 1]);
    }
}
