//! Reifenberg-type diagnostics for space-time point sets.
//!
//! A set has the strong parabolic `k`-dimensional Reifenberg property when
//! every point carries a `k`-plane in its own time-slice such that, at every
//! small scale `r`, the part of the set within parabolic distance `r` lies in
//! the `delta r` parabolic tube around that plane. The plane is attached to
//! the point and does not change with the scale.

mod graph;
mod holder;

pub use graph::{extract_bilipschitz_graph, extract_lipschitz_graph_fregular, LipschitzGraph};
pub(crate) use holder::ratio_unbounded;
pub use holder::{
    connected_components, time_slice_test, two_holder_fit, ComponentVerdict, HolderGraph, TimeCoverRow,
    TimeSliceReport, TwoHolderFit,
};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::planes::{plane_hausdorff_distance, TimeSlicePlane};
use crate::spacetime::{dist_p_unchecked, ParabolicTarget, PointCloud, SpaceTimePoint};
use crate::vecops::{dot, sub};

/// Smallness threshold on `delta` for the bi-Lipschitz graph lemma.
pub const DELTA_MAX: f64 = 1.0 / 20.0;

/// One time-slice plane per point of a cloud, each based at its point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneAssignment {
    planes: Vec<TimeSlicePlane>,
    k: usize,
}

impl PlaneAssignment {
    pub fn new(cloud: &PointCloud, planes: Vec<TimeSlicePlane>) -> Result<Self> {
        if planes.len() != cloud.len() {
            return Err(invalid(
                "planes",
                format!("{} planes for {} points", planes.len(), cloud.len()),
            ));
        }
        let k = planes[0].k();
        for (p, v) in cloud.points().iter().zip(&planes) {
            if v.k() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.k(),
                });
            }
            if dist_p_unchecked(p, v.base()) > 1e-12 * (1.0 + crate::vecops::norm(&p.x)) {
                return Err(invalid("planes", "plane is not based at its point"));
            }
        }
        Ok(Self { planes, k })
    }

    /// Parallel copies of one direction set, translated to every point.
    pub fn parallel(cloud: &PointCloud, directions: Vec<Vec<f64>>) -> Result<Self> {
        let proto = TimeSlicePlane::new(cloud.point(0).clone(), directions)?;
        let planes = cloud.points().iter().map(|p| proto.translated_to(p.clone())).collect();
        Self::new(cloud, planes)
    }

    /// Least-squares `k`-plane through each point, fitted to the spatial
    /// offsets of its neighbours in `PB_r`. The time component is dropped so
    /// every plane stays in its slice; neighbours are weighted by
    /// `exp(-d^2 / r^2)` with `d` the parabolic distance.
    pub fn fit(cloud: &PointCloud, k: usize, r: f64) -> Result<Self> {
        let dim = cloud.ambient_dim();
        if k > dim {
            return Err(invalid("k", "plane dimension exceeds ambient dimension"));
        }
        let planes = cloud
            .points()
            .iter()
            .map(|y| {
                let mut cov = DMatrix::<f64>::zeros(dim, dim);
                for i in cloud.indices_in_ball(y, r) {
                    let z = cloud.point(i);
                    let d = dist_p_unchecked(y, z);
                    let w = (-(d * d) / (r * r)).exp();
                    let v = sub(&z.x, &y.x);
                    for a in 0..dim {
                        for b in 0..dim {
                            cov[(a, b)] += w * v[a] * v[b];
                        }
                    }
                }
                let eig = SymmetricEigen::new(cov);
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
                let dirs = order[..k]
                    .iter()
                    .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
                    .collect();
                TimeSlicePlane::new(y.clone(), dirs)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cloud, planes)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn planes(&self) -> &[TimeSlicePlane] {
        &self.planes
    }

    pub fn plane(&self, i: usize) -> &TimeSlicePlane {
        &self.planes[i]
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn dilate_about(&self, center: &SpaceTimePoint, lambda: f64) -> Self {
        Self {
            planes: self
                .planes
                .iter()
                .map(|v| {
                    let b = v.base().dilate_about(center, lambda);
                    v.translated_to(b)
                })
                .collect(),
            k: self.k,
        }
    }
}

/// Per-scale half-Reifenberg defect `delta(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReifenbergProfile {
    pub scales: Vec<f64>,
    pub delta: Vec<f64>,
    /// `(base point, offending point)` realising each supremum.
    pub witnesses: Vec<Option<(usize, usize)>>,
    pub floor: f64,
    /// `delta(r)` trends to zero as `r` decreases.
    pub vanishing: bool,
}

impl ReifenbergProfile {
    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_delta(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Strictly decreasing along the (decreasing) scale list.
    pub fn strictly_decreasing(&self) -> bool {
        self.delta.windows(2).all(|w| w[1] < w[0])
    }
}

fn check_cover(cloud: &PointCloud, a: &PlaneAssignment) -> Result<()> {
    if a.len() != cloud.len() {
        return Err(invalid("assignment", "assignment does not cover the cloud"));
    }
    Ok(())
}

/// Defect of one base point at scale `r`: `sup dist_P(z, V_y) / r` over
/// `z ∈ S ∩ PB_r(y)`.
pub fn point_defect(cloud: &PointCloud, a: &PlaneAssignment, i: usize, r: f64) -> (f64, Option<usize>) {
    let y = cloud.point(i);
    let v = a.plane(i);
    let mut best = (0.0, None);
    for j in cloud.indices_in_ball(y, r) {
        let d = v.parabolic_distance_from(cloud.point(j)) / r;
        if d > best.0 {
            best = (d, Some(j));
        }
    }
    best
}

/// The half-Reifenberg profile on the given scales, which must lie above the
/// sampling floor of the cloud.
pub fn strong_reifenberg_profile(cloud: &PointCloud, a: &PlaneAssignment, scales: &[f64]) -> Result<ReifenbergProfile> {
    check_cover(cloud, a)?;
    if scales.is_empty() {
        return Err(Error::Empty("scale list"));
    }
    let floor = cloud.sampling_floor();
    let mut scales = scales.to_vec();
    scales.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if let Some(&r) = scales.iter().find(|&&r| r < floor) {
        return Err(Error::BelowSamplingFloor { scale: r, floor });
    }
    let mut delta = Vec::with_capacity(scales.len());
    let mut witnesses = Vec::with_capacity(scales.len());
    for &r in &scales {
        let mut best = (0.0, None);
        for i in 0..cloud.len() {
            let (d, j) = point_defect(cloud, a, i, r);
            if d > best.0 {
                best = (d, j.map(|j| (i, j)));
            }
        }
        delta.push(best.0);
        witnesses.push(best.1);
    }
    let vanishing = is_vanishing(&scales, &delta);
    Ok(ReifenbergProfile {
        scales,
        delta,
        witnesses,
        floor,
        vanishing,
    })
}

/// A profile over decreasing scales vanishes when it is identically zero, or
/// when it falls to at most half its coarse-scale value with a positive
/// least-squares trend in `log r`.
pub(crate) fn is_vanishing(scales: &[f64], values: &[f64]) -> bool {
    if values.iter().all(|&d| d <= 1e-12) {
        return true;
    }
    if values.len() < 2 {
        return false;
    }
    let xs: Vec<f64> = scales.iter().map(|r| r.ln()).collect();
    let (slope, _, _) = crate::spacetime::least_squares(&xs, values);
    slope > 0.0 && *values.last().unwrap() <= 0.5 * values[0]
}

/// Exact all-scales defect on `(0, r0]` at base point `i`:
/// `max dist_P(z, V_y) / dist_P(y, z)` over `0 < dist_P(y, z) < r0`.
///
/// The containment at scale `r` is tightest as `r` decreases to the pair
/// distance, so this single supremum covers every scale at once.
pub fn all_scales_defect(cloud: &PointCloud, a: &PlaneAssignment, i: usize, r0: f64) -> (f64, Option<usize>) {
    let y = cloud.point(i);
    let v = a.plane(i);
    let mut best = (0.0, None);
    for (j, z) in cloud.points().iter().enumerate() {
        let d = dist_p_unchecked(y, z);
        if d <= 0.0 || d >= r0 {
            continue;
        }
        let q = v.parabolic_distance_from(z) / d;
        if q > best.0 {
            best = (q, Some(j));
        }
    }
    best
}

/// Lower and upper bounds on the best single-line defect at a point over
/// all scales up to `r0`, minimised over the choice of line.
///
/// The lower bound uses that a line making angles `a`, `b` with two offset
/// directions has `max(sin a, sin b) >= sin(phi / 2)`, `phi` the angle
/// between the offsets (parabolic distance reduces to Euclidean inside a
/// slice). The upper bound comes from a direction search.
pub fn best_line_defect_bounds(cloud: &PointCloud, i: usize, r0: f64) -> (f64, f64) {
    let y = cloud.point(i);
    let offsets: Vec<(Vec<f64>, f64)> = cloud
        .points()
        .iter()
        .filter_map(|z| {
            let d = dist_p_unchecked(y, z);
            (d > 0.0 && d < r0).then(|| (sub(&z.x, &y.x), d))
        })
        .collect();
    if offsets.is_empty() {
        return (0.0, 0.0);
    }
    let mut lower: f64 = 0.0;
    for (a, (u, du)) in offsets.iter().enumerate() {
        let nu = crate::vecops::norm(u);
        for (w, dw) in &offsets[a + 1..] {
            let nw = crate::vecops::norm(w);
            if nu == 0.0 || nw == 0.0 {
                continue;
            }
            let c = (dot(u, w) / (nu * nw)).abs().min(1.0);
            let phi = c.acos();
            // a pair offset with a time component only gets closer to a slice line
            let shrink = (nu / du).min(nw / dw);
            lower = lower.max(shrink * (0.5 * phi).sin());
        }
    }
    let dim = y.dim();
    let mut candidates: Vec<Vec<f64>> = offsets.iter().map(|(u, _)| u.clone()).collect();
    candidates.extend((0..dim).map(|c| crate::vecops::unit(c, dim)));
    for (a, (u, _)) in offsets.iter().enumerate() {
        for (w, _) in &offsets[a + 1..] {
            let nu = crate::vecops::norm(u);
            let nw = crate::vecops::norm(w);
            if nu > 0.0 && nw > 0.0 {
                let s = if dot(u, w) >= 0.0 { 1.0 } else { -1.0 };
                let bis: Vec<f64> = u.iter().zip(w).map(|(p, q)| p / nu + s * q / nw).collect();
                candidates.push(bis);
            }
        }
    }
    let mut upper = f64::INFINITY;
    for dir in candidates {
        if crate::vecops::norm(&dir) < 1e-14 {
            continue;
        }
        if let Ok(v) = TimeSlicePlane::new(y.clone(), vec![dir]) {
            let worst = offsets
                .iter()
                .zip(cloud.points().iter().filter(|z| {
                    let d = dist_p_unchecked(y, z);
                    d > 0.0 && d < r0
                }))
                .map(|((_, d), z)| v.parabolic_distance_from(z) / d)
                .fold(0.0, f64::max);
            upper = upper.min(worst);
        }
    }
    (lower, upper.max(lower))
}

/// Monotone regularity function of a plane distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityFunction {
    /// Upper edge of each distance bin, increasing.
    pub scales: Vec<f64>,
    /// Per-bin supremum of the normalised plane distance (`NaN` for empty bins).
    pub raw: Vec<f64>,
    /// Non-decreasing envelope of `raw`.
    pub f: Vec<f64>,
}

impl RegularityFunction {
    /// Envelope value at scale `r` (the first bin whose edge is `>= r`).
    pub fn at(&self, r: f64) -> f64 {
        self.scales
            .iter()
            .position(|&s| s >= r)
            .map(|i| self.f[i])
            .unwrap_or_else(|| *self.f.last().unwrap())
    }
}

/// Normalised plane distance for the ordered pair `(i, j)`:
/// `d_PH(PB_r(y_i) ∩ V_i, PB_r(y_i) ∩ V_j) / r` at `r = dist_P(y_i, y_j)`.
pub fn pair_plane_distance(cloud: &PointCloud, a: &PlaneAssignment, i: usize, j: usize) -> Result<f64> {
    let yi = cloud.point(i);
    let r = dist_p_unchecked(yi, cloud.point(j));
    if r <= 0.0 {
        return Ok(0.0);
    }
    // the partner plane passes through the ball's boundary; use the closed ball
    let re = r * (1.0 + 1e-9);
    Ok(plane_hausdorff_distance(a.plane(i), a.plane(j), re, yi)? / r)
}

/// f-regularity of a plane distribution, from pairs binned by parabolic
/// distance into `bins` logarithmic bins.
pub fn f_regularity_profile(cloud: &PointCloud, a: &PlaneAssignment, bins: usize) -> Result<RegularityFunction> {
    check_cover(cloud, a)?;
    if cloud.len() < 2 {
        return Err(Error::Empty("need at least two points"));
    }
    f_regularity_on(cloud, a, &(0..cloud.len()).collect::<Vec<_>>(), bins)
}

pub(crate) fn f_regularity_on(
    cloud: &PointCloud,
    a: &PlaneAssignment,
    members: &[usize],
    bins: usize,
) -> Result<RegularityFunction> {
    let mut pairs = Vec::new();
    for &i in members {
        for &j in members {
            if i == j {
                continue;
            }
            let r = dist_p_unchecked(cloud.point(i), cloud.point(j));
            if r > 0.0 {
                pairs.push((r, pair_plane_distance(cloud, a, i, j)?));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateFit("no distinct point pairs".into()));
    }
    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi <= lo * (1.0 + 1e-12) || bins < 2 {
        return Err(Error::DegenerateFit("all pairs fall in one distance bin".into()));
    }
    let edges: Vec<f64> = (1..=bins)
        .map(|b| lo * (hi / lo).powf(b as f64 / bins as f64))
        .collect();
    let mut raw = vec![f64::NAN; bins];
    for (r, v) in pairs {
        let b = edges.iter().position(|&e| r <= e * (1.0 + 1e-12)).unwrap_or(bins - 1);
        raw[b] = if raw[b].is_nan() { v } else { raw[b].max(v) };
    }
    let mut f = Vec::with_capacity(bins);
    let mut run: f64 = 0.0;
    for v in &raw {
        if !v.is_nan() {
            run = run.max(*v);
        }
        f.push(run);
    }
    Ok(RegularityFunction { scales: edges, raw, f })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[(&[f64], f64)]) -> PointCloud {
        PointCloud::new(pts.iter().map(|(x, t)| SpaceTimePoint::new(x.to_vec(), *t)).collect()).unwrap()
    }

    #[test]
    fn plane_samples_have_zero_defect() {
        let pts: Vec<_> = (0..200)
            .map(|i| SpaceTimePoint::new(vec![i as f64 * 0.01, 0.0], 0.0))
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0, 0.0]]).unwrap();
        let prof = strong_reifenberg_profile(&c, &a, &[0.5, 0.2, 0.1, 0.05]).unwrap();
        assert!(prof.delta.iter().all(|&d| d == 0.0));
        assert!(prof.vanishing);
    }

    #[test]
    fn scale_below_floor_is_rejected() {
        let pts: Vec<_> = (0..20)
            .map(|i| SpaceTimePoint::new(vec![i as f64 * 0.1], 0.0))
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0]]).unwrap();
        assert!(matches!(
            strong_reifenberg_profile(&c, &a, &[0.1]),
            Err(Error::BelowSamplingFloor { .. })
        ));
    }

    #[test]
    fn assignment_must_be_based_at_points() {
        let c = cloud(&[(&[0.0, 0.0], 0.0), (&[1.0, 0.0], 0.0)]);
        let v = TimeSlicePlane::coordinate(SpaceTimePoint::origin(2), &[0]).unwrap();
        assert!(PlaneAssignment::new(&c, vec![v.clone(), v]).is_err());
    }

    #[test]
    fn fitted_lines_follow_a_segment() {
        let pts: Vec<_> = (0..50)
            .map(|i| {
                let s = i as f64 * 0.02;
                SpaceTimePoint::new(vec![s * 0.6, s * 0.8], 0.0)
            })
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let a = PlaneAssignment::fit(&c, 1, 0.1).unwrap();
        for v in a.planes() {
            assert!((dot(&v.directions()[0], &[0.6, 0.8]).abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_assignment_on_a_line_is_zero_regular() {
        let pts: Vec<_> = (0..30)
            .map(|i| SpaceTimePoint::new(vec![(i as f64 * 0.1).powf(1.5), 0.0], 0.0))
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0, 0.0]]).unwrap();
        let f = f_regularity_profile(&c, &a, 6).unwrap();
        assert!(f.f.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn degenerate_binning_is_reported() {
        let c = cloud(&[(&[0.0], 0.0), (&[1.0], 0.0)]);
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0]]).unwrap();
        assert!(matches!(f_regularity_profile(&c, &a, 5), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn line_defect_bounds_on_a_right_angle() {
        let c = cloud(&[(&[0.0, 0.0], 0.0), (&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        let (lo, hi) = best_line_defect_bounds(&c, 0, 2.0);
        let s = (std::f64::consts::FRAC_PI_4).sin();
        assert!((lo - s).abs() < 1e-12);
        assert!((hi - s).abs() < 1e-12);
    }
}
