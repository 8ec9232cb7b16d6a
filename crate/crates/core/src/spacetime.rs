//! Parabolic geometry of space-time `R^{n+1} x R`.
//!
//! Time carries the units of length squared, so the natural metric is
//! `max(|x - y|, |s - t|^{1/2})` and a ball of radius `r` is the product of a
//! spatial ball of radius `r` with a time interval of half-length `r^2`.

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::vecops;

/// A spatial position together with a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }

    /// The origin of `R^dim x R`.
    pub fn origin(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Spatial projection.
    pub fn space(&self) -> &[f64] {
        &self.x
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    /// Parabolic dilation `(x, t) -> (c + l (x - c), tc + l^2 (t - tc))` about `center`.
    pub fn dilate_about(&self, center: &SpaceTimePoint, lambda: f64) -> SpaceTimePoint {
        let x = self
            .x
            .iter()
            .zip(&center.x)
            .map(|(a, c)| c + lambda * (a - c))
            .collect();
        SpaceTimePoint::new(x, center.t + lambda * lambda * (self.t - center.t))
    }
}

fn check_dims(p: &SpaceTimePoint, q: &SpaceTimePoint) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

/// Parabolic distance `max(|x_p - x_q|, |t_p - t_q|^{1/2})`.
pub fn parabolic_distance(p: &SpaceTimePoint, q: &SpaceTimePoint) -> Result<f64> {
    check_dims(p, q)?;
    Ok(dist_p_unchecked(p, q))
}

#[inline]
pub(crate) fn dist_p_unchecked(p: &SpaceTimePoint, q: &SpaceTimePoint) -> f64 {
    vecops::dist(&p.x, &q.x).max((p.t - q.t).abs().sqrt())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Membership in the open parabolic ball `B_r(x_c) x (t_c - r^2, t_c + r^2)`.
pub fn in_parabolic_ball(p: &SpaceTimePoint, center: &SpaceTimePoint, r: f64) -> Result<bool> {
    check_radius(r)?;
    check_dims(p, center)?;
    Ok(vecops::dist(&p.x, &center.x) < r && (p.t - center.t).abs() < r * r)
}

/// Anything a parabolic distance can be measured to.
pub trait ParabolicTarget {
    fn ambient_dim(&self) -> usize;
    /// Infimum of the parabolic distance from `p` to the target.
    fn parabolic_distance_from(&self, p: &SpaceTimePoint) -> f64;
}

/// Membership in the open parabolic tubular neighbourhood of radius `r`.
pub fn in_parabolic_tube<T: ParabolicTarget + ?Sized>(p: &SpaceTimePoint, target: &T, r: f64) -> Result<bool> {
    check_radius(r)?;
    if p.dim() != target.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: target.ambient_dim(),
            found: p.dim(),
        });
    }
    Ok(target.parabolic_distance_from(p) < r)
}

/// Lebesgue volume of a parabolic ball of radius `r` in `R^dim x R`.
pub fn parabolic_ball_volume(dim: usize, r: f64) -> f64 {
    unit_ball_volume(dim) * r.powi(dim as i32) * 2.0 * r * r
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

/// A finite sample of space-time, optionally labelled by component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<SpaceTimePoint>,
    ambient_dim: usize,
    labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: Vec<SpaceTimePoint>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point cloud"))?;
        let ambient_dim = first.dim();
        for p in &points {
            if p.dim() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(invalid("points", "non-finite coordinate"));
            }
        }
        Ok(Self {
            points,
            ambient_dim,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(invalid(
                "labels",
                format!("{} labels for {} points", labels.len(), self.points.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn points(&self) -> &[SpaceTimePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &SpaceTimePoint {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Indices of the points inside the open parabolic ball.
    pub fn indices_in_ball(&self, center: &SpaceTimePoint, r: f64) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| vecops::dist(&p.x, &center.x) < r && (p.t - center.t).abs() < r * r)
            .map(|(i, _)| i)
            .collect()
    }

    /// The sub-cloud on the given indices (labels are carried along).
    pub fn subset(&self, idx: &[usize]) -> Result<PointCloud> {
        let pts = idx.iter().map(|&i| self.points[i].clone()).collect();
        let mut out = PointCloud::new(pts)?;
        if let Some(l) = &self.labels {
            out.labels = Some(idx.iter().map(|&i| l[i]).collect());
        }
        Ok(out)
    }

    /// Parabolic dilation of every point about `center`.
    pub fn dilate_about(&self, center: &SpaceTimePoint, lambda: f64) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p.dilate_about(center, lambda)).collect(),
            ambient_dim: self.ambient_dim,
            labels: self.labels.clone(),
        }
    }

    /// Parabolic nearest-neighbour distance of each point (infinite for a singleton).
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| dist_p_unchecked(&self.points[i], &self.points[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Sampling floor: three times the 90th percentile of nearest-neighbour spacing.
    pub fn sampling_floor(&self) -> f64 {
        let mut nn: Vec<f64> = self
            .nearest_neighbor_distances()
            .into_iter()
            .filter(|d| d.is_finite())
            .collect();
        if nn.is_empty() {
            return 0.0;
        }
        nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
        3.0 * quantile_sorted(&nn, 0.9)
    }
}

impl ParabolicTarget for PointCloud {
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn parabolic_distance_from(&self, p: &SpaceTimePoint) -> f64 {
        self.points
            .iter()
            .map(|q| dist_p_unchecked(p, q))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Greedy parabolic `r`-net in input order: a point becomes a centre when it
/// is at parabolic distance `>= r` from every earlier centre. Every point of
/// the cloud then lies within `r` of some centre.
pub fn greedy_cover(cloud: &PointCloud, r: f64) -> Vec<usize> {
    let r2 = r * r;
    let d = cloud.ambient_dim() + 1;
    let mut grid: FxHashMap<Vec<i64>, Vec<usize>> = FxHashMap::default();
    let mut centers = Vec::new();
    let offsets = neighbor_offsets(d);
    let mut k = vec![0i64; d];
    let mut nk = vec![0i64; d];
    for (i, p) in cloud.points().iter().enumerate() {
        for (slot, v) in k.iter_mut().zip(&p.x) {
            *slot = (v / r).floor() as i64;
        }
        k[d - 1] = (p.t / r2).floor() as i64;
        let covered = offsets.iter().any(|off| {
            for ((n, a), b) in nk.iter_mut().zip(&k).zip(off) {
                *n = a + b;
            }
            grid.get(nk.as_slice())
                .is_some_and(|cs| cs.iter().any(|&c| dist_p_unchecked(p, &cloud.points()[c]) < r))
        });
        if !covered {
            centers.push(i);
            grid.entry(k.clone()).or_default().push(i);
        }
    }
    centers
}

fn neighbor_offsets(d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-1..=1).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out
}

/// One row of a covering estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringRow {
    pub scale: f64,
    pub count: usize,
    pub sum: f64,
}

/// Covering sums `N(r) r^k` of the parabolic `k`-dimensional Hausdorff
/// measure, one row per scale.
pub fn ph_measure_estimate(cloud: &PointCloud, k: f64, scales: &[f64]) -> Result<Vec<CoveringRow>> {
    if scales.is_empty() {
        return Err(Error::Empty("scale list"));
    }
    if k < 0.0 {
        return Err(invalid("k", "dimension must be nonnegative"));
    }
    scales
        .iter()
        .map(|&r| {
            check_radius(r)?;
            let count = greedy_cover(cloud, r).len();
            Ok(CoveringRow {
                scale: r,
                count,
                sum: count as f64 * r.powf(k),
            })
        })
        .collect()
}

/// Slope of `log N(r)` against `log(1/r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    /// Half-width of a two-standard-error band on the slope.
    pub band: f64,
    pub rows: Vec<CoveringRow>,
    /// Scales that entered the fit.
    pub used_scales: Vec<f64>,
}

/// Parabolic box-counting dimension. The largest and smallest 10% of the
/// scales are discarded, as are saturated covers (one centre per sample) and
/// trivial ones (a single centre).
pub fn ph_dimension_estimate(cloud: &PointCloud, scales: &[f64]) -> Result<DimensionEstimate> {
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rows = ph_measure_estimate(cloud, 0.0, &scales)?;
    let m = rows.len();
    let trim = m / 10;
    let usable: Vec<&CoveringRow> = rows[trim..m - trim]
        .iter()
        .filter(|r| r.count > 1 && r.count < cloud.len())
        .collect();
    if usable.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} usable scales (need 3)",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| (1.0 / r.scale).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| (r.count as f64).ln()).collect();
    let (slope, _, se) = least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        dimension: slope,
        band: 2.0 * se,
        used_scales: usable.iter().map(|r| r.scale).collect(),
        rows,
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, standard error of a)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let se = if xs.len() > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (a, b, se)
}

/// Geometric grid of `count` values from `hi` down to `lo`.
pub fn geometric_scales(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| hi * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x.to_vec(), t)
    }

    #[test]
    fn distance_examples() {
        let o = p(&[0.0, 0.0], 0.0);
        assert_eq!(parabolic_distance(&o, &p(&[1.0, 0.0], 0.0)).unwrap(), 1.0);
        assert_eq!(parabolic_distance(&o, &p(&[0.0, 0.0], 4.0)).unwrap(), 2.0);
        assert_eq!(parabolic_distance(&o, &p(&[3.0, 0.0], 4.0)).unwrap(), 3.0);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let err = parabolic_distance(&p(&[0.0], 0.0), &p(&[0.0, 0.0], 0.0)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn ball_membership_excludes_boundary() {
        let o = p(&[0.0], 0.0);
        assert!(in_parabolic_ball(&p(&[0.5], 0.5), &o, 1.0).unwrap());
        assert!(!in_parabolic_ball(&p(&[0.0], 1.0), &o, 1.0).unwrap());
        assert!(in_parabolic_ball(&o, &o, 0.0).is_err());
    }

    #[test]
    fn tube_around_cloud_uses_nearest_sample() {
        let c = PointCloud::new(vec![p(&[0.0], 0.0), p(&[2.0], 0.0)]).unwrap();
        assert!(in_parabolic_tube(&p(&[1.9], 0.0), &c, 0.2).unwrap());
        assert!(!in_parabolic_tube(&p(&[1.0], 0.0), &c, 0.9).unwrap());
    }

    #[test]
    fn cover_of_sorted_segment_is_evenly_spaced() {
        let pts: Vec<_> = (0..=1000).map(|i| p(&[i as f64 / 1000.0], 0.0)).collect();
        let c = PointCloud::new(pts).unwrap();
        let centers = greedy_cover(&c, 0.1);
        assert_eq!(centers.len(), 10);
    }

    #[test]
    fn single_point_measure_vanishes() {
        let c = PointCloud::new(vec![p(&[0.3, 0.1], 2.0)]).unwrap();
        let rows = ph_measure_estimate(&c, 1.0, &[1.0, 0.1, 0.001]).unwrap();
        assert!(rows.iter().all(|r| r.count == 1));
        assert!(rows.last().unwrap().sum < 1e-2);
        assert!(ph_measure_estimate(&c, 1.0, &[]).is_err());
    }

    #[test]
    fn dimension_needs_three_scales() {
        let pts: Vec<_> = (0..100).map(|i| p(&[i as f64 / 100.0], 0.0)).collect();
        let c = PointCloud::new(pts).unwrap();
        assert!(matches!(
            ph_dimension_estimate(&c, &[0.5, 0.25]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn sampling_floor_of_uniform_grid() {
        let pts: Vec<_> = (0..=10).map(|i| p(&[i as f64 * 0.1], 0.0)).collect();
        let c = PointCloud::new(pts).unwrap();
        assert!((c.sampling_floor() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn parabolic_ball_volume_scales_like_r_to_n_plus_3() {
        for dim in 1..5 {
            let v1 = parabolic_ball_volume(dim, 1.0);
            let v = parabolic_ball_volume(dim, 0.37);
            assert!((v / v1 - 0.37f64.powi(dim as i32 + 2)).abs() < 1e-14);
        }
    }
}
