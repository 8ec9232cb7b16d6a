use serde::{Deserialize, Serialize};

use super::{all_scales_defect, pair_plane_distance, PlaneAssignment, DELTA_MAX};
use crate::error::{invalid, Error, Result};
use crate::planes::{cloud_plane_hausdorff, TimeSlicePlane};
use crate::spacetime::{dist_p_unchecked, PointCloud};
use crate::vecops::{dist, norm};

/// A piece of a cloud written as a graph over a time-slice plane.
///
/// Each member `y` is stored through its projection `π(y)` (coordinates in
/// the plane), its normal part `y^⊥` and its time. The constants are the
/// observed worst ratios over all member pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzGraph {
    pub plane: TimeSlicePlane,
    /// Indices into the source cloud.
    pub members: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    /// `max dist_P(y, z) / |π(y) − π(z)|`; at least 1.
    #[serde(with = "crate::io::ext_f64")]
    pub constant: f64,
    /// `max |t − s|^{1/2} / |π(y) − π(z)|`.
    #[serde(with = "crate::io::ext_f64")]
    pub time_constant: f64,
    /// `max |y^⊥ − z^⊥| / |π(y) − π(z)|`.
    #[serde(with = "crate::io::ext_f64")]
    pub normal_constant: f64,
    pub worst_pair: Option<(usize, usize)>,
}

impl LipschitzGraph {
    fn build(cloud: &PointCloud, plane: TimeSlicePlane, members: Vec<usize>, scale: f64) -> Result<Self> {
        let mut coords = Vec::with_capacity(members.len());
        let mut normals = Vec::with_capacity(members.len());
        let mut times = Vec::with_capacity(members.len());
        for &i in &members {
            let p = cloud.point(i);
            let pr = plane.project(p)?;
            coords.push(pr.tangential);
            normals.push(pr.normal);
            times.push(p.t);
        }
        let mut g = Self {
            plane,
            members,
            coords,
            normals,
            times,
            constant: 1.0,
            time_constant: 0.0,
            normal_constant: 0.0,
            worst_pair: None,
        };
        let n = g.members.len();
        for a in 0..n {
            for b in a + 1..n {
                let dpi = dist(&g.coords[a], &g.coords[b]);
                if dpi <= 1e-12 * scale {
                    return Err(Error::NotInjective(g.members[a], g.members[b]));
                }
                let tc = (g.times[a] - g.times[b]).abs().sqrt() / dpi;
                let nc = dist(&g.normals[a], &g.normals[b]) / dpi;
                let c = dist_p_unchecked(cloud.point(g.members[a]), cloud.point(g.members[b])) / dpi;
                g.time_constant = g.time_constant.max(tc);
                g.normal_constant = g.normal_constant.max(nc);
                if c > g.constant {
                    g.constant = c;
                    g.worst_pair = Some((g.members[a], g.members[b]));
                }
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether both component bounds
    /// `|t − s|^{1/2} <= C |π(y) − π(z)|` and `|y^⊥ − z^⊥| <= C |π(y) − π(z)|`
    /// hold on every member pair with the single constant `C`.
    pub fn satisfies_bounds(&self, c: f64) -> bool {
        let n = self.members.len();
        (0..n).all(|a| {
            (a + 1..n).all(|b| {
                let dpi = dist(&self.coords[a], &self.coords[b]);
                let slack = c * dpi * (1.0 + 1e-12);
                (self.times[a] - self.times[b]).abs().sqrt() <= slack
                    && dist(&self.normals[a], &self.normals[b]) <= slack
            })
        })
    }

    /// The member lying over plane coordinates `c`, if any (within `tol`).
    pub fn lift(&self, c: &[f64], tol: f64) -> Option<usize> {
        self.coords
            .iter()
            .position(|q| dist(q, c) <= tol)
            .map(|a| self.members[a])
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= DELTA_MAX) {
        return Err(invalid("delta", format!("must lie in (0, {DELTA_MAX}], got {delta}")));
    }
    Ok(())
}

fn check_reifenberg_on_half_ball(
    cloud: &PointCloud,
    a: &PlaneAssignment,
    half: &[usize],
    delta: f64,
    r0: f64,
) -> Result<()> {
    for &i in half {
        let (d, j) = all_scales_defect(cloud, a, i, r0);
        if d > delta {
            return Err(Error::HypothesisUnverified(format!(
                "containment defect {d:.4} > {delta} at point {i} (witness {j:?})"
            )));
        }
    }
    Ok(())
}

/// Writes `PB_{r0/2}(y0) ∩ S` as a graph over `v`, a plane through the
/// base point `y0`, after verifying the hypotheses: the strong Reifenberg
/// property at level `delta` on scales up to `r0` for every point of the
/// half ball, and two-sided closeness `d_PH(PB_{r0} ∩ S, PB_{r0} ∩ v) < delta r0`.
pub fn extract_bilipschitz_graph(
    cloud: &PointCloud,
    a: &PlaneAssignment,
    base: usize,
    v: &TimeSlicePlane,
    delta: f64,
    r0: f64,
) -> Result<LipschitzGraph> {
    check_delta(delta)?;
    if !(r0 > 0.0) {
        return Err(invalid("r0", "scale must be positive"));
    }
    let y0 = cloud.point(base);
    if v.ambient_dim() != cloud.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.ambient_dim(),
            found: v.ambient_dim(),
        });
    }
    if v.time() != y0.t || v.spatial_distance(&y0.x) > 1e-12 * (1.0 + norm(&y0.x)) {
        return Err(invalid("v", "plane must pass through the base point"));
    }
    let half = cloud.indices_in_ball(y0, 0.5 * r0);
    check_reifenberg_on_half_ball(cloud, a, &half, delta, r0)?;
    let h = delta * r0 / 10.0;
    let two_sided = cloud_plane_hausdorff(cloud, v, r0, y0, h)?;
    let upper = two_sided
        .cloud_to_plane
        .max(two_sided.plane_to_cloud + two_sided.sampling_gap);
    if upper >= delta * r0 {
        return Err(Error::HypothesisUnverified(format!(
            "set and plane are {:.4} r0 apart in the ball (needs < {delta} r0)",
            upper / r0
        )));
    }
    LipschitzGraph::build(cloud, v.clone(), half, r0)
}

/// Writes `PB_{r0/2}(y0) ∩ S` as a graph over the assigned plane at `y0`,
/// with f-regularity of the assignment on the half ball standing in for the
/// two-sided closeness hypothesis.
pub fn extract_lipschitz_graph_fregular(
    cloud: &PointCloud,
    a: &PlaneAssignment,
    base: usize,
    delta: f64,
    r0: f64,
) -> Result<LipschitzGraph> {
    check_delta(delta)?;
    if !(r0 > 0.0) {
        return Err(invalid("r0", "scale must be positive"));
    }
    let y0 = cloud.point(base);
    let half = cloud.indices_in_ball(y0, 0.5 * r0);
    check_reifenberg_on_half_ball(cloud, a, &half, delta, r0)?;
    for &i in &half {
        for &j in &half {
            if i == j {
                continue;
            }
            let f = pair_plane_distance(cloud, a, i, j)?;
            if f >= delta {
                return Err(Error::HypothesisUnverified(format!(
                    "plane distribution is {f:.4}-irregular between points {i} and {j} (needs < {delta})"
                )));
            }
        }
    }
    LipschitzGraph::build(cloud, a.plane(base).clone(), half, r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::SpaceTimePoint;

    fn segment(n: usize, eps: f64) -> PointCloud {
        PointCloud::new(
            (0..=n)
                .map(|i| {
                    let x = -1.0 + 2.0 * i as f64 / n as f64;
                    SpaceTimePoint::new(vec![x, eps * x * x], 0.0)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn flat_samples_give_unit_constant() {
        let c = segment(400, 0.0);
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0, 0.0]]).unwrap();
        let g = extract_bilipschitz_graph(&c, &a, 200, a.plane(200), 0.05, 0.5).unwrap();
        assert_eq!(g.constant, 1.0);
        assert_eq!(g.time_constant, 0.0);
        assert!(g.satisfies_bounds(g.constant));
    }

    #[test]
    fn large_delta_is_rejected() {
        let c = segment(10, 0.0);
        let a = PlaneAssignment::parallel(&c, vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            extract_bilipschitz_graph(&c, &a, 5, a.plane(5), 0.1, 0.5),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn duplicate_projection_is_not_injective() {
        let pts = vec![
            SpaceTimePoint::new(vec![0.0, 0.0], 0.0),
            SpaceTimePoint::new(vec![0.1, 0.0], 0.0),
            SpaceTimePoint::new(vec![0.1, 0.0], 1e-30),
        ];
        let c = PointCloud::new(pts).unwrap();
        let v = TimeSlicePlane::coordinate(c.point(0).clone(), &[0]).unwrap();
        let err = LipschitzGraph::build(&c, v, vec![0, 1, 2], 1.0).unwrap_err();
        assert_eq!(err, Error::NotInjective(1, 2));
    }
}
