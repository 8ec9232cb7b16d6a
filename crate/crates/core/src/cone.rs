//! Parabolic cone property: `|Δt| <= γ |ΔΠ|^2` for nearby pairs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::reifenberg::{time_slice_test, TimeSliceReport};
use crate::spacetime::{dist_p_unchecked, greedy_cover, PointCloud, SpaceTimePoint};
use crate::vecops::dist;

/// The region `{y : γ |Π(y) − Π(z)|^2 >= |t(y) − t(z)|}` around a vertex `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCone {
    pub vertex: SpaceTimePoint,
    #[serde(with = "crate::io::ext_f64")]
    pub gamma: f64,
}

impl ParabolicCone {
    pub fn new(vertex: SpaceTimePoint, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(invalid("gamma", "aperture must be non-negative"));
        }
        Ok(Self { vertex, gamma })
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        let dx = dist(&p.x, &self.vertex.x);
        (p.t - self.vertex.t).abs() <= self.gamma * dx * dx
    }
}

/// Smallest aperture for the local cone property at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstant {
    pub r0: f64,
    /// Infinite when two points share a spatial position at different times.
    #[serde(with = "crate::io::ext_f64")]
    pub gamma: f64,
    pub witness: Option<(usize, usize)>,
    /// The ratio keeps growing down to the sampling resolution.
    pub unbounded: bool,
}

fn cone_ratio(p: &SpaceTimePoint, q: &SpaceTimePoint) -> f64 {
    let dt = (p.t - q.t).abs();
    if dt == 0.0 {
        return 0.0;
    }
    let dx = dist(&p.x, &q.x);
    if dx == 0.0 {
        f64::INFINITY
    } else {
        dt / (dx * dx)
    }
}

/// `sup |Δt| / |Δx|^2` over pairs at parabolic distance below `r0`.
pub fn cone_constant(cloud: &PointCloud, r0: f64) -> Result<ConeConstant> {
    if !(r0 > 0.0) {
        return Err(invalid("r0", "scale must be positive"));
    }
    let n = cloud.len();
    let mut gamma: f64 = 0.0;
    let mut witness = None;
    let mut seen = false;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (p, q) = (cloud.point(i), cloud.point(j));
            if dist_p_unchecked(p, q) >= r0 {
                continue;
            }
            seen = true;
            let r = cone_ratio(p, q);
            if r > gamma {
                gamma = r;
                witness = Some((i, j));
            }
            let dx = dist(&p.x, &q.x);
            if dx > 0.0 {
                pairs.push((dx, r, i, j));
            }
        }
    }
    if !seen {
        return Err(Error::Empty("no pairs within the scale"));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let unbounded = gamma.is_infinite() || crate::reifenberg::ratio_unbounded(&pairs);
    Ok(ConeConstant {
        r0,
        gamma,
        witness,
        unbounded,
    })
}

/// Cone constants over several scales, largest scale first. Scales with no
/// pairs are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProfile {
    pub rows: Vec<ConeConstant>,
    pub vanishing: bool,
}

pub fn cone_profile(cloud: &PointCloud, scales: &[f64]) -> Result<ConeProfile> {
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut rows = Vec::new();
    for r0 in scales {
        match cone_constant(cloud, r0) {
            Ok(c) => rows.push(c),
            Err(Error::Empty(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no pairs at any scale"));
    }
    let finite = rows.iter().all(|r| r.gamma.is_finite() && !r.unbounded);
    let xs: Vec<f64> = rows.iter().map(|r| r.r0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    let vanishing = finite && crate::reifenberg::is_vanishing(&xs, &ys);
    Ok(ConeProfile { rows, vanishing })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfConeCheck {
    pub holds: bool,
    /// `(vertex, offending point)` pairs.
    pub witnesses: Vec<(usize, usize)>,
}

fn on_side(dir: Direction, vertex: &SpaceTimePoint, p: &SpaceTimePoint) -> bool {
    match dir {
        Direction::Forward => p.t > vertex.t,
        Direction::Backward => p.t < vertex.t,
    }
}

/// Checks `S ∩ PB_{r0}(z) ∩ {t > t(z)} ⊂ C_γ(z)` (or the backward half) at
/// every vertex `z` of the cloud.
pub fn half_cone_check(cloud: &PointCloud, gamma: f64, r0: f64, dir: Direction) -> HalfConeCheck {
    let mut witnesses = Vec::new();
    for (i, z) in cloud.points().iter().enumerate() {
        for (j, y) in cloud.points().iter().enumerate() {
            if on_side(dir, z, y) && dist_p_unchecked(z, y) < r0 && cone_ratio(z, y) > gamma {
                witnesses.push((i, j));
            }
        }
    }
    HalfConeCheck {
        holds: witnesses.is_empty(),
        witnesses,
    }
}

/// Smallest `γ` for which the half-cone check passes.
pub fn half_cone_level(cloud: &PointCloud, r0: f64, dir: Direction) -> f64 {
    let mut level: f64 = 0.0;
    for z in cloud.points() {
        for y in cloud.points() {
            if on_side(dir, z, y) && dist_p_unchecked(z, y) < r0 {
                level = level.max(cone_ratio(z, y));
            }
        }
    }
    level
}

/// Time function over one chart of a cone-property set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeChart {
    pub center: usize,
    pub members: Vec<usize>,
    pub domain: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `max |u(x) − u(y)| / |x − y|^2` over the chart.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeGraph {
    pub gamma: f64,
    pub charts: Vec<ConeChart>,
}

impl ConeGraph {
    /// Time at spatial position `x`, from the first chart holding it.
    pub fn value_at(&self, x: &[f64], tol: f64) -> Option<f64> {
        self.charts
            .iter()
            .find_map(|c| c.domain.iter().position(|d| dist(d, x) <= tol).map(|a| c.values[a]))
    }
}

/// Writes a cloud with the `γ`-local cone property at scale `r0` as a
/// 2-Hölder graph `t = u(x)` on charts of parabolic radius `r0 / 2`.
pub fn cone_graph_extract(cloud: &PointCloud, gamma: f64, r0: f64) -> Result<ConeGraph> {
    if !(gamma >= 0.0) {
        return Err(invalid("gamma", "aperture must be non-negative"));
    }
    if let Ok(c) = cone_constant(cloud, r0) {
        if c.gamma > gamma {
            return Err(Error::HypothesisUnverified(format!(
                "cone constant {} exceeds {gamma} (pair {:?})",
                c.gamma, c.witness
            )));
        }
    }
    let mut charts = Vec::new();
    for center in greedy_cover(cloud, 0.5 * r0) {
        let members = cloud.indices_in_ball(cloud.point(center), 0.5 * r0);
        let mut constant: f64 = 0.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let (p, q) = (cloud.point(i), cloud.point(j));
                if dist(&p.x, &q.x) == 0.0 && p.t != q.t {
                    return Err(Error::NotInjective(i, j));
                }
                constant = constant.max(cone_ratio(p, q));
            }
        }
        charts.push(ConeChart {
            center,
            domain: members.iter().map(|&i| cloud.point(i).x.clone()).collect(),
            values: members.iter().map(|&i| cloud.point(i).t).collect(),
            members,
            constant,
        });
    }
    Ok(ConeGraph { gamma, charts })
}

/// Time-slice test entered through the cone hypothesis: the cone profile
/// over `scales` must vanish before the covering argument is run.
pub fn cone_time_slice_test(cloud: &PointCloud, scales: &[f64], tol: f64) -> Result<TimeSliceReport> {
    let profile = cone_profile(cloud, scales)?;
    if !profile.vanishing {
        return Err(Error::HypothesisUnverified(
            "cone constant does not vanish at small scales".into(),
        ));
    }
    time_slice_test(cloud, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(v.iter().map(|&(x, t)| SpaceTimePoint::new(vec![x], t)).collect()).unwrap()
    }

    #[test]
    fn slice_has_zero_constant() {
        let c = pts(&[(0.0, 1.0), (0.5, 1.0), (0.7, 1.0)]);
        assert_eq!(cone_constant(&c, 10.0).unwrap().gamma, 0.0);
        assert!(half_cone_check(&c, 0.0, 10.0, Direction::Forward).holds);
    }

    #[test]
    fn stacked_points_have_infinite_constant() {
        let c = pts(&[(0.0, 0.0), (0.0, 0.01)]);
        let g = cone_constant(&c, 1.0).unwrap();
        assert!(g.gamma.is_infinite() && g.unbounded);
    }

    #[test]
    fn no_pairs_is_an_error() {
        let c = pts(&[(0.0, 0.0), (5.0, 0.0)]);
        assert!(matches!(cone_constant(&c, 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn half_levels_match_full_level() {
        let c = pts(&[(0.0, 0.0), (0.3, 0.02), (0.5, -0.01), (0.55, 0.03)]);
        let full = cone_constant(&c, 2.0).unwrap().gamma;
        assert_eq!(half_cone_level(&c, 2.0, Direction::Forward), full);
        assert_eq!(half_cone_level(&c, 2.0, Direction::Backward), full);
        assert!(!half_cone_check(&c, 0.99 * full, 2.0, Direction::Backward).holds);
    }

    #[test]
    fn cone_membership() {
        let k = ParabolicCone::new(SpaceTimePoint::new(vec![0.0, 0.0], 0.0), 2.0).unwrap();
        assert!(k.contains(&SpaceTimePoint::new(vec![1.0, 0.0], -2.0)));
        assert!(!k.contains(&SpaceTimePoint::new(vec![0.5, 0.0], 0.6)));
    }

    #[test]
    fn graph_of_slice_is_constant() {
        let c = pts(&[(0.0, 3.0), (0.1, 3.0), (0.2, 3.0), (0.9, 3.0)]);
        let g = cone_graph_extract(&c, 0.0, 0.5).unwrap();
        assert!(g.charts.iter().all(|ch| ch.values.iter().all(|&t| t == 3.0)));
        assert_eq!(g.value_at(&[0.9], 1e-12), Some(3.0));
    }
}
