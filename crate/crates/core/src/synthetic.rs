//! Small point sets with known Reifenberg, Hölder and dimension behaviour,
//! together with the verdicts expected of them.

use serde::{Deserialize, Serialize};

use crate::cone::cone_constant;
use crate::error::{invalid, Result};
use crate::planes::{cloud_plane_hausdorff, TimeSlicePlane};
use crate::reifenberg::{
    all_scales_defect, best_line_defect_bounds, strong_reifenberg_profile, two_holder_fit, PlaneAssignment,
    TwoHolderFit,
};
use crate::spacetime::{geometric_scales, ph_dimension_estimate, PointCloud, SpaceTimePoint};

/// Largest Reifenberg defect for which the regularity arguments apply.
pub const REIFENBERG_DELTA: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `(1/k, 1/k^4)` for `k = 1..=count` and the limit point `(0, 0)`,
    /// read as `(x, t)`.
    Figure1 { count: usize },
    /// `(0,0,0), (1,0,0), (0,ε,0), (1,0,ε)` at `t = 0`.
    FourPoints { eps: f64 },
    /// `(ε^m,0,0)`, `(ε^{2n},ε^{2n+1},0)` and `(ε^{2n+1},0,ε^{2n+2})` with
    /// every exponent of the first coordinate at most `levels`, plus the origin.
    ThreeSequences { eps: f64, levels: usize },
    /// Vertices of the 60° Koch curve over `[0, 1]` after `level`
    /// subdivisions, in the slice `t = 0` of `R^2 × R`.
    Koch { level: usize },
    /// `count` samples of `t = slope · x` for `x ∈ [−1, 1]`.
    TiltedLine { slope: f64, count: usize },
    /// Samples of `{|x|^2 = |t|, |t| <= 1}` in `R^dim × R`.
    ParabolicConeBoundary { dim: usize, count: usize },
    /// Grid of spacing `1/count` on the unit `dim`-disk spanned by the first
    /// coordinates of `R^ambient`, at `t = 0`.
    SliceDisk { dim: usize, ambient: usize, count: usize },
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Figure1 { .. } => "figure1",
            GeneratorSpec::FourPoints { .. } => "four_points",
            GeneratorSpec::ThreeSequences { .. } => "three_sequences",
            GeneratorSpec::Koch { .. } => "koch",
            GeneratorSpec::TiltedLine { .. } => "tilted_line",
            GeneratorSpec::ParabolicConeBoundary { .. } => "parabolic_cone_boundary",
            GeneratorSpec::SliceDisk { .. } => "slice_disk",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps_ok = |eps: f64| {
            if eps > 0.0 && eps < 1.0 {
                Ok(())
            } else {
                Err(invalid("eps", "must lie in (0, 1)"))
            }
        };
        let count_ok = |c: usize| {
            if c >= 2 {
                Ok(())
            } else {
                Err(invalid("count", "need at least 2"))
            }
        };
        match *self {
            GeneratorSpec::Figure1 { count } => count_ok(count),
            GeneratorSpec::FourPoints { eps } => eps_ok(eps),
            GeneratorSpec::ThreeSequences { eps, levels } => {
                eps_ok(eps)?;
                if eps >= 0.5 {
                    return Err(invalid("eps", "the sequences separate only for eps < 1/2"));
                }
                if levels < 2 {
                    return Err(invalid("levels", "need at least 2"));
                }
                // ε^levels must stay a normal float.
                if (levels as f64 + 2.0) * eps.log10() < -300.0 {
                    return Err(invalid("levels", "points underflow"));
                }
                Ok(())
            }
            GeneratorSpec::Koch { level } => {
                if level > 10 {
                    Err(invalid("level", "at most 10 subdivisions"))
                } else {
                    Ok(())
                }
            }
            GeneratorSpec::TiltedLine { slope, count } => {
                if !slope.is_finite() {
                    return Err(invalid("slope", "must be finite"));
                }
                count_ok(count)
            }
            GeneratorSpec::ParabolicConeBoundary { dim, count } => {
                if !(1..=3).contains(&dim) {
                    return Err(invalid("dim", "supported for 1 <= dim <= 3"));
                }
                count_ok(count)
            }
            GeneratorSpec::SliceDisk { dim, ambient, count } => {
                if dim == 0 || dim > ambient || ambient > 4 {
                    return Err(invalid("dim", "need 1 <= dim <= ambient <= 4"));
                }
                count_ok(count)
            }
        }
    }
}

fn pt(x: &[f64], t: f64) -> SpaceTimePoint {
    SpaceTimePoint::new(x.to_vec(), t)
}

/// Deterministic point cloud for the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<PointCloud> {
    spec.validate()?;
    let points = match *spec {
        GeneratorSpec::Figure1 { count } => {
            let mut v: Vec<_> = (1..=count)
                .map(|k| {
                    let k = k as f64;
                    pt(&[1.0 / k], 1.0 / k.powi(4))
                })
                .collect();
            v.push(pt(&[0.0], 0.0));
            v
        }
        GeneratorSpec::FourPoints { eps } => vec![
            pt(&[0.0, 0.0, 0.0], 0.0),
            pt(&[1.0, 0.0, 0.0], 0.0),
            pt(&[0.0, eps, 0.0], 0.0),
            pt(&[1.0, 0.0, eps], 0.0),
        ],
        GeneratorSpec::ThreeSequences { eps, levels } => three_sequences(eps, levels).0,
        GeneratorSpec::Koch { level } => koch(level).into_iter().map(|p| pt(&p, 0.0)).collect(),
        GeneratorSpec::TiltedLine { slope, count } => (0..count)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (count - 1) as f64;
                pt(&[x], slope * x)
            })
            .collect(),
        GeneratorSpec::ParabolicConeBoundary { dim, count } => cone_boundary(dim, count),
        GeneratorSpec::SliceDisk { dim, ambient, count } => {
            let h = 1.0 / count as f64;
            let m = count as i64;
            let mut out = Vec::new();
            let mut idx = vec![-m; dim];
            loop {
                let c: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
                if c.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
                    let mut x = vec![0.0; ambient];
                    x[..dim].copy_from_slice(&c);
                    out.push(pt(&x, 0.0));
                }
                let mut a = 0;
                while a < dim && idx[a] == m {
                    idx[a] = -m;
                    a += 1;
                }
                if a == dim {
                    break;
                }
                idx[a] += 1;
            }
            out
        }
    };
    PointCloud::new(points)
}

/// Points and, for each, the unit direction of its approximating line.
fn three_sequences(eps: f64, levels: usize) -> (Vec<SpaceTimePoint>, Vec<[f64; 3]>) {
    let mut pts = vec![pt(&[0.0, 0.0, 0.0], 0.0)];
    let mut dirs = vec![[1.0, 0.0, 0.0]];
    for m in 1..=levels as i32 {
        // The first-axis point has a partner off the axis for m >= 2.
        let d = match m {
            1 => [1.0, 0.0, 0.0],
            _ if m % 2 == 0 => [0.0, 1.0, 0.0],
            _ => [0.0, 0.0, 1.0],
        };
        pts.push(pt(&[eps.powi(m), 0.0, 0.0], 0.0));
        dirs.push(d);
    }
    for n in 1.. {
        if 2 * n > levels as i32 {
            break;
        }
        pts.push(pt(&[eps.powi(2 * n), eps.powi(2 * n + 1), 0.0], 0.0));
        dirs.push([0.0, 1.0, 0.0]);
    }
    for n in 1.. {
        if 2 * n + 1 > levels as i32 {
            break;
        }
        pts.push(pt(&[eps.powi(2 * n + 1), 0.0, eps.powi(2 * n + 2)], 0.0));
        dirs.push([0.0, 0.0, 1.0]);
    }
    (pts, dirs)
}

fn koch(level: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![[0.0f64, 0.0], [1.0, 0.0]];
    let (s, c) = (std::f64::consts::FRAC_PI_3.sin(), 0.5);
    for _ in 0..level {
        let mut next = Vec::with_capacity(4 * pts.len());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + d[0], a[1] + d[1]];
            let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
            let p2 = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
            next.extend_from_slice(&[a, p1, p2, p3]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    pts.into_iter().map(|p| p.to_vec()).collect()
}

fn cone_boundary(dim: usize, count: usize) -> Vec<SpaceTimePoint> {
    let mut out = vec![pt(&vec![0.0; dim], 0.0)];
    // Radii on a grid, directions on a grid of the unit sphere.
    let dirs: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut v = Vec::new();
            for i in 0..count {
                let z = -1.0 + (2 * i + 1) as f64 / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let a = 2.4 * i as f64;
                v.push(vec![rho * a.cos(), rho * a.sin(), z]);
            }
            v
        }
    };
    for i in 1..=count {
        let r = i as f64 / count as f64;
        for sign in [1.0, -1.0] {
            for d in &dirs {
                let x: Vec<f64> = d.iter().map(|c| r * c).collect();
                out.push(pt(&x, sign * r * r));
            }
        }
    }
    out
}

/// Approximating planes attached to each point, where the set comes with them.
pub fn reference_planes(spec: &GeneratorSpec, cloud: &PointCloud) -> Result<Option<PlaneAssignment>> {
    spec.validate()?;
    let plane = |p: &SpaceTimePoint, dirs: Vec<Vec<f64>>| TimeSlicePlane::new(p.clone(), dirs);
    let planes = match *spec {
        GeneratorSpec::FourPoints { .. } => {
            let z0 = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
            let y0 = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
            let pts = cloud.points();
            vec![
                plane(&pts[0], z0.clone())?,
                plane(&pts[1], y0.clone())?,
                plane(&pts[2], z0)?,
                plane(&pts[3], y0)?,
            ]
        }
        GeneratorSpec::ThreeSequences { eps, levels } => {
            let (_, dirs) = three_sequences(eps, levels);
            cloud
                .points()
                .iter()
                .zip(dirs)
                .map(|(p, d)| plane(p, vec![d.to_vec()]))
                .collect::<Result<_>>()?
        }
        GeneratorSpec::TiltedLine { .. } => {
            return PlaneAssignment::parallel(cloud, vec![vec![1.0]]).map(Some);
        }
        GeneratorSpec::Koch { .. } => {
            return PlaneAssignment::parallel(cloud, vec![vec![1.0, 0.0]]).map(Some);
        }
        GeneratorSpec::SliceDisk { dim, ambient, .. } => {
            let dirs = (0..dim).map(|a| crate::vecops::unit(a, ambient)).collect();
            return PlaneAssignment::parallel(cloud, dirs).map(Some);
        }
        GeneratorSpec::Figure1 { .. } | GeneratorSpec::ParabolicConeBoundary { .. } => return Ok(None),
    };
    PlaneAssignment::new(cloud, planes).map(Some)
}

/// A verdict the set is known to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: &'static str,
    pub statement: String,
    /// Whether the statement is true of the set.
    pub holds: bool,
}

/// The known verdicts for the spec.
pub fn ground_truth(spec: &GeneratorSpec) -> Vec<Claim> {
    let c = |name, statement: String, holds| Claim { name, statement, holds };
    match *spec {
        GeneratorSpec::FourPoints { eps } => vec![
            c(
                "strong_2_reifenberg",
                format!(
                    "strong 2-dimensional half Reifenberg on all scales with delta = {eps}, planes z=0, z=0, y=0, y=0"
                ),
                true,
            ),
            c(
                "full_2_reifenberg",
                format!("strong 2-dimensional full Reifenberg at scale 2 with delta = {eps}"),
                false,
            ),
            c(
                "strong_1_reifenberg",
                format!("strong 1-dimensional Reifenberg up to scale 2 with delta = {eps}"),
                false,
            ),
        ],
        GeneratorSpec::Figure1 { .. } => vec![
            c(
                "two_holder_graph",
                "single-valued 2-Hölder graph over space".into(),
                true,
            ),
            c("non_constant", "the time function is not constant".into(), true),
            c(
                "vanishing_constant",
                "the 2-Hölder ratio tends to zero at the limit point".into(),
                true,
            ),
        ],
        GeneratorSpec::ThreeSequences { eps, .. } => vec![
            c(
                "strong_1_reifenberg",
                format!("strong 1-dimensional Reifenberg with delta <= {eps} on point-dependent scales"),
                true,
            ),
            c(
                "uniform_scale",
                format!("a single scale r0 works for every point with delta <= {REIFENBERG_DELTA}"),
                false,
            ),
        ],
        GeneratorSpec::TiltedLine { slope, .. } => vec![
            c(
                "slice_line_reifenberg",
                format!("1-dimensional Reifenberg with time-slice lines and delta <= {REIFENBERG_DELTA}"),
                slope == 0.0,
            ),
            c("cone_bounded", "bounded parabolic cone constant".into(), slope == 0.0),
        ],
        GeneratorSpec::Koch { level } => {
            if level == 0 {
                vec![c("endpoints_only", "the two endpoints of the segment".into(), true)]
            } else {
                vec![
                    c("in_slice", "contained in a single time-slice".into(), true),
                    c(
                        "koch_dimension",
                        "parabolic box dimension log 4 / log 3 within 0.05".into(),
                        level >= 7,
                    ),
                ]
            }
        }
        GeneratorSpec::ParabolicConeBoundary { .. } => vec![
            c("on_boundary", "every point satisfies |x|^2 = |t|".into(), true),
            c("vertex_aperture", "cone constant at the vertex equals 1".into(), true),
        ],
        GeneratorSpec::SliceDisk { dim, .. } => vec![
            c(
                "flat",
                format!("strong {dim}-dimensional Reifenberg with delta = 0"),
                true,
            ),
            c(
                "full",
                "plane disk lies within one grid spacing of the set".into(),
                true,
            ),
        ],
    }
}

/// A claim with the value the analysis modules report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub name: &'static str,
    pub statement: String,
    pub expected: bool,
    pub observed: bool,
    pub pass: bool,
    pub detail: String,
}

/// Runs the analyses behind every claim of [`ground_truth`].
pub fn verify(spec: &GeneratorSpec) -> Result<Vec<ClaimCheck>> {
    let cloud = generate(spec)?;
    let planes = reference_planes(spec, &cloud)?;
    let mut out = Vec::new();
    for claim in ground_truth(spec) {
        let (observed, detail) = observe(spec, &cloud, planes.as_ref(), claim.name)?;
        out.push(ClaimCheck {
            name: claim.name,
            statement: claim.statement,
            expected: claim.holds,
            observed,
            pass: observed == claim.holds,
            detail,
        });
    }
    Ok(out)
}

fn observe(
    spec: &GeneratorSpec,
    cloud: &PointCloud,
    planes: Option<&PlaneAssignment>,
    name: &str,
) -> Result<(bool, String)> {
    let worst_defect = |r0: &dyn Fn(usize) -> f64| {
        let a = planes.expect("set has planes");
        (0..cloud.len())
            .map(|i| all_scales_defect(cloud, a, i, r0(i)).0)
            .fold(0.0, f64::max)
    };
    Ok(match (spec, name) {
        (GeneratorSpec::FourPoints { eps }, "strong_2_reifenberg") => {
            let d = worst_defect(&|_| f64::INFINITY);
            (d <= eps * (1.0 + 1e-12), format!("max defect {d:.6e}"))
        }
        (GeneratorSpec::FourPoints { eps }, "full_2_reifenberg") => {
            let a = planes.expect("set has planes");
            let mut worst: f64 = 0.0;
            for i in 0..cloud.len() {
                let d = cloud_plane_hausdorff(cloud, a.plane(i), 2.0, cloud.point(i), 0.01)?;
                worst = worst.max(d.plane_to_cloud - d.sampling_gap);
            }
            (
                worst <= eps * 2.0,
                format!("plane-to-set distance {worst:.4} at scale 2"),
            )
        }
        (GeneratorSpec::FourPoints { eps }, "strong_1_reifenberg") => {
            let lower = (0..cloud.len())
                .map(|i| best_line_defect_bounds(cloud, i, 2.0).0)
                .fold(0.0, f64::max);
            (lower <= *eps, format!("best single line has defect >= {lower:.4}"))
        }
        (GeneratorSpec::Figure1 { .. }, _) => {
            let fit = two_holder_fit(cloud);
            match (&fit, name) {
                (TwoHolderFit::MultiValued(_), _) => (false, "multi-valued".into()),
                (TwoHolderFit::Single(g), "two_holder_graph") => (
                    g.constant.is_finite() && !g.unbounded,
                    format!("constant {:.4}", g.constant),
                ),
                (TwoHolderFit::Single(g), "non_constant") => {
                    let lo = g.values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = g.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (hi > lo, format!("time range [{lo}, {hi}]"))
                }
                (TwoHolderFit::Single(g), _) => (
                    g.vanishing,
                    format!("gamma at the finest scale {:.3e}", g.gamma.last().map_or(0.0, |v| v.1)),
                ),
            }
        }
        (GeneratorSpec::ThreeSequences { eps, .. }, "strong_1_reifenberg") => {
            // Each point sees only its partner below half its distance to the origin.
            let d = worst_defect(&|i| {
                let r = crate::vecops::norm(&cloud.point(i).x);
                if r == 0.0 {
                    1.0
                } else {
                    0.5 * r
                }
            });
            (d <= *eps, format!("max defect {d:.4e}"))
        }
        (GeneratorSpec::ThreeSequences { eps, levels }, _) => {
            let scales = geometric_scales(0.5, 1.5 * eps.powi(*levels as i32), 12);
            let mut weakest = f64::INFINITY;
            for &r0 in &scales {
                let lower = (0..cloud.len())
                    .map(|i| best_line_defect_bounds(cloud, i, r0).0)
                    .fold(0.0, f64::max);
                weakest = weakest.min(lower);
            }
            (
                weakest <= REIFENBERG_DELTA,
                format!("every tested r0 has a point with best line defect >= {weakest:.4}"),
            )
        }
        (GeneratorSpec::TiltedLine { count, .. }, "slice_line_reifenberg") => {
            let a = planes.expect("set has planes");
            let floor = cloud.sampling_floor();
            let hi = 0.5;
            let lo = (4.0 * floor).min(0.5 * hi).max(2.0 / *count as f64);
            let p = strong_reifenberg_profile(cloud, a, &geometric_scales(hi, lo.max(floor), 8))?;
            (
                p.max_delta() <= REIFENBERG_DELTA,
                format!("delta(r) between {:.3} and {:.3}", p.min_delta(), p.max_delta()),
            )
        }
        (GeneratorSpec::TiltedLine { .. }, _) => {
            let c = cone_constant(cloud, 0.5)?;
            (
                !c.unbounded && c.gamma.is_finite(),
                format!("gamma {:.3e}, unbounded {}", c.gamma, c.unbounded),
            )
        }
        (GeneratorSpec::Koch { .. }, "endpoints_only") => (cloud.len() == 2, format!("{} points", cloud.len())),
        (GeneratorSpec::Koch { .. }, "in_slice") => {
            let t0 = cloud.point(0).t;
            (cloud.points().iter().all(|p| p.t == t0), "single time value".into())
        }
        (GeneratorSpec::Koch { level }, _) => {
            // Scales stay away from the diameter and from the vertex spacing.
            let periods = *level as i32 - 3;
            let scales = geometric_scales(0.1, 0.1 * 3f64.powi(-periods), 8 * periods as usize + 1);
            let est = ph_dimension_estimate(cloud, &scales)?;
            let target = 4f64.ln() / 3f64.ln();
            (
                (est.dimension - target).abs() <= 0.05,
                format!("dimension {:.4} (log 4 / log 3 = {target:.4})", est.dimension),
            )
        }
        (GeneratorSpec::ParabolicConeBoundary { .. }, "on_boundary") => {
            let worst = cloud
                .points()
                .iter()
                .map(|p| (crate::vecops::norm(&p.x).powi(2) - p.t.abs()).abs())
                .fold(0.0, f64::max);
            (worst <= 1e-12, format!("largest residual {worst:.2e}"))
        }
        (GeneratorSpec::ParabolicConeBoundary { .. }, _) => {
            let v = cloud.point(0);
            let g = cloud.points()[1..]
                .iter()
                .map(|p| (p.t - v.t).abs() / crate::vecops::dist(&p.x, &v.x).powi(2))
                .fold(0.0, f64::max);
            ((g - 1.0).abs() <= 1e-12, format!("vertex aperture {g}"))
        }
        (GeneratorSpec::SliceDisk { .. }, "flat") => {
            let d = worst_defect(&|_| f64::INFINITY);
            (d == 0.0, format!("max defect {d:e}"))
        }
        (GeneratorSpec::SliceDisk { count, .. }, _) => {
            let a = planes.expect("set has planes");
            let h = 1.0 / *count as f64;
            let centre = cloud
                .points()
                .iter()
                .position(|p| p.x.iter().all(|v| *v == 0.0))
                .unwrap_or(0);
            let d = cloud_plane_hausdorff(cloud, a.plane(centre), 0.5, cloud.point(centre), 0.25 * h)?;
            (d.hausdorff() <= h, format!("two-sided distance {:.4e}", d.hausdorff()))
        }
        _ => return Err(invalid("claim", format!("no check for {name}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure1_points() {
        let c = generate(&GeneratorSpec::Figure1 { count: 5 }).unwrap();
        let want = [
            (1.0, 1.0),
            (0.5, 1.0 / 16.0),
            (1.0 / 3.0, 1.0 / 81.0),
            (0.25, 1.0 / 256.0),
            (0.2, 1.0 / 625.0),
            (0.0, 0.0),
        ];
        assert_eq!(c.len(), 6);
        for (p, w) in c.points().iter().zip(want) {
            assert!((p.x[0] - w.0).abs() < 1e-15 && (p.t - w.1).abs() < 1e-15);
        }
    }

    #[test]
    fn koch_level_zero_is_the_segment() {
        let c = generate(&GeneratorSpec::Koch { level: 0 }).unwrap();
        assert_eq!(c.len(), 2);
        let c = generate(&GeneratorSpec::Koch { level: 2 }).unwrap();
        assert_eq!(c.len(), 17);
        assert!((c.point(16).x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_sequences_partners() {
        let (pts, dirs) = three_sequences(0.1, 5);
        assert_eq!(pts.len(), 1 + 5 + 2 + 2);
        assert_eq!(dirs.len(), pts.len());
    }

    #[test]
    fn bad_parameters() {
        assert!(generate(&GeneratorSpec::FourPoints { eps: 1.5 }).is_err());
        assert!(generate(&GeneratorSpec::Figure1 { count: 1 }).is_err());
        assert!(generate(&GeneratorSpec::ThreeSequences { eps: 0.1, levels: 1 }).is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let s = GeneratorSpec::ParabolicConeBoundary { dim: 2, count: 10 };
        let a = serde_json::to_string(&generate(&s).unwrap()).unwrap();
        let b = serde_json::to_string(&generate(&s).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_small_claims_hold() {
        for s in [
            GeneratorSpec::FourPoints { eps: 0.1 },
            GeneratorSpec::Figure1 { count: 40 },
            GeneratorSpec::ThreeSequences { eps: 0.1, levels: 8 },
            GeneratorSpec::TiltedLine { slope: 0.5, count: 401 },
            GeneratorSpec::TiltedLine { slope: 0.0, count: 401 },
            GeneratorSpec::ParabolicConeBoundary { dim: 2, count: 12 },
            GeneratorSpec::SliceDisk {
                dim: 2,
                ambient: 3,
                count: 10,
            },
            GeneratorSpec::Koch { level: 0 },
        ] {
            for c in verify(&s).unwrap() {
                assert!(c.pass, "{}: {c:?}", s.name());
            }
        }
    }
}
