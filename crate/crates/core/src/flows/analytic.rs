use serde::{Deserialize, Serialize};

use super::{EventKind, Flow, FlowSnapshot, RawEvent, Symmetry};
use crate::error::{invalid, Result};
use crate::gaussian::WeightedHypersurface;

/// Exact self-similar flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticFlow {
    /// Round `n`-sphere, `r^2 = r0^2 − 2n t`.
    Sphere { center: Vec<f64>, r0: f64 },
    /// `R^j × S^{n−j}` along the first `j` axes through `center`,
    /// `r^2 = r0^2 − 2(n−j) t`.
    Cylinder {
        center: Vec<f64>,
        j: usize,
        r0: f64,
        half_length: Option<f64>,
    },
    /// Static hyperplane.
    Plane { point: Vec<f64>, normal: Vec<f64> },
}

impl AnalyticFlow {
    pub fn n(&self) -> usize {
        match self {
            AnalyticFlow::Sphere { center, .. }
            | AnalyticFlow::Cylinder { center, .. }
            | AnalyticFlow::Plane { point: center, .. } => center.len() - 1,
        }
    }

    /// Extinction time (infinite for the plane).
    pub fn extinction_time(&self) -> f64 {
        let n = self.n() as f64;
        match self {
            AnalyticFlow::Sphere { r0, .. } => r0 * r0 / (2.0 * n),
            AnalyticFlow::Cylinder { j, r0, .. } => r0 * r0 / (2.0 * (n - *j as f64)),
            AnalyticFlow::Plane { .. } => f64::INFINITY,
        }
    }

    pub fn radius_at(&self, t: f64) -> Result<f64> {
        let n = self.n() as f64;
        let r2 = match self {
            AnalyticFlow::Sphere { r0, .. } => r0 * r0 - 2.0 * n * t,
            AnalyticFlow::Cylinder { j, r0, .. } => r0 * r0 - 2.0 * (n - *j as f64) * t,
            AnalyticFlow::Plane { .. } => return Ok(f64::INFINITY),
        };
        if !(r2 > 0.0) {
            return Err(invalid("t", format!("time {t} is at or past extinction")));
        }
        Ok(r2.sqrt())
    }

    pub fn surface_at(&self, t: f64) -> Result<WeightedHypersurface> {
        let r = self.radius_at(t)?;
        match self {
            AnalyticFlow::Sphere { center, .. } => WeightedHypersurface::sphere(center.clone(), r),
            AnalyticFlow::Cylinder {
                center, j, half_length, ..
            } => {
                let d = center.len();
                let axes = (0..*j).map(|i| crate::vecops::unit(i, d)).collect();
                WeightedHypersurface::cylinder(center.clone(), axes, r, *half_length)
            }
            AnalyticFlow::Plane { point, normal } => WeightedHypersurface::plane(point.clone(), normal.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AnalyticFlow::Sphere { center, r0 } => {
                if center.len() < 2 || !(*r0 > 0.0) {
                    return Err(invalid("r0", "need n >= 1 and a positive radius"));
                }
            }
            AnalyticFlow::Cylinder { center, j, r0, .. } => {
                if center.len() < 2 || *j + 1 >= center.len() || !(*r0 > 0.0) {
                    return Err(invalid("j", "need j < n and a positive radius"));
                }
            }
            AnalyticFlow::Plane { point, normal } => {
                if point.len() < 2 || point.len() != normal.len() {
                    return Err(invalid("normal", "point and normal must share a dimension"));
                }
            }
        }
        Ok(())
    }
}

/// Flow with snapshots of an exact solution at `times` (which must precede
/// extinction). Densities on the result use the exact solution at every time.
pub fn analytic_flow(kind: AnalyticFlow, times: &[f64]) -> Result<Flow> {
    kind.validate()?;
    let mut times = times.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut flow = Flow::new(kind.n(), Symmetry::Analytic);
    for &t in &times {
        flow.snapshots.push(FlowSnapshot {
            t,
            surface: kind.surface_at(t)?,
            spacing: 0.0,
            dt: 0.0,
        });
    }
    let t_ext = kind.extinction_time();
    match &kind {
        AnalyticFlow::Sphere { center, r0 } | AnalyticFlow::Cylinder { center, r0, .. } => {
            flow.events.push(RawEvent {
                kind: EventKind::Extinction,
                t: t_ext,
                z: center[0],
                r: 0.0,
                t_uncertainty: 0.0,
                reference_size: *r0,
            });
        }
        AnalyticFlow::Plane { .. } => {}
    }
    flow.lambda0 = match flow.snapshots.first() {
        Some(s) => crate::gaussian::entropy(&s.surface)?.value,
        None => f64::NAN,
    };
    flow.analytic = Some(kind);
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extinction_times() {
        let s = AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        };
        assert_eq!(s.extinction_time(), 1.0);
        assert!((s.radius_at(0.75).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.radius_at(1.0).is_err());
        let c = AnalyticFlow::Cylinder {
            center: vec![0.0; 3],
            j: 1,
            r0: 2f64.sqrt(),
            half_length: None,
        };
        assert!((c.extinction_time() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plane_snapshots_are_identical() {
        let f = analytic_flow(
            AnalyticFlow::Plane {
                point: vec![0.0; 3],
                normal: vec![0.0, 0.0, 1.0],
            },
            &[0.0, 1.0, 5.0],
        )
        .unwrap();
        assert!(f.snapshots.windows(2).all(|w| w[0].surface == w[1].surface));
        assert!(f.events.is_empty());
    }

    #[test]
    fn past_extinction_is_rejected() {
        let s = AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        };
        assert!(analytic_flow(s, &[0.0, 1.5]).is_err());
    }
}
