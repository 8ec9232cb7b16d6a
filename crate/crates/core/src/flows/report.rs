use serde::{Deserialize, Serialize};

use super::{EventKind, Flow, SingularEvent};
use crate::cone::{cone_constant, ConeConstant};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{ClearingConstants, Descriptor, SurfaceFlow, WeightedHypersurface};
use crate::planes::TimeSlicePlane;
use crate::reifenberg::{
    point_defect, strong_reifenberg_profile, time_slice_test, two_holder_fit, PlaneAssignment, ReifenbergProfile,
    TimeSliceReport, TwoHolderFit,
};
use crate::spacetime::{geometric_scales, PointCloud};

/// Outcome of an analysis whose hypotheses may fail on a given set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Analysis<T> {
    Done(T),
    Rejected(String),
}

impl<T> Analysis<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            Analysis::Done(v) => Some(v),
            Analysis::Rejected(_) => None,
        }
    }

    fn from_result(r: Result<T>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Analysis::Done(v)),
            Err(Error::HypothesisUnverified(m)) | Err(Error::Unresolved(m)) => Ok(Analysis::Rejected(m)),
            Err(Error::BelowSamplingFloor { scale, floor }) => Ok(Analysis::Rejected(format!(
                "scale {scale} below sampling floor {floor}"
            ))),
            Err(e) => Err(e),
        }
    }
}

/// Geometry of the sampled singular set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSetReport {
    pub cloud: PointCloud,
    /// Dimension of the planes assigned to the events.
    pub k: usize,
    /// Half-Reifenberg profile with the event axes as planes. For sets of
    /// isolated points it is evaluated below the smallest spacing.
    pub reifenberg: Analysis<ReifenbergProfile>,
    /// The events are pairwise separated (no scale sees two of them).
    pub isolated: bool,
    pub holder: TwoHolderFit,
    pub cone: Analysis<ConeConstant>,
    pub time_slice: Analysis<TimeSliceReport>,
}

/// Reifenberg, 2-Hölder, cone and time-slice analyses of the events.
pub fn singular_set_report(events: &[SingularEvent], time_tol: f64) -> Result<SingularSetReport> {
    if events.is_empty() {
        return Err(Error::Empty("singular events"));
    }
    let cloud = PointCloud::new(events.iter().map(|e| e.location.clone()).collect())?;
    let d = cloud.ambient_dim();
    let k = events.iter().filter_map(|e| e.j).max().unwrap_or(0);
    let planes = events
        .iter()
        .map(|e| match &e.axis {
            Some(p) if p.k() == k => Ok(p.clone()),
            _ => TimeSlicePlane::coordinate(e.location.clone(), &(0..k.min(d)).collect::<Vec<_>>()),
        })
        .collect::<Result<Vec<_>>>()?;
    let assignment = PlaneAssignment::new(&cloud, planes)?;
    let nn = cloud.nearest_neighbor_distances();
    let min_nn = nn.iter().copied().fold(f64::INFINITY, f64::min);
    let max_nn = nn.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let diameter = {
        let mut m = 0.0f64;
        for p in cloud.points() {
            for q in cloud.points() {
                m = m.max(crate::spacetime::parabolic_distance(p, q)?);
            }
        }
        m
    };
    let floor = cloud.sampling_floor();
    // Isolated points: no nearest-neighbour scale is small compared with the
    // diameter, so only scales below the spacing are meaningful.
    let isolated = cloud.len() < 8 || !(floor < 0.5 * diameter);
    let reifenberg = if isolated {
        let top = if min_nn.is_finite() { 0.5 * min_nn } else { 1.0 };
        let scales = geometric_scales(top, top * 1e-3, 6);
        let delta: Vec<f64> = scales
            .iter()
            .map(|&r| {
                (0..cloud.len())
                    .map(|i| point_defect(&cloud, &assignment, i, r).0)
                    .fold(0.0, f64::max)
            })
            .collect();
        let vanishing = crate::reifenberg::is_vanishing(&scales, &delta);
        Analysis::Done(ReifenbergProfile {
            scales,
            witnesses: vec![None; delta.len()],
            delta,
            floor,
            vanishing,
        })
    } else {
        let hi = (0.5 * diameter).max(floor * 1.5);
        let lo = floor * 1.05;
        let count = ((hi / lo).ln() / 0.35).ceil().clamp(3.0, 12.0) as usize;
        Analysis::from_result(strong_reifenberg_profile(
            &cloud,
            &assignment,
            &geometric_scales(hi, lo, count),
        ))?
    };
    let r0 = if isolated {
        diameter.max(1e-12) * 2.0
    } else {
        (4.0 * max_nn).max(floor)
    };
    let cone = Analysis::from_result(cone_constant(&cloud, r0))?;
    Ok(SingularSetReport {
        holder: two_holder_fit(&cloud),
        time_slice: Analysis::from_result(time_slice_test(&cloud, time_tol))?,
        cloud,
        k,
        reifenberg,
        isolated,
        cone,
    })
}

/// Distance from `x` to the slice (profile geometry for surfaces of
/// revolution about the first axis).
pub fn surface_distance(surface: &WeightedHypersurface, x: &[f64]) -> f64 {
    use crate::vecops::{dist, dot, norm, sub};
    match surface.descriptor() {
        Some(Descriptor::Revolution { profiles }) => {
            let p = [x[0], norm(&x[1..])];
            let mut best = f64::INFINITY;
            for prof in profiles {
                for w in prof.windows(2) {
                    best = best.min(segment_distance(w[0], w[1], p));
                }
            }
            best
        }
        Some(Descriptor::Sphere { center, radius }) => (dist(x, center) - radius).abs(),
        Some(Descriptor::Plane { point, normal }) => dot(&sub(x, point), normal).abs(),
        Some(Descriptor::Cylinder {
            center,
            axes,
            radius,
            half_length,
        }) => {
            let v = sub(x, center);
            let mut perp = v.clone();
            let mut out2 = 0.0;
            for a in axes {
                let c = dot(&v, a);
                crate::vecops::axpy(&mut perp, -c, a);
                if let Some(l) = half_length {
                    out2 += (c.abs() - l).max(0.0).powi(2);
                }
            }
            ((norm(&perp) - radius).powi(2) + out2).sqrt()
        }
        None => surface
            .samples()
            .iter()
            .map(|y| dist(x, y))
            .fold(f64::INFINITY, f64::min),
    }
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let u = if l2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a[0] + u * dx - p[0]).hypot(a[1] + u * dy - p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClearingVerdict {
    /// Every stored slice in every window misses its ball.
    Cleared,
    /// First slice meeting the ball.
    Violated { s: f64, t: f64, distance: f64, radius: f64 },
    /// The window is empty for these constants, so nothing is asserted.
    Vacuous { window: (f64, f64) },
    /// The event does not meet the cylindricality hypothesis.
    Rejected { reason: String },
    /// The flow has no surface after the event.
    Extinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub s: f64,
    pub t: f64,
    pub distance: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub verdict: ClearingVerdict,
    /// Largest measured `η(s)` over the event's profile.
    #[serde(with = "crate::io::ext_f64")]
    pub measured_eta: f64,
    pub rows: Vec<WindowRow>,
}

/// Checks that `B_{η^{−1} sqrt(s)/2}(x0)` misses every stored slice with
/// time in `(t0 + (T−1)s, t0 + (η^{−2} − 4ω^2) s / 4ω^2)` for each `s`.
///
/// The event must be `(j, η)`-cylindrical for the constants' `η`: its
/// measured `η(s)` profile must stay below it.
pub fn clearing_window_check(
    flow: &Flow,
    event: &SingularEvent,
    constants: &ClearingConstants,
    scales: &[f64],
) -> Result<WindowCheck> {
    if scales.iter().any(|s| !(*s > 0.0)) || scales.is_empty() {
        return Err(invalid("scales", "need positive rescale times"));
    }
    let measured_eta = event.eta_profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let t0 = event.location.time();
    let x0 = event.location.space();
    let mut out = WindowCheck {
        verdict: ClearingVerdict::Cleared,
        measured_eta,
        rows: Vec::new(),
    };
    if event.j.is_none_or(|j| j != constants.j) {
        out.verdict = ClearingVerdict::Rejected {
            reason: format!(
                "event class {:?} differs from the constants' j = {}",
                event.j, constants.j
            ),
        };
        return Ok(out);
    }
    if !(measured_eta <= constants.eta) {
        out.verdict = ClearingVerdict::Rejected {
            reason: format!(
                "measured η = {measured_eta:.4} exceeds the constants' η = {}",
                constants.eta
            ),
        };
        return Ok(out);
    }
    let (lo, hi) = constants.window();
    if !constants.has_content || hi <= lo {
        out.verdict = ClearingVerdict::Vacuous { window: (lo, hi) };
        return Ok(out);
    }
    let last = flow.final_time();
    let vanished = flow
        .events
        .iter()
        .filter(|e| e.t >= last)
        .any(|e| matches!(e.kind, EventKind::Extinction | EventKind::Collapse));
    if flow.analytic.is_none() && last <= t0 {
        if vanished {
            out.verdict = ClearingVerdict::Extinct;
            return Ok(out);
        }
        return Err(Error::HypothesisUnverified(format!(
            "flow ends at t = {last}, before the event at t = {t0}"
        )));
    }
    for &s in scales {
        let radius = constants.ball_radius(s);
        let (a, b) = (t0 + lo * s, t0 + hi * s);
        let times: Vec<f64> = match flow.snapshot_times() {
            Some(ts) => ts.into_iter().filter(|t| *t > a && *t < b).collect(),
            None => geometric_scales(hi * s, lo.max(1e-12) * s, 8)
                .into_iter()
                .map(|d| t0 + d)
                .collect(),
        };
        for t in times {
            let surface = match flow.surface_at(t) {
                Ok(s) => s,
                // Past extinction of an analytic flow.
                Err(Error::InvalidParameter { .. }) => continue,
                Err(e) => return Err(e),
            };
            let distance = surface_distance(&surface, x0);
            out.rows.push(WindowRow { s, t, distance, radius });
            if distance < radius && matches!(out.verdict, ClearingVerdict::Cleared) {
                out.verdict = ClearingVerdict::Violated { s, t, distance, radius };
            }
        }
    }
    if out.rows.is_empty() && matches!(out.verdict, ClearingVerdict::Cleared) && flow.analytic.is_some() {
        out.verdict = ClearingVerdict::Extinct;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessRow {
    pub x: Vec<f64>,
    pub t: f64,
    /// Smallest `F_{x, t − t'}(M_{t'})` over stored earlier slices.
    pub f: f64,
    pub from_t: f64,
    pub certified: bool,
    /// Distance from `x` to the first stored slice at or after `t`.
    pub solver_distance: f64,
}

/// Points cleared by Gaussian areas: if `F_{x,τ}(M_{t−τ}) < 1` for some
/// `τ`, then `(x, t)` lies off the flow, since densities on the support are
/// at least 1. A point is certified when the smallest `F` is at most the
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessCertificate {
    pub rows: Vec<EmptinessRow>,
    pub threshold: f64,
    pub all_certified: bool,
    /// Every certified point is also off the computed slice.
    pub consistent: bool,
}

/// Samples `points` positions along the event's axis (or the first
/// coordinate axis) within `radius_factor · sqrt(s)` of the event, at time
/// `t0 + time_factor · s`, for each `s`. The threshold must lie in `(0, 1)`.
pub fn f_emptiness_certificate(
    flow: &Flow,
    event: &SingularEvent,
    scales: &[f64],
    radius_factor: f64,
    time_factor: f64,
    points: usize,
    threshold: f64,
) -> Result<EmptinessCertificate> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", "must lie in (0, 1)"));
    }
    if scales.is_empty() || points == 0 {
        return Err(Error::Empty("sample scales"));
    }
    if !(radius_factor >= 0.0 && time_factor > 0.0) {
        return Err(invalid("time_factor", "need a positive time offset"));
    }
    let times = flow
        .snapshot_times()
        .ok_or_else(|| invalid("flow", "certificate needs stored slices"))?;
    let t0 = event.location.time();
    let x0 = event.location.space();
    let dir = event
        .axis
        .as_ref()
        .and_then(|a| a.directions().first().cloned())
        .unwrap_or_else(|| crate::vecops::unit(0, x0.len()));
    let mut rows = Vec::new();
    for &s in scales {
        let t = t0 + time_factor * s;
        if t > flow.final_time() {
            return Err(Error::HypothesisUnverified(format!(
                "flow ends before t = {t}; it must be continued past the event"
            )));
        }
        let nearest = times
            .iter()
            .copied()
            .find(|&tp| tp >= t)
            .unwrap_or(*times.last().unwrap());
        let near_surface = flow.surface_at(nearest)?;
        for q in 0..points {
            let a = if points == 1 {
                0.0
            } else {
                radius_factor * s.sqrt() * (2.0 * q as f64 / (points - 1) as f64 - 1.0)
            };
            let mut x = x0.to_vec();
            crate::vecops::axpy(&mut x, a, &dir);
            let mut best = (f64::INFINITY, f64::NAN);
            for &tp in times.iter().filter(|&&tp| tp < t) {
                let f = flow.surface_at(tp)?.f_functional(&x, t - tp)?;
                if f < best.0 {
                    best = (f, tp);
                }
            }
            rows.push(EmptinessRow {
                solver_distance: surface_distance(&near_surface, &x),
                certified: best.0 <= threshold,
                f: best.0,
                from_t: best.1,
                x,
                t,
            });
        }
    }
    let all_certified = rows.iter().all(|r| r.certified);
    let consistent = rows.iter().filter(|r| r.certified).all(|r| r.solver_distance > 0.0);
    Ok(EmptinessCertificate {
        rows,
        threshold,
        all_certified,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{analytic_flow, detect_singularities, AnalyticFlow, DetectOptions};
    use crate::gaussian::clearing_constants;

    #[test]
    fn revolution_distance() {
        let s =
            WeightedHypersurface::revolution(2, vec![vec![[-1.0, 0.0], [-1.0, 1.0], [1.0, 1.0], [1.0, 0.0]]]).unwrap();
        assert!((surface_distance(&s, &[0.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((surface_distance(&s, &[0.0, 0.3, 0.4]) - 0.5).abs() < 1e-15);
        assert!((surface_distance(&s, &[3.0, 0.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_window_is_extinct() {
        let kind = AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        };
        let flow = analytic_flow(kind, &[0.0, 0.5]).unwrap();
        let ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
        let mut c = clearing_constants(0.001, 2.0, 2, 1).unwrap();
        c.j = 0;
        let w = clearing_window_check(&flow, &ev[0], &c, &[1e-6, 1e-8]).unwrap();
        assert_eq!(w.verdict, ClearingVerdict::Extinct);
    }

    #[test]
    fn large_eta_is_rejected() {
        let kind = AnalyticFlow::Cylinder {
            center: vec![0.0; 3],
            j: 1,
            r0: 2f64.sqrt(),
            half_length: None,
        };
        let flow = analytic_flow(kind, &[0.0]).unwrap();
        let mut ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
        ev[0].eta_profile = vec![(1e-3, 0.2)];
        let c = clearing_constants(0.001, 2.0, 2, 1).unwrap();
        let w = clearing_window_check(&flow, &ev[0], &c, &[1e-6]).unwrap();
        assert!(matches!(w.verdict, ClearingVerdict::Rejected { .. }));
    }

    #[test]
    fn analytic_cylinder_line_is_flat() {
        let kind = AnalyticFlow::Cylinder {
            center: vec![0.0; 3],
            j: 1,
            r0: 2f64.sqrt(),
            half_length: None,
        };
        let flow = analytic_flow(kind, &[0.0]).unwrap();
        let ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
        let r = singular_set_report(&ev, 1e-9).unwrap();
        let prof = r.reifenberg.done().unwrap();
        assert!(prof.delta.iter().all(|d| *d < 1e-12));
        assert!(r.time_slice.done().is_some_and(|t| t.all_time_slices()));
    }
}
