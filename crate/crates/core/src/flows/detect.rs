use serde::{Deserialize, Serialize};

use super::cylfit::{eta_profile, fit_scales};
use super::{AnalyticFlow, EventKind, Flow, SingularEvent};
use crate::error::{Error, Result};
use crate::gaussian::{cylinder_density_table, gaussian_density, DensityEstimate, DensityGrid};
use crate::planes::TimeSlicePlane;
use crate::spacetime::SpaceTimePoint;
use crate::vecops::unit;

/// Settings for density evaluation and classification at recorded events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectOptions {
    /// Largest backward scale, as a multiple of the squared reference size of
    /// the event.
    pub tau_max: f64,
    pub tau_min: f64,
    pub count: usize,
    pub residual_threshold: f64,
    /// Relative distance to `Θ_k` accepted for classification.
    pub class_tolerance: f64,
    /// Points sampled on a singular circle.
    pub circle_samples: usize,
    /// Points sampled along the axis of an analytic cylinder.
    pub line_samples: usize,
    /// Whether to attach `η(s)` profiles.
    pub eta_profiles: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            tau_max: 1e-2,
            tau_min: 1e-5,
            count: 16,
            residual_threshold: 0.02,
            class_tolerance: 0.05,
            circle_samples: 64,
            line_samples: 21,
            eta_profiles: true,
        }
    }
}

impl DetectOptions {
    fn grid(&self, reference: f64) -> DensityGrid {
        let r2 = reference * reference;
        DensityGrid {
            tau_max: self.tau_max * r2,
            tau_min: self.tau_min * r2,
            count: self.count,
            residual_threshold: self.residual_threshold,
        }
    }
}

/// Index of the nearest `Θ_k` when within `tol` relative distance.
pub(crate) fn classify(theta: f64, table: &[f64], tol: f64) -> Option<usize> {
    let (k, tk) = table
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - theta).abs().partial_cmp(&(b.1 - theta).abs()).unwrap())?;
    ((theta - tk).abs() <= tol * tk).then_some(k)
}

fn unresolved_density() -> DensityEstimate {
    DensityEstimate {
        value: f64::NAN,
        taus: Vec::new(),
        values: Vec::new(),
        residual: f64::INFINITY,
        flagged: true,
    }
}

/// Densities, classes, axes and `η(s)` profiles at every recorded
/// singularity of `flow`. Circles of singular points are sampled; densities
/// along them are computed once, by rotational symmetry.
pub fn detect_singularities(flow: &Flow, opts: &DetectOptions) -> Result<Vec<SingularEvent>> {
    flow.validate()?;
    let n = flow.n;
    let d = n + 1;
    let table = cylinder_density_table(n)?;
    let mut out = Vec::new();
    for raw in &flow.events {
        let grid = opts.grid(raw.reference_size);
        // Points of the singular set for this event, all with the same
        // density by symmetry.
        let (points, tangents): (Vec<Vec<f64>>, Vec<Option<Vec<f64>>>) = match (&flow.analytic, raw.kind) {
            (
                Some(AnalyticFlow::Cylinder {
                    center, j, half_length, ..
                }),
                _,
            ) => {
                let l = half_length.unwrap_or(1.0);
                let per_axis = ((opts.line_samples as f64).powf(1.0 / *j as f64).round() as usize).max(2);
                let mut pts = Vec::new();
                let mut idx = vec![0usize; *j];
                loop {
                    let mut p = center.clone();
                    for (a, &i) in idx.iter().enumerate() {
                        p[a] += -l + 2.0 * l * i as f64 / (per_axis - 1) as f64;
                    }
                    pts.push(p);
                    let mut a = 0;
                    while a < *j {
                        idx[a] += 1;
                        if idx[a] < per_axis {
                            break;
                        }
                        idx[a] = 0;
                        a += 1;
                    }
                    if a == *j {
                        break;
                    }
                }
                let tangents = vec![None; pts.len()];
                (pts, tangents)
            }
            (_, EventKind::Collapse) => {
                let m = opts.circle_samples.max(3);
                let mut pts = Vec::with_capacity(m);
                let mut tans = Vec::with_capacity(m);
                for k in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    let mut p = vec![0.0; d];
                    p[0] = raw.z;
                    p[1] = raw.r * phi.cos();
                    p[2] = raw.r * phi.sin();
                    let mut tng = vec![0.0; d];
                    tng[1] = -phi.sin();
                    tng[2] = phi.cos();
                    pts.push(p);
                    tans.push(Some(tng));
                }
                (pts, tans)
            }
            _ => {
                let mut p = match &flow.analytic {
                    Some(AnalyticFlow::Sphere { center, .. }) => center.clone(),
                    _ => vec![0.0; d],
                };
                if flow.analytic.is_none() {
                    p[0] = raw.z;
                }
                (vec![p], vec![None])
            }
        };
        let density = match gaussian_density(flow, &points[0], raw.t, &grid) {
            Ok(e) => e,
            Err(Error::Unresolved(_)) | Err(Error::MissingSnapshot(_)) => unresolved_density(),
            Err(e) => return Err(e),
        };
        let j = if density.flagged {
            None
        } else {
            classify(density.value, &table, opts.class_tolerance)
        };
        let mut eta = Vec::new();
        for (i, (p, tng)) in points.iter().zip(&tangents).enumerate() {
            let location = SpaceTimePoint::new(p.clone(), raw.t);
            let axis = match j {
                Some(0) => Some(TimeSlicePlane::new(location.clone(), Vec::new())?),
                Some(1) => {
                    let dir = tng.clone().unwrap_or_else(|| unit(0, d));
                    Some(TimeSlicePlane::new(location.clone(), vec![dir])?)
                }
                Some(k) if flow.analytic.is_some() => Some(TimeSlicePlane::coordinate(
                    location.clone(),
                    &(0..k).collect::<Vec<_>>(),
                )?),
                _ => None,
            };
            let mut ev = SingularEvent {
                kind: raw.kind,
                location,
                density: density.clone(),
                j,
                axis,
                eta_profile: Vec::new(),
                reference_size: raw.reference_size,
            };
            if i == 0 && opts.eta_profiles && matches!(j, Some(0) | Some(1)) {
                let scales = fit_scales(flow, raw.t, grid.tau_max, grid.tau_min, 8);
                if !scales.is_empty() {
                    eta = match eta_profile(flow, &ev, &scales) {
                        Ok(p) => p.pairs(),
                        Err(Error::InvalidParameter { .. }) => Vec::new(),
                        Err(e) => return Err(e),
                    };
                }
            }
            ev.eta_profile = eta.clone();
            out.push(ev);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::analytic_flow;
    use crate::gaussian::cylinder_density;

    #[test]
    fn classification_bands() {
        let table = cylinder_density_table(2).unwrap();
        assert_eq!(classify(table[0] * 1.01, &table, 0.05), Some(0));
        assert_eq!(classify(table[1] * 0.99, &table, 0.05), Some(1));
        assert_eq!(classify(1.0, &table, 0.05), None);
    }

    #[test]
    fn analytic_sphere_has_one_spherical_event() {
        let kind = AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        };
        let flow = analytic_flow(kind, &[0.0, 0.5]).unwrap();
        let ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].j, Some(0));
        assert!((ev[0].density.value - cylinder_density(2, 0).unwrap()).abs() < 1e-6);
        assert!((ev[0].location.time() - 1.0).abs() < 1e-15);
        assert!(ev[0].eta_profile.iter().all(|(_, e)| *e < 1e-4));
    }

    #[test]
    fn analytic_cylinder_line() {
        let kind = AnalyticFlow::Cylinder {
            center: vec![0.0; 3],
            j: 1,
            r0: 2f64.sqrt(),
            half_length: None,
        };
        let flow = analytic_flow(kind, &[0.0]).unwrap();
        let ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
        assert_eq!(ev.len(), 21);
        assert!(ev.iter().all(|e| e.j == Some(1)));
        assert!(ev[0].eta_profile.iter().all(|(_, e)| *e < 1e-6));
    }
}
