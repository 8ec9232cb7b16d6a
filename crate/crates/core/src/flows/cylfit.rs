//! Fits of rescaled time slices against the round shrinkers `R^j × S^{n−j}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Flow, SingularEvent};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{Descriptor, SurfaceFlow, WeightedHypersurface};

/// Radius of the fitting ball after rescaling.
pub const FIT_RADIUS: f64 = 3.0;

/// Best cylinder in `C_j` for the slice `M_{t0−s}` rescaled by `1/sqrt(s)`
/// about the event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylindricalFit {
    pub s: f64,
    pub j: usize,
    /// `max(offset, slope)`; infinite when the slice is not a graph over the
    /// fitted cylinder on the whole fitting ball.
    #[serde(with = "crate::io::ext_f64")]
    pub eta: f64,
    /// Largest radial offset over the cylinder radius.
    #[serde(with = "crate::io::ext_f64")]
    pub offset: f64,
    /// Largest gradient of the offset.
    #[serde(with = "crate::io::ext_f64")]
    pub slope: f64,
    pub graphical: bool,
    pub covered: bool,
    /// Fitted axis point (sphere centre for `j = 0`) in original coordinates.
    pub center: Vec<f64>,
    /// Unit axis directions.
    pub axis: Vec<Vec<f64>>,
    pub samples: usize,
}

impl CylindricalFit {
    fn flagged(s: f64, j: usize, center: Vec<f64>, samples: usize, covered: bool) -> Self {
        Self {
            s,
            j,
            eta: f64::INFINITY,
            offset: f64::INFINITY,
            slope: f64::INFINITY,
            graphical: false,
            covered,
            center,
            axis: Vec::new(),
            samples,
        }
    }
}

/// `η(s)` along a list of scales with the drift of the fitted axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaProfile {
    /// Scales decreasing.
    pub rows: Vec<CylindricalFit>,
    /// Angle in degrees between each axis and the axis at the largest scale.
    pub drift_deg: Vec<f64>,
}

impl EtaProfile {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.s, r.eta)).collect()
    }

    /// `η` does not grow by more than `tol` as `s` decreases.
    pub fn non_increasing(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].eta <= w[0].eta + tol)
    }

    pub fn max_drift_deg(&self) -> f64 {
        self.drift_deg.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    y: [f64; 3],
    normal: [f64; 3],
}

/// Profile polylines describing `surface` near `x0` (within `rb`).
fn profiles_of(surface: &WeightedHypersurface, x0: &[f64; 3], rb: f64) -> Result<Vec<Vec<[f64; 2]>>> {
    match surface.descriptor() {
        Some(Descriptor::Revolution { profiles }) => Ok(profiles.clone()),
        Some(Descriptor::Sphere { center, radius }) if on_axis(center) => {
            let m = ((std::f64::consts::PI * radius / (rb / 400.0)).ceil() as usize).clamp(64, 200_000);
            Ok(vec![(0..=m)
                .map(|i| {
                    let th = std::f64::consts::PI * (1.0 - i as f64 / m as f64);
                    let r = if i == 0 || i == m { 0.0 } else { radius * th.sin() };
                    [center[0] + radius * th.cos(), r]
                })
                .collect()])
        }
        Some(Descriptor::Cylinder {
            center,
            axes,
            radius,
            half_length,
        }) if axes.len() == 1 && on_axis(center) && (axes[0][0].abs() - 1.0).abs() < 1e-12 => {
            let l = half_length.unwrap_or(f64::INFINITY);
            let lo = (x0[0] - 2.0 * rb).max(center[0] - l);
            let hi = (x0[0] + 2.0 * rb).min(center[0] + l);
            if !(hi > lo) {
                return Ok(Vec::new());
            }
            let m = 400;
            Ok(vec![(0..=m)
                .map(|i| [lo + (hi - lo) * i as f64 / m as f64, *radius])
                .collect()])
        }
        _ => Err(invalid(
            "surface",
            "cylindrical fits need a surface of revolution about the first axis",
        )),
    }
}

fn on_axis(c: &[f64]) -> bool {
    c[1..].iter().all(|v| *v == 0.0)
}

/// Points of the 3-dimensional slice `span(e0, e1, e2)` of a surface of
/// revolution within `rb` of `x0`, with normals, spaced about `step`.
fn ring_samples(profiles: &[Vec<[f64; 2]>], x0: &[f64; 3], rb: f64, step: f64) -> Vec<Sample> {
    let rho0 = x0[1].hypot(x0[2]);
    let phi0 = x0[2].atan2(x0[1]);
    let mut out = Vec::new();
    for p in profiles {
        // Vertex normals from the chord of the neighbours, interpolated
        // along each segment.
        let m = p.len();
        let vn: Vec<[f64; 2]> = (0..m)
            .map(|i| {
                let a = p[i.saturating_sub(1)];
                let b = p[(i + 1).min(m - 1)];
                let l = (b[0] - a[0]).hypot(b[1] - a[1]);
                if l == 0.0 {
                    [0.0, 0.0]
                } else if (i == 0 || i == m - 1) && p[i][1] == 0.0 {
                    // Smooth surfaces meet the axis perpendicularly.
                    [-(b[1] - a[1]).signum(), 0.0]
                } else {
                    [-(b[1] - a[1]) / l, (b[0] - a[0]) / l]
                }
            })
            .collect();
        for (si, w) in p.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if len == 0.0 {
                continue;
            }
            let (na, nb) = (vn[si], vn[si + 1]);
            // Skip segments far from the ball.
            let zlo = a[0].min(b[0]);
            let zhi = a[0].max(b[0]);
            if zlo > x0[0] + rb || zhi < x0[0] - rb {
                continue;
            }
            let k = ((len / step).ceil() as usize).max(1);
            for i in 0..k {
                let u = (i as f64 + 0.5) / k as f64;
                let z = a[0] + u * (b[0] - a[0]);
                let r = a[1] + u * (b[1] - a[1]);
                if r <= 0.0 {
                    continue;
                }
                let (nz, nr) = {
                    let v = [na[0] + u * (nb[0] - na[0]), na[1] + u * (nb[1] - na[1])];
                    let l = v[0].hypot(v[1]);
                    if l > 0.0 {
                        (v[0] / l, v[1] / l)
                    } else {
                        let l = len;
                        (-(b[1] - a[1]) / l, (b[0] - a[0]) / l)
                    }
                };
                let dz2 = (z - x0[0]).powi(2);
                let (center, half) = if rho0 == 0.0 {
                    if dz2 + r * r > rb * rb {
                        continue;
                    }
                    (0.0, std::f64::consts::PI)
                } else {
                    let c = (dz2 + r * r + rho0 * rho0 - rb * rb) / (2.0 * r * rho0);
                    if c > 1.0 {
                        continue;
                    }
                    (phi0, c.max(-1.0).acos())
                };
                let m = ((2.0 * half * r / step).ceil() as usize).max(1);
                for q in 0..m {
                    let phi = center + half * (-1.0 + (2 * q + 1) as f64 / m as f64);
                    let (c, s) = (phi.cos(), phi.sin());
                    let y = [z, r * c, r * s];
                    let d2 = (y[0] - x0[0]).powi(2) + (y[1] - x0[1]).powi(2) + (y[2] - x0[2]).powi(2);
                    if d2 <= rb * rb {
                        out.push(Sample {
                            y,
                            normal: [nz, nr * c, nr * s],
                        });
                    }
                }
            }
        }
    }
    out
}

fn d3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn n3(a: &[f64; 3]) -> [f64; 3] {
    let l = d3(a, a).sqrt();
    [a[0] / l, a[1] / l, a[2] / l]
}

/// Two unit vectors completing `d` to an orthonormal frame.
fn complement(d: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let e = if d[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let c = d3(&e, d);
    let u = n3(&[e[0] - c * d[0], e[1] - c * d[1], e[2] - c * d[2]]);
    let v = [
        d[1] * u[2] - d[2] * u[1],
        d[2] * u[0] - d[0] * u[2],
        d[0] * u[1] - d[1] * u[0],
    ];
    (u, v)
}

/// Levenberg–Marquardt on `residual(θ)` with a forward-difference Jacobian.
fn levenberg_marquardt(theta0: Vec<f64>, m: usize, residual: impl Fn(&[f64], &mut [f64])) -> Vec<f64> {
    let p = theta0.len();
    let mut theta = theta0;
    let mut r = vec![0.0; m];
    let mut rp = vec![0.0; m];
    residual(&theta, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    for _ in 0..50 {
        let mut jac = DMatrix::zeros(m, p);
        for k in 0..p {
            let h = 1e-7 * theta[k].abs().max(1.0);
            let mut tk = theta.clone();
            tk[k] += h;
            residual(&tk, &mut rp);
            for i in 0..m {
                jac[(i, k)] = (rp[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let g = &jt * DVector::from_column_slice(&r);
        let a = &jt * &jac;
        let mut improved = false;
        for _ in 0..8 {
            let mut damped = a.clone();
            for k in 0..p {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            residual(&trial, &mut rp);
            let c: f64 = rp.iter().map(|v| v * v).sum();
            if c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                theta = trial;
                std::mem::swap(&mut r, &mut rp);
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    theta
}

/// Fits the slice `M_{t0−s}` of `flow` around the event against `C_j`.
pub fn cylindrical_fit(flow: &Flow, event: &SingularEvent, s: f64) -> Result<CylindricalFit> {
    if !(s > 0.0) {
        return Err(invalid("s", "rescale time must be positive"));
    }
    let j = event
        .j
        .ok_or_else(|| Error::HypothesisUnverified("event has no cylinder class".into()))?;
    let guess = event
        .axis
        .as_ref()
        .and_then(|a| a.directions().first().cloned())
        .unwrap_or_else(|| crate::vecops::unit(0, flow.n + 1));
    fit_against(flow, event.location.space(), event.location.time(), j, &guess, s)
}

pub(crate) fn fit_against(
    flow: &Flow,
    x: &[f64],
    t0: f64,
    j: usize,
    axis_guess: &[f64],
    s: f64,
) -> Result<CylindricalFit> {
    let n = flow.n;
    if j >= n {
        return Err(invalid("j", "need j < n"));
    }
    if j > 1 {
        return Err(invalid("j", "surfaces of revolution only model j <= 1"));
    }
    if x[3..].iter().any(|v| *v != 0.0) || axis_guess[3..].iter().any(|v| *v != 0.0) {
        return Err(invalid(
            "event",
            "event and axis must lie in the first three coordinates",
        ));
    }
    let surface = flow.surface_at(t0 - s)?;
    let x0 = [x[0], x[1], x[2]];
    let sq = s.sqrt();
    let rb = FIT_RADIUS * sq;
    let profiles = profiles_of(&surface, &x0, rb)?;
    let raw = ring_samples(&profiles, &x0, rb, rb / 40.0);
    let embed = |v: [f64; 3]| {
        let mut e = vec![0.0; n + 1];
        e[..3].copy_from_slice(&v);
        e
    };
    if raw.len() < 20 {
        return Ok(CylindricalFit::flagged(s, j, x.to_vec(), raw.len(), false));
    }
    // Rescaled samples.
    let ys: Vec<[f64; 3]> = raw
        .iter()
        .map(|p| [(p.y[0] - x0[0]) / sq, (p.y[1] - x0[1]) / sq, (p.y[2] - x0[2]) / sq])
        .collect();
    let radius = (2.0 * (n - j) as f64).sqrt();
    let m = ys.len();
    let (center, axis, radial): ([f64; 3], Option<[f64; 3]>, Vec<[f64; 3]>) = if j == 0 {
        let th = levenberg_marquardt(vec![0.0; 3], m, |th, r| {
            for (i, y) in ys.iter().enumerate() {
                let d = [y[0] - th[0], y[1] - th[1], y[2] - th[2]];
                r[i] = d3(&d, &d).sqrt() - radius;
            }
        });
        let c = [th[0], th[1], th[2]];
        let radial = ys
            .iter()
            .map(|y| n3(&[y[0] - c[0], y[1] - c[1], y[2] - c[2]]))
            .collect();
        (c, None, radial)
    } else {
        let d0 = n3(&[axis_guess[0], axis_guess[1], axis_guess[2]]);
        let (u1, u2) = complement(&d0);
        let frame = move |th: &[f64]| -> ([f64; 3], [f64; 3]) {
            let d = n3(&[
                d0[0] + th[2] * u1[0] + th[3] * u2[0],
                d0[1] + th[2] * u1[1] + th[3] * u2[1],
                d0[2] + th[2] * u1[2] + th[3] * u2[2],
            ]);
            let p = [
                th[0] * u1[0] + th[1] * u2[0],
                th[0] * u1[1] + th[1] * u2[1],
                th[0] * u1[2] + th[1] * u2[2],
            ];
            (p, d)
        };
        let perp = |y: &[f64; 3], p: &[f64; 3], d: &[f64; 3]| -> [f64; 3] {
            let w = [y[0] - p[0], y[1] - p[1], y[2] - p[2]];
            let a = d3(&w, d);
            [w[0] - a * d[0], w[1] - a * d[1], w[2] - a * d[2]]
        };
        let th = levenberg_marquardt(vec![0.0; 4], m, |th, r| {
            let (p, d) = frame(th);
            for (i, y) in ys.iter().enumerate() {
                let q = perp(y, &p, &d);
                r[i] = d3(&q, &q).sqrt() - radius;
            }
        });
        let (p, d) = frame(&th);
        let radial = ys.iter().map(|y| n3(&perp(y, &p, &d))).collect();
        (p, Some(d), radial)
    };
    let center_orig = embed([x0[0] + sq * center[0], x0[1] + sq * center[1], x0[2] + sq * center[2]]);
    // Coverage: the cylinder (or sphere) inside the ball must be sampled.
    let covered = match axis {
        Some(d) => {
            let reach = 0.9 * (FIT_RADIUS * FIT_RADIUS - radius * radius).max(0.0).sqrt();
            let bins = 20;
            let mut hit = vec![false; bins];
            for y in &ys {
                let a = d3(&[y[0] - center[0], y[1] - center[1], y[2] - center[2]], &d);
                if a.abs() <= reach {
                    let b = (((a + reach) / (2.0 * reach)) * bins as f64) as usize;
                    hit[b.min(bins - 1)] = true;
                }
            }
            reach > 0.0 && hit.iter().all(|h| *h)
        }
        None => (0..3).all(|k| [1.0, -1.0].iter().all(|sg| radial.iter().any(|e| sg * e[k] >= 0.9))),
    };
    let mut offset = 0.0f64;
    let mut slope = 0.0f64;
    let mut graphical = true;
    for (i, y) in ys.iter().enumerate() {
        let w = [y[0] - center[0], y[1] - center[1], y[2] - center[2]];
        let dist = match axis {
            Some(d) => {
                let a = d3(&w, &d);
                (d3(&w, &w) - a * a).max(0.0).sqrt()
            }
            None => d3(&w, &w).sqrt(),
        };
        offset = offset.max((dist - radius).abs() / radius);
        let c = d3(&raw[i].normal, &radial[i]).abs();
        if c < 0.2 {
            graphical = false;
        } else {
            slope = slope.max((1.0 - c * c).max(0.0).sqrt() / c);
        }
    }
    if !(covered && graphical) {
        let mut f = CylindricalFit::flagged(s, j, center_orig, m, covered);
        f.graphical = graphical;
        return Ok(f);
    }
    Ok(CylindricalFit {
        s,
        j,
        eta: offset.max(slope),
        offset,
        slope,
        graphical,
        covered,
        center: center_orig,
        axis: axis.map(|d| vec![embed(d)]).unwrap_or_default(),
        samples: m,
    })
}

/// Fits at every scale in `scales` (sorted decreasing in the result).
pub fn eta_profile(flow: &Flow, event: &SingularEvent, scales: &[f64]) -> Result<EtaProfile> {
    if scales.is_empty() {
        return Err(Error::Empty("scale list"));
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rows = scales
        .iter()
        .map(|&s| cylindrical_fit(flow, event, s))
        .collect::<Result<Vec<_>>>()?;
    let first = rows[0].axis.first().cloned();
    let drift_deg = rows
        .iter()
        .map(|r| match (&first, r.axis.first()) {
            (Some(a), Some(b)) => crate::vecops::dot(a, b).abs().min(1.0).acos().to_degrees(),
            _ => 0.0,
        })
        .collect();
    Ok(EtaProfile { rows, drift_deg })
}

/// Rescale times available for fits at an event at time `t0`: every
/// snapshot with `t0 − t` in `[s_min, s_max]`, or a geometric grid of
/// `count` values for flows known at all times.
pub fn fit_scales(flow: &Flow, t0: f64, s_max: f64, s_min: f64, count: usize) -> Vec<f64> {
    match flow.snapshot_times() {
        Some(times) => {
            let mut s: Vec<f64> = times
                .into_iter()
                .map(|t| t0 - t)
                .filter(|&s| s >= s_min && s <= s_max)
                .collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s
        }
        None => crate::spacetime::geometric_scales(s_max, s_min, count.max(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{analytic_flow, AnalyticFlow};

    #[test]
    fn frame_is_orthonormal() {
        for d in [[1.0, 0.0, 0.0], n3(&[0.3, -0.4, 0.8])] {
            let (u, v) = complement(&d);
            assert!(d3(&u, &d).abs() < 1e-14 && d3(&v, &d).abs() < 1e-14 && d3(&u, &v).abs() < 1e-14);
            assert!((d3(&v, &v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_cylinder_is_exact() {
        let kind = AnalyticFlow::Cylinder {
            center: vec![0.0; 3],
            j: 1,
            r0: 2f64.sqrt(),
            half_length: None,
        };
        let flow = analytic_flow(kind, &[0.0]).unwrap();
        for s in [0.5, 0.1, 0.01] {
            let f = fit_against(&flow, &[0.3, 0.0, 0.0], 1.0, 1, &[1.0, 0.0, 0.0], s).unwrap();
            assert!(f.eta < 1e-6, "s = {s}: {f:?}");
            assert!((f.axis[0][0].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_is_not_cylindrical() {
        let kind = AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        };
        let flow = analytic_flow(kind, &[0.0]).unwrap();
        let f = fit_against(&flow, &[0.0; 3], 1.0, 1, &[1.0, 0.0, 0.0], 0.01).unwrap();
        assert!(f.eta.is_infinite());
        let g = fit_against(&flow, &[0.0; 3], 1.0, 0, &[1.0, 0.0, 0.0], 0.01).unwrap();
        assert!(g.eta < 1e-4, "{g:?}");
    }
}
