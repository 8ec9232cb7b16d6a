//! Gaussian surface area `F_{x,τ}`, entropy, densities and the clearing-out
//! constants.

mod clearing;
mod density;
mod optimize;

pub use clearing::{
    clearing_certificate, clearing_constants, cylinder_area_constant, cylinder_clearing_time, CertificateSample,
    ClearingCertificate, ClearingConstants,
};
pub use density::{
    cylinder_density, cylinder_density_table, entropy, gaussian_density, monotonicity_check, DensityEstimate,
    DensityGrid, EntropyEstimate, MonotonicityReport, SurfaceFlow,
};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::vecops::{dot, norm, sub};

/// Area of the unit sphere `S^m ⊂ R^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    let a = (m + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(a) / gamma(a)
}

/// Normalised angular average `|S^m|^{-1} ∫_{S^m} e^{a(θ·e − 1)} dθ`, which
/// is 1 at `a = 0` and decays like `a^{-m/2}`.
pub fn angular_factor(m: usize, a: f64) -> f64 {
    if a <= 0.0 {
        return 1.0;
    }
    match m {
        0 => 0.5 * (1.0 + (-2.0 * a).exp()),
        1 => scaled_bessel_i0(a),
        2 => -(-2.0 * a).exp_m1() / (2.0 * a),
        _ => {
            let pre = sphere_area(m - 1) / sphere_area(m);
            let f = |phi: f64| (a * (phi.cos() - 1.0)).exp() * phi.sin().powi(m as i32 - 1);
            // the mass sits within a few multiples of a^{-1/2} of phi = 0
            let split = (20.0 / a.sqrt()).min(std::f64::consts::PI);
            let mut s = quadrature::double_exponential::integrate(f, 0.0, split, 1e-14).integral;
            if split < std::f64::consts::PI {
                s += quadrature::double_exponential::integrate(f, split, std::f64::consts::PI, 1e-14).integral;
            }
            pre * s
        }
    }
}

/// `e^{-a} I_0(a)` for `a >= 0`: power series below 15, asymptotic
/// expansion above.
fn scaled_bessel_i0(a: f64) -> f64 {
    if a < 15.0 {
        let q = 0.25 * a * a;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        (-a).exp() * sum
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let c = (2 * k - 1) as f64;
            let next = term * c * c / (k as f64 * 8.0 * a);
            if next > term || next < 1e-17 {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * a).sqrt()
    }
}

/// `F_{x,τ}` of a round `m`-sphere of radius `r` in `R^{m+1}` for a centre
/// at distance `rho` from the sphere's centre.
pub fn sphere_gaussian_area(m: usize, r: f64, rho: f64, tau: f64) -> f64 {
    let a = r * rho / (2.0 * tau);
    (4.0 * std::f64::consts::PI * tau).powf(-(m as f64) / 2.0)
        * r.powi(m as i32)
        * sphere_area(m)
        * (-(r - rho).powi(2) / (4.0 * tau)).exp()
        * angular_factor(m, a)
}

/// Closed-form or structured description of a hypersurface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    /// Hyperplane through `point` with unit `normal`.
    Plane {
        point: Vec<f64>,
        normal: Vec<f64>,
    },
    Sphere {
        center: Vec<f64>,
        radius: f64,
    },
    /// `R^j × S^{n−j}_radius` with orthonormal axis directions. With
    /// `half_length` set, each axial coordinate is truncated to `|a_i| <= L`.
    Cylinder {
        center: Vec<f64>,
        axes: Vec<Vec<f64>>,
        radius: f64,
        half_length: Option<f64>,
    },
    /// Rotation of profile polylines `(z, r)`, `r >= 0`, about the first
    /// coordinate axis.
    Revolution {
        profiles: Vec<Vec<[f64; 2]>>,
    },
}

/// A hypersurface `Σ^n ⊂ R^{n+1}`, given by weighted samples, an analytic
/// descriptor, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedHypersurface {
    n: usize,
    samples: Vec<Vec<f64>>,
    weights: Vec<f64>,
    descriptor: Option<Descriptor>,
}

impl WeightedHypersurface {
    /// Point masses `weights[i]` at `samples[i]` in `R^{n+1}`.
    pub fn from_samples(n: usize, samples: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("surface samples"));
        }
        if samples.len() != weights.len() {
            return Err(invalid("weights", "one weight per sample"));
        }
        for s in &samples {
            if s.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    found: s.len(),
                });
            }
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("weights", "weights must be positive and finite"));
        }
        Ok(Self {
            n,
            samples,
            weights,
            descriptor: None,
        })
    }

    fn described(n: usize, d: Descriptor) -> Self {
        Self {
            n,
            samples: Vec::new(),
            weights: Vec::new(),
            descriptor: Some(d),
        }
    }

    pub fn plane(point: Vec<f64>, normal: Vec<f64>) -> Result<Self> {
        if point.len() != normal.len() || point.is_empty() {
            return Err(invalid("normal", "point and normal must share a dimension"));
        }
        let nn = norm(&normal);
        if !(nn > 0.0) {
            return Err(invalid("normal", "normal must be nonzero"));
        }
        let n = point.len() - 1;
        let normal = normal.iter().map(|v| v / nn).collect();
        Ok(Self::described(n, Descriptor::Plane { point, normal }))
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(invalid("radius", "radius must be positive"));
        }
        let n = center.len() - 1;
        Ok(Self::described(n, Descriptor::Sphere { center, radius }))
    }

    /// Cylinder with `axes.len()` Euclidean directions through `center`.
    pub fn cylinder(center: Vec<f64>, axes: Vec<Vec<f64>>, radius: f64, half_length: Option<f64>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("radius", "radius must be positive"));
        }
        let dim = center.len();
        if axes.len() >= dim {
            return Err(invalid("axes", "cylinder needs a spherical factor"));
        }
        let base = crate::spacetime::SpaceTimePoint::new(center.clone(), 0.0);
        let axes = crate::planes::TimeSlicePlane::new(base, axes)?.directions().to_vec();
        if let Some(l) = half_length {
            if !(l > 0.0) {
                return Err(invalid("half_length", "truncation must be positive"));
            }
        }
        Ok(Self::described(
            dim - 1,
            Descriptor::Cylinder {
                center,
                axes,
                radius,
                half_length,
            },
        ))
    }

    /// The round cylinder `R^j × S^{n−j}` of radius `sqrt(2(n−j))` along the
    /// first `j` coordinate axes.
    pub fn shrinker_cylinder(n: usize, j: usize, half_length: Option<f64>) -> Result<Self> {
        if j > n {
            return Err(invalid("j", "axis dimension must be at most n"));
        }
        if j == n {
            let mut normal = vec![0.0; n + 1];
            normal[n] = 1.0;
            return Self::plane(vec![0.0; n + 1], normal);
        }
        let axes = (0..j).map(|i| crate::vecops::unit(i, n + 1)).collect();
        Self::cylinder(vec![0.0; n + 1], axes, (2.0 * (n - j) as f64).sqrt(), half_length)
    }

    /// Surface of revolution in `R^{n+1}` about the first axis.
    pub fn revolution(n: usize, profiles: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "hypersurface dimension must be positive"));
        }
        if profiles.iter().all(|p| p.len() < 2) {
            return Err(Error::Empty("profile curve"));
        }
        for p in &profiles {
            if p.iter()
                .any(|q| !(q[1] >= 0.0) || !q[0].is_finite() || !q[1].is_finite())
            {
                return Err(invalid("profiles", "profile radii must be finite and non-negative"));
            }
        }
        Ok(Self::described(n, Descriptor::Revolution { profiles }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.descriptor.as_ref()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether the surface is compact (so that `F` vanishes at large scale).
    pub fn is_bounded(&self) -> bool {
        match &self.descriptor {
            None | Some(Descriptor::Sphere { .. }) | Some(Descriptor::Revolution { .. }) => true,
            Some(Descriptor::Cylinder { axes, half_length, .. }) => axes.is_empty() || half_length.is_some(),
            Some(Descriptor::Plane { .. }) => false,
        }
    }

    /// Total area (infinite for unbounded descriptors).
    pub fn area(&self) -> f64 {
        match &self.descriptor {
            None => self.weights.iter().sum(),
            Some(Descriptor::Plane { .. }) => f64::INFINITY,
            Some(Descriptor::Sphere { radius, .. }) => sphere_area(self.n) * radius.powi(self.n as i32),
            Some(Descriptor::Cylinder {
                axes,
                radius,
                half_length,
                ..
            }) => match half_length {
                Some(l) if !axes.is_empty() => {
                    let m = self.n - axes.len();
                    sphere_area(m) * radius.powi(m as i32) * (2.0 * l).powi(axes.len() as i32)
                }
                _ if axes.is_empty() => sphere_area(self.n) * radius.powi(self.n as i32),
                _ => f64::INFINITY,
            },
            Some(Descriptor::Revolution { profiles }) => {
                let m = self.n - 1;
                let mut s = 0.0;
                for p in profiles {
                    for w in p.windows(2) {
                        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                        // exact for the linear segment when m <= 1, midpoint otherwise
                        let rm = if m == 0 {
                            1.0
                        } else if m == 1 {
                            0.5 * (w[0][1] + w[1][1])
                        } else {
                            (0.5 * (w[0][1] + w[1][1])).powi(m as i32)
                        };
                        s += sphere_area(m) * rm * len;
                    }
                }
                s
            }
        }
    }

    /// Spatial bounding box `(min, max)` (infinite for unbounded surfaces).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.n + 1;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut push = |p: &[f64]| {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        };
        match &self.descriptor {
            None => self.samples.iter().for_each(|p| push(p)),
            Some(Descriptor::Sphere { center, radius }) => {
                push(&center.iter().map(|c| c - radius).collect::<Vec<_>>());
                push(&center.iter().map(|c| c + radius).collect::<Vec<_>>());
            }
            Some(Descriptor::Revolution { profiles }) => {
                let rmax = profiles.iter().flatten().map(|q| q[1]).fold(0.0, f64::max);
                for q in profiles.iter().flatten() {
                    let mut a = vec![-rmax; d];
                    a[0] = q[0];
                    push(&a);
                    let mut b = vec![rmax; d];
                    b[0] = q[0];
                    push(&b);
                }
            }
            Some(Descriptor::Cylinder {
                center,
                axes,
                radius,
                half_length,
            }) => {
                let ext = match half_length {
                    _ if axes.is_empty() => *radius,
                    Some(l) => radius + l * (axes.len() as f64).sqrt(),
                    None => f64::INFINITY,
                };
                push(&center.iter().map(|c| c - ext).collect::<Vec<_>>());
                push(&center.iter().map(|c| c + ext).collect::<Vec<_>>());
            }
            Some(Descriptor::Plane { .. }) => {
                lo = vec![f64::NEG_INFINITY; d];
                hi = vec![f64::INFINITY; d];
            }
        }
        (lo, hi)
    }

    /// `F_{x,τ}(Σ) = (4πτ)^{-n/2} ∫_Σ e^{-|y−x|^2/4τ} dy`.
    pub fn f_functional(&self, x: &[f64], tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(invalid("tau", "scale must be positive"));
        }
        if x.len() != self.n + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n + 1,
                found: x.len(),
            });
        }
        Ok(match &self.descriptor {
            None => self.sampled_f(x, tau),
            Some(d) => self.described_f(d, x, tau),
        })
    }

    fn sampled_f(&self, x: &[f64], tau: f64) -> f64 {
        let norm_c = (4.0 * std::f64::consts::PI * tau).powf(-(self.n as f64) / 2.0);
        norm_c
            * self
                .samples
                .iter()
                .zip(&self.weights)
                .map(|(y, w)| {
                    let d = sub(y, x);
                    w * (-dot(&d, &d) / (4.0 * tau)).exp()
                })
                .sum::<f64>()
    }

    fn described_f(&self, d: &Descriptor, x: &[f64], tau: f64) -> f64 {
        let n = self.n;
        match d {
            Descriptor::Plane { point, normal } => {
                let h = dot(&sub(x, point), normal);
                (-h * h / (4.0 * tau)).exp()
            }
            Descriptor::Sphere { center, radius } => {
                sphere_gaussian_area(n, *radius, crate::vecops::dist(x, center), tau)
            }
            Descriptor::Cylinder {
                center,
                axes,
                radius,
                half_length,
            } => {
                let v = sub(x, center);
                let mut perp = v.clone();
                let mut axial = 1.0;
                for a in axes {
                    let c = dot(&v, a);
                    crate::vecops::axpy(&mut perp, -c, a);
                    if let Some(l) = half_length {
                        let s = 2.0 * tau.sqrt();
                        axial *= 0.5 * (erf((l - c) / s) + erf((l + c) / s));
                    }
                }
                let m = n - axes.len();
                axial * sphere_gaussian_area(m, *radius, norm(&perp), tau)
            }
            Descriptor::Revolution { profiles } => revolution_f(n, profiles, x, tau),
        }
    }

    /// Rings of `azimuth` points per profile vertex, for `n = 2` revolution
    /// surfaces; used to cross-check the profile quadrature.
    pub fn sampled(&self, azimuth: usize) -> Result<Self> {
        let Some(Descriptor::Revolution { profiles }) = &self.descriptor else {
            return Err(invalid("descriptor", "only revolution surfaces can be resampled"));
        };
        if self.n != 2 || azimuth < 3 {
            return Err(invalid("n", "ring sampling needs n = 2 and at least 3 azimuths"));
        }
        let mut samples = Vec::new();
        let mut weights = Vec::new();
        for p in profiles {
            for w in p.windows(2) {
                let (z, r) = (0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1]));
                let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                if r <= 0.0 || len <= 0.0 {
                    continue;
                }
                for k in 0..azimuth {
                    let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / azimuth as f64;
                    samples.push(vec![z, r * phi.cos(), r * phi.sin()]);
                    weights.push(2.0 * std::f64::consts::PI * r * len / azimuth as f64);
                }
            }
        }
        Self::from_samples(2, samples, weights)
    }
}

/// Profile quadrature for a surface of revolution about the first axis:
/// `(4πτ)^{-n/2} |S^{n−1}| ∫ r^{n−1} e^{−((z−c)^2 + (r−ρ)^2)/4τ} A(rρ/2τ) ds`,
/// midpoint sums on subintervals of length at most `sqrt(τ)/2` with one
/// Richardson step.
fn revolution_f(n: usize, profiles: &[Vec<[f64; 2]>], x: &[f64], tau: f64) -> f64 {
    let m = n - 1;
    let c = x[0];
    let rho = norm(&x[1..]);
    let cutoff2 = 150.0 * tau;
    let h_max = 0.5 * tau.sqrt();
    let g = |z: f64, r: f64| -> f64 {
        let e = -((z - c).powi(2) + (r - rho).powi(2)) / (4.0 * tau);
        let rm = if m == 0 { 1.0 } else { r.powi(m as i32) };
        rm * e.exp() * angular_factor(m, r * rho / (2.0 * tau))
    };
    let mut total = 0.0;
    for p in profiles {
        for w in p.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if len == 0.0 {
                continue;
            }
            if seg_dist2(a, b, [c, rho]) > cutoff2 {
                continue;
            }
            let k = ((len / h_max).ceil() as usize).max(1);
            let mid = |k: usize| -> f64 {
                let h = 1.0 / k as f64;
                (0..k)
                    .map(|i| {
                        let u = (i as f64 + 0.5) * h;
                        g(a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]))
                    })
                    .sum::<f64>()
                    * h
            };
            let m1 = mid(k);
            let m2 = mid(2 * k);
            total += len * (m2 + (m2 - m1) / 3.0);
        }
    }
    (4.0 * std::f64::consts::PI * tau).powf(-(n as f64) / 2.0) * sphere_area(m) * total
}

fn seg_dist2(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let u = if l2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + u * dx - p[0], a[1] + u * dy - p[1]);
    qx * qx + qy * qy
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn plane_through_center_has_unit_area() {
        let p = WeightedHypersurface::plane(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.f_functional(&[3.0, -1.0, 1.0], 0.7).unwrap(), 1.0);
    }

    #[test]
    fn shrinker_sphere_value() {
        let s = WeightedHypersurface::sphere(vec![0.0; 3], 2.0).unwrap();
        let f = s.f_functional(&[0.0; 3], 1.0).unwrap();
        assert!((f - 4.0 / E).abs() < 1e-14);
    }

    #[test]
    fn angular_factor_against_bessel_series() {
        // m = 1: e^{-a} I_0(a), I_0 from its power series
        for &a in &[0.1, 1.0, 5.0, 14.9, 15.1, 20.0, 60.0] {
            let mut term = 1.0;
            let mut i0 = 1.0;
            for k in 1..200 {
                term *= (a / 2.0) * (a / 2.0) / (k as f64 * k as f64);
                i0 += term;
            }
            let want = (-a).exp() * i0;
            assert!((angular_factor(1, a) - want).abs() < 1e-12 * want, "a={a}");
        }
    }

    #[test]
    fn angular_factor_general_matches_closed_form_case() {
        // m = 2 has a closed form; the generic quadrature path must agree
        for &a in &[0.01, 0.7, 9.0, 400.0, 1e5] {
            let pre = sphere_area(1) / sphere_area(2);
            let f = |phi: f64| (a * (phi.cos() - 1.0)).exp() * phi.sin();
            let split = (20.0 / a.sqrt()).min(PI);
            let mut s = quadrature::double_exponential::integrate(f, 0.0, split, 1e-14).integral;
            if split < PI {
                s += quadrature::double_exponential::integrate(f, split, PI, 1e-14).integral;
            }
            assert!((pre * s - angular_factor(2, a)).abs() < 1e-10 * angular_factor(2, a));
        }
    }

    #[test]
    fn truncated_cylinder_value() {
        let c = WeightedHypersurface::shrinker_cylinder(2, 1, Some(8.0)).unwrap();
        let f = c.f_functional(&[0.0; 3], 1.0).unwrap();
        assert!((f - (2.0 * PI / E).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn revolution_sphere_matches_closed_form() {
        let k = 2000;
        let prof: Vec<[f64; 2]> = (0..=k)
            .map(|i| {
                let th = PI * i as f64 / k as f64;
                [2.0 * th.cos(), 2.0 * th.sin()]
            })
            .collect();
        let s = WeightedHypersurface::revolution(2, vec![prof]).unwrap();
        let exact = WeightedHypersurface::sphere(vec![0.0; 3], 2.0).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.5, 0.3, 0.0], [1.0, 0.0, 1.5]] {
            for tau in [0.3, 1.0, 2.5] {
                let a = s.f_functional(&x, tau).unwrap();
                let b = exact.f_functional(&x, tau).unwrap();
                assert!((a - b).abs() < 1e-5, "x={x:?} tau={tau}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ring_samples_reproduce_profile_quadrature() {
        let prof: Vec<[f64; 2]> = (0..=400)
            .map(|i| {
                let z = -3.0 + 6.0 * i as f64 / 400.0;
                [z, 1.0 + 0.2 * z.cos()]
            })
            .collect();
        let s = WeightedHypersurface::revolution(2, vec![prof]).unwrap();
        let d = s.sampled(128).unwrap();
        let x = [0.2, 0.4, -0.1];
        let a = s.f_functional(&x, 0.8).unwrap();
        let b = d.f_functional(&x, 0.8).unwrap();
        assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");
    }

    #[test]
    fn nonpositive_scale_is_rejected() {
        let s = WeightedHypersurface::sphere(vec![0.0; 3], 1.0).unwrap();
        assert!(s.f_functional(&[0.0; 3], 0.0).is_err());
    }
}
