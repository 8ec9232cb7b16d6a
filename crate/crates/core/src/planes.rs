//! Affine `k`-planes contained in a single time-slice.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spacetime::{dist_p_unchecked, ParabolicTarget, PointCloud, SpaceTimePoint};
use crate::vecops::{axpy, dot, norm, sub};

/// An affine `k`-plane `base + span(directions)` inside the slice `{t = base.t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlane", into = "RawPlane")]
pub struct TimeSlicePlane {
    base: SpaceTimePoint,
    directions: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPlane {
    base: SpaceTimePoint,
    directions: Vec<Vec<f64>>,
}

impl TryFrom<RawPlane> for TimeSlicePlane {
    type Error = Error;
    fn try_from(raw: RawPlane) -> Result<Self> {
        TimeSlicePlane::new(raw.base, raw.directions)
    }
}

impl From<TimeSlicePlane> for RawPlane {
    fn from(p: TimeSlicePlane) -> Self {
        RawPlane {
            base: p.base,
            directions: p.directions,
        }
    }
}

/// Orthogonal decomposition of a point relative to a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Coordinates in the plane's orthonormal basis.
    pub tangential: Vec<f64>,
    /// Spatial component orthogonal to the plane.
    pub normal: Vec<f64>,
    pub time_offset: f64,
}

/// Gram-Schmidt with one re-orthogonalisation pass.
fn orthonormalize(dim: usize, dirs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    for d in dirs {
        if d.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d.len(),
            });
        }
        let scale = norm(&d);
        if !(scale > 0.0) {
            return Err(invalid("directions", "zero direction vector"));
        }
        let mut v = d;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                axpy(&mut v, -c, b);
            }
        }
        let nv = norm(&v);
        if nv < 1e-9 * scale {
            return Err(invalid("directions", "directions are linearly dependent"));
        }
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    Ok(basis)
}

impl TimeSlicePlane {
    pub fn new(base: SpaceTimePoint, directions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = base.dim();
        if directions.len() > dim {
            return Err(invalid("directions", "more directions than ambient dimension"));
        }
        let directions = orthonormalize(dim, directions)?;
        Ok(Self { base, directions })
    }

    /// Plane spanned by coordinate axes `axes` through `base`.
    pub fn coordinate(base: SpaceTimePoint, axes: &[usize]) -> Result<Self> {
        let dim = base.dim();
        let dirs = axes.iter().map(|&i| crate::vecops::unit(i, dim)).collect();
        Self::new(base, dirs)
    }

    pub fn base(&self) -> &SpaceTimePoint {
        &self.base
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn time(&self) -> f64 {
        self.base.t
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.directions.iter().enumerate() {
            for (j, b) in self.directions.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    /// The parallel plane through `base`.
    pub fn translated_to(&self, base: SpaceTimePoint) -> Self {
        Self {
            base,
            directions: self.directions.clone(),
        }
    }

    pub fn project(&self, p: &SpaceTimePoint) -> Result<Projection> {
        if p.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: p.dim(),
            });
        }
        Ok(self.project_spatial(&p.x, p.t))
    }

    fn project_spatial(&self, x: &[f64], t: f64) -> Projection {
        let rel = sub(x, &self.base.x);
        let tangential: Vec<f64> = self.directions.iter().map(|d| dot(&rel, d)).collect();
        let mut normal = rel;
        for (c, d) in tangential.iter().zip(&self.directions) {
            axpy(&mut normal, -c, d);
        }
        Projection {
            tangential,
            normal,
            time_offset: t - self.base.t,
        }
    }

    /// Inverse of [`project`](Self::project).
    pub fn reconstruct(&self, proj: &Projection) -> SpaceTimePoint {
        let mut x = self.base.x.clone();
        for (c, d) in proj.tangential.iter().zip(&self.directions) {
            axpy(&mut x, *c, d);
        }
        axpy(&mut x, 1.0, &proj.normal);
        SpaceTimePoint::new(x, self.base.t + proj.time_offset)
    }

    /// Point of the plane with tangential coordinates `c`.
    pub fn point_at(&self, c: &[f64]) -> Vec<f64> {
        let mut x = self.base.x.clone();
        for (ci, d) in c.iter().zip(&self.directions) {
            axpy(&mut x, *ci, d);
        }
        x
    }

    /// Euclidean distance from a spatial point to the plane (identified with
    /// its parallel copy in space).
    pub fn spatial_distance(&self, x: &[f64]) -> f64 {
        norm(&self.project_spatial(x, self.base.t).normal)
    }

    /// Orthogonal projection of a spatial vector onto the normal space.
    fn normal_part(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for d in &self.directions {
            let c = dot(v, d);
            axpy(&mut out, -c, d);
        }
        out
    }
}

impl ParabolicTarget for TimeSlicePlane {
    fn ambient_dim(&self) -> usize {
        self.base.dim()
    }

    fn parabolic_distance_from(&self, p: &SpaceTimePoint) -> f64 {
        self.spatial_distance(&p.x).max((p.t - self.base.t).abs().sqrt())
    }
}

/// Cosines of the principal angles between the direction spans, largest first.
pub fn principal_cosines(v: &TimeSlicePlane, w: &TimeSlicePlane) -> Vec<f64> {
    if v.k() == 0 || w.k() == 0 {
        return vec![];
    }
    let g = DMatrix::from_fn(v.k(), w.k(), |i, j| dot(&v.directions[i], &w.directions[j]));
    let mut s: Vec<f64> = g.singular_values().iter().map(|c| c.min(1.0)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Sine of the largest principal angle between two planes of equal dimension.
pub fn max_principal_sine(v: &TimeSlicePlane, w: &TimeSlicePlane) -> f64 {
    let cos = principal_cosines(v, w);
    let min_cos = if cos.len() < v.k() {
        0.0
    } else {
        cos.last().copied().unwrap_or(1.0)
    };
    (1.0 - min_cos * min_cos).max(0.0).sqrt()
}

/// `max |d + A c|` over `|c| <= r`, `A` given by its columns.
fn max_affine_norm_on_ball(d: &[f64], cols: &[Vec<f64>], r: f64) -> f64 {
    let k = cols.len();
    if k == 0 {
        return norm(d);
    }
    let m = DMatrix::from_fn(k, k, |i, j| dot(&cols[i], &cols[j]));
    let g: Vec<f64> = cols.iter().map(|c| dot(c, d)).collect();
    let eig = SymmetricEigen::new(m);
    let lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let q = eig.eigenvectors;
    let h: Vec<f64> = (0..k).map(|i| (0..k).map(|j| q[(j, i)] * g[j]).sum()).collect();
    let lmax = lam.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dd = dot(d, d);
    let value = |y: &[f64]| -> f64 {
        let quad: f64 = (0..k).map(|i| lam[i] * y[i] * y[i] + 2.0 * h[i] * y[i]).sum();
        (quad + dd).max(0.0).sqrt()
    };
    let scale = 1.0 + lmax.abs();
    let top: Vec<bool> = lam.iter().map(|l| (lmax - l) <= 1e-12 * scale).collect();
    let h_top: f64 = (0..k).filter(|&i| top[i]).map(|i| h[i] * h[i]).sum::<f64>().sqrt();
    let norm_at = |mu: f64| -> f64 { (0..k).map(|i| (h[i] / (mu - lam[i])).powi(2)).sum::<f64>().sqrt() };
    let hnorm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if h_top > 1e-14 * (1.0 + hnorm) {
        // secular equation |y(mu)| = r on (lmax, lmax + |h|/r]
        let mut lo = lmax;
        let mut hi = lmax + hnorm / r + 1e-300;
        while norm_at(hi) > r {
            hi = lmax + 2.0 * (hi - lmax);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y: Vec<f64> = (0..k).map(|i| h[i] / (hi - lam[i])).collect();
        return value(&y);
    }
    // hard case: the linear term has no component along the top eigenspace
    let mut y: Vec<f64> = (0..k)
        .map(|i| if top[i] { 0.0 } else { h[i] / (lmax - lam[i]) })
        .collect();
    let used: f64 = y.iter().map(|v| v * v).sum();
    if used <= r * r {
        let i0 = (0..k).find(|&i| top[i]).unwrap();
        y[i0] = (r * r - used).sqrt();
        value(&y)
    } else {
        // secular equation still has a root above lmax
        let mut lo = lmax;
        let mut hi = lmax + hnorm / r + 1e-300;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y: Vec<f64> = (0..k).map(|i| h[i] / (hi - lam[i])).collect();
        value(&y)
    }
}

/// Smallest `delta` with `B_r(base_V) ∩ V ⊂ PT_{delta r}(W)`.
///
/// The spatial part is the exact maximum of the distance to `W` over the
/// `r`-disk of `V`; different base times contribute `|t_V - t_W|^{1/2}`
/// through the parabolic metric.
pub fn one_sided_tube_constant(v: &TimeSlicePlane, w: &TimeSlicePlane, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", "radius must be positive"));
    }
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient_dim(),
            found: w.ambient_dim(),
        });
    }
    let d = w.normal_part(&sub(&v.base.x, &w.base.x));
    let cols: Vec<Vec<f64>> = v.directions.iter().map(|e| w.normal_part(e)).collect();
    let spatial = max_affine_norm_on_ball(&d, &cols, r);
    let temporal = (v.time() - w.time()).abs().sqrt();
    Ok(spatial.max(temporal) / r)
}

/// Outcome of checking the equal-dimension tube symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SymmetryOutcome {
    /// `V ⊂ T_delta(W)` held and so did the reverse containment.
    Holds { forward: f64, backward: f64 },
    /// The forward containment fails at level `delta`; nothing to check.
    NotApplicable { forward: f64 },
}

/// If `B_1 ∩ V ⊂ T_delta(W)` with `delta < 1` then `B_1 ∩ W ⊂ T_delta(V)`,
/// for `k`-planes through a common point. A failure of the conclusion is a
/// [`Error::LemmaViolated`]; unequal dimensions are a
/// [`Error::DimensionMismatch`].
pub fn plane_symmetry_check(v: &TimeSlicePlane, w: &TimeSlicePlane, delta: f64) -> Result<SymmetryOutcome> {
    if v.k() != w.k() {
        return Err(Error::DimensionMismatch {
            expected: v.k(),
            found: w.k(),
        });
    }
    if dist_p_unchecked(v.base(), w.base()) > 1e-12 && w.parabolic_distance_from(v.base()) > 1e-12 {
        return Err(invalid("planes", "planes do not share a base point"));
    }
    let forward = one_sided_tube_constant(v, w, 1.0)?;
    if !(forward <= delta && delta < 1.0) {
        return Ok(SymmetryOutcome::NotApplicable { forward });
    }
    let backward = one_sided_tube_constant(w, v, 1.0)?;
    if backward > delta + 1e-12 {
        return Err(Error::LemmaViolated(format!(
            "forward {forward} <= {delta} but backward {backward}"
        )));
    }
    Ok(SymmetryOutcome::Holds { forward, backward })
}

/// The open disk `PB_r(center) ∩ plane`, as centre coordinates and radius.
#[derive(Debug, Clone)]
struct BallDisk<'a> {
    plane: &'a TimeSlicePlane,
    center: Vec<f64>,
    radius: f64,
}

fn ball_disk<'a>(plane: &'a TimeSlicePlane, center: &SpaceTimePoint, r: f64) -> Option<BallDisk<'a>> {
    if (plane.time() - center.t).abs() >= r * r {
        return None;
    }
    let proj = plane.project_spatial(&center.x, center.t);
    let dn = norm(&proj.normal);
    if dn >= r {
        return None;
    }
    Some(BallDisk {
        plane,
        center: proj.tangential,
        radius: (r * r - dn * dn).sqrt(),
    })
}

impl BallDisk<'_> {
    /// Parabolic distance from a space-time point to the closed disk.
    fn distance_from(&self, x: &[f64], t: f64) -> f64 {
        let proj = self.plane.project_spatial(x, t);
        let off: Vec<f64> = proj.tangential.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let excess = (norm(&off) - self.radius).max(0.0);
        let spatial = (dot(&proj.normal, &proj.normal) + excess * excess).sqrt();
        spatial.max(proj.time_offset.abs().sqrt())
    }

    fn point(&self, unit_dir: &[f64], radius: f64) -> Vec<f64> {
        let c: Vec<f64> = self.center.iter().zip(unit_dir).map(|(a, u)| a + radius * u).collect();
        self.plane.point_at(&c)
    }

    /// Sup of the distance to `other` over this disk (attained on the boundary).
    fn sup_distance_to(&self, other: &BallDisk) -> f64 {
        let k = self.plane.k();
        let t = self.plane.time();
        let eval = |u: &[f64]| other.distance_from(&self.point(u, self.radius), t);
        match k {
            0 => other.distance_from(&self.plane.point_at(&[]), t),
            1 => eval(&[1.0]).max(eval(&[-1.0])),
            2 => {
                let m = 720;
                let f = |a: f64| eval(&[a.cos(), a.sin()]);
                let step = std::f64::consts::TAU / m as f64;
                let (mut best_a, mut best) = (0.0, f(0.0));
                for i in 1..m {
                    let a = i as f64 * step;
                    let v = f(a);
                    if v > best {
                        best = v;
                        best_a = a;
                    }
                }
                // golden-section refinement around the best sample
                let (mut lo, mut hi) = (best_a - step, best_a + step);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let a1 = hi - g * (hi - lo);
                    let a2 = lo + g * (hi - lo);
                    if f(a1) > f(a2) {
                        hi = a2;
                    } else {
                        lo = a1;
                    }
                }
                best.max(f(0.5 * (lo + hi)))
            }
            _ => sphere_directions(k, 4000).iter().map(|u| eval(u)).fold(0.0, f64::max),
        }
    }
}

/// Deterministic quasi-uniform unit vectors in `R^k` (normalised Halton-mapped Gaussians).
fn sphere_directions(k: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let halton = |mut i: usize, b: usize| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    let mut out = Vec::with_capacity(count + 2 * k);
    for i in 0..k {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; k];
            e[i] = s;
            out.push(e);
        }
    }
    for i in 1..=count {
        let v: Vec<f64> = (0..k)
            .map(|j| {
                let u = halton(i, PRIMES[(2 * j) % 12]).clamp(1e-12, 1.0 - 1e-12);
                let w = halton(i, PRIMES[(2 * j + 1) % 12]);
                (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * w).cos()
            })
            .collect();
        let n = norm(&v);
        if n > 1e-12 {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Symmetric parabolic Hausdorff distance between `PB_r(center) ∩ V` and
/// `PB_r(center) ∩ W`.
pub fn plane_hausdorff_distance(
    v: &TimeSlicePlane,
    w: &TimeSlicePlane,
    r: f64,
    center: &SpaceTimePoint,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", "radius must be positive"));
    }
    let dv = ball_disk(v, center, r).ok_or(Error::Empty("ball does not meet the first plane"))?;
    let dw = ball_disk(w, center, r).ok_or(Error::Empty("ball does not meet the second plane"))?;
    Ok(dv.sup_distance_to(&dw).max(dw.sup_distance_to(&dv)))
}

/// Both one-sided distances between a cloud and a plane inside a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPlaneDistance {
    /// `sup` over cloud points of the distance to the plane disk.
    pub cloud_to_plane: f64,
    /// `sup` over plane samples of the distance to the cloud.
    pub plane_to_cloud: f64,
    /// Covering radius of the plane sampling grid; `plane_to_cloud` is exact
    /// up to this amount.
    pub sampling_gap: f64,
}

impl CloudPlaneDistance {
    pub fn hausdorff(&self) -> f64 {
        self.cloud_to_plane.max(self.plane_to_cloud)
    }
}

/// Two-sided parabolic Hausdorff distance between `PB_r(center) ∩ S` and
/// `PB_r(center) ∩ V`, with the plane disk sampled on a grid of spacing `h`.
pub fn cloud_plane_hausdorff(
    cloud: &PointCloud,
    plane: &TimeSlicePlane,
    r: f64,
    center: &SpaceTimePoint,
    h: f64,
) -> Result<CloudPlaneDistance> {
    if !(h > 0.0) {
        return Err(invalid("h", "grid spacing must be positive"));
    }
    let disk = ball_disk(plane, center, r).ok_or(Error::Empty("ball does not meet the plane"))?;
    let idx = cloud.indices_in_ball(center, r);
    if idx.is_empty() {
        return Err(Error::Empty("ball contains no cloud points"));
    }
    let cloud_to_plane = idx
        .iter()
        .map(|&i| {
            let p = cloud.point(i);
            disk.distance_from(&p.x, p.t)
        })
        .fold(0.0, f64::max);
    let k = plane.k();
    let samples = disk_grid(k, disk.radius, h);
    let t = plane.time();
    let plane_to_cloud = samples
        .iter()
        .map(|c| {
            let coords: Vec<f64> = disk.center.iter().zip(c).map(|(a, b)| a + b).collect();
            let x = plane.point_at(&coords);
            let q = SpaceTimePoint::new(x, t);
            idx.iter()
                .map(|&i| dist_p_unchecked(&q, cloud.point(i)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(CloudPlaneDistance {
        cloud_to_plane,
        plane_to_cloud,
        sampling_gap: 0.5 * h * (k as f64).sqrt(),
    })
}

/// Offsets of a cubic grid of spacing `h` inside the closed `k`-disk of radius `rho`.
fn disk_grid(k: usize, rho: f64, h: f64) -> Vec<Vec<f64>> {
    let m = (rho / h).floor() as i64;
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-m..=m).map(move |i| {
                    let mut w = v.clone();
                    w.push(i as f64 * h);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| norm(v) <= rho);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin(dim: usize) -> SpaceTimePoint {
        SpaceTimePoint::origin(dim)
    }

    fn line(angle: f64) -> TimeSlicePlane {
        TimeSlicePlane::new(origin(2), vec![vec![angle.cos(), angle.sin()]]).unwrap()
    }

    #[test]
    fn projection_examples() {
        let v = line(0.0);
        let p = SpaceTimePoint::new(vec![1.0, 1.0], 0.0);
        let pr = v.project(&p).unwrap();
        assert!((pr.tangential[0] - 1.0).abs() < 1e-15);
        assert!((pr.normal[0]).abs() < 1e-15 && (pr.normal[1] - 1.0).abs() < 1e-15);
        assert_eq!(pr.time_offset, 0.0);
        let on = SpaceTimePoint::new(vec![-3.0, 0.0], 0.0);
        let pr = v.project(&on).unwrap();
        assert!(norm(&pr.normal) < 1e-15);
    }

    #[test]
    fn gram_schmidt_rejects_dependent_directions() {
        let err = TimeSlicePlane::new(origin(3), vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]);
        assert!(err.is_err());
        let p = TimeSlicePlane::new(origin(3), vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]).unwrap();
        assert!(p.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn tube_constant_of_lines() {
        let v = line(0.0);
        assert!(one_sided_tube_constant(&v, &v, 1.0).unwrap() < 1e-15);
        let th = 0.3;
        let w = line(th);
        let a = one_sided_tube_constant(&v, &w, 1.0).unwrap();
        let b = one_sided_tube_constant(&w, &v, 1.0).unwrap();
        assert!((a - th.sin()).abs() < 1e-12);
        assert!((b - th.sin()).abs() < 1e-12);
    }

    #[test]
    fn tube_constant_with_offset_and_time() {
        // parallel lines at distance 0.5: spatial sup 0.5 for any r
        let v = line(0.0);
        let w = TimeSlicePlane::new(SpaceTimePoint::new(vec![0.0, 0.5], 0.0), vec![vec![1.0, 0.0]]).unwrap();
        assert!((one_sided_tube_constant(&v, &w, 2.0).unwrap() - 0.25).abs() < 1e-12);
        let later = w.translated_to(SpaceTimePoint::new(vec![0.0, 0.0], 1.0));
        assert!((one_sided_tube_constant(&v, &later, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tube_constant_hard_case() {
        // 2-disk in the xy-plane against the x-axis lifted to height z = 0.5:
        // the linear term vanishes and the maximiser sits on the y-axis.
        let v = TimeSlicePlane::coordinate(origin(3), &[0, 1]).unwrap();
        let w = TimeSlicePlane::coordinate(SpaceTimePoint::new(vec![0.0, 0.0, 0.5], 0.0), &[0]).unwrap();
        let r = 0.7;
        let got = one_sided_tube_constant(&v, &w, r).unwrap();
        assert!((got - (r * r + 0.25f64).sqrt() / r).abs() < 1e-12);
    }

    #[test]
    fn symmetry_check_distinguishes_errors() {
        let v = line(0.0);
        let p3 = TimeSlicePlane::new(origin(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            plane_symmetry_check(&v, &p3, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            plane_symmetry_check(&v, &v, 0.0).unwrap(),
            SymmetryOutcome::Holds { .. }
        ));
        let w = line(0.4);
        match plane_symmetry_check(&v, &w, 0.4f64.sin() + 1e-15).unwrap() {
            SymmetryOutcome::Holds { forward, backward } => {
                assert!((forward - backward).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            plane_symmetry_check(&v, &w, 0.1).unwrap(),
            SymmetryOutcome::NotApplicable { .. }
        ));
    }

    #[test]
    fn hausdorff_of_parallel_lines() {
        let v = line(0.0);
        let w = TimeSlicePlane::new(SpaceTimePoint::new(vec![0.0, 0.3], 0.0), vec![vec![1.0, 0.0]]).unwrap();
        let d = plane_hausdorff_distance(&v, &w, 1.0, &origin(2)).unwrap();
        // disks: [-1,1] and [-sqrt(0.91), sqrt(0.91)] at height 0.3
        let oracle = (0.09 + (1.0 - 0.91f64.sqrt()).powi(2)).sqrt();
        assert!((d - oracle).abs() < 1e-12, "{d} vs {oracle}");
        assert!(plane_hausdorff_distance(&v, &v, 1.0, &origin(2)).unwrap() < 1e-15);
    }

    #[test]
    fn hausdorff_of_orthogonal_two_planes() {
        let v = TimeSlicePlane::coordinate(origin(3), &[0, 1]).unwrap();
        let w = TimeSlicePlane::coordinate(SpaceTimePoint::new(vec![1.0, 0.0, 0.0], 0.0), &[0, 2]).unwrap();
        let d = plane_hausdorff_distance(&v, &w, 1.0, &origin(3)).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let v = line(0.0);
        let far = v.translated_to(SpaceTimePoint::new(vec![0.0, 5.0], 0.0));
        assert!(plane_hausdorff_distance(&v, &far, 1.0, &origin(2)).is_err());
    }

    #[test]
    fn cloud_plane_distance_of_samples() {
        let pts: Vec<_> = (-100..=100)
            .map(|i| SpaceTimePoint::new(vec![i as f64 * 0.01, 0.0], 0.0))
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let d = cloud_plane_hausdorff(&c, &line(0.0), 0.5, &origin(2), 0.001).unwrap();
        assert!(d.cloud_to_plane < 1e-15);
        // the open ball drops the samples at |x| = 0.5
        assert!(d.plane_to_cloud <= 0.01 + 1e-12);
    }

    #[test]
    fn plane_json_round_trip_validates() {
        let p = TimeSlicePlane::coordinate(SpaceTimePoint::new(vec![1.0, 2.0, 3.0], 0.5), &[1]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"directions\""));
        let back: TimeSlicePlane = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"base":{"x":[0,0],"t":0},"directions":[[1,0],[2,0]]}"#;
        assert!(serde_json::from_str::<TimeSlicePlane>(bad).is_err());
    }
}
