use serde::{Deserialize, Serialize};

use super::optimize::nelder_mead;
use super::{sphere_area, Descriptor, WeightedHypersurface};
use crate::error::{invalid, Error, Result};
use crate::vecops::{axpy, unit};

/// A flow of hypersurfaces that can be queried for its time slices.
pub trait SurfaceFlow {
    /// Dimension `n` of the evolving hypersurfaces.
    fn dim(&self) -> usize;

    /// The time slice `M_t`; fails with [`Error::MissingSnapshot`] when the
    /// flow has no surface at `t`.
    fn surface_at(&self, t: f64) -> Result<WeightedHypersurface>;

    /// Times at which a discretised flow stores surfaces; `None` for flows
    /// available at every time.
    fn snapshot_times(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Geometric grid of backward scales `τ` used for densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub tau_max: f64,
    pub tau_min: f64,
    pub count: usize,
    /// Extrapolation corrections above this are flagged.
    pub residual_threshold: f64,
}

impl Default for DensityGrid {
    fn default() -> Self {
        Self {
            tau_max: 1e-2,
            tau_min: 1e-5,
            count: 16,
            residual_threshold: 0.02,
        }
    }
}

/// Limit of `F_{x,τ}(M_{t−τ})` as `τ → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    #[serde(with = "crate::io::ext_f64")]
    pub value: f64,
    /// Scales used, decreasing.
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Distance between the extrapolated limit and the finest sampled value.
    #[serde(with = "crate::io::ext_f64")]
    pub residual: f64,
    pub flagged: bool,
}

fn backward_scales(flow: &dyn SurfaceFlow, t: f64, grid: &DensityGrid) -> Result<Vec<f64>> {
    if !(grid.tau_max > grid.tau_min && grid.tau_min > 0.0) || grid.count < 3 {
        return Err(invalid("grid", "need 0 < tau_min < tau_max and at least 3 scales"));
    }
    let mut taus: Vec<f64> = match flow.snapshot_times() {
        Some(times) => times
            .into_iter()
            .map(|s| t - s)
            .filter(|&tau| tau >= grid.tau_min * (1.0 - 1e-12) && tau <= grid.tau_max * (1.0 + 1e-12))
            .collect(),
        None => (0..grid.count)
            .map(|i| grid.tau_max * (grid.tau_min / grid.tau_max).powf(i as f64 / (grid.count - 1) as f64))
            .collect(),
    };
    taus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    taus.dedup();
    if taus.len() < 3 {
        return Err(Error::Unresolved(format!(
            "only {} snapshots in the density window before t = {t}",
            taus.len()
        )));
    }
    Ok(taus)
}

/// Gaussian density at `(x, t)`: `F_{x,τ}(M_{t−τ})` on the grid, extrapolated
/// linearly in `τ` from the three finest scales.
pub fn gaussian_density(flow: &dyn SurfaceFlow, x: &[f64], t: f64, grid: &DensityGrid) -> Result<DensityEstimate> {
    let taus = backward_scales(flow, t, grid)?;
    let values = taus
        .iter()
        .map(|&tau| flow.surface_at(t - tau)?.f_functional(x, tau))
        .collect::<Result<Vec<_>>>()?;
    let k = taus.len();
    let xs = &taus[k - 3..];
    let ys = &values[k - 3..];
    let (_, intercept, _) = crate::spacetime::least_squares(xs, ys);
    let finest = values[k - 1];
    let residual = (intercept - finest).abs();
    Ok(DensityEstimate {
        value: intercept,
        taus,
        values,
        residual,
        flagged: residual > grid.residual_threshold,
    })
}

/// `F` values along a backward-scale list and the monotonicity violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Increasing.
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// `(index, amount)` where `F(τ_i) > F(τ_{i+1}) + tol`.
    pub violations: Vec<(usize, f64)>,
    /// Largest decrease `F(τ_i) − F(τ_{i+1})` seen (may be negative).
    pub max_decrease: f64,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `τ -> F_{x,τ}(M_{t−τ})` is non-decreasing within `tol`.
pub fn monotonicity_check(
    flow: &dyn SurfaceFlow,
    x: &[f64],
    t: f64,
    taus: &[f64],
    tol: f64,
) -> Result<MonotonicityReport> {
    if taus.is_empty() {
        return Err(Error::Empty("scale list"));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values = taus
        .iter()
        .map(|&tau| flow.surface_at(t - tau)?.f_functional(x, tau))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut max_decrease = f64::NEG_INFINITY;
    for i in 0..values.len().saturating_sub(1) {
        let dec = values[i] - values[i + 1];
        max_decrease = max_decrease.max(dec);
        if dec > tol {
            violations.push((i, dec));
        }
    }
    Ok(MonotonicityReport {
        taus,
        values,
        violations,
        max_decrease,
    })
}

/// `Θ_k = F_{0,1}(R^k × S^{n−k}_{sqrt(2(n−k))})`; the Euclidean factor
/// contributes 1, the sphere factor
/// `(4π)^{−m/2} |S^m| (2m)^{m/2} e^{−m/2}` with `m = n − k`.
pub fn cylinder_density(n: usize, k: usize) -> Result<f64> {
    if k >= n {
        return Err(invalid("k", "need k < n"));
    }
    let m = (n - k) as f64;
    Ok((4.0 * std::f64::consts::PI).powf(-m / 2.0) * sphere_area(n - k) * (2.0 * m).powf(m / 2.0) * (-m / 2.0).exp())
}

/// `[Θ_0, …, Θ_{n−1}]`, checked to be strictly increasing and above 1.
pub fn cylinder_density_table(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("n", "need n >= 1"));
    }
    let table = (0..n).map(|k| cylinder_density(n, k)).collect::<Result<Vec<_>>>()?;
    if table[0] <= 1.0 || table.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::LemmaViolated(format!(
            "density ladder is not strictly increasing above 1: {table:?}"
        )));
    }
    Ok(table)
}

/// Result of the entropy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub center: Vec<f64>,
    pub tau: f64,
    /// Spread of the refined values over the starts.
    pub spread: f64,
}

/// Search space for the centre: a base point plus reduced coordinates along
/// fixed directions, with a range per coordinate.
struct CenterSpace {
    base: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    ranges: Vec<(f64, f64)>,
    /// Reduced coordinates that are radii (symmetric under sign).
    radial: Vec<bool>,
    tau_range: (f64, f64),
}

impl CenterSpace {
    fn center(&self, p: &[f64]) -> Vec<f64> {
        let mut c = self.base.clone();
        for ((d, v), r) in self.dirs.iter().zip(p).zip(&self.radial) {
            let v = if *r { v.abs() } else { *v };
            axpy(&mut c, v, d);
        }
        c
    }
}

fn center_space(s: &WeightedHypersurface) -> Result<CenterSpace> {
    let d = s.ambient_dim();
    Ok(match s.descriptor() {
        Some(Descriptor::Plane { point, normal }) => CenterSpace {
            base: point.clone(),
            dirs: vec![normal.clone()],
            ranges: vec![(-1.0, 1.0)],
            radial: vec![false],
            tau_range: (1e-2, 1e2),
        },
        Some(Descriptor::Sphere { center, radius }) => CenterSpace {
            base: center.clone(),
            dirs: vec![unit(0, d)],
            ranges: vec![(0.0, 2.0 * radius)],
            radial: vec![true],
            tau_range: ((0.01 * radius).powi(2), (3.0 * radius).powi(2)),
        },
        Some(Descriptor::Cylinder {
            center, axes, radius, ..
        }) => {
            let probe = (0..d)
                .map(|i| unit(i, d))
                .find(|e| axes.iter().all(|a| crate::vecops::dot(a, e).abs() < 0.5))
                .unwrap_or_else(|| unit(d - 1, d));
            let mut perp = probe;
            for a in axes {
                let s = -crate::vecops::dot(a, &perp);
                axpy(&mut perp, s, a);
            }
            let nn = crate::vecops::norm(&perp);
            CenterSpace {
                base: center.clone(),
                dirs: vec![perp.iter().map(|v| v / nn).collect()],
                ranges: vec![(0.0, 2.0 * radius)],
                radial: vec![true],
                tau_range: ((0.01 * radius).powi(2), (3.0 * radius).powi(2)),
            }
        }
        Some(Descriptor::Revolution { .. }) => {
            let (lo, hi) = s.bounding_box();
            let ext = (hi[0] - lo[0]).max(hi[1]);
            CenterSpace {
                base: vec![0.0; d],
                dirs: vec![unit(0, d), unit(1, d)],
                ranges: vec![(lo[0], hi[0]), (0.0, hi[1])],
                radial: vec![false, true],
                tau_range: ((0.005 * ext).powi(2), ext.powi(2)),
            }
        }
        None => {
            if d > 4 {
                return Err(invalid(
                    "surface",
                    "sampled entropy search supports ambient dimension <= 4",
                ));
            }
            let (lo, hi) = s.bounding_box();
            let ext = (0..d).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
            if !(ext > 0.0) {
                return Err(Error::DegenerateFit("surface samples have no extent".into()));
            }
            CenterSpace {
                base: vec![0.0; d],
                dirs: (0..d).map(|i| unit(i, d)).collect(),
                ranges: (0..d).map(|i| (lo[i], hi[i])).collect(),
                radial: vec![false; d],
                tau_range: ((0.005 * ext).powi(2), ext.powi(2)),
            }
        }
    })
}

/// Entropy `sup_{x,τ} F_{x,τ}(Σ)` by a coarse grid over centres and
/// log-scales followed by Nelder–Mead refinement from the five best cells.
pub fn entropy(s: &WeightedHypersurface) -> Result<EntropyEstimate> {
    let space = center_space(s)?;
    let per_axis = if space.dirs.len() <= 2 { 13 } else { 7 };
    let tau_count = 14;
    let (tlo, thi) = space.tau_range;
    let mut cells: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx = vec![0usize; space.dirs.len()];
    loop {
        let p: Vec<f64> = idx
            .iter()
            .zip(&space.ranges)
            .map(|(&i, &(a, b))| a + (b - a) * i as f64 / (per_axis - 1) as f64)
            .collect();
        let c = space.center(&p);
        for k in 0..tau_count {
            let lt = tlo.ln() + (thi / tlo).ln() * k as f64 / (tau_count - 1) as f64;
            let v = s.f_functional(&c, lt.exp())?;
            let mut q = p.clone();
            q.push(lt);
            cells.push((q, v));
        }
        let mut a = 0;
        loop {
            if a == idx.len() {
                break;
            }
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == idx.len() {
            break;
        }
    }
    cells.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut step: Vec<f64> = space
        .ranges
        .iter()
        .map(|(a, b)| ((b - a) / (per_axis - 1) as f64).max(1e-3))
        .collect();
    step.push((thi / tlo).ln() / (tau_count - 1) as f64);
    let mut refined = Vec::new();
    for (start, _) in cells.iter().take(5) {
        let (p, v) = nelder_mead(
            |q| {
                let c = space.center(&q[..q.len() - 1]);
                -s.f_functional(&c, q[q.len() - 1].exp()).unwrap_or(0.0)
            },
            start,
            &step,
            1e-13,
            400,
        );
        refined.push((p, -v));
    }
    let best = refined
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .clone();
    let worst = refined.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let k = best.0.len() - 1;
    Ok(EntropyEstimate {
        value: best.1,
        center: space.center(&best.0[..k]),
        tau: best.0[k].exp(),
        spread: best.1 - worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn ladder_for_surfaces() {
        let t = cylinder_density_table(2).unwrap();
        assert!((t[0] - 4.0 / E).abs() < 1e-14);
        assert!((t[1] - (2.0 * PI / E).sqrt()).abs() < 1e-14);
        let c = cylinder_density_table(1).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0] - (2.0 * PI / E).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_entropy_at_shrinker_scale() {
        let s = WeightedHypersurface::sphere(vec![0.0; 3], 2.0).unwrap();
        let e = entropy(&s).unwrap();
        assert!((e.value - 4.0 / E).abs() < 1e-9);
        assert!((e.tau - 1.0).abs() < 1e-3);
        assert!(crate::vecops::norm(&e.center) < 1e-3);
    }

    #[test]
    fn plane_entropy_is_one() {
        let p = WeightedHypersurface::plane(vec![0.0; 3], vec![1.0, 1.0, 0.0]).unwrap();
        assert!((entropy(&p).unwrap().value - 1.0).abs() < 1e-12);
    }
}
