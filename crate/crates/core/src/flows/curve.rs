//! Polyline solver for the profile curve of a surface of revolution about
//! the first axis. Vertices move with the mean curvature of the revolved
//! surface: profile curvature plus `n − 1` times the rotational curvature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::graph::{graph_phase, Boundary, GraphOutcome};
use super::{EventKind, Flow, FlowSnapshot, RawEvent, Symmetry};
use crate::error::{invalid, Error, Result};
use crate::gaussian::WeightedHypersurface;

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Controls {
    /// Dimension of the evolving hypersurface.
    pub n: usize,
    pub t_end: f64,
    /// Largest vertex spacing.
    pub h_max: f64,
    /// Spacing as a fraction of the local length scale (curvature radius,
    /// or distance to the axis over the normal's radial component).
    pub curvature_resolution: f64,
    /// Time step as a fraction of `h_min^2 / n`.
    pub cfl: f64,
    /// A neck pinches once its radius drops below this fraction of its
    /// radius when first tracked.
    pub pinch_ratio: f64,
    /// Same for components shrinking to a point.
    pub extinction_ratio: f64,
    /// A snapshot is stored whenever a tracked feature shrinks by this factor.
    pub snapshot_ratio: f64,
    /// Regular snapshot spacing in time.
    pub snapshot_interval: f64,
    pub max_steps: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            n: 2,
            t_end: 10.0,
            h_max: 0.05,
            curvature_resolution: 0.15,
            cfl: 0.2,
            pinch_ratio: 1e-3,
            extinction_ratio: 1e-3,
            snapshot_ratio: 0.85,
            snapshot_interval: 0.02,
            max_steps: 20_000_000,
        }
    }
}

impl Controls {
    /// Same controls with the mesh halved (time steps follow the mesh).
    pub fn refined(&self) -> Self {
        Self {
            h_max: 0.5 * self.h_max,
            curvature_resolution: 0.5 * self.curvature_resolution,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be positive and finite"))
            }
        };
        if self.n == 0 {
            return Err(invalid("n", "hypersurface dimension must be positive"));
        }
        pos("t_end", self.t_end)?;
        pos("h_max", self.h_max)?;
        pos("curvature_resolution", self.curvature_resolution)?;
        pos("cfl", self.cfl)?;
        pos("snapshot_interval", self.snapshot_interval)?;
        for (name, v) in [
            ("pinch_ratio", self.pinch_ratio),
            ("extinction_ratio", self.extinction_ratio),
            ("snapshot_ratio", self.snapshot_ratio),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, "must lie in (0, 1)"));
            }
        }
        if self.cfl > 0.5 {
            return Err(invalid("cfl", "explicit stepping needs cfl <= 0.5"));
        }
        Ok(())
    }
}

/// Initial data for [`rotsym_mcf_run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// `r = u(x)` on a uniform grid over `[a, b]`. For periodic data the
    /// grid excludes `b`. Dirichlet ends with `u = 0` close the surface.
    Graph {
        a: f64,
        b: f64,
        u: Vec<f64>,
        boundary: Boundary,
    },
    /// Polyline `(z, r)` starting and ending on the axis.
    Capped { points: Vec<[f64; 2]> },
}

impl InitialProfile {
    /// Closed profile of two bulbs joined by a neck:
    /// `r(s) = L sqrt(1 − s^2) (neck + bulb (s − offset)^2)` for
    /// `z = L s ∈ [−L, L]`. A nonzero `offset` makes the bulbs unequal.
    pub fn dumbbell(half_length: f64, neck: f64, bulb: f64, offset: f64, samples: usize) -> Result<Self> {
        if !(half_length > 0.0 && neck > 0.0 && bulb > 0.0) || samples < 8 {
            return Err(invalid("dumbbell", "need positive sizes and at least 8 samples"));
        }
        if offset.abs() >= 0.5 {
            return Err(invalid("offset", "neck offset must stay inside (-0.5, 0.5)"));
        }
        let points = (0..=samples)
            .map(|i| {
                // Cosine spacing concentrates samples at the caps.
                let th = std::f64::consts::PI * (1.0 - i as f64 / samples as f64);
                let s = th.cos();
                let r = if i == 0 || i == samples {
                    0.0
                } else {
                    (1.0 - s * s).max(0.0).sqrt() * (neck + bulb * (s - offset).powi(2))
                };
                [half_length * s, half_length * r]
            })
            .collect();
        Ok(InitialProfile::Capped { points })
    }

    /// `u = sqrt(R^2 − x^2)` on `[−R, R]`: a round sphere of radius `R`.
    pub fn sphere_cap(radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || samples < 4 {
            return Err(invalid("radius", "need a positive radius and at least 4 samples"));
        }
        let points = (0..=samples)
            .map(|i| {
                let th = std::f64::consts::PI * (1.0 - i as f64 / samples as f64);
                let r = if i == 0 || i == samples { 0.0 } else { radius * th.sin() };
                [radius * th.cos(), r]
            })
            .collect();
        Ok(InitialProfile::Capped { points })
    }

    /// `u ≡ radius` on a periodic interval of the given length.
    pub fn periodic_cylinder(radius: f64, length: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0 && length > 0.0) || samples < 4 {
            return Err(invalid("radius", "need positive sizes and at least 4 samples"));
        }
        Ok(InitialProfile::Graph {
            a: -0.5 * length,
            b: 0.5 * length,
            u: vec![radius; samples],
            boundary: Boundary::Periodic,
        })
    }
}

/// Closed circle of radius `tube` about `(z, r) = (0, center)`.
pub fn torus_profile(center: f64, tube: f64, samples: usize) -> Result<Vec<[f64; 2]>> {
    if !(center > 0.0 && tube > 0.0) || samples < 8 {
        return Err(invalid("tube", "need positive radii and at least 8 samples"));
    }
    Ok((0..samples)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            [tube * th.sin(), center + tube * th.cos()]
        })
        .collect())
}

/// Evolves a surface of revolution, recording snapshots, neckpinches and
/// extinctions, and continues each component after a pinch.
pub fn rotsym_mcf_run(initial: &InitialProfile, controls: &Controls) -> Result<Flow> {
    controls.validate()?;
    let mut engine = Engine::new(controls.clone());
    match initial {
        InitialProfile::Capped { points } => {
            check_open(points, true)?;
            engine.add(Piece::new(points.clone(), false, [End::Axis, End::Axis]));
        }
        InitialProfile::Graph { a, b, u, boundary } => {
            if !(b > a) || u.len() < 4 {
                return Err(invalid("u", "need b > a and at least 4 samples"));
            }
            if u.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(invalid("u", "profile values must be finite and non-negative"));
            }
            match boundary {
                Boundary::Periodic => {
                    if u.iter().any(|v| *v <= 0.0) {
                        return Err(invalid("u", "periodic data must stay positive"));
                    }
                    let out = graph_phase(*a, *b, u, Boundary::Periodic, controls, &mut engine.flow)?;
                    engine.t = out.t;
                    engine.next_global = out.t + controls.snapshot_interval;
                    match out.outcome {
                        GraphOutcome::Finished => {
                            engine.flow.measure_entropy()?;
                            return Ok(engine.flow);
                        }
                        GraphOutcome::Pinched(points) => {
                            engine.add(Piece::new(points, false, [End::Axis, End::Axis]));
                        }
                    }
                }
                Boundary::Dirichlet => {
                    let h = (b - a) / (u.len() - 1) as f64;
                    let points: Vec<[f64; 2]> = u.iter().enumerate().map(|(i, v)| [a + i as f64 * h, *v]).collect();
                    let ends = [u[0], u[u.len() - 1]].map(|v| if v == 0.0 { End::Axis } else { End::Fixed });
                    if u[1..u.len() - 1].iter().any(|v| *v <= 0.0) {
                        return Err(invalid("u", "interior values must be positive"));
                    }
                    engine.add(Piece::new(points, false, ends));
                }
            }
        }
    }
    engine.run()?;
    Ok(engine.flow)
}

/// Evolves a closed profile curve in the half-plane `r > 0` (a torus of
/// revolution) until it collapses to a point, i.e. the surface collapses to
/// a circle.
pub fn rotsym_torus_run(points: &[[f64; 2]], controls: &Controls) -> Result<Flow> {
    controls.validate()?;
    if points.len() < 8 {
        return Err(invalid("points", "need at least 8 profile vertices"));
    }
    if points
        .iter()
        .any(|p| !(p[1] > 0.0) || !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(invalid("points", "closed profile must stay in r > 0"));
    }
    if let Some(i) = polygon_self_intersection(points) {
        return Err(invalid("points", format!("profile self-intersects near vertex {i}")));
    }
    let mut engine = Engine::new(controls.clone());
    engine.add(Piece::new(points.to_vec(), true, [End::Axis, End::Axis]));
    engine.run()?;
    Ok(engine.flow)
}

fn check_open(points: &[[f64; 2]], capped: bool) -> Result<()> {
    if points.len() < 4 {
        return Err(invalid("points", "need at least 4 profile vertices"));
    }
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite() || p[1] < 0.0)
    {
        return Err(invalid("points", "profile must be finite with r >= 0"));
    }
    let m = points.len() - 1;
    if capped && (points[0][1] != 0.0 || points[m][1] != 0.0) {
        return Err(invalid("points", "capped profile must start and end on the axis"));
    }
    if points[1..m].iter().any(|p| p[1] <= 0.0) {
        return Err(invalid("points", "interior vertices must lie off the axis"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Axis,
    Fixed,
}

#[derive(Debug, Clone)]
pub(super) struct Feature {
    pub(super) reference: f64,
    pub(super) last_snap: f64,
    size: f64,
    /// `(t, size^2)`, thinned to 2% decrements.
    history: Vec<(f64, f64)>,
}

impl Feature {
    pub(super) fn new(size: f64, t: f64) -> Self {
        Self {
            reference: size,
            last_snap: size,
            size,
            history: vec![(t, size * size)],
        }
    }

    pub(super) fn record(&mut self, t: f64, size: f64) {
        self.size = size;
        let s2 = size * size;
        if self.history.last().is_none_or(|&(_, last)| s2 < 0.98 * last) {
            self.history.push((t, s2));
        }
    }

    pub(super) fn wants_snapshot(&self, ratio: f64) -> bool {
        self.size < ratio * self.last_snap
    }

    /// Time at which `size^2` reaches zero: quadratic fit over the tail
    /// where `size^2` is within a factor 10 of its last value, with the
    /// linear fit as a cross-check.
    pub(super) fn vanishing_time(&self, t_now: f64) -> (f64, f64) {
        let last = self.history.last().map(|h| h.1).unwrap_or(0.0);
        let tail: Vec<(f64, f64)> = self
            .history
            .iter()
            .copied()
            .filter(|&(_, s2)| s2 <= 10.0 * last)
            .collect();
        if tail.len() < 3 {
            return (t_now, 0.0);
        }
        let ts: Vec<f64> = tail.iter().map(|p| p.0 - t_now).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
        let (b, a, _) = crate::spacetime::least_squares(&ts, &ys);
        let t_lin = if b < 0.0 { -a / b } else { 0.0 };
        let t_quad = quadratic_root(&ts, &ys).unwrap_or(t_lin);
        let t0 = t_quad.max(0.0);
        (t_now + t0, (t_quad - t_lin).abs())
    }
}

/// Root closest to the origin of the least-squares parabola, if it lies
/// ahead.
fn quadratic_root(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let scale = ts.iter().map(|t| t.abs()).fold(0.0, f64::max).max(1e-300);
    let a = DMatrix::from_fn(ts.len(), 3, |i, j| (ts[i] / scale).powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let c = a.svd(true, true).solve(&y, 1e-14).ok()?;
    let (c0, c1, c2) = (c[0], c[1], c[2]);
    let roots: Vec<f64> = if c2.abs() < 1e-14 * c1.abs() {
        vec![-c0 / c1]
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        vec![q / c2, c0 / q]
    };
    roots
        .into_iter()
        .filter(|r| r.is_finite() && *r >= -1e-9)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .map(|r| r * scale)
}

#[derive(Debug, Clone)]
struct Piece {
    pts: Vec<[f64; 2]>,
    closed: bool,
    ends: [End; 2],
    shape: Option<Feature>,
    neck: Option<Feature>,
    /// Smallest distance to the axis at creation (closed pieces).
    initial_min_r: f64,
}

impl Piece {
    fn new(pts: Vec<[f64; 2]>, closed: bool, ends: [End; 2]) -> Self {
        let initial_min_r = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        Self {
            pts,
            closed,
            ends,
            shape: None,
            neck: None,
            initial_min_r,
        }
    }

    fn capped(&self) -> bool {
        !self.closed && self.ends == [End::Axis, End::Axis]
    }

    fn shape_size(&self) -> f64 {
        if self.closed {
            (shoelace(&self.pts).abs() / std::f64::consts::PI).sqrt()
        } else {
            self.pts.iter().map(|p| p[1]).fold(0.0, f64::max)
        }
    }

    fn len(&self) -> usize {
        self.pts.len()
    }

    /// Neighbours `(prev, next)` of vertex `i`, with ghost points at ends.
    fn neighbours(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let m = self.len();
        if self.closed {
            return (self.pts[(i + m - 1) % m], self.pts[(i + 1) % m]);
        }
        let prev = if i == 0 { self.ghost(0) } else { self.pts[i - 1] };
        let next = if i == m - 1 { self.ghost(1) } else { self.pts[i + 1] };
        (prev, next)
    }

    fn ghost(&self, side: usize) -> [f64; 2] {
        let m = self.len();
        let (e, q) = if side == 0 {
            (self.pts[0], self.pts[1])
        } else {
            (self.pts[m - 1], self.pts[m - 2])
        };
        match self.ends[side] {
            End::Axis => [q[0], -q[1]],
            End::Fixed => [2.0 * e[0] - q[0], 2.0 * e[1] - q[1]],
        }
    }

    fn is_end(&self, i: usize) -> Option<usize> {
        if self.closed {
            None
        } else if i == 0 {
            Some(0)
        } else if i == self.len() - 1 {
            Some(1)
        } else {
            None
        }
    }

    /// Curvature vectors of the profile (ghosts at the ends).
    fn curvatures(&self) -> Vec<[f64; 2]> {
        (0..self.len())
            .map(|i| {
                let (a, c) = self.neighbours(i);
                circumcurvature(a, self.pts[i], c)
            })
            .collect()
    }

    /// Velocity of every vertex.
    fn velocities(&self, n: usize) -> Result<Vec<[f64; 2]>> {
        let k = self.curvatures();
        let nn = n as f64;
        let mut v = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            match self.is_end(i).map(|s| self.ends[s]) {
                Some(End::Fixed) => v.push([0.0, 0.0]),
                Some(End::Axis) => v.push([nn * k[i][0], 0.0]),
                None => {
                    let p = self.pts[i];
                    if !(p[1] > 0.0) {
                        return Err(Error::Unresolved(format!(
                            "profile vertex reached the axis away from a pinch at z = {}",
                            p[0]
                        )));
                    }
                    let (a, c) = self.neighbours(i);
                    let nrm = unit_normal(a, c);
                    let speed = k[i][0] * nrm[0] + k[i][1] * nrm[1] - (nn - 1.0) * nrm[1] / p[1];
                    v.push([speed * nrm[0], speed * nrm[1]]);
                }
            }
        }
        Ok(v)
    }

    fn segment_lengths(&self) -> Vec<f64> {
        let m = self.len();
        let count = if self.closed { m } else { m - 1 };
        (0..count).map(|i| dist2d(self.pts[i], self.pts[(i + 1) % m])).collect()
    }

    /// Target spacing at each vertex.
    fn targets(&self, c: &Controls) -> Vec<f64> {
        let k = self.curvatures();
        let m = self.len();
        let raw: Vec<f64> = (0..m)
            .map(|i| {
                let kap = (k[i][0].hypot(k[i][1]))
                    .max(k[self.wrap(i, -1)][0].hypot(k[self.wrap(i, -1)][1]))
                    .max(k[self.wrap(i, 1)][0].hypot(k[self.wrap(i, 1)][1]));
                let mut scale = if kap > 0.0 { 1.0 / kap } else { f64::INFINITY };
                let p = self.pts[i];
                if self.is_end(i).is_none() && c.n > 1 {
                    let (a, b) = self.neighbours(i);
                    let nr = unit_normal(a, b)[1].abs();
                    if nr > 1e-12 {
                        scale = scale.min(p[1] / nr);
                    }
                }
                (c.curvature_resolution * scale).clamp(1e-12, c.h_max)
            })
            .collect();
        // Grade so that neighbouring targets differ by at most 30% of the
        // spacing between them.
        let seg = self.segment_lengths();
        let mut t = raw;
        let passes = if self.closed { 2 } else { 1 };
        for _ in 0..passes {
            for i in 1..m {
                t[i] = t[i].min(t[i - 1] + 0.3 * seg[i - 1]);
            }
            if self.closed {
                t[0] = t[0].min(t[m - 1] + 0.3 * seg[m - 1]);
            }
            for i in (0..m - 1).rev() {
                t[i] = t[i].min(t[i + 1] + 0.3 * seg[i]);
            }
            if self.closed {
                t[m - 1] = t[m - 1].min(t[0] + 0.3 * seg[m - 1]);
            }
        }
        t
    }

    fn wrap(&self, i: usize, d: isize) -> usize {
        let m = self.len() as isize;
        let j = i as isize + d;
        if self.closed {
            j.rem_euclid(m) as usize
        } else {
            j.clamp(0, m - 1) as usize
        }
    }

    /// Whether spacings have drifted from their targets.
    fn needs_resample(&self, c: &Controls) -> bool {
        let t = self.targets(c);
        let seg = self.segment_lengths();
        let m = self.len();
        seg.iter().enumerate().any(|(i, &l)| {
            let target = 0.5 * (t[i] + t[(i + 1) % m]);
            l > 1.6 * target || l < 0.5 * target
        })
    }

    /// Redistributes vertices along a centripetal Catmull-Rom interpolant.
    fn resample(&mut self, c: &Controls) {
        let t = self.targets(c);
        let seg = self.segment_lengths();
        let m = self.len();
        let nseg = seg.len();
        let mut phi = vec![0.0; nseg + 1];
        for j in 0..nseg {
            phi[j + 1] = phi[j] + seg[j] * 0.5 * (1.0 / t[j] + 1.0 / t[(j + 1) % m]);
        }
        let total = phi[nseg];
        let min_count = if self.closed { 12 } else { 6 };
        let count = (total.ceil() as usize).max(min_count);
        let mut out = Vec::with_capacity(count + 1);
        let last = if self.closed { count } else { count + 1 };
        let mut j = 0;
        for k in 0..last {
            if !self.closed && k == 0 {
                out.push(self.pts[0]);
                continue;
            }
            if !self.closed && k == count {
                out.push(self.pts[m - 1]);
                continue;
            }
            let target = total * k as f64 / count as f64;
            while j + 1 < nseg && phi[j + 1] < target {
                j += 1;
            }
            let span = phi[j + 1] - phi[j];
            let u = if span > 0.0 {
                ((target - phi[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let p0 = self.point_ext(j as isize - 1);
            let p1 = self.point_ext(j as isize);
            let p2 = self.point_ext(j as isize + 1);
            let p3 = self.point_ext(j as isize + 2);
            let mut q = catmull_rom(p0, p1, p2, p3, u);
            if q[1] <= 0.0 {
                // Keep interior vertices off the axis.
                q[1] = (p1[1] + u * (p2[1] - p1[1])).abs().max(1e-300);
            }
            out.push(q);
        }
        self.pts = out;
    }

    /// Vertex `i`, with ghosts one past each end of an open curve.
    fn point_ext(&self, i: isize) -> [f64; 2] {
        let m = self.len() as isize;
        if self.closed {
            return self.pts[i.rem_euclid(m) as usize];
        }
        if i < 0 {
            self.ghost(0)
        } else if i >= m {
            self.ghost(1)
        } else {
            self.pts[i as usize]
        }
    }

    /// Smallest interior local minimum of `r` that both sides exceed by 50%,
    /// refined by a parabola through its neighbours: `(index, z, r)`.
    fn find_neck(&self) -> Option<(usize, f64, f64)> {
        if self.closed || self.len() < 5 {
            return None;
        }
        let r: Vec<f64> = self.pts.iter().map(|p| p[1]).collect();
        let m = r.len();
        let mut prefix = vec![0.0f64; m];
        let mut suffix = vec![0.0f64; m];
        for i in 1..m {
            prefix[i] = prefix[i - 1].max(r[i - 1]);
        }
        for i in (0..m - 1).rev() {
            suffix[i] = suffix[i + 1].max(r[i + 1]);
        }
        let mut best: Option<usize> = None;
        for i in 1..m - 1 {
            if r[i] <= r[i - 1]
                && r[i] <= r[i + 1]
                && prefix[i] >= 1.5 * r[i]
                && suffix[i] >= 1.5 * r[i]
                && best.is_none_or(|b| r[i] < r[b])
            {
                best = Some(i);
            }
        }
        let i = best?;
        let (a, b, c) = (self.pts[i - 1], self.pts[i], self.pts[i + 1]);
        let (z, rv) = parabola_vertex(a, b, c).unwrap_or((b[0], b[1]));
        Some((i, z, rv.min(b[1]).max(0.0)))
    }
}

fn dist2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn shoelace(p: &[[f64; 2]]) -> f64 {
    let m = p.len();
    0.5 * (0..m)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % m]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn centroid(p: &[[f64; 2]]) -> [f64; 2] {
    let m = p.len();
    let a = shoelace(p);
    if a.abs() < 1e-300 {
        let s = p.iter().fold([0.0, 0.0], |s, q| [s[0] + q[0], s[1] + q[1]]);
        return [s[0] / m as f64, s[1] / m as f64];
    }
    let mut c = [0.0, 0.0];
    for i in 0..m {
        let (u, v) = (p[i], p[(i + 1) % m]);
        let cr = u[0] * v[1] - v[0] * u[1];
        c[0] += (u[0] + v[0]) * cr;
        c[1] += (u[1] + v[1]) * cr;
    }
    [c[0] / (6.0 * a), c[1] / (6.0 * a)]
}

/// Curvature vector at `b` of the circle through `a, b, c` (zero when
/// collinear).
pub(crate) fn circumcurvature(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let u = [a[0] - b[0], a[1] - b[1]];
    let w = [c[0] - b[0], c[1] - b[1]];
    let d = 2.0 * (u[0] * w[1] - u[1] * w[0]);
    let uu = u[0] * u[0] + u[1] * u[1];
    let ww = w[0] * w[0] + w[1] * w[1];
    let o = [w[1] * uu - u[1] * ww, u[0] * ww - w[0] * uu];
    let den = o[0] * o[0] + o[1] * o[1];
    if den == 0.0 || d == 0.0 {
        return [0.0, 0.0];
    }
    [d * o[0] / den, d * o[1] / den]
}

fn unit_normal(a: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let t = [c[0] - a[0], c[1] - a[1]];
    let l = t[0].hypot(t[1]);
    [-t[1] / l, t[0] / l]
}

/// Vertex of the parabola `r(z)` through three points.
fn parabola_vertex(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<(f64, f64)> {
    let (x1, y1, x2, y2, x3, y3) = (a[0], a[1], b[0], b[1], c[0], c[1]);
    let den = (x1 - x2) * (x1 - x3) * (x2 - x3);
    if den == 0.0 {
        return None;
    }
    let aa = (x3 * (y2 - y1) + x2 * (y1 - y3) + x1 * (y3 - y2)) / den;
    let bb = (x3 * x3 * (y1 - y2) + x2 * x2 * (y3 - y1) + x1 * x1 * (y2 - y3)) / den;
    let cc = (x2 * x3 * (x2 - x3) * y1 + x3 * x1 * (x3 - x1) * y2 + x1 * x2 * (x1 - x2) * y3) / den;
    if !(aa > 0.0) {
        return None;
    }
    let z = -bb / (2.0 * aa);
    if z < x1.min(x3) || z > x1.max(x3) {
        return None;
    }
    Some((z, cc - bb * bb / (4.0 * aa)))
}

fn catmull_rom(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], u: f64) -> [f64; 2] {
    let knot = |a: [f64; 2], b: [f64; 2]| dist2d(a, b).sqrt().max(1e-150);
    let t0 = 0.0;
    let t1 = t0 + knot(p0, p1);
    let t2 = t1 + knot(p1, p2);
    let t3 = t2 + knot(p2, p3);
    let t = t1 + u * (t2 - t1);
    let lerp = |a: [f64; 2], b: [f64; 2], ta: f64, tb: f64| -> [f64; 2] {
        let s = (t - ta) / (tb - ta);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    };
    let a1 = lerp(p0, p1, t0, t1);
    let a2 = lerp(p1, p2, t1, t2);
    let a3 = lerp(p2, p3, t2, t3);
    let b1 = lerp(a1, a2, t0, t2);
    let b2 = lerp(a2, a3, t1, t3);
    lerp(b1, b2, t1, t2)
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// First vertex whose outgoing segment crosses a non-adjacent segment.
fn polygon_self_intersection(p: &[[f64; 2]]) -> Option<usize> {
    let m = p.len();
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_cross(p[i], p[(i + 1) % m], p[j], p[(j + 1) % m]) {
                return Some(i);
            }
        }
    }
    None
}

struct Engine {
    c: Controls,
    pieces: Vec<Piece>,
    t: f64,
    next_global: f64,
    /// Extra snapshot times after pinches, decreasing so the next is last.
    pending: Vec<f64>,
    steps: usize,
    flow: Flow,
}

impl Engine {
    fn new(c: Controls) -> Self {
        let flow = Flow::new(c.n, Symmetry::Rotational);
        Self {
            next_global: 0.0,
            pending: Vec::new(),
            c,
            pieces: Vec::new(),
            t: 0.0,
            steps: 0,
            flow,
        }
    }

    fn add(&mut self, mut p: Piece) {
        p.resample(&self.c);
        let size = p.shape_size();
        if p.capped() || p.closed {
            p.shape = Some(Feature::new(size, self.t));
        }
        if let Some((_, _, r)) = p.find_neck() {
            p.neck = Some(Feature::new(r, self.t));
        }
        self.pieces.push(p);
    }

    fn snapshot(&mut self, dt: f64) -> Result<()> {
        let mut profiles = Vec::new();
        let mut spacing = f64::INFINITY;
        for p in &self.pieces {
            let mut prof = p.pts.clone();
            if p.closed {
                prof.push(p.pts[0]);
            }
            spacing = spacing.min(p.segment_lengths().into_iter().fold(f64::INFINITY, f64::min));
            profiles.push(prof);
        }
        if profiles.is_empty() {
            return Ok(());
        }
        if self.flow.snapshots.last().is_some_and(|s| s.t >= self.t) {
            return Ok(());
        }
        self.flow.snapshots.push(FlowSnapshot {
            t: self.t,
            surface: WeightedHypersurface::revolution(self.c.n, profiles)?,
            spacing,
            dt,
        });
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let fresh = self.flow.snapshots.is_empty();
        if fresh {
            self.snapshot(0.0)?;
            self.next_global = self.c.snapshot_interval;
        }
        let n = self.c.n;
        let mut since_check = 0usize;
        while self.t < self.c.t_end && !self.pieces.is_empty() {
            self.steps += 1;
            if self.steps > self.c.max_steps {
                return Err(Error::Unresolved(format!(
                    "step budget exhausted at t = {} without an event",
                    self.t
                )));
            }
            let mut vel = Vec::with_capacity(self.pieces.len());
            let mut h2 = f64::INFINITY;
            for p in &self.pieces {
                vel.push(p.velocities(n)?);
                let hmin = p.segment_lengths().into_iter().fold(f64::INFINITY, f64::min);
                h2 = h2.min(hmin * hmin);
                let rmin = (0..p.len())
                    .filter(|&i| p.is_end(i).is_none())
                    .map(|i| p.pts[i][1])
                    .fold(f64::INFINITY, f64::min);
                if n > 1 {
                    h2 = h2.min(rmin * rmin / (n - 1) as f64);
                }
            }
            let mut dt = self.c.cfl * h2 / n as f64;
            dt = dt.min(self.c.t_end - self.t);
            if !(dt > 1e-15 * self.t.max(1e-3)) {
                return Err(Error::Unresolved(format!(
                    "time step underflow at t = {} without a detected event",
                    self.t
                )));
            }
            for (p, v) in self.pieces.iter_mut().zip(&vel) {
                for (q, w) in p.pts.iter_mut().zip(v) {
                    q[0] += dt * w[0];
                    q[1] += dt * w[1];
                }
                for s in 0..2 {
                    if !p.closed && p.ends[s] == End::Axis {
                        let i = if s == 0 { 0 } else { p.pts.len() - 1 };
                        p.pts[i][1] = 0.0;
                    }
                }
            }
            self.t += dt;
            for p in &mut self.pieces {
                if self.steps.is_multiple_of(5) || p.needs_resample(&self.c) {
                    p.resample(&self.c);
                }
            }
            since_check += 1;
            if since_check >= 50 {
                since_check = 0;
                for p in &self.pieces {
                    if p.closed && polygon_self_intersection(&p.pts).is_some() {
                        return Err(Error::SelfIntersection(self.t));
                    }
                }
            }
            let mut want = self.update_features()?;
            while self.pending.last().is_some_and(|&q| q <= self.t) {
                self.pending.pop();
                want = true;
            }
            if want || self.t >= self.next_global {
                self.snapshot(dt)?;
                while self.next_global <= self.t {
                    self.next_global += self.c.snapshot_interval;
                }
            }
        }
        if !self.pieces.is_empty() {
            self.snapshot(0.0)?;
        }
        if fresh || self.flow.lambda0.is_nan() {
            self.flow.measure_entropy()?;
        }
        Ok(())
    }

    /// Tracks necks and shrinking components, handling pinches and
    /// extinctions. Returns whether a snapshot is due.
    fn update_features(&mut self) -> Result<bool> {
        let t = self.t;
        let c = self.c.clone();
        let mut want = false;
        let mut i = 0;
        while i < self.pieces.len() {
            let p = &mut self.pieces[i];
            if p.closed {
                let rmin = p.pts.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
                if rmin < 1e-2 * p.initial_min_r {
                    return Err(Error::Unresolved(format!("closed profile reached the axis at t = {t}")));
                }
            }
            // Neck tracking.
            match p.find_neck() {
                Some((idx, z, r)) => {
                    let f = p.neck.get_or_insert_with(|| Feature::new(r, t));
                    f.record(t, r);
                    if f.wants_snapshot(c.snapshot_ratio) {
                        f.last_snap = r;
                        want = true;
                    }
                    if r < c.pinch_ratio * f.reference {
                        let (t0, unc) = f.vanishing_time(t);
                        let reference = f.reference;
                        self.flow.events.push(RawEvent {
                            kind: EventKind::Pinch,
                            t: t0,
                            z,
                            r: 0.0,
                            t_uncertainty: unc,
                            reference_size: reference,
                        });
                        // Resolve the receding caps at parabolic scales after the pinch.
                        let mut q = 1e-4 * reference * reference;
                        while q < reference * reference {
                            self.pending.push(t0 + q);
                            q *= 2.0;
                        }
                        self.pending.sort_by(|a, b| b.partial_cmp(a).unwrap());
                        let p = self.pieces.remove(i);
                        let cut = [p.pts[idx][0], 0.0];
                        let mut left: Vec<[f64; 2]> = p.pts[..idx].to_vec();
                        left.push(cut);
                        let mut right = vec![cut];
                        right.extend_from_slice(&p.pts[idx + 1..]);
                        for (pts, ends) in [(left, [p.ends[0], End::Axis]), (right, [End::Axis, p.ends[1]])] {
                            if pts.len() >= 3 {
                                let pts = if pts.len() == 3 {
                                    let mid = pts[1];
                                    vec![pts[0], mid, [mid[0], 0.5 * mid[1]], pts[2]]
                                } else {
                                    pts
                                };
                                self.add(Piece::new(pts, false, ends));
                            }
                        }
                        want = true;
                        continue;
                    }
                }
                None => p.neck = None,
            }
            let p = &mut self.pieces[i];
            let size = p.shape_size();
            if let Some(f) = p.shape.as_mut() {
                f.record(t, size);
                if f.wants_snapshot(c.snapshot_ratio) {
                    f.last_snap = size;
                    want = true;
                }
                if size < c.extinction_ratio * f.reference {
                    let (t0, unc) = f.vanishing_time(t);
                    let reference = f.reference;
                    let ev = if p.closed {
                        let cen = centroid(&p.pts);
                        RawEvent {
                            kind: EventKind::Collapse,
                            t: t0,
                            z: cen[0],
                            r: cen[1],
                            t_uncertainty: unc,
                            reference_size: reference,
                        }
                    } else {
                        let zlo = p.pts.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
                        let zhi = p.pts.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
                        RawEvent {
                            kind: EventKind::Extinction,
                            t: t0,
                            z: 0.5 * (zlo + zhi),
                            r: 0.0,
                            t_uncertainty: unc,
                            reference_size: reference,
                        }
                    };
                    self.flow.events.push(ev);
                    self.pieces.remove(i);
                    want = true;
                    continue;
                }
            }
            i += 1;
        }
        Ok(want)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circumcurvature_of_a_circle() {
        let r = 0.7;
        let p = |th: f64| [r * th.cos(), r * th.sin()];
        let k = circumcurvature(p(0.1), p(0.3), p(0.6));
        let b = p(0.3);
        assert!((k[0].hypot(k[1]) - 1.0 / r).abs() < 1e-12);
        // Points toward the centre.
        assert!(k[0] * b[0] + k[1] * b[1] < 0.0);
        assert_eq!(circumcurvature([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn parabola_vertex_recovers_minimum() {
        let f = |z: f64| 0.3 + 2.0 * (z - 0.1).powi(2);
        let (z, r) = parabola_vertex([-0.2, f(-0.2)], [0.05, f(0.05)], [0.3, f(0.3)]).unwrap();
        assert!((z - 0.1).abs() < 1e-12 && (r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quadratic_root_of_line() {
        let ts = [-3.0, -2.0, -1.0, 0.0];
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * (0.5 - t)).collect();
        assert!((quadratic_root(&ts, &ys).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn sphere_shrinks_to_its_centre() {
        let c = Controls {
            h_max: 0.1,
            ..Controls::default()
        };
        let flow = rotsym_mcf_run(&InitialProfile::sphere_cap(2.0, 64).unwrap(), &c).unwrap();
        assert_eq!(flow.events.len(), 1);
        let e = &flow.events[0];
        assert_eq!(e.kind, EventKind::Extinction);
        assert!((e.t - 1.0).abs() < 1e-2, "{}", e.t);
        assert!(e.z.abs() < 1e-2);
    }

    #[test]
    fn thin_torus_collapse_time() {
        let (big, tube) = (1.0, 0.1);
        let pts = torus_profile(big, tube, 64).unwrap();
        let flow = rotsym_torus_run(&pts, &Controls::default()).unwrap();
        assert_eq!(flow.events.len(), 1);
        let e = &flow.events[0];
        assert_eq!(e.kind, EventKind::Collapse);
        // Cross-section area obeys A' = −2π + (n − 1) ∫∫ r^{-2} ≈ −2π + A/R².
        let oracle = 0.5 * tube * tube * (1.0 + tube * tube / (4.0 * big * big));
        assert!((e.t - oracle).abs() < 0.01 * oracle, "{} vs {}", e.t, oracle);
        assert!((e.r - big).abs() < 0.05);
    }

    #[test]
    fn fat_torus_is_unresolved() {
        let pts = torus_profile(1.0, 0.9, 64).unwrap();
        let err = rotsym_torus_run(&pts, &Controls::default()).unwrap_err();
        assert!(matches!(err, Error::Unresolved(_)), "{err:?}");
    }

    #[test]
    fn crossed_profile_is_rejected() {
        let pts = vec![
            [0.0, 1.0],
            [1.0, 2.0],
            [1.0, 1.0],
            [0.0, 2.0],
            [-0.5, 1.8],
            [-0.6, 1.5],
            [-0.5, 1.2],
            [-0.3, 1.05],
        ];
        assert!(rotsym_torus_run(&pts, &Controls::default()).is_err());
    }
}
