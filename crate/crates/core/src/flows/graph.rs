use serde::{Deserialize, Serialize};

use super::curve::{Controls, Feature};
use super::{EventKind, Flow, FlowSnapshot, RawEvent, Symmetry};
use crate::error::{invalid, Error, Result};
use crate::gaussian::WeightedHypersurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `u(a) = u(b)` with the grid excluding `b`.
    Periodic,
    /// End values held fixed.
    Dirichlet,
}

pub(super) enum GraphOutcome {
    Finished,
    /// Profile unrolled from the neck, as a polyline from axis to axis.
    Pinched(Vec<[f64; 2]>),
}

pub(super) struct GraphPhase {
    pub t: f64,
    pub outcome: GraphOutcome,
}

/// Evolves `u_t = u_xx / (1 + u_x^2) − (n − 1) / u` with central differences
/// and Heun steps until `t_end` or a pinch; a pinch is recorded as an event
/// and ends the run.
pub fn rotsym_graph_run(a: f64, b: f64, u: &[f64], boundary: Boundary, controls: &Controls) -> Result<Flow> {
    controls.validate()?;
    let mut flow = Flow::new(controls.n, Symmetry::Rotational);
    graph_phase(a, b, u, boundary, controls, &mut flow)?;
    flow.measure_entropy()?;
    Ok(flow)
}

struct Grid {
    a: f64,
    h: f64,
    len: f64,
    boundary: Boundary,
}

impl Grid {
    fn rhs(&self, u: &[f64], n: usize, out: &mut [f64]) {
        let m = u.len();
        let h = self.h;
        for i in 0..m {
            let (l, r) = match self.boundary {
                Boundary::Periodic => (u[(i + m - 1) % m], u[(i + 1) % m]),
                Boundary::Dirichlet => {
                    if i == 0 || i == m - 1 {
                        out[i] = 0.0;
                        continue;
                    }
                    (u[i - 1], u[i + 1])
                }
            };
            let ux = (r - l) / (2.0 * h);
            let uxx = (r - 2.0 * u[i] + l) / (h * h);
            out[i] = uxx / (1.0 + ux * ux) - (n as f64 - 1.0) / u[i];
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    fn profile(&self, u: &[f64]) -> Vec<[f64; 2]> {
        match self.boundary {
            Boundary::Dirichlet => u.iter().enumerate().map(|(i, v)| [self.x(i), *v]).collect(),
            Boundary::Periodic => {
                // Enough periods on each side for the Gaussian weights used
                // at unit scale.
                let copies = ((4.0 / self.len).ceil() as i64).clamp(1, 20);
                let mut p = Vec::new();
                for k in -copies..=copies {
                    for (i, v) in u.iter().enumerate() {
                        p.push([self.x(i) + k as f64 * self.len, *v]);
                    }
                }
                p.push([self.x(0) + (copies + 1) as f64 * self.len, u[0]]);
                p
            }
        }
    }
}

pub(super) fn graph_phase(
    a: f64,
    b: f64,
    u0: &[f64],
    boundary: Boundary,
    c: &Controls,
    flow: &mut Flow,
) -> Result<GraphPhase> {
    let m = u0.len();
    if !(b > a) || m < 4 {
        return Err(invalid("u", "need b > a and at least 4 samples"));
    }
    let interior = match boundary {
        Boundary::Periodic => u0,
        Boundary::Dirichlet => &u0[1..m - 1],
    };
    if u0.iter().any(|v| !v.is_finite()) || interior.iter().any(|v| *v <= 0.0) {
        return Err(invalid("u", "profile must be finite and positive"));
    }
    if boundary == Boundary::Dirichlet && (u0[0] <= 0.0 || u0[m - 1] <= 0.0) {
        return Err(invalid("u", "graph solver needs positive Dirichlet data"));
    }
    let len = b - a;
    let h = match boundary {
        Boundary::Periodic => len / m as f64,
        Boundary::Dirichlet => len / (m - 1) as f64,
    };
    let grid = Grid { a, h, len, boundary };
    let n = c.n;
    let mut u = u0.to_vec();
    let umin = |u: &[f64]| u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut neck = Feature::new(umin(&u), 0.0);
    let mut t = 0.0;
    let push = |flow: &mut Flow, t: f64, u: &[f64], dt: f64| -> Result<()> {
        flow.snapshots.push(FlowSnapshot {
            t,
            surface: WeightedHypersurface::revolution(n, vec![grid.profile(u)])?,
            spacing: h,
            dt,
        });
        Ok(())
    };
    push(flow, t, &u, 0.0)?;
    let mut next_global = c.snapshot_interval;
    let (mut k1, mut k2) = (vec![0.0; m], vec![0.0; m]);
    let mut mid = vec![0.0; m];
    let mut steps = 0usize;
    while t < c.t_end {
        steps += 1;
        if steps > c.max_steps {
            return Err(Error::Unresolved(format!("step budget exhausted at t = {t}")));
        }
        let um = umin(&u);
        let mut lim = h * h;
        if n > 1 {
            lim = lim.min(um * um / (n - 1) as f64);
        }
        let dt = (c.cfl * lim).min(c.t_end - t);
        if !(dt > 1e-15 * t.max(1e-3)) {
            return Err(Error::Unresolved(format!("time step underflow at t = {t}")));
        }
        grid.rhs(&u, n, &mut k1);
        for i in 0..m {
            mid[i] = u[i] + dt * k1[i];
        }
        if mid.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Unresolved(format!("profile crossed the axis at t = {t}")));
        }
        grid.rhs(&mid, n, &mut k2);
        for i in 0..m {
            u[i] += 0.5 * dt * (k1[i] + k2[i]);
        }
        t += dt;
        let um = umin(&u);
        if !(um > 0.0) {
            return Err(Error::Unresolved(format!("profile crossed the axis at t = {t}")));
        }
        neck.record(t, um);
        let mut want = t >= next_global;
        if neck.wants_snapshot(c.snapshot_ratio) {
            neck.last_snap = um;
            want = true;
        }
        if um < c.pinch_ratio * neck.reference {
            let (t0, unc) = neck.vanishing_time(t);
            let i = (0..m).min_by(|&x, &y| u[x].partial_cmp(&u[y]).unwrap()).unwrap();
            flow.events.push(RawEvent {
                kind: EventKind::Pinch,
                t: t0,
                z: grid.x(i),
                r: 0.0,
                t_uncertainty: unc,
                reference_size: neck.reference,
            });
            push(flow, t, &u, dt)?;
            let outcome = match boundary {
                Boundary::Periodic => {
                    let mut pts = vec![[grid.x(i), 0.0]];
                    for k in 1..m {
                        let j = (i + k) % m;
                        let shift = if j < i { len } else { 0.0 };
                        pts.push([grid.x(j) + shift, u[j]]);
                    }
                    pts.push([grid.x(i) + len, 0.0]);
                    GraphOutcome::Pinched(pts)
                }
                Boundary::Dirichlet => GraphOutcome::Finished,
            };
            return Ok(GraphPhase { t, outcome });
        }
        if want {
            push(flow, t, &u, dt)?;
            while next_global <= t {
                next_global += c.snapshot_interval;
            }
        }
    }
    Ok(GraphPhase {
        t,
        outcome: GraphOutcome::Finished,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_cylinder_matches_exact_radius() {
        let c = Controls {
            t_end: 0.5,
            snapshot_interval: 0.1,
            ..Controls::default()
        };
        let m = 64;
        let u = vec![2f64.sqrt(); m];
        let flow = rotsym_graph_run(0.0, 4.0, &u, Boundary::Periodic, &c).unwrap();
        for s in &flow.snapshots {
            let exact = (2.0 - 2.0 * s.t).sqrt();
            for p in &s.profiles()[0] {
                assert!((p[1] - exact).abs() < 1e-3, "t = {}", s.t);
            }
        }
        assert!(flow.events.is_empty());
        assert!((flow.final_time() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steady_catenoid_free_line_for_n1() {
        // With n = 1 the rotational term vanishes and a straight graph is
        // stationary.
        let c = Controls {
            n: 1,
            t_end: 0.1,
            ..Controls::default()
        };
        let u: Vec<f64> = (0..20).map(|i| 1.0 + 0.05 * i as f64).collect();
        let flow = rotsym_graph_run(0.0, 1.9, &u, Boundary::Dirichlet, &c).unwrap();
        let last = flow.snapshots.last().unwrap();
        for (p, v) in last.profiles()[0].iter().zip(&u) {
            assert!((p[1] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_data() {
        let c = Controls::default();
        assert!(rotsym_graph_run(0.0, 1.0, &[1.0, 0.0, 1.0, 1.0], Boundary::Periodic, &c).is_err());
    }
}
