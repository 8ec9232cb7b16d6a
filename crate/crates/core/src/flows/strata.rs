use serde::{Deserialize, Serialize};

use super::detect::classify;
use super::SingularEvent;
use crate::error::{invalid, Result};
use crate::gaussian::cylinder_density_table;
use crate::spacetime::parabolic_distance;

/// Nested strata `S_0 ⊆ … ⊆ S_{n−1}` of classified events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    /// `strata[k]`: events whose density lies in the band of some `Θ_i`,
    /// `i <= k`.
    pub strata: Vec<Vec<usize>>,
    /// Density band `[lo, hi]` around each `Θ_k`.
    pub thresholds: Vec<(f64, f64)>,
    /// Events outside every band (excluded).
    pub unclassified: Vec<usize>,
    /// For each event of `S_0`, the radius of a parabolic ball about it that
    /// contains no other event.
    pub s0_isolation: Vec<(usize, f64)>,
    /// Smallest parabolic distance from `S_{n−1} ∖ S_{n−2}` to `S_{n−2}`.
    #[serde(with = "crate::io::ext_f64")]
    pub top_gap: f64,
    /// `top_gap` exceeds three typical sample spacings of the top stratum.
    pub top_closed: bool,
}

impl Stratification {
    pub fn s0_isolated(&self) -> bool {
        self.s0_isolation.iter().all(|(_, r)| *r > 0.0)
    }

    pub fn nested(&self) -> bool {
        self.strata.windows(2).all(|w| w[0].iter().all(|i| w[1].contains(i)))
    }
}

/// Strata by density band (relative half-width `tol`).
pub fn stratify(events: &[SingularEvent], n: usize, tol: f64) -> Result<Stratification> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", "band half-width must lie in (0, 1)"));
    }
    let table = cylinder_density_table(n)?;
    let thresholds = table.iter().map(|t| (t * (1.0 - tol), t * (1.0 + tol))).collect();
    let mut class = Vec::with_capacity(events.len());
    let mut unclassified = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let k = if e.density.flagged {
            None
        } else {
            classify(e.density.value, &table, tol)
        };
        if k.is_none() {
            unclassified.push(i);
        }
        class.push(k);
    }
    let strata: Vec<Vec<usize>> = (0..n)
        .map(|k| {
            (0..events.len())
                .filter(|&i| class[i].is_some_and(|c| c <= k))
                .collect()
        })
        .collect();
    let dist = |a: usize, b: usize| parabolic_distance(&events[a].location, &events[b].location);
    let mut s0_isolation = Vec::new();
    for &i in &strata[0] {
        let mut r = f64::INFINITY;
        for (b, c) in class.iter().enumerate() {
            if b != i && c.is_some() {
                r = r.min(dist(i, b)?);
            }
        }
        s0_isolation.push((i, 0.5 * r));
    }
    let top: Vec<usize> = (0..events.len()).filter(|&i| class[i] == Some(n - 1)).collect();
    let lower: Vec<usize> = (0..events.len())
        .filter(|&i| class[i].is_some_and(|c| c + 1 < n))
        .collect();
    let mut top_gap = f64::INFINITY;
    for &a in &top {
        for &b in &lower {
            top_gap = top_gap.min(dist(a, b)?);
        }
    }
    let mut nn = Vec::new();
    for &a in &top {
        let mut m = f64::INFINITY;
        for &b in &top {
            if a != b {
                m = m.min(dist(a, b)?);
            }
        }
        if m.is_finite() {
            nn.push(m);
        }
    }
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spacing = nn.get(nn.len() / 2).copied().unwrap_or(0.0);
    let top_closed = top_gap.is_infinite() || top_gap > 3.0 * spacing;
    Ok(Stratification {
        strata,
        thresholds,
        unclassified,
        s0_isolation,
        top_gap,
        top_closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::EventKind;
    use crate::gaussian::{cylinder_density, DensityEstimate};
    use crate::spacetime::SpaceTimePoint;

    fn ev(x: f64, t: f64, theta: f64) -> SingularEvent {
        SingularEvent {
            kind: EventKind::Extinction,
            location: SpaceTimePoint::new(vec![x, 0.0, 0.0], t),
            density: DensityEstimate {
                value: theta,
                taus: vec![],
                values: vec![],
                residual: 0.0,
                flagged: false,
            },
            j: None,
            axis: None,
            eta_profile: vec![],
            reference_size: 1.0,
        }
    }

    #[test]
    fn nesting_and_isolation() {
        let t0 = cylinder_density(2, 0).unwrap();
        let t1 = cylinder_density(2, 1).unwrap();
        let events = vec![
            ev(0.0, 0.06, t1),
            ev(1.3, 0.16, t0),
            ev(-1.3, 0.3, t0),
            ev(0.0, 0.0, 1.0),
        ];
        let s = stratify(&events, 2, 0.05).unwrap();
        assert_eq!(s.strata[0], vec![1, 2]);
        assert_eq!(s.strata[1], vec![0, 1, 2]);
        assert_eq!(s.unclassified, vec![3]);
        assert!(s.nested() && s.s0_isolated() && s.top_closed);
    }
}
