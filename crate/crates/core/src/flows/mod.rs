//! Mean curvature flows: exact shrinking solutions, a solver for surfaces of
//! revolution with singularity detection and continuation past neckpinches,
//! and the analyses run on the resulting singular sets.

mod analytic;
mod curve;
mod cylfit;
mod detect;
mod graph;
mod report;
mod strata;

pub use analytic::{analytic_flow, AnalyticFlow};
pub use curve::{rotsym_mcf_run, rotsym_torus_run, torus_profile, Controls, InitialProfile};
pub use cylfit::{cylindrical_fit, eta_profile, fit_scales, CylindricalFit, EtaProfile, FIT_RADIUS};
pub use detect::{detect_singularities, DetectOptions};
pub use graph::{rotsym_graph_run, Boundary};
pub use report::{
    clearing_window_check, f_emptiness_certificate, singular_set_report, surface_distance, Analysis, ClearingVerdict,
    EmptinessCertificate, EmptinessRow, SingularSetReport, WindowCheck, WindowRow,
};
pub use strata::{stratify, Stratification};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{DensityEstimate, Descriptor, SurfaceFlow, WeightedHypersurface};
use crate::planes::TimeSlicePlane;
use crate::spacetime::SpaceTimePoint;

/// One time slice of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSnapshot {
    pub t: f64,
    pub surface: WeightedHypersurface,
    /// Smallest profile spacing (0 for analytic slices).
    pub spacing: f64,
    /// Time step in use when the slice was recorded.
    pub dt: f64,
}

impl FlowSnapshot {
    /// Profile curves of a surface of revolution (empty otherwise).
    pub fn profiles(&self) -> &[Vec<[f64; 2]>] {
        match self.surface.descriptor() {
            Some(Descriptor::Revolution { profiles }) => profiles,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Rotational,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Interior neck of a profile reaching the axis.
    Pinch,
    /// A capped component shrinking to a point on the axis.
    Extinction,
    /// A closed profile curve shrinking to a point of the half-plane, i.e. a
    /// circle of singular points.
    Collapse,
}

/// A singularity as recorded by the solver, before density analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub kind: EventKind,
    pub t: f64,
    /// Axial coordinate.
    pub z: f64,
    /// Distance from the axis (0 unless the event is a circle).
    pub r: f64,
    /// Disagreement between independent time estimates.
    #[serde(with = "crate::io::ext_f64")]
    pub t_uncertainty: f64,
    /// Size of the shrinking feature when it was first tracked; sets the
    /// scale of later analyses.
    pub reference_size: f64,
}

/// A time-ordered sequence of snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub n: usize,
    pub snapshots: Vec<FlowSnapshot>,
    /// Entropy of the initial surface.
    #[serde(with = "crate::io::ext_f64")]
    pub lambda0: f64,
    pub symmetry: Symmetry,
    pub events: Vec<RawEvent>,
    pub analytic: Option<AnalyticFlow>,
}

impl Flow {
    pub(crate) fn new(n: usize, symmetry: Symmetry) -> Self {
        Self {
            n,
            snapshots: Vec::new(),
            lambda0: f64::NAN,
            symmetry,
            events: Vec::new(),
            analytic: None,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot at time `t` (exact match up to rounding).
    pub fn snapshot_at(&self, t: f64) -> Option<&FlowSnapshot> {
        let tol = 1e-13 * t.abs().max(1.0);
        let i = self.snapshots.partition_point(|s| s.t < t - tol);
        self.snapshots.get(i).filter(|s| (s.t - t).abs() <= tol)
    }

    /// Latest snapshot at or before `t`.
    pub fn snapshot_before(&self, t: f64) -> Option<&FlowSnapshot> {
        let i = self.snapshots.partition_point(|s| s.t <= t);
        i.checked_sub(1).map(|i| &self.snapshots[i])
    }

    /// Checks that snapshot times strictly increase.
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Format("snapshot times must strictly increase".into()));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub(crate) fn measure_entropy(&mut self) -> Result<()> {
        if let Some(s) = self.snapshots.first() {
            self.lambda0 = crate::gaussian::entropy(&s.surface)?.value;
        }
        Ok(())
    }
}

impl SurfaceFlow for Flow {
    fn dim(&self) -> usize {
        self.n
    }

    fn surface_at(&self, t: f64) -> Result<WeightedHypersurface> {
        if let Some(a) = &self.analytic {
            return a.surface_at(t);
        }
        self.snapshot_at(t)
            .map(|s| s.surface.clone())
            .ok_or(Error::MissingSnapshot(t))
    }

    fn snapshot_times(&self) -> Option<Vec<f64>> {
        if self.analytic.is_some() {
            None
        } else {
            Some(self.times())
        }
    }
}

/// A classified singular point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularEvent {
    pub kind: EventKind,
    pub location: SpaceTimePoint,
    pub density: DensityEstimate,
    /// Dimension of the Euclidean factor of the tangent cylinder; `None` when
    /// the density matches no cylinder value.
    pub j: Option<usize>,
    /// `j`-plane through the event along the cylinder axis.
    pub axis: Option<TimeSlicePlane>,
    /// `(s, η(s))` from cylindrical fits, `s` decreasing.
    #[serde(with = "crate::io::ext_f64_pairs")]
    pub eta_profile: Vec<(f64, f64)>,
    pub reference_size: f64,
}
