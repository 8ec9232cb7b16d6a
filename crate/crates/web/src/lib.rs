//! WebAssembly bindings for the static viewer in `www/`. Results cross the
//! boundary as JSON text.
//!
//! The plain Rust API ([`NeckPinch`], [`figure1_profile`]) does the work; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use mcfsing::cone::cone_profile;
use mcfsing::flows::{
    detect_singularities, rotsym_mcf_run, Controls, DetectOptions, Flow, InitialProfile, SingularEvent,
};
use mcfsing::gaussian::monotonicity_check;
use mcfsing::reifenberg::two_holder_fit;
use mcfsing::spacetime::geometric_scales;
use mcfsing::synthetic::{generate, GeneratorSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// A dumbbell run with its detected singular events.
pub struct NeckPinch {
    flow: Flow,
    events: Vec<SingularEvent>,
}

impl NeckPinch {
    pub fn run(neck: f64, bulb: f64, offset: f64, samples: usize) -> Result<Self, String> {
        let init = InitialProfile::dumbbell(2.0, neck, bulb, offset, samples).map_err(|e| e.to_string())?;
        let flow = rotsym_mcf_run(&init, &Controls::default()).map_err(|e| e.to_string())?;
        let events = detect_singularities(&flow, &DetectOptions::default()).map_err(|e| e.to_string())?;
        Ok(Self { flow, events })
    }

    pub fn frame_count(&self) -> usize {
        self.flow.snapshots.len()
    }

    /// Profile curves `(z, r)` of slice `i`, clamped to the last slice.
    pub fn frame(&self, i: usize) -> Value {
        let s = &self.flow.snapshots[i.min(self.frame_count().saturating_sub(1))];
        json!({ "t": s.t, "profiles": s.profiles() })
    }

    pub fn events(&self) -> Value {
        let list: Vec<Value> = self
            .events
            .iter()
            .map(|e| {
                json!({
                    "kind": format!("{:?}", e.kind).to_lowercase(),
                    "t": e.location.t,
                    "z": e.location.x[0],
                    "density": e.density.value,
                    "j": e.j,
                })
            })
            .collect();
        Value::Array(list)
    }

    /// Gaussian area `F` against `τ`, centred on the axis at `z_event + dz`
    /// and at the event time, over the stored earlier slices with
    /// `τ >= 1e-4 · (t − t0)`.
    pub fn density_trace(&self, event: usize, dz: f64) -> Result<Value, String> {
        let e = self.events.get(event).ok_or_else(|| format!("no event {event}"))?;
        let t = e.location.t;
        let mut x = e.location.x.clone();
        x[0] += dz;
        let t0 = self.flow.snapshots.first().map_or(0.0, |s| s.t);
        // below 1e-4 of the history the last slices resolve the neck with too few vertices
        let tau_min = 1e-4 * (t - t0);
        let taus: Vec<f64> = self
            .flow
            .times()
            .into_iter()
            .map(|s| t - s)
            .filter(|&tau| tau >= tau_min)
            .collect();
        let rep = monotonicity_check(&self.flow, &x, t, &taus, 1e-3).map_err(|e| e.to_string())?;
        Ok(json!({
            "t": t,
            "z": x[0],
            "taus": rep.taus,
            "values": rep.values,
            "holds": rep.holds(),
            "density": e.density.value,
        }))
    }
}

/// Points `(1/k, 1/k^4)` with their limit, the Hölder ratio `γ(ε)` of the
/// time function and the cone constant `γ(r0)`.
pub fn figure1_profile(count: usize) -> Result<Value, String> {
    let cloud = generate(&GeneratorSpec::Figure1 { count }).map_err(|e| e.to_string())?;
    let points: Vec<(f64, f64)> = cloud.points().iter().map(|p| (p.x[0], p.t)).collect();
    let holder = two_holder_fit(&cloud);
    let graph = holder.single().ok_or("the time function is multi-valued")?;
    let floor = cloud.sampling_floor();
    let scales = geometric_scales(1.0, floor * 1.05, 12);
    let cone = cone_profile(&cloud, &scales).map_err(|e| e.to_string())?;
    let cone_rows: Vec<(f64, f64)> = cone.rows.iter().map(|r| (r.r0, r.gamma)).collect();
    Ok(json!({
        "points": points,
        "holder": { "constant": graph.constant, "gamma": graph.gamma, "vanishing": graph.vanishing },
        "cone": { "rows": cone_rows, "vanishing": cone.vanishing },
    }))
}

#[wasm_bindgen]
pub struct Neckpinch(NeckPinch);

#[wasm_bindgen]
impl Neckpinch {
    #[wasm_bindgen(constructor)]
    pub fn new(neck: f64, bulb: f64, offset: f64, samples: usize) -> Result<Neckpinch, JsError> {
        NeckPinch::run(neck, bulb, offset, samples)
            .map(Neckpinch)
            .map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = frameCount)]
    pub fn frame_count(&self) -> usize {
        self.0.frame_count()
    }

    pub fn frame(&self, i: usize) -> String {
        self.0.frame(i).to_string()
    }

    pub fn events(&self) -> String {
        self.0.events().to_string()
    }

    #[wasm_bindgen(js_name = densityTrace)]
    pub fn density_trace(&self, event: usize, dz: f64) -> Result<String, JsError> {
        self.0
            .density_trace(event, dz)
            .map(|v| v.to_string())
            .map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen(js_name = figure1Profile)]
pub fn figure1_profile_js(count: usize) -> Result<String, JsError> {
    figure1_profile(count)
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e))
}
