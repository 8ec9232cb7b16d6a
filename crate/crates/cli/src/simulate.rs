use std::path::Path;

use mcfsing::flows::{
    analytic_flow, detect_singularities, rotsym_mcf_run, rotsym_torus_run, torus_profile, AnalyticFlow, EventKind,
    Flow, FlowSnapshot, InitialProfile, SingularEvent,
};
use mcfsing::io::{write_flow_archive, write_singular_events};
use mcfsing::svg::{Plot, Series};
use serde_json::json;

use crate::config::{pick, RunConfig};
use crate::failure::{Failure, Outcome};
use crate::output::{ensure_dir, num, svg, table};
use crate::{FlowKind, SimulateArgs};

pub fn run(a: &SimulateArgs, cfg: &RunConfig) -> Outcome<()> {
    let s = &cfg.simulate;
    let kind = match (a.kind, &s.kind) {
        (Some(k), _) => k,
        (None, Some(k)) => FlowKind::parse(k)?,
        (None, None) => return Err(Failure::Invalid("--kind is required".into())),
    };
    let out = a
        .out
        .clone()
        .or_else(|| s.out.clone())
        .ok_or_else(|| Failure::Invalid("--out is required".into()))?;

    let mut controls = cfg.controls.clone();
    controls.t_end = pick(a.t_end, None, controls.t_end);
    controls.h_max = pick(a.h_max, None, controls.h_max);
    controls.cfl = pick(a.cfl, None, controls.cfl);
    controls.pinch_ratio = pick(a.pinch_ratio, None, controls.pinch_ratio);
    controls.extinction_ratio = pick(a.extinction_ratio, None, controls.extinction_ratio);
    controls.validate()?;
    let mut detect = cfg.detect.clone();
    detect.class_tolerance = pick(a.class_tolerance, None, detect.class_tolerance);
    detect.residual_threshold = pick(a.residual_threshold, None, detect.residual_threshold);
    if !(detect.class_tolerance > 0.0 && detect.residual_threshold > 0.0) {
        return Err(Failure::Invalid("tolerances must be positive".into()));
    }

    let n = controls.n;
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Failure::Invalid(format!("--{name} must be positive, got {v}")))
        }
    };
    let samples = pick(a.samples, s.samples, 200);
    let (flow, params) = match kind {
        FlowKind::Sphere | FlowKind::Cylinder => {
            let center = vec![0.0; n + 1];
            let shape = if kind == FlowKind::Sphere {
                AnalyticFlow::Sphere {
                    center,
                    r0: positive("r0", pick(a.r0, s.r0, 2.0))?,
                }
            } else {
                let j = pick(a.j, s.j, 1);
                if j >= n {
                    return Err(Failure::Invalid(format!("--j must be below n = {n}")));
                }
                let r0 = pick(a.r0, s.r0, (2.0 * (n - j) as f64).sqrt());
                AnalyticFlow::Cylinder {
                    center,
                    j,
                    r0: positive("r0", r0)?,
                    half_length: None,
                }
            };
            let slices = pick(a.slices, s.slices, 21).max(1);
            let t_ext = shape.extinction_time();
            let times: Vec<f64> = (0..slices).map(|i| t_ext * i as f64 / slices as f64).collect();
            let params = serde_json::to_value(&shape).map_err(|e| Failure::Invalid(e.to_string()))?;
            (analytic_flow(shape, &times)?, params)
        }
        FlowKind::Dumbbell => {
            let half_length = positive("half-length", pick(a.half_length, s.half_length, 2.0))?;
            let neck = positive("neck", pick(a.neck, s.neck, 0.15))?;
            let bulb = positive("bulb", pick(a.bulb, s.bulb, 1.2))?;
            let offset = pick(a.offset, s.offset, 0.1);
            let init = InitialProfile::dumbbell(half_length, neck, bulb, offset, samples)?;
            let params =
                json!({"half_length": half_length, "neck": neck, "bulb": bulb, "offset": offset, "samples": samples});
            (rotsym_mcf_run(&init, &controls)?, params)
        }
        FlowKind::Cap => {
            let r0 = positive("r0", pick(a.r0, s.r0, 2.0))?;
            let init = InitialProfile::sphere_cap(r0, samples)?;
            (rotsym_mcf_run(&init, &controls)?, json!({"r0": r0, "samples": samples}))
        }
        FlowKind::PeriodicCylinder => {
            let r0 = positive("r0", pick(a.r0, s.r0, 2f64.sqrt()))?;
            let length = positive("length", pick(a.length, s.length, 2.0 * std::f64::consts::PI))?;
            let init = InitialProfile::periodic_cylinder(r0, length, samples)?;
            (
                rotsym_mcf_run(&init, &controls)?,
                json!({"r0": r0, "length": length, "samples": samples}),
            )
        }
        FlowKind::Torus => {
            let center_radius = positive("center-radius", pick(a.center_radius, s.center_radius, 1.0))?;
            let tube = positive("tube", pick(a.tube, s.tube, 0.1))?;
            let samples = pick(a.samples, s.samples, 100);
            let pts = torus_profile(center_radius, tube, samples)?;
            let params = json!({"center_radius": center_radius, "tube": tube, "samples": samples});
            (rotsym_torus_run(&pts, &controls)?, params)
        }
    };
    let events = detect_singularities(&flow, &detect)?;

    ensure_dir(&out)?;
    let settings = json!({
        "kind": format!("{kind:?}").to_lowercase(),
        "initial": params,
        "controls": controls,
        "detect": detect,
    });
    write_flow_archive(&out, &flow, settings)?;
    write_singular_events(&out, &events)?;
    write_events_csv(&out.join("events.csv"), &events)?;
    if flow.analytic.is_none() {
        write_neck_trace(&out.join("neck.csv"), &flow)?;
        svg(&out.join("profiles.svg"), &profile_plot(&flow))?;
    }

    println!(
        "{} slices up to t = {:.6}, entropy {:.4}",
        flow.snapshots.len(),
        flow.final_time(),
        flow.lambda0
    );
    for (i, e) in events.iter().enumerate().take(12) {
        println!("{}", event_line(i, e));
    }
    if events.len() > 12 {
        println!("... {} events in total", events.len());
    }
    println!("archive written to {}", out.display());
    Ok(())
}

pub fn kind_name(k: EventKind) -> &'static str {
    match k {
        EventKind::Pinch => "pinch",
        EventKind::Extinction => "extinction",
        EventKind::Collapse => "collapse",
    }
}

pub fn event_line(i: usize, e: &SingularEvent) -> String {
    let j = e.j.map(|j| format!("j = {j}")).unwrap_or_else(|| "unclassified".into());
    format!(
        "event {i}: {} at t = {:.6}, x = {:?}, density {:.4}, {j}",
        kind_name(e.kind),
        e.location.t,
        e.location.x.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
        e.density.value
    )
}

fn write_events_csv(path: &Path, events: &[SingularEvent]) -> Outcome<()> {
    let rows: Vec<Vec<String>> = events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let x = &e.location.x;
            vec![
                i.to_string(),
                kind_name(e.kind).into(),
                num(e.location.t),
                num(x[0]),
                num(x[1..].iter().map(|v| v * v).sum::<f64>().sqrt()),
                num(e.density.value),
                num(e.density.residual),
                e.j.map(|j| j.to_string()).unwrap_or_default(),
                e.density.flagged.to_string(),
            ]
        })
        .collect();
    table(
        path,
        &["event", "kind", "t", "z", "r", "density", "residual", "j", "flagged"],
        &rows,
    )
}

/// Smallest interior local minimum of the distance to the axis.
fn neck_radius(s: &FlowSnapshot) -> f64 {
    let mut best = f64::INFINITY;
    for p in s.profiles() {
        for w in p.windows(3) {
            if w[1][1] > 0.0 && w[1][1] <= w[0][1] && w[1][1] <= w[2][1] {
                best = best.min(w[1][1]);
            }
        }
    }
    best
}

fn write_neck_trace(path: &Path, flow: &Flow) -> Outcome<()> {
    let rows: Vec<Vec<String>> = flow
        .snapshots
        .iter()
        .map(|s| vec![num(s.t), num(neck_radius(s)), s.profiles().len().to_string()])
        .collect();
    table(path, &["t", "neck_radius", "pieces"], &rows)
}

/// Profile curves at up to eight evenly spread slices.
fn profile_plot(flow: &Flow) -> Plot {
    let m = flow.snapshots.len();
    let picks: Vec<usize> = if m <= 8 {
        (0..m).collect()
    } else {
        (0..8).map(|i| i * (m - 1) / 7).collect()
    };
    let mut plot = Plot::new("profile curves", "axial coordinate z", "distance to axis r")
        .note("surface of revolution about the z axis");
    for i in picks {
        let s = &flow.snapshots[i];
        for (k, p) in s.profiles().iter().enumerate() {
            let name = if k == 0 {
                format!("t = {:.4}", s.t)
            } else {
                String::new()
            };
            plot = plot.with(Series::line(name, p.iter().map(|q| (q[0], q[1])).collect()));
        }
    }
    plot
}
