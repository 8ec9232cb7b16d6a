use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mcfsing::cone::cone_profile;
use mcfsing::flows::{
    clearing_window_check, detect_singularities, eta_profile, f_emptiness_certificate, singular_set_report, stratify,
    Analysis, ClearingVerdict, DetectOptions, EventKind, Flow, SingularEvent,
};
use mcfsing::gaussian::{clearing_constants, cylinder_density_table, monotonicity_check};
use mcfsing::io::{read_flow_archive, read_singular_events};
use mcfsing::reifenberg::TwoHolderFit;
use mcfsing::spacetime::{geometric_scales, parabolic_distance};
use mcfsing::svg::{Plot, Series};
use mcfsing::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{pick, AnalyzeConfig, RunConfig};
use crate::failure::{Failure, Outcome};
use crate::output::{ensure_dir, json as write_json, num, svg, table};
use crate::simulate::{event_line, kind_name};
use crate::{AnalyzeArgs, ReportArgs, Tolerances, Which};

const ALL: [Which; 7] = [
    Which::Density,
    Which::Monotonicity,
    Which::Cylfit,
    Which::Strata,
    Which::Reifenberg,
    Which::Cone,
    Which::Clearing,
];

struct Settings {
    tol: f64,
    time_tol: f64,
    strata_tol: f64,
    eta: f64,
    threshold: f64,
    tau_max: Option<f64>,
    tau_min: Option<f64>,
    tau_count: usize,
    point: Option<Vec<f64>>,
    time: Option<f64>,
}

impl Settings {
    fn new(t: &Tolerances, c: &AnalyzeConfig, flow: &Flow) -> Outcome<Self> {
        let default_tol = if flow.analytic.is_some() { 1e-8 } else { 1e-3 };
        let solver_tol = flow
            .events
            .iter()
            .map(|e| e.t_uncertainty)
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let s = Self {
            tol: pick(t.tol, c.tol, default_tol),
            time_tol: pick(t.time_tol, c.time_tol, solver_tol.max(1e-9)),
            strata_tol: pick(t.strata_tol, c.strata_tol, 0.05),
            eta: pick(t.eta, c.eta, 0.001),
            threshold: pick(t.threshold, c.threshold, 0.5),
            tau_max: t.tau_max.or(c.tau_max),
            tau_min: t.tau_min.or(c.tau_min),
            tau_count: pick(t.tau_count, c.tau_count, 50),
            point: t.point.clone().or_else(|| c.point.clone()),
            time: t.time.or(c.time),
        };
        for (name, v) in [
            ("tol", s.tol),
            ("time-tol", s.time_tol),
            ("strata-tol", s.strata_tol),
            ("eta", s.eta),
            ("threshold", s.threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Invalid(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(s)
    }
}

struct Ctx {
    flow: Flow,
    events: Vec<SingularEvent>,
    out: PathBuf,
    set: Settings,
}

/// Result of one analysis: a JSON summary and, if a verdict failed, why.
struct Section {
    summary: Value,
    failed: Option<String>,
}

fn name(w: Which) -> &'static str {
    match w {
        Which::Density => "density",
        Which::Monotonicity => "monotonicity",
        Which::Cylfit => "cylfit",
        Which::Strata => "strata",
        Which::Reifenberg => "reifenberg",
        Which::Cone => "cone",
        Which::Clearing => "clearing",
    }
}

fn load(archive: &Path, out: Option<PathBuf>, default_sub: &str, t: &Tolerances, cfg: &RunConfig) -> Outcome<Ctx> {
    let flow = read_flow_archive(archive)?;
    let events = match read_singular_events(archive) {
        Ok(e) => e,
        Err(Error::Io(_)) => detect_singularities(&flow, &DetectOptions::default())?,
        Err(e) => return Err(e.into()),
    };
    let out = out
        .or_else(|| cfg.analyze.out.clone())
        .unwrap_or_else(|| archive.join(default_sub));
    ensure_dir(&out)?;
    let set = Settings::new(t, &cfg.analyze, &flow)?;
    Ok(Ctx { flow, events, out, set })
}

pub fn run(a: &AnalyzeArgs, cfg: &RunConfig) -> Outcome<()> {
    let ctx = load(&a.archive, a.out.clone(), "analysis", &a.tol, cfg)?;
    let s = dispatch(&ctx, a.which)?;
    println!("{}", serde_json::to_string_pretty(&s.summary).unwrap_or_default());
    println!("reports written to {}", ctx.out.display());
    match s.failed {
        Some(m) => Err(Failure::Verdict(m)),
        None => Ok(()),
    }
}

pub fn report(a: &ReportArgs, cfg: &RunConfig) -> Outcome<()> {
    let ctx = load(&a.archive, a.out.clone(), "report", &a.tol, cfg)?;
    let mut summary = BTreeMap::new();
    let mut failures = Vec::new();
    let mut md = String::from("# Singular set report\n\n");
    md.push_str(&format!(
        "Flow: n = {}, {} slices up to t = {}, entropy {:.4}.\n\n## Events\n\n",
        ctx.flow.n,
        ctx.flow.snapshots.len(),
        num(ctx.flow.final_time()),
        ctx.flow.lambda0
    ));
    for (i, e) in ctx.events.iter().enumerate() {
        md.push_str(&format!("- {}\n", event_line(i, e)));
    }
    for w in ALL {
        let key = name(w);
        let s = match dispatch(&ctx, w) {
            Ok(s) => s,
            // one analysis failing to resolve does not stop the others
            Err(Failure::Unresolved(m)) => Section {
                summary: json!({ "unresolved": m }),
                failed: None,
            },
            Err(f) => return Err(f),
        };
        md.push_str(&format!(
            "\n## {key}\n\n```json\n{}\n```\n",
            serde_json::to_string_pretty(&s.summary).unwrap_or_default()
        ));
        if let Some(m) = &s.failed {
            md.push_str(&format!("\nVerdict failed: {m}\n"));
            failures.push(format!("{key}: {m}"));
        }
        summary.insert(key, s.summary);
    }
    write_json(&ctx.out.join("summary.json"), &summary)?;
    mcfsing::io::write_atomic(&ctx.out.join("summary.md"), md.as_bytes())?;
    println!("report written to {}", ctx.out.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verdict(failures.join("; ")))
    }
}

fn dispatch(ctx: &Ctx, w: Which) -> Outcome<Section> {
    match w {
        Which::Density => density(ctx),
        Which::Monotonicity => monotonicity(ctx),
        Which::Cylfit => cylfit(ctx),
        Which::Strata => strata(ctx),
        Which::Reifenberg => reifenberg(ctx),
        Which::Cone => cone(ctx),
        Which::Clearing => clearing(ctx),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn ok(summary: Value) -> Outcome<Section> {
    Ok(Section { summary, failed: None })
}

/// One event per distinct (kind, time): the samples of a singular circle
/// share their analysis.
fn representatives(events: &[SingularEvent]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let seen = out.iter().any(|&k| {
            let f = &events[k];
            f.kind == e.kind
                && f.kind == EventKind::Collapse
                && (f.location.t - e.location.t).abs() <= 1e-12 * e.location.t.abs().max(1.0)
        });
        if !seen {
            out.push(i);
        }
    }
    out
}

fn density(ctx: &Ctx) -> Outcome<Section> {
    let table_theta = cylinder_density_table(ctx.flow.n)?;
    let mut rows = Vec::new();
    let mut plot = Plot::new("Gaussian area along backward scales", "τ", "F").note("limit τ → 0 is the density");
    plot.log_x = true;
    let mut list = Vec::new();
    for (i, e) in ctx.events.iter().enumerate() {
        for (tau, f) in e.density.taus.iter().zip(&e.density.values) {
            rows.push(vec![i.to_string(), num(*tau), num(*f)]);
        }
        list.push(json!({
            "event": i,
            "kind": kind_name(e.kind),
            "t": e.location.t,
            "x": e.location.x,
            "density": e.density.value,
            "residual": e.density.residual,
            "flagged": e.density.flagged,
            "j": e.j,
        }));
    }
    for i in representatives(&ctx.events).into_iter().take(6) {
        let e = &ctx.events[i];
        let pts = e
            .density
            .taus
            .iter()
            .copied()
            .zip(e.density.values.iter().copied())
            .collect();
        plot = plot.with(Series::line(format!("{} {i}", kind_name(e.kind)), pts));
    }
    let band = |k: usize| table_theta.get(k).copied().unwrap_or(f64::NAN);
    for (k, th) in table_theta.iter().enumerate() {
        let span = ctx
            .events
            .iter()
            .flat_map(|e| e.density.taus.iter().copied())
            .fold((f64::INFINITY, 0.0f64), |a, t| (a.0.min(t), a.1.max(t)));
        if span.1 > 0.0 {
            plot = plot.with(Series::line(format!("Θ{k}"), vec![(span.0, *th), (span.1, band(k))]));
        }
    }
    table(&ctx.out.join("density.csv"), &["event", "tau", "F"], &rows)?;
    svg(&ctx.out.join("density.svg"), &plot)?;
    let summary = json!({ "cylinder_densities": table_theta, "events": list });
    write_json(&ctx.out.join("density.json"), &summary)?;
    ok(summary)
}

fn monotonicity(ctx: &Ctx) -> Outcome<Section> {
    let set = &ctx.set;
    let first = ctx.events.first();
    let x = match (&set.point, first) {
        (Some(p), _) => p.clone(),
        (None, Some(e)) => e.location.x.clone(),
        (None, None) => return Err(Failure::Invalid("no events; pass --point and --time".into())),
    };
    let t = match (set.time, first) {
        (Some(t), _) => t,
        (None, Some(e)) => e.location.t,
        (None, None) => return Err(Failure::Invalid("no events; pass --time".into())),
    };
    if x.len() != ctx.flow.n + 1 {
        return Err(Failure::Invalid(format!(
            "--point needs {} coordinates",
            ctx.flow.n + 1
        )));
    }
    let t_first = ctx.flow.snapshots.first().map(|s| s.t).unwrap_or(0.0);
    let tau_max = set.tau_max.unwrap_or(t - t_first);
    if !(tau_max > 0.0) {
        return Err(Failure::Invalid(format!("no backward scales before t = {t}")));
    }
    let tau_min = set.tau_min.unwrap_or(1e-4 * tau_max);
    let taus: Vec<f64> = if ctx.flow.analytic.is_some() {
        geometric_scales(tau_max, tau_min, set.tau_count)
    } else {
        ctx.flow
            .times()
            .into_iter()
            .filter(|&s| s < t)
            .map(|s| t - s)
            .filter(|&tau| tau >= tau_min && tau <= tau_max * (1.0 + 1e-12))
            .collect()
    };
    if taus.len() < 2 {
        return Err(Failure::Unresolved(format!(
            "fewer than two stored slices in τ ∈ [{tau_min}, {tau_max}]"
        )));
    }
    let rep = monotonicity_check(&ctx.flow, &x, t, &taus, set.tol)?;
    let rows: Vec<Vec<String>> = rep
        .taus
        .iter()
        .zip(&rep.values)
        .map(|(a, b)| vec![num(*a), num(*b)])
        .collect();
    table(&ctx.out.join("monotonicity.csv"), &["tau", "F"], &rows)?;
    let mut plot = Plot::new("monotonicity of the Gaussian area", "τ", "F")
        .note(format!("centre x = {x:?}, t = {t}"))
        .with(Series::line(
            "F",
            rep.taus.iter().copied().zip(rep.values.iter().copied()).collect(),
        ));
    plot.log_x = true;
    svg(&ctx.out.join("monotonicity.svg"), &plot)?;
    let summary = json!({
        "x": x,
        "t": t,
        "tol": set.tol,
        "holds": rep.holds(),
        "max_decrease": rep.max_decrease,
        "violations": rep.violations,
        "scales": rep.taus.len(),
    });
    write_json(&ctx.out.join("monotonicity.json"), &summary)?;
    let failed = (!rep.holds()).then(|| format!("{} decreases of F beyond {}", rep.violations.len(), set.tol));
    Ok(Section { summary, failed })
}

fn cylfit(ctx: &Ctx) -> Outcome<Section> {
    let mut rows = Vec::new();
    let mut list = Vec::new();
    let mut plot = Plot::new("distance to the nearest cylinder", "s", "η(s)").log_log();
    for i in representatives(&ctx.events) {
        let e = &ctx.events[i];
        if e.j.is_none() || e.eta_profile.is_empty() {
            continue;
        }
        let scales: Vec<f64> = e.eta_profile.iter().map(|p| p.0).collect();
        let prof = match eta_profile(&ctx.flow, e, &scales) {
            Ok(p) => p,
            Err(err) => {
                list.push(json!({ "event": i, "error": err.to_string() }));
                continue;
            }
        };
        for (r, d) in prof.rows.iter().zip(&prof.drift_deg) {
            rows.push(vec![
                i.to_string(),
                num(r.s),
                num(r.eta),
                num(r.offset),
                num(r.slope),
                num(*d),
            ]);
        }
        plot = plot.with(Series::line(format!("{} {i}", kind_name(e.kind)), prof.pairs()));
        let etas: Vec<f64> = prof.rows.iter().map(|r| r.eta).collect();
        list.push(json!({
            "event": i,
            "kind": kind_name(e.kind),
            "j": e.j,
            "scales": etas.len(),
            "eta_first": etas.first(),
            "eta_last": etas.last(),
            "non_increasing": prof.non_increasing(0.0),
            "max_drift_deg": prof.max_drift_deg(),
        }));
    }
    table(
        &ctx.out.join("cylfit.csv"),
        &["event", "s", "eta", "offset", "slope", "drift_deg"],
        &rows,
    )?;
    svg(&ctx.out.join("cylfit.svg"), &plot)?;
    let summary = json!({ "events": list });
    write_json(&ctx.out.join("cylfit.json"), &summary)?;
    ok(summary)
}

fn strata(ctx: &Ctx) -> Outcome<Section> {
    let s = stratify(&ctx.events, ctx.flow.n, ctx.set.strata_tol)?;
    let mut summary = to_value(&s);
    summary["s0_isolated"] = json!(s.s0_isolated());
    summary["nested"] = json!(s.nested());
    write_json(&ctx.out.join("strata.json"), &summary)?;
    ok(summary)
}

fn singular_set_plot(ctx: &Ctx) -> Plot {
    let pts = ctx.events.iter().map(|e| (e.location.x[0], e.location.t)).collect();
    Plot::new("singular set", "first spatial coordinate", "t")
        .note("parabolic units: a time offset τ has the size of a length sqrt(τ)")
        .with(Series::markers("events", pts))
}

fn reifenberg(ctx: &Ctx) -> Outcome<Section> {
    let rep = singular_set_report(&ctx.events, ctx.set.time_tol)?;
    svg(&ctx.out.join("singular_set.svg"), &singular_set_plot(ctx))?;
    let mut summary = json!({
        "k": rep.k,
        "isolated": rep.isolated,
        "points": rep.cloud.len(),
        "reifenberg": to_value(&rep.reifenberg),
        "time_slice": match &rep.time_slice {
            Analysis::Done(t) => json!({ "all_time_slices": t.all_time_slices(), "distinct_times": t.distinct_times, "h1_estimate": t.h1_estimate }),
            Analysis::Rejected(m) => json!({ "rejected": m }),
        },
        "holder_sheets": match &rep.holder { TwoHolderFit::Single(_) => 1, TwoHolderFit::MultiValued(g) => g.len() },
    });
    if let Analysis::Done(p) = &rep.reifenberg {
        let rows: Vec<Vec<String>> = p
            .scales
            .iter()
            .zip(&p.delta)
            .map(|(r, d)| vec![num(*r), num(*d)])
            .collect();
        table(&ctx.out.join("reifenberg.csv"), &["r", "delta"], &rows)?;
        let plot = Plot::new("Reifenberg defect", "r", "δ(r)").log_log().with(Series::line(
            "δ",
            p.scales.iter().copied().zip(p.delta.iter().copied()).collect(),
        ));
        svg(&ctx.out.join("reifenberg.svg"), &plot)?;
        summary["strictly_decreasing"] = json!(p.strictly_decreasing());
        summary["vanishing"] = json!(p.vanishing);
    }
    write_json(&ctx.out.join("reifenberg.json"), &summary)?;
    ok(summary)
}

fn cone(ctx: &Ctx) -> Outcome<Section> {
    let rep = singular_set_report(&ctx.events, ctx.set.time_tol)?;
    let cloud = &rep.cloud;
    let mut diameter: f64 = 0.0;
    for p in cloud.points() {
        for q in cloud.points() {
            diameter = diameter.max(parabolic_distance(p, q)?);
        }
    }
    let mut summary = json!({ "cone": to_value(&rep.cone) });
    let floor = cloud.sampling_floor();
    if diameter > 0.0 && floor.is_finite() && floor < diameter {
        let scales = geometric_scales(diameter, floor * 1.05, 8);
        match cone_profile(cloud, &scales) {
            Ok(p) => {
                let rows: Vec<Vec<String>> = p.rows.iter().map(|r| vec![num(r.r0), num(r.gamma)]).collect();
                table(&ctx.out.join("cone.csv"), &["r0", "gamma"], &rows)?;
                let pts = p
                    .rows
                    .iter()
                    .filter(|r| r.gamma > 0.0)
                    .map(|r| (r.r0, r.gamma))
                    .collect();
                let plot = Plot::new("cone constant", "r0", "γ(r0)")
                    .log_log()
                    .note("zero values are omitted on log axes")
                    .with(Series::line("γ", pts));
                svg(&ctx.out.join("cone.svg"), &plot)?;
                summary["profile"] = to_value(&p);
            }
            Err(Error::Empty(m)) => summary["profile"] = json!({ "empty": m }),
            Err(e) => return Err(e.into()),
        }
    }
    write_json(&ctx.out.join("cone.json"), &summary)?;
    ok(summary)
}

fn clearing(ctx: &Ctx) -> Outcome<Section> {
    let flow = &ctx.flow;
    let lambda0 = if flow.lambda0.is_finite() {
        flow.lambda0.max(1.0)
    } else {
        2.0
    };
    let k = clearing_constants(ctx.set.eta, lambda0, flow.n, 1)?;
    let mut list = Vec::new();
    let mut failed = None;
    for i in representatives(&ctx.events) {
        let e = &ctx.events[i];
        if e.j != Some(1) {
            continue;
        }
        let r2 = e.reference_size * e.reference_size;
        let w = clearing_window_check(flow, e, &k, &geometric_scales(1e-4 * r2, 1e-6 * r2, 3))?;
        if let ClearingVerdict::Violated { s, t, .. } = w.verdict {
            failed = Some(format!("event {i}: a slice meets the cleared ball (s = {s}, t = {t})"));
        }
        let scales: Vec<f64> = [1e-3, 1e-2, 1e-1].iter().map(|s| s * r2).collect();
        let emptiness = match f_emptiness_certificate(flow, e, &scales, 1.0, 1.0, 9, ctx.set.threshold) {
            Ok(c) => json!({
                "points": c.rows.len(),
                "max_f": c.rows.iter().map(|r| r.f).fold(0.0, f64::max),
                "all_certified": c.all_certified,
                "consistent": c.consistent,
                "threshold": c.threshold,
            }),
            Err(Error::HypothesisUnverified(m)) | Err(Error::InvalidParameter { reason: m, .. }) => {
                json!({ "not_applicable": m })
            }
            Err(e) => return Err(e.into()),
        };
        list.push(json!({
            "event": i,
            "kind": kind_name(e.kind),
            "window": to_value(&w),
            "emptiness": emptiness,
        }));
    }
    let summary = json!({ "constants": to_value(&k), "events": list });
    write_json(&ctx.out.join("clearing.json"), &summary)?;
    Ok(Section { summary, failed })
}
