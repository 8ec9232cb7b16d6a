use mcfsing::io::{cloud_to_json, write_atomic, write_json};
use mcfsing::svg::{Plot, Series};
use mcfsing::synthetic::{self, GeneratorSpec};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::failure::{Failure, Outcome};
use crate::output::svg;
use crate::SynthArgs;

fn defaults(kind: &str) -> Outcome<Value> {
    Ok(match kind {
        "figure1" => json!({ "count": 40 }),
        "four_points" => json!({ "eps": 0.1 }),
        "three_sequences" => json!({ "eps": 0.5, "levels": 12 }),
        "koch" => json!({ "level": 5 }),
        "tilted_line" => json!({ "slope": 1.0, "count": 101 }),
        "parabolic_cone_boundary" => json!({ "dim": 1, "count": 200 }),
        "slice_disk" => json!({ "dim": 2, "ambient": 3, "count": 10 }),
        _ => return Err(Failure::Invalid(format!("unknown synthetic kind `{kind}`"))),
    })
}

/// Built-in defaults for the kind, then the `[synthetic]` table, then flags.
fn spec(a: &SynthArgs, cfg: &RunConfig) -> Outcome<GeneratorSpec> {
    let table = &cfg.synthetic;
    let kind = match (&a.kind, table.get("kind").and_then(|v| v.as_str())) {
        (Some(k), _) => k.to_lowercase().replace('-', "_"),
        (None, Some(k)) => k.to_lowercase().replace('-', "_"),
        (None, None) => return Err(Failure::Invalid("--kind is required".into())),
    };
    let mut fields: Map<String, Value> = match defaults(&kind)? {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    for (k, v) in table {
        if k != "kind" {
            let v = serde_json::to_value(v).map_err(|e| Failure::Invalid(e.to_string()))?;
            fields.insert(k.clone(), v);
        }
    }
    let flags = [
        ("eps", a.eps.map(Value::from)),
        ("count", a.count.map(Value::from)),
        ("levels", a.levels.map(Value::from)),
        ("level", a.level.map(Value::from)),
        ("slope", a.slope.map(Value::from)),
        ("dim", a.dim.map(Value::from)),
        ("ambient", a.ambient.map(Value::from)),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            fields.insert(k.into(), v);
        }
    }
    // drop keys the chosen kind does not take so a shared config stays usable
    let wanted = defaults(&kind)?;
    fields.retain(|k, _| wanted.get(k).is_some());
    fields.insert("kind".into(), Value::from(kind));
    let spec: GeneratorSpec =
        serde_json::from_value(Value::Object(fields)).map_err(|e| Failure::Invalid(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn generate(a: &SynthArgs, cfg: &RunConfig) -> Outcome<()> {
    let spec = spec(a, cfg)?;
    let cloud = synthetic::generate(&spec)?;
    let text = cloud_to_json(&cloud)?;
    match &a.out {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            println!("{} points of {} written to {}", cloud.len(), spec.name(), p.display());
        }
        None => println!("{text}"),
    }
    if let Some(p) = &a.plot {
        let pts = cloud.points().iter().map(|q| (q.x[0], q.t)).collect();
        let plot = Plot::new(spec.name(), "first spatial coordinate", "t")
            .note("parabolic units: a time offset τ has the size of a length sqrt(τ)")
            .with(Series::markers("points", pts));
        svg(p, &plot)?;
    }
    Ok(())
}

pub fn verify(a: &SynthArgs, cfg: &RunConfig) -> Outcome<()> {
    let spec = spec(a, cfg)?;
    let checks = synthetic::verify(&spec)?;
    for c in &checks {
        println!(
            "{} {}: expected {}, observed {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.expected,
            c.observed,
            c.detail
        );
    }
    if let Some(p) = &a.out {
        write_json(p, &json!({ "spec": spec, "checks": checks }))?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )))
    }
}
