//! Report files. Everything goes through atomic writes.

use std::path::Path;

use mcfsing::io::{write_atomic, write_json};
use mcfsing::svg::Plot;
use serde::Serialize;

use crate::failure::{Failure, Outcome};

pub fn ensure_dir(dir: &Path) -> Outcome<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Invalid(format!("{}: {e}", dir.display())))
}

pub fn json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Outcome<()> {
    Ok(write_json(path, value)?)
}

/// CSV with a header row; cells are preformatted.
pub fn table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Outcome<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| Failure::Invalid(e.to_string());
    w.write_record(header).map_err(bad)?;
    for r in rows {
        w.write_record(r).map_err(bad)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Invalid(e.to_string()))?;
    Ok(write_atomic(path, &bytes)?)
}

pub fn svg(path: &Path, plot: &Plot) -> Outcome<()> {
    Ok(write_atomic(path, plot.render().as_bytes())?)
}

/// Shortest round-trip form; non-finite values as inf, -inf, nan.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}
