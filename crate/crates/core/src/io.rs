//! Persistence: JSON point clouds and flow archives, CSV traces.

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`, since JSON has no literal for them.
pub mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// [`ext_f64`] applied to both entries of a list of pairs.
pub mod ext_f64_pairs {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair(
        #[serde(with = "super::ext_f64")] f64,
        #[serde(with = "super::ext_f64")] f64,
    );

    pub fn serialize<S: Serializer>(v: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &(a, b) in v {
            seq.serialize_element(&Pair(a, b))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
        Ok(Vec::<Pair>::deserialize(d)?.into_iter().map(|p| (p.0, p.1)).collect())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{AnalyticFlow, Flow, FlowSnapshot, RawEvent, SingularEvent, Symmetry};
use crate::spacetime::{PointCloud, SpaceTimePoint};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&s).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// CSV with a header row. Non-finite values are written as `inf`, `-inf`, `nan`.
pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |v: f64| {
        if v.is_nan() {
            "nan".to_string()
        } else if v.is_infinite() {
            if v > 0.0 { "inf" } else { "-inf" }.to_string()
        } else {
            format!("{v}")
        }
    };
    w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Format(format!(
                "row of {} values for {} columns",
                r.len(),
                header.len()
            )));
        }
        w.write_record(r.iter().map(|v| fmt(*v)))
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_atomic(path, csv_string(header, rows)?.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct CloudEntry {
    x: Vec<f64>,
    t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
}

/// Point cloud as a JSON array of `{"x": [...], "t": ...}` entries, with an
/// optional `"label"` per entry.
pub fn cloud_to_json(cloud: &PointCloud) -> Result<String> {
    let labels = cloud.labels();
    let entries: Vec<CloudEntry> = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| CloudEntry {
            x: p.x.clone(),
            t: p.t,
            label: labels.map(|l| l[i]),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&entries)?)
}

pub fn cloud_from_json(s: &str) -> Result<PointCloud> {
    let entries: Vec<CloudEntry> = serde_json::from_str(s)?;
    let labelled = entries.iter().filter(|e| e.label.is_some()).count();
    if labelled != 0 && labelled != entries.len() {
        return Err(Error::Format("either every point or no point carries a label".into()));
    }
    let labels: Vec<usize> = entries.iter().filter_map(|e| e.label).collect();
    let cloud = PointCloud::new(entries.into_iter().map(|e| SpaceTimePoint::new(e.x, e.t)).collect())?;
    if labelled == 0 {
        Ok(cloud)
    } else {
        cloud.with_labels(labels)
    }
}

pub const ARCHIVE_FORMAT: &str = "mcfsing-flow/1";
const MANIFEST: &str = "manifest.json";
const EVENTS: &str = "events.json";
const SINGULAR: &str = "singular_events.json";
const SNAPSHOTS: &str = "snapshots";

/// Index of a flow archive directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub n: usize,
    pub symmetry: Symmetry,
    #[serde(with = "ext_f64")]
    pub lambda0: f64,
    pub analytic: Option<AnalyticFlow>,
    /// Solver or generator settings the flow was produced with.
    pub controls: serde_json::Value,
    pub snapshots: Vec<SnapshotEntry>,
    pub events: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

/// Writes `manifest.json`, `events.json` and one JSON file per snapshot
/// under `snapshots/`.
pub fn write_flow_archive(dir: &Path, flow: &Flow, controls: serde_json::Value) -> Result<()> {
    let snap_dir = dir.join(SNAPSHOTS);
    fs::create_dir_all(&snap_dir)?;
    let mut entries = Vec::with_capacity(flow.snapshots.len());
    for (i, s) in flow.snapshots.iter().enumerate() {
        let file = format!("{SNAPSHOTS}/{i:06}.json");
        write_json(&dir.join(&file), s)?;
        entries.push(SnapshotEntry { t: s.t, file });
    }
    write_json(&dir.join(EVENTS), &flow.events)?;
    let manifest = Manifest {
        format: ARCHIVE_FORMAT.into(),
        n: flow.n,
        symmetry: flow.symmetry.clone(),
        lambda0: flow.lambda0,
        analytic: flow.analytic.clone(),
        controls,
        snapshots: entries,
        events: EVENTS.into(),
    };
    // The manifest goes last so a readable manifest implies a complete archive.
    write_json(&dir.join(MANIFEST), &manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let m: Manifest = read_json(&dir.join(MANIFEST))?;
    if m.format != ARCHIVE_FORMAT {
        return Err(Error::Format(format!("unknown archive format {}", m.format)));
    }
    Ok(m)
}

pub fn read_flow_archive(dir: &Path) -> Result<Flow> {
    let m = read_manifest(dir)?;
    let snapshots = m
        .snapshots
        .iter()
        .map(|e| read_json::<FlowSnapshot>(&dir.join(&e.file)))
        .collect::<Result<Vec<_>>>()?;
    let events: Vec<RawEvent> = read_json(&dir.join(&m.events))?;
    Ok(Flow {
        n: m.n,
        snapshots,
        lambda0: m.lambda0,
        symmetry: m.symmetry,
        events,
        analytic: m.analytic,
    })
}

/// Detected singular events stored next to the archive.
pub fn write_singular_events(dir: &Path, events: &[SingularEvent]) -> Result<PathBuf> {
    let path = dir.join(SINGULAR);
    write_json(&path, events)?;
    Ok(path)
}

pub fn read_singular_events(dir: &Path) -> Result<Vec<SingularEvent>> {
    read_json(&dir.join(SINGULAR))
}
