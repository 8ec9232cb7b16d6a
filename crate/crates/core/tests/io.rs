use mcfsing::flows::{
    analytic_flow, detect_singularities, rotsym_mcf_run, AnalyticFlow, Controls, DetectOptions, InitialProfile,
};
use mcfsing::io::*;
use mcfsing::synthetic::{generate, GeneratorSpec};

#[test]
fn cloud_json_is_an_array_of_points() {
    let c = generate(&GeneratorSpec::Figure1 { count: 3 }).unwrap();
    let s = cloud_to_json(&c).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(v[1]["x"][0], 0.5);
    assert_eq!(v[1]["t"], 1.0 / 16.0);
    assert_eq!(cloud_from_json(&s).unwrap(), c);
}

#[test]
fn labelled_cloud_round_trips() {
    let c = generate(&GeneratorSpec::FourPoints { eps: 0.1 })
        .unwrap()
        .with_labels(vec![0, 0, 1, 1])
        .unwrap();
    assert_eq!(cloud_from_json(&cloud_to_json(&c).unwrap()).unwrap(), c);
    assert!(cloud_from_json(r#"[{"x":[0],"t":0,"label":1},{"x":[1],"t":0}]"#).is_err());
}

#[test]
fn csv_has_header_and_non_finite_markers() {
    let s = csv_string(&["s", "eta"], &[vec![1.0, 0.5], vec![0.1, f64::INFINITY]]).unwrap();
    assert_eq!(s, "s,eta\n1,0.5\n0.1,inf\n");
    assert!(csv_string(&["a"], &[vec![1.0, 2.0]]).is_err());
}

#[test]
fn analytic_archive_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let flow = analytic_flow(
        AnalyticFlow::Sphere {
            center: vec![0.0; 3],
            r0: 2.0,
        },
        &[0.0, 0.25, 0.5],
    )
    .unwrap();
    write_flow_archive(dir.path(), &flow, serde_json::json!({"kind": "sphere"})).unwrap();
    let back = read_flow_archive(dir.path()).unwrap();
    assert_eq!(back, flow);
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.snapshots.len(), 3);
    assert_eq!(m.controls["kind"], "sphere");
}

#[test]
fn simulated_archive_and_events_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let init = InitialProfile::sphere_cap(1.0, 40).unwrap();
    let flow = rotsym_mcf_run(&init, &Controls::default()).unwrap();
    let ctrl = serde_json::to_value(Controls::default()).unwrap();
    write_flow_archive(dir.path(), &flow, ctrl).unwrap();
    let back = read_flow_archive(dir.path()).unwrap();
    assert_eq!(back.snapshots.len(), flow.snapshots.len());
    assert_eq!(back.events, flow.events);

    let ev = detect_singularities(&flow, &DetectOptions::default()).unwrap();
    write_singular_events(dir.path(), &ev).unwrap();
    let ev2 = read_singular_events(dir.path()).unwrap();
    assert_eq!(ev2.len(), ev.len());
    assert_eq!(ev2[0].location, ev[0].location);
    // No temporary files are left behind.
    let stray = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp"))
        .count();
    assert_eq!(stray, 0);
}

#[test]
fn missing_archive_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_flow_archive(dir.path()), Err(mcfsing::Error::Io(_))));
}
