use mcfsing_web::{figure1_profile, NeckPinch};

#[test]
fn neckpinch_frames_and_trace() {
    let run = NeckPinch::run(0.15, 1.2, 0.1, 200).unwrap();
    assert!(run.frame_count() > 10);
    let first = run.frame(0);
    assert_eq!(first["t"].as_f64(), Some(0.0));
    assert_eq!(first["profiles"].as_array().unwrap().len(), 1);
    // past the pinch the profile has split in two
    let split = (0..run.frame_count()).any(|i| run.frame(i)["profiles"].as_array().unwrap().len() == 2);
    assert!(split);

    let events = run.events();
    let kinds: Vec<&str> = events
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["pinch", "extinction", "extinction"]);

    let tr = run.density_trace(0, 0.0).unwrap();
    assert_eq!(tr["holds"].as_bool(), Some(true));
    let taus = tr["taus"].as_array().unwrap();
    let values = tr["values"].as_array().unwrap();
    assert_eq!(taus.len(), values.len());
    assert!(taus.len() > 5);
    // off-centre the area still decreases along the flow
    let off = run.density_trace(0, 0.3).unwrap();
    assert_eq!(off["holds"].as_bool(), Some(true));
    assert!(run.density_trace(7, 0.0).is_err());
}

#[test]
fn figure1_holder_and_cone() {
    let v = figure1_profile(30).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 31);
    // consecutive points (1/k, 1/k^4) have |Δt| / |Δx|^2 at most 15/4 (k = 1)
    let c = v["holder"]["constant"].as_f64().unwrap();
    assert!((c - 3.75).abs() < 1e-9, "{c}");
    let rows = v["cone"]["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(figure1_profile(0).is_err());
}
