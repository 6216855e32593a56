use itskit::analyzer::{self, CategoryRule, TrajectoryFilter};
use itskit::trafficgen::{self, EgoSource, RecordOptions, SimConfig, StationConfig};
use itskit::dataset_io::ScenarioRecording;

fn drive(label: &str, station_id: u32, route: Vec<[f64; 2]>) -> Vec<ScenarioRecording> {
    let mut cfg = SimConfig::new(60.0, u64::from(station_id));
    cfg.stations.push(StationConfig {
        station_id,
        station_type: 5,
        route,
        speeds_mps: vec![15.0],
        start_s: 0.0,
        vehicle_length: 45,
        vehicle_width: 18,
    });
    let sim = trafficgen::simulate(&cfg).unwrap();
    let opts = RecordOptions {
        label: Some(label.into()),
        ego: EgoSource::Follow(station_id),
        ..RecordOptions::default()
    };
    trafficgen::record(&sim, &opts, Vec::new()).unwrap()
}

fn corpus() -> Vec<ScenarioRecording> {
    let mut all = drive("Urban", 1, vec![[50.7753, 6.0839], [50.7790, 6.0839]]);
    all.extend(drive("Highway", 2, vec![[50.80, 6.10], [50.80, 6.11]]));
    all.extend(drive("Urban", 3, vec![[50.7700, 6.0800], [50.7700, 6.0850]]));
    all
}

#[test]
fn categories_follow_labels_and_total_sums() {
    let report = analyzer::stats(&corpus(), CategoryRule::Label).unwrap();
    let names: Vec<&str> = report.categories.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["Highway", "Urban"]);
    let urban = &report.categories[1];
    assert_eq!(urban.n_unique_stations, 2);
    let cams: u64 = report.categories.iter().map(|c| c.n_cam).sum();
    assert_eq!(report.total.n_cam, cams);
    assert!((urban.cam_distance_km - (0.4114 + 0.3517)).abs() < 0.01, "{}", urban.cam_distance_km);

    let table = analyzer::stats_table(&report);
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.headers[0], "Type of Measurement");
    assert!(table.to_text().lines().count() == 5);
    assert!(table.to_csv().starts_with("Type of Measurement,"));
}

#[test]
fn empty_dataset_is_an_error() {
    assert!(matches!(
        analyzer::stats(&[], CategoryRule::Single),
        Err(analyzer::AnalyzerError::EmptyDataset)
    ));
}

#[test]
fn trajectories_are_valid_geojson() {
    let fc = analyzer::trajectories(&corpus(), TrajectoryFilter { station_id: Some(2) });
    assert_eq!(fc.features.len(), 1);
    let text = fc.to_string();
    let parsed: geojson::GeoJson = text.parse().unwrap();
    let geojson::GeoJson::FeatureCollection(back) = parsed else {
        panic!("not a FeatureCollection");
    };
    let f = &back.features[0];
    assert_eq!(f.property("station_id").unwrap(), 2);
    match &f.geometry.as_ref().unwrap().value {
        geojson::GeometryValue::LineString { coordinates: coords } => {
            // [lon, lat] order
            assert!((coords[0][0] - 6.10).abs() < 1e-6);
            assert!((coords[0][1] - 50.80).abs() < 1e-6);
        }
        other => panic!("expected LineString, got {other:?}"),
    }
}
