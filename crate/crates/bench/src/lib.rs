//! Fixtures shared by the benchmarks.

use itskit::dataset_io::ScenarioRecording;
use itskit::its_types::{
    BasicContainer, DeltaPosition, HighFrequencyContainer, LowFrequencyContainer, ReferencePosition,
};
use itskit::trafficgen::{self, EgoSource, FleetConfig, RecordOptions, RsuConfig, SimConfig, Simulation};
use itskit::{Cam, ItsMessage, MessageType};

/// A CAM with every container populated.
pub fn full_cam(station_id: u32) -> Cam {
    let mut cam = Cam::minimal(station_id);
    cam.generation_delta_time = 4242;
    cam.basic = BasicContainer {
        station_type: 5,
        reference_position: ReferencePosition::from_degrees(50.7753, 6.0839, 210.0),
    };
    cam.high_frequency = HighFrequencyContainer {
        heading: 900,
        speed: 1389,
        vehicle_length: 45,
        vehicle_width: 18,
        vertical_acceleration: Some(3),
        ..HighFrequencyContainer::UNAVAILABLE
    };
    cam.low_frequency = Some(LowFrequencyContainer {
        vehicle_role: 0,
        exterior_lights: 0b0000_0100,
        path_history: (0..23)
            .map(|i| DeltaPosition {
                delta_latitude: -120 * i,
                delta_longitude: 80 * i,
                delta_altitude: 0,
            })
            .collect(),
    });
    cam
}

/// A mixed urban scene: a fleet, one signalized intersection.
pub fn scene(n_stations: u32, duration_s: f64) -> SimConfig {
    let mut cfg = SimConfig::new(duration_s, 7);
    cfg.fleet = Some(FleetConfig::new(n_stations));
    cfg.rsus.push(RsuConfig {
        station_id: 1,
        position: trafficgen::DEFAULT_CENTER,
        intersection_id: 11,
        signal_groups: 8,
        spatem_interval_ms: 100,
        mapem_interval_ms: 1000,
        cycle_s: 60,
    });
    cfg
}

pub fn simulation(n_stations: u32, duration_s: f64) -> Simulation {
    trafficgen::simulate(&scene(n_stations, duration_s)).expect("valid scene")
}

pub fn recorded(sim: &Simulation) -> Vec<ScenarioRecording> {
    let opts = RecordOptions {
        ego: EgoSource::Static(trafficgen::DEFAULT_CENTER),
        ..RecordOptions::default()
    };
    trafficgen::record(sim, &opts, Vec::new()).expect("records")
}

/// One representative message of `t` taken from a simulated scene.
pub fn sample(sim: &Simulation, t: MessageType) -> ItsMessage {
    sim.messages
        .iter()
        .map(|m| m.message.clone())
        .find(|m| m.message_type() == t)
        .expect("scene emits every type it is asked for")
}
