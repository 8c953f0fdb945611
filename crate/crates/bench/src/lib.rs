//! Shared scenario builders for the criterion benches.

use ranopt::env::EnvConfig;
use ranopt::geom::Point;
use ranopt::mobility::MobilityConfig;
use ranopt::rsrp::{generate_map, MapGenConfig, RsrpTensor, TiltDictionary};

/// Four-cell, forty-user scenario on a synthetic map.
pub fn desk_scenario() -> (EnvConfig, RsrpTensor) {
    let cfg = EnvConfig {
        num_cells: 4,
        num_users: 40,
        mobility: MobilityConfig {
            num_users: 40,
            ..MobilityConfig::default()
        },
        ..EnvConfig::default()
    };
    let map = generate_map(
        &MapGenConfig {
            grid_spacing_m: 20.0,
            rng_seed: 7,
            ..MapGenConfig::default()
        },
        &TiltDictionary::default_eleven(),
        &[
            Point::new(100.0, 100.0),
            Point::new(300.0, 100.0),
            Point::new(100.0, 300.0),
            Point::new(300.0, 300.0),
        ],
    )
    .expect("static scenario generates");
    (cfg, map)
}
