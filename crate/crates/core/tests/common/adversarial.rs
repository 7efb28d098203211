//! Randomized systems and storms for stress tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sewercast::sim::{Storm, SystemSpec, TransferLimit};

/// A random storm of bursts and dry spells on a random step, over the
/// default system with randomized catchment constants, pump station,
/// transfer delay, tank drain rate and transfer limit.
pub fn adversarial(seed: u64) -> (SystemSpec, Storm) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = [60, 300, 900, 3600][rng.random_range(0..4)];
    let n = rng.random_range(10..400);
    let mut v = vec![0.0; n];
    let mut t = 0;
    while t < n {
        let len = rng.random_range(1..30);
        let level = if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..0.12)
        };
        for x in v.iter_mut().skip(t).take(len) {
            *x = if rng.random_bool(0.1) { 0.0 } else { level };
        }
        t += len;
    }
    let mut sys = SystemSpec::default();
    sys.donor_catchment.k_hours = rng.random_range(0.05..5.0);
    sys.station_catchment.k_hours = rng.random_range(0.05..5.0);
    sys.receiver_catchment.k_hours = rng.random_range(0.05..5.0);
    sys.pump_station.area = rng.random_range(5.0..200.0);
    sys.pump_station.capacity = rng.random_range(100.0..5000.0);
    sys.pump_station.initial_level = rng.random_range(0.0..9.5);
    sys.transfer.delay_steps = rng.random_range(0..10);
    sys.tank_drain_rate = rng.random_range(0.0..2000.0);
    if rng.random_bool(0.3) {
        sys.transfer.limit = TransferLimit::ReceiverAware;
    }
    (sys, Storm::new(0, step, v).unwrap())
}
