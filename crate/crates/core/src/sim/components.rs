use serde::{Deserialize, Serialize};

use super::spec::{CatchmentSpec, PumpStationSpec, TankSpec, WwtpSpec};

/// Advances a catchment's linear reservoir by one step and returns the
/// inflow it delivers to the sewer (m³/h) and whether the outflow had to be
/// clamped to keep storage non-negative.
///
/// `storage` is in m³ and `rain` in mm/s. The outflow over the step is the
/// storage at its start divided by `k`; it is capped at what the reservoir
/// holds, which only binds when the step is longer than `k`.
pub fn runoff_step(c: &CatchmentSpec, rain: f64, storage: &mut f64, dt_h: f64) -> (f64, bool) {
    // mm/s over m² -> m³/h
    let input = c.runoff_coefficient * c.area * rain * 3.6;
    let mut out = *storage / c.k_hours;
    let available = *storage / dt_h + input;
    let clamped = out > available;
    if clamped {
        out = available;
    }
    *storage = (*storage + (input - out) * dt_h).max(0.0);
    (c.dry_weather_flow + out, clamped)
}

/// Where the donor inflow of one step went, in m³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Allocation {
    /// Direct treatment plus tank drain-back.
    pub treated: f64,
    pub to_tank: f64,
    pub drained: f64,
    pub transfer: f64,
    pub overflow: f64,
}

/// Splits one step of donor inflow (m³) by priority: treatment up to
/// `q_max`, then the tank, then the transfer line (when enabled, up to
/// `transfer_limit` m³), then overflow. With spare treatment capacity the
/// tank drains back at up to its drain rate.
pub fn control_step(
    wwtp: &WwtpSpec,
    tank: &TankSpec,
    stored: &mut f64,
    inflow: f64,
    icwt_enabled: bool,
    transfer_limit: f64,
    dt_h: f64,
) -> Allocation {
    let q_max = wwtp.q_max * dt_h;
    if inflow <= q_max {
        let drained = (q_max - inflow).min(tank.drain_rate * dt_h).min(*stored);
        *stored -= drained;
        return Allocation {
            treated: inflow + drained,
            drained,
            ..Default::default()
        };
    }
    let excess = inflow - q_max;
    let to_tank = excess.min((tank.capacity - *stored).max(0.0));
    *stored += to_tank;
    // anything left over means the tank is full
    let rest = excess - to_tank;
    let transfer = if icwt_enabled {
        rest.min(transfer_limit.max(0.0))
    } else {
        0.0
    };
    Allocation {
        treated: q_max,
        to_tank,
        drained: 0.0,
        transfer,
        overflow: rest - transfer,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpState {
    /// Wet-well volume, m³.
    pub volume: f64,
    pub running: bool,
}

impl PumpState {
    pub fn initial(spec: &PumpStationSpec) -> Self {
        Self {
            volume: spec.initial_level * spec.area,
            running: spec.initial_level >= spec.start_level,
        }
    }

    pub fn level(&self, spec: &PumpStationSpec) -> f64 {
        self.volume / spec.area
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpStep {
    /// m³ lifted this step.
    pub pumped: f64,
    /// m³ spilled over the weir this step.
    pub overflow: f64,
    /// Level at the end of the step, m.
    pub level: f64,
}

/// One step of the wet well with `inbound` m³ arriving.
///
/// The pumps switch on when the level reaches the start level and off when
/// it falls to the stop level; while on they lift up to capacity but never
/// below the stop level. Whatever stands above the weir afterwards spills.
pub fn pump_station_step(spec: &PumpStationSpec, state: &mut PumpState, inbound: f64, dt_h: f64) -> PumpStep {
    state.volume += inbound;
    let level = state.volume / spec.area;
    if level >= spec.start_level {
        state.running = true;
    } else if level <= spec.stop_level {
        state.running = false;
    }
    let mut pumped = 0.0;
    if state.running {
        let floor = spec.stop_level * spec.area;
        pumped = (spec.capacity * dt_h).min((state.volume - floor).max(0.0));
        state.volume -= pumped;
        if state.volume <= floor {
            state.running = false;
        }
    }
    let crest = spec.weir_level * spec.area;
    let overflow = (state.volume - crest).max(0.0);
    state.volume -= overflow;
    PumpStep {
        pumped,
        overflow,
        level: state.volume / spec.area,
    }
}
