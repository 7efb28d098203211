//! Discrete-time mass-balance simulation of two catchments joined by an
//! inter-catchment wastewater transfer (ICWT).
//!
//! The donor catchment drains to a WWTP with an optional storage tank in
//! front of it. Flow the donor plant cannot take, and the tank cannot hold,
//! may be sent through a transfer line to the transfer pump station, which
//! also serves its own local catchment and lifts everything to the receiver
//! WWTP. Whatever no component can take overflows where it stands.
//!
//! Flows are in m³/h, volumes in m³, levels in m, rainfall in mm/s and the
//! step in seconds. Inside a step everything is booked as volume.

mod components;
mod run;
mod spec;
mod storm;
mod suite;

use thiserror::Error;

pub use components::{control_step, pump_station_step, runoff_step, Allocation, PumpState, PumpStep};
pub use run::{
    mass_balance_check, simulate_scenario, BalanceReport, OverflowLedger, Trace, TraceStep, BALANCE_TOLERANCE,
};
pub use spec::{
    CatchmentSpec, PumpStationSpec, ScenarioConfig, SimulationConfig, SystemSpec, TankSpec, TransferLimit,
    TransferSpec, WwtpSpec, SCENARIO_MATRIX,
};
pub use storm::{StochasticStormConfig, Storm};
pub use suite::{run_scenario_suite, standard_block_storm, SuiteResult};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid system spec: {0}")]
    InvalidSpec(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid storm: {0}")]
    InvalidStorm(String),
    #[error("storm step is {storm}s but the scenario step is {scenario}s")]
    StepMismatch { storm: i64, scenario: i64 },
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
