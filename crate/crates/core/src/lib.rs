//! Multi-step water-level forecasting for sewage pump stations and a
//! mass-balance simulator for inter-catchment wastewater transfer.

pub mod forecaster;
pub mod metrics;
pub mod nn;
pub mod sim;
pub mod svr;
pub mod synthetic;
pub mod timeseries;
