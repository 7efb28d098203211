use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;

/// Tank capacity (m³) and ICWT switch for each of the eight scenarios.
pub const SCENARIO_MATRIX: [(u8, f64, bool); 8] = [
    (1, 0.0, false),
    (2, 1_000.0, false),
    (3, 5_000.0, false),
    (4, 20_000.0, false),
    (5, 0.0, true),
    (6, 1_000.0, true),
    (7, 5_000.0, true),
    (8, 20_000.0, true),
];

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::InvalidSpec(what()))
    }
}

fn finite_nonneg(name: &str, v: f64) -> Result<(), SimError> {
    check(v.is_finite() && v >= 0.0, || {
        format!("{name} must be finite and >= 0, got {v}")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WwtpSpec {
    /// Dimensioning flow, m³/h. Reported only; diversion starts at `q_max`.
    pub q_dim: f64,
    /// Maximum treatable flow, m³/h.
    pub q_max: f64,
}

impl WwtpSpec {
    /// Muusøya.
    pub fn donor() -> Self {
        Self {
            q_dim: 780.0,
            q_max: 1_200.0,
        }
    }

    /// Solumstrand.
    pub fn receiver() -> Self {
        Self {
            q_dim: 2_000.0,
            q_max: 4_000.0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<(), SimError> {
        check(
            self.q_dim.is_finite() && self.q_max.is_finite() && 0.0 < self.q_dim && self.q_dim <= self.q_max,
            || format!("{name}: need 0 < q_dim <= q_max, got {} and {}", self.q_dim, self.q_max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TankSpec {
    /// m³; 0 means no tank.
    pub capacity: f64,
    /// Upper bound on drain-back to the donor WWTP, m³/h.
    pub drain_rate: f64,
    /// Stored volume at the start, m³.
    pub initial: f64,
}

impl TankSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        finite_nonneg("tank capacity", self.capacity)?;
        finite_nonneg("tank drain rate", self.drain_rate)?;
        finite_nonneg("initial tank storage", self.initial)?;
        check(self.initial <= self.capacity, || {
            format!(
                "initial tank storage {} exceeds capacity {}",
                self.initial, self.capacity
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpStationSpec {
    /// Wet-well plan area, m²; stored volume = area × level.
    pub area: f64,
    /// m³/h.
    pub capacity: f64,
    pub start_level: f64,
    pub stop_level: f64,
    pub weir_level: f64,
    pub initial_level: f64,
}

impl Default for PumpStationSpec {
    fn default() -> Self {
        Self {
            area: 60.0,
            capacity: 2_000.0,
            start_level: 6.0,
            stop_level: 2.0,
            weir_level: 9.5,
            initial_level: 2.0,
        }
    }
}

impl PumpStationSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        check(self.area.is_finite() && self.area > 0.0, || {
            format!("wet-well area must be > 0, got {}", self.area)
        })?;
        check(self.capacity.is_finite() && self.capacity > 0.0, || {
            format!("pump capacity must be > 0, got {}", self.capacity)
        })?;
        finite_nonneg("stop level", self.stop_level)?;
        check(
            self.stop_level < self.start_level && self.start_level < self.weir_level && self.weir_level.is_finite(),
            || {
                format!(
                    "need stop < start < weir, got {} / {} / {}",
                    self.stop_level, self.start_level, self.weir_level
                )
            },
        )?;
        finite_nonneg("initial wet-well level", self.initial_level)?;
        check(self.initial_level <= self.weir_level, || {
            format!("initial level {} is above the weir", self.initial_level)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatchmentSpec {
    /// Effective contributing area, m².
    pub area: f64,
    pub runoff_coefficient: f64,
    /// Linear-reservoir constant, hours.
    pub k_hours: f64,
    /// Dry-weather flow, m³/h.
    pub dry_weather_flow: f64,
}

impl CatchmentSpec {
    pub fn validate(&self, name: &str) -> Result<(), SimError> {
        finite_nonneg(&format!("{name} area"), self.area)?;
        finite_nonneg(&format!("{name} dry-weather flow"), self.dry_weather_flow)?;
        check((0.0..=1.0).contains(&self.runoff_coefficient), || {
            format!(
                "{name}: runoff coefficient must be in [0, 1], got {}",
                self.runoff_coefficient
            )
        })?;
        check(self.k_hours.is_finite() && self.k_hours > 0.0, || {
            format!("{name}: reservoir constant must be > 0 h, got {}", self.k_hours)
        })
    }
}

/// What bounds the flow sent through the transfer line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferLimit {
    /// Pump capacity only.
    #[default]
    PumpCapacity,
    /// Pump capacity and the receiver WWTP's spare capacity in the same
    /// step.
    ReceiverAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSpec {
    /// Steps between leaving the donor side and reaching the wet well.
    pub delay_steps: usize,
    #[serde(default)]
    pub limit: TransferLimit,
}

impl Default for TransferSpec {
    fn default() -> Self {
        Self {
            delay_steps: 6,
            limit: TransferLimit::PumpCapacity,
        }
    }
}

/// Everything except the scenario switches and the storm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub donor_wwtp: WwtpSpec,
    pub receiver_wwtp: WwtpSpec,
    pub donor_catchment: CatchmentSpec,
    /// Local catchment of the transfer pump station.
    pub station_catchment: CatchmentSpec,
    /// Receiver catchment apart from the pump station's.
    pub receiver_catchment: CatchmentSpec,
    pub pump_station: PumpStationSpec,
    pub transfer: TransferSpec,
    /// m³/h.
    pub tank_drain_rate: f64,
    /// m³; must fit in every tank the scenario uses.
    pub tank_initial: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            donor_wwtp: WwtpSpec::donor(),
            receiver_wwtp: WwtpSpec::receiver(),
            donor_catchment: CatchmentSpec {
                area: 2_000_000.0,
                runoff_coefficient: 0.4,
                k_hours: 3.0,
                dry_weather_flow: 450.0,
            },
            station_catchment: CatchmentSpec {
                area: 400_000.0,
                runoff_coefficient: 0.4,
                k_hours: 0.25,
                dry_weather_flow: 250.0,
            },
            receiver_catchment: CatchmentSpec {
                area: 800_000.0,
                runoff_coefficient: 0.35,
                k_hours: 1.5,
                dry_weather_flow: 1_300.0,
            },
            pump_station: PumpStationSpec::default(),
            transfer: TransferSpec::default(),
            tank_drain_rate: 600.0,
            tank_initial: 0.0,
        }
    }
}

impl SystemSpec {
    pub fn tank(&self, capacity: f64) -> TankSpec {
        TankSpec {
            capacity,
            drain_rate: self.tank_drain_rate,
            initial: self.tank_initial,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.donor_wwtp.validate("donor WWTP")?;
        self.receiver_wwtp.validate("receiver WWTP")?;
        self.donor_catchment.validate("donor catchment")?;
        self.station_catchment.validate("station catchment")?;
        self.receiver_catchment.validate("receiver catchment")?;
        self.pump_station.validate()?;
        finite_nonneg("tank drain rate", self.tank_drain_rate)?;
        finite_nonneg("initial tank storage", self.tank_initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: u8,
    /// m³.
    pub tank_capacity: f64,
    pub icwt_enabled: bool,
    pub step_seconds: i64,
}

impl ScenarioConfig {
    /// Scenario `id` (1..=8) with its tank and ICWT setting filled in.
    pub fn standard(id: u8, step_seconds: i64) -> Result<Self, SimError> {
        let &(_, tank_capacity, icwt_enabled) = SCENARIO_MATRIX
            .iter()
            .find(|s| s.0 == id)
            .ok_or_else(|| SimError::InvalidScenario(format!("scenario id must be 1..=8, got {id}")))?;
        let cfg = Self {
            id,
            tank_capacity,
            icwt_enabled,
            step_seconds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn all(step_seconds: i64) -> Result<Vec<Self>, SimError> {
        SCENARIO_MATRIX
            .iter()
            .map(|s| Self::standard(s.0, step_seconds))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let Some(&(_, tank, icwt)) = SCENARIO_MATRIX.iter().find(|s| s.0 == self.id) else {
            return Err(SimError::InvalidScenario(format!(
                "scenario id must be 1..=8, got {}",
                self.id
            )));
        };
        if tank != self.tank_capacity || icwt != self.icwt_enabled {
            return Err(SimError::InvalidScenario(format!(
                "scenario {} is tank {tank} m³ with ICWT {}, got tank {} m³ with ICWT {}",
                self.id,
                if icwt { "on" } else { "off" },
                self.tank_capacity,
                if self.icwt_enabled { "on" } else { "off" },
            )));
        }
        if self.step_seconds <= 0 {
            return Err(SimError::InvalidScenario(format!(
                "step must be positive, got {}s",
                self.step_seconds
            )));
        }
        Ok(())
    }

    pub fn dt_hours(&self) -> f64 {
        self.step_seconds as f64 / 3600.0
    }
}

/// Contents of a simulation config file.
///
/// ```toml
/// step_seconds = 300
/// scenarios = [1, 5, 8]       # omit for all eight
/// storm = "storm.csv"         # omit for the standard block storm
///
/// [system.pump_station]
/// area = 60.0
/// # ...
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_step")]
    pub step_seconds: i64,
    #[serde(default)]
    pub scenarios: Option<Vec<u8>>,
    /// Relative paths are resolved against the config file's directory.
    #[serde(default)]
    pub storm: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSpec,
}

fn default_step() -> i64 {
    crate::timeseries::DEFAULT_STEP_SECONDS
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            step_seconds: default_step(),
            scenarios: None,
            storm: None,
            system: SystemSpec::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.system.validate()?;
        cfg.scenario_configs()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(storm), Some(dir)) = (&cfg.storm, path.parent()) {
            if storm.is_relative() {
                cfg.storm = Some(dir.join(storm));
            }
        }
        Ok(cfg)
    }

    pub fn scenario_configs(&self) -> Result<Vec<ScenarioConfig>, SimError> {
        match &self.scenarios {
            None => ScenarioConfig::all(self.step_seconds),
            Some(ids) if ids.is_empty() => Err(SimError::Config("empty scenario list".into())),
            Some(ids) => ids
                .iter()
                .map(|&id| ScenarioConfig::standard(id, self.step_seconds))
                .collect(),
        }
    }
}
