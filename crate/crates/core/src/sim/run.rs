use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::components::{control_step, pump_station_step, runoff_step, PumpState};
use super::spec::{ScenarioConfig, SystemSpec, TransferLimit};
use super::storm::Storm;
use super::SimError;

/// Residuals above this are reported as violations.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// One step of a run. Flow fields are volumes over the step (m³); state
/// fields are values at the end of the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub rain_mm_s: f64,
    pub donor_inflow: f64,
    pub station_inflow: f64,
    pub receiver_inflow: f64,
    pub donor_treated: f64,
    pub tank_in: f64,
    pub tank_drain: f64,
    pub tank_stored: f64,
    pub transfer: f64,
    pub transit_stored: f64,
    pub transfer_arriving: f64,
    pub wet_well_volume: f64,
    pub wet_well_level: f64,
    pub pump_running: bool,
    pub pumped: f64,
    pub station_overflow: f64,
    pub donor_overflow: f64,
    pub receiver_treated: f64,
    pub receiver_overflow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: ScenarioConfig,
    pub initial_tank: f64,
    pub initial_wet_well: f64,
    pub steps: Vec<TraceStep>,
}

const TRACE_HEADER: [&str; 20] = [
    "step",
    "rain_mm_s",
    "donor_inflow_m3",
    "station_inflow_m3",
    "receiver_inflow_m3",
    "donor_treated_m3",
    "tank_in_m3",
    "tank_drain_m3",
    "tank_stored_m3",
    "transfer_m3",
    "transit_stored_m3",
    "transfer_arriving_m3",
    "wet_well_volume_m3",
    "wet_well_level_m",
    "pump_running",
    "pumped_m3",
    "station_overflow_m3",
    "donor_overflow_m3",
    "receiver_treated_m3",
    "receiver_overflow_m3",
];

impl Trace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for s in &self.steps {
            let mut rec = vec![s.step.to_string()];
            rec.extend(
                [
                    s.rain_mm_s,
                    s.donor_inflow,
                    s.station_inflow,
                    s.receiver_inflow,
                    s.donor_treated,
                    s.tank_in,
                    s.tank_drain,
                    s.tank_stored,
                    s.transfer,
                    s.transit_stored,
                    s.transfer_arriving,
                    s.wet_well_volume,
                    s.wet_well_level,
                ]
                .iter()
                .map(f64::to_string),
            );
            rec.push(u8::from(s.pump_running).to_string());
            rec.extend(
                [
                    s.pumped,
                    s.station_overflow,
                    s.donor_overflow,
                    s.receiver_treated,
                    s.receiver_overflow,
                ]
                .iter()
                .map(f64::to_string),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads back a trace written by [`Trace::write_csv`]. The initial
    /// states are not part of the file and must be supplied.
    pub fn read_csv<R: Read>(
        input: R,
        scenario: ScenarioConfig,
        initial_tank: f64,
        initial_wet_well: f64,
    ) -> Result<Self, SimError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(TRACE_HEADER) {
            return Err(SimError::InvalidScenario(format!(
                "unexpected trace header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut steps = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let num = |k: usize| -> Result<f64, SimError> {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| SimError::InvalidScenario(format!("line {line}, {}: {e}", TRACE_HEADER[k])))
            };
            let running = match &rec[14] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(SimError::InvalidScenario(format!(
                        "line {line}, pump_running: `{other}`"
                    )))
                }
            };
            steps.push(TraceStep {
                step: rec[0]
                    .parse()
                    .map_err(|e| SimError::InvalidScenario(format!("line {line}, step: {e}")))?,
                rain_mm_s: num(1)?,
                donor_inflow: num(2)?,
                station_inflow: num(3)?,
                receiver_inflow: num(4)?,
                donor_treated: num(5)?,
                tank_in: num(6)?,
                tank_drain: num(7)?,
                tank_stored: num(8)?,
                transfer: num(9)?,
                transit_stored: num(10)?,
                transfer_arriving: num(11)?,
                wet_well_volume: num(12)?,
                wet_well_level: num(13)?,
                pump_running: running,
                pumped: num(15)?,
                station_overflow: num(16)?,
                donor_overflow: num(17)?,
                receiver_treated: num(18)?,
                receiver_overflow: num(19)?,
            });
        }
        Ok(Self {
            scenario,
            initial_tank,
            initial_wet_well,
            steps,
        })
    }
}

/// Run totals, m³ unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverflowLedger {
    pub scenario: u8,
    pub tank_capacity: f64,
    pub icwt_enabled: bool,
    pub donor_overflow: f64,
    pub station_overflow: f64,
    pub receiver_overflow: f64,
    pub total_overflow: f64,
    pub transferred: f64,
    pub donor_treated: f64,
    pub receiver_treated: f64,
    pub pumped: f64,
    pub max_tank_stored: f64,
    /// m.
    pub max_wet_well_level: f64,
    /// Steps in which a runoff reservoir outflow was capped.
    pub clamp_events: usize,
    pub max_balance_residual: f64,
}

pub(crate) const LEDGER_HEADER: [&str; 15] = [
    "scenario",
    "tank_capacity_m3",
    "icwt",
    "donor_overflow_m3",
    "station_overflow_m3",
    "receiver_overflow_m3",
    "total_overflow_m3",
    "transferred_m3",
    "donor_treated_m3",
    "receiver_treated_m3",
    "pumped_m3",
    "max_tank_stored_m3",
    "max_wet_well_level_m",
    "clamp_events",
    "max_balance_residual",
];

impl OverflowLedger {
    pub(crate) fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.scenario.to_string(),
            self.tank_capacity.to_string(),
            self.icwt_enabled.to_string(),
        ];
        r.extend(
            [
                self.donor_overflow,
                self.station_overflow,
                self.receiver_overflow,
                self.total_overflow,
                self.transferred,
                self.donor_treated,
                self.receiver_treated,
                self.pumped,
                self.max_tank_stored,
                self.max_wet_well_level,
            ]
            .iter()
            .map(f64::to_string),
        );
        r.push(self.clamp_events.to_string());
        r.push(format!("{:e}", self.max_balance_residual));
        r
    }
}

/// Runs one scenario over `storm`.
pub fn simulate_scenario(
    system: &SystemSpec,
    scenario: &ScenarioConfig,
    storm: &Storm,
) -> Result<(OverflowLedger, Trace), SimError> {
    system.validate()?;
    scenario.validate()?;
    if storm.step_seconds != scenario.step_seconds {
        return Err(SimError::StepMismatch {
            storm: storm.step_seconds,
            scenario: scenario.step_seconds,
        });
    }
    let tank = system.tank(scenario.tank_capacity);
    tank.validate()?;
    let ps = &system.pump_station;
    let dt_h = scenario.dt_hours();

    let (mut s_donor, mut s_station, mut s_receiver) = (0.0, 0.0, 0.0);
    let mut stored = tank.initial;
    let mut transit: VecDeque<f64> = std::iter::repeat_n(0.0, system.transfer.delay_steps).collect();
    let mut pump = PumpState::initial(ps);
    let mut last_receiver_inflow = 0.0;
    let mut clamp_events = 0;
    let mut steps = Vec::with_capacity(storm.len());

    for (i, &rain) in storm.intensity.iter().enumerate() {
        let (qd, c1) = runoff_step(&system.donor_catchment, rain, &mut s_donor, dt_h);
        let (qs, c2) = runoff_step(&system.station_catchment, rain, &mut s_station, dt_h);
        let (qr, c3) = runoff_step(&system.receiver_catchment, rain, &mut s_receiver, dt_h);
        clamp_events += usize::from(c1 || c2 || c3);
        let (donor_in, station_in, receiver_in) = (qd * dt_h, qs * dt_h, qr * dt_h);

        let pump_limit = ps.capacity * dt_h;
        let limit = match system.transfer.limit {
            TransferLimit::PumpCapacity => pump_limit,
            // spare receiver capacity as seen at the end of the last step
            TransferLimit::ReceiverAware => {
                pump_limit.min((system.receiver_wwtp.q_max * dt_h - last_receiver_inflow).max(0.0))
            }
        };
        let alloc = control_step(
            &system.donor_wwtp,
            &tank,
            &mut stored,
            donor_in,
            scenario.icwt_enabled,
            limit,
            dt_h,
        );

        transit.push_back(alloc.transfer);
        let arriving = transit.pop_front().unwrap_or(0.0);
        let transit_stored: f64 = transit.iter().sum();

        let p = pump_station_step(ps, &mut pump, station_in + arriving, dt_h);

        let receiver_total = receiver_in + p.pumped;
        let receiver_treated = receiver_total.min(system.receiver_wwtp.q_max * dt_h);
        last_receiver_inflow = receiver_total;

        let step = TraceStep {
            step: i,
            rain_mm_s: rain,
            donor_inflow: donor_in,
            station_inflow: station_in,
            receiver_inflow: receiver_in,
            donor_treated: alloc.treated,
            tank_in: alloc.to_tank,
            tank_drain: alloc.drained,
            tank_stored: stored,
            transfer: alloc.transfer,
            transit_stored,
            transfer_arriving: arriving,
            wet_well_volume: pump.volume,
            wet_well_level: p.level,
            pump_running: pump.running,
            pumped: p.pumped,
            station_overflow: p.overflow,
            donor_overflow: alloc.overflow,
            receiver_treated,
            receiver_overflow: receiver_total - receiver_treated,
        };
        if !step_is_finite(&step) {
            return Err(SimError::NonFinite { step: i });
        }
        steps.push(step);
    }

    let trace = Trace {
        scenario: *scenario,
        initial_tank: tank.initial,
        initial_wet_well: PumpState::initial(ps).volume,
        steps,
    };
    let sum = |f: fn(&TraceStep) -> f64| trace.steps.iter().map(f).sum::<f64>();
    let max = |f: fn(&TraceStep) -> f64| trace.steps.iter().map(f).fold(0.0, f64::max);
    let donor_overflow = sum(|s| s.donor_overflow);
    let station_overflow = sum(|s| s.station_overflow);
    let receiver_overflow = sum(|s| s.receiver_overflow);
    let ledger = OverflowLedger {
        scenario: scenario.id,
        tank_capacity: scenario.tank_capacity,
        icwt_enabled: scenario.icwt_enabled,
        donor_overflow,
        station_overflow,
        receiver_overflow,
        total_overflow: donor_overflow + station_overflow + receiver_overflow,
        transferred: sum(|s| s.transfer),
        donor_treated: sum(|s| s.donor_treated),
        receiver_treated: sum(|s| s.receiver_treated),
        pumped: sum(|s| s.pumped),
        max_tank_stored: max(|s| s.tank_stored).max(tank.initial),
        max_wet_well_level: max(|s| s.wet_well_level).max(ps.initial_level),
        clamp_events,
        max_balance_residual: mass_balance_check(&trace).max_residual,
    };
    Ok((ledger, trace))
}

fn step_is_finite(s: &TraceStep) -> bool {
    [
        s.donor_inflow,
        s.station_inflow,
        s.receiver_inflow,
        s.donor_treated,
        s.tank_stored,
        s.transit_stored,
        s.wet_well_volume,
        s.pumped,
        s.station_overflow,
        s.donor_overflow,
        s.receiver_treated,
        s.receiver_overflow,
    ]
    .iter()
    .all(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Per step, the largest relative residual over the system balance and
    /// the balance of each node (donor split, tank, transfer line, wet
    /// well, receiver).
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub worst_step: Option<usize>,
    /// Steps whose residual exceeds the tolerance.
    pub violations: Vec<usize>,
}

impl BalanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `Σ terms` relative to `Σ |terms|` plus the magnitudes of the states
/// involved, since a storage change carries the rounding of the stored
/// amount rather than of the change.
fn relative(terms: &[f64], states: &[f64]) -> f64 {
    let r: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().chain(states).map(|v| v.abs()).sum();
    if scale > 0.0 {
        r.abs() / scale
    } else {
        0.0
    }
}

/// Checks conservation step by step from the trace alone.
pub fn mass_balance_check(trace: &Trace) -> BalanceReport {
    let mut prev_tank = trace.initial_tank;
    let mut prev_transit = 0.0;
    let mut prev_well = trace.initial_wet_well;
    let mut residuals = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        let d_tank = s.tank_stored - prev_tank;
        let d_transit = s.transit_stored - prev_transit;
        let d_well = s.wet_well_volume - prev_well;
        let states = [
            s.tank_stored,
            prev_tank,
            s.transit_stored,
            prev_transit,
            s.wet_well_volume,
            prev_well,
        ];
        let parts = [
            relative(
                &[
                    s.donor_inflow,
                    s.station_inflow,
                    s.receiver_inflow,
                    -s.donor_treated,
                    -s.donor_overflow,
                    -s.station_overflow,
                    -s.receiver_treated,
                    -s.receiver_overflow,
                    -d_tank,
                    -d_transit,
                    -d_well,
                ],
                &states,
            ),
            relative(
                &[
                    s.donor_inflow,
                    s.tank_drain,
                    -s.donor_treated,
                    -s.tank_in,
                    -s.transfer,
                    -s.donor_overflow,
                ],
                &[],
            ),
            relative(&[s.tank_in, -s.tank_drain, -d_tank], &states[..2]),
            relative(&[s.transfer, -s.transfer_arriving, -d_transit], &states[2..4]),
            relative(
                &[
                    s.station_inflow,
                    s.transfer_arriving,
                    -s.pumped,
                    -s.station_overflow,
                    -d_well,
                ],
                &states[4..],
            ),
            relative(
                &[s.receiver_inflow, s.pumped, -s.receiver_treated, -s.receiver_overflow],
                &[],
            ),
        ];
        residuals.push(parts.iter().fold(0.0, |a: f64, &b| a.max(b)));
        prev_tank = s.tank_stored;
        prev_transit = s.transit_stored;
        prev_well = s.wet_well_volume;
    }
    let worst_step = (0..residuals.len()).max_by(|&a, &b| residuals[a].total_cmp(&residuals[b]));
    BalanceReport {
        max_residual: worst_step.map(|k| residuals[k]).unwrap_or(0.0),
        worst_step,
        violations: (0..residuals.len())
            .filter(|&k| residuals[k].is_nan() || residuals[k] >= BALANCE_TOLERANCE)
            .collect(),
        residuals,
    }
}
