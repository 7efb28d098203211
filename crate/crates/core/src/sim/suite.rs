use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::run::{simulate_scenario, OverflowLedger, Trace, LEDGER_HEADER};
use super::spec::{ScenarioConfig, SystemSpec};
use super::storm::Storm;
use super::SimError;

/// Scenarios listed in the pump-station table.
const STATION_TABLE_SCENARIOS: [u8; 5] = [1, 5, 6, 7, 8];

/// Two hours of 0.006 mm/s (21.6 mm/h) after one dry hour, then 22 dry
/// hours so tanks and wet well can settle.
pub fn standard_block_storm(step_seconds: i64) -> Result<Storm, SimError> {
    let per_hour = (3600 / step_seconds).max(1) as usize;
    Storm::block(step_seconds, per_hour, 2 * per_hour, 0.006, 22 * per_hour)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    /// Sorted by scenario id.
    pub ledgers: Vec<OverflowLedger>,
    pub traces: Vec<Trace>,
}

/// Runs the given scenarios (all eight when `None`) over one storm.
pub fn run_scenario_suite(
    system: &SystemSpec,
    storm: &Storm,
    scenarios: Option<&[ScenarioConfig]>,
) -> Result<SuiteResult, SimError> {
    let mut configs = match scenarios {
        Some(s) => s.to_vec(),
        None => ScenarioConfig::all(storm.step_seconds)?,
    };
    configs.sort_by_key(|c| c.id);
    configs.dedup_by_key(|c| c.id);
    let runs: Vec<(OverflowLedger, Trace)> = configs
        .par_iter()
        .map(|c| simulate_scenario(system, c, storm))
        .collect::<Result<_, _>>()?;
    let (ledgers, traces) = runs.into_iter().unzip();
    Ok(SuiteResult { ledgers, traces })
}

impl SuiteResult {
    pub fn ledger(&self, id: u8) -> Option<&OverflowLedger> {
        self.ledgers.iter().find(|l| l.scenario == id)
    }

    pub fn max_balance_residual(&self) -> f64 {
        self.ledgers.iter().map(|l| l.max_balance_residual).fold(0.0, f64::max)
    }

    pub fn write_ledger_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LEDGER_HEADER)?;
        for l in &self.ledgers {
            w.write_record(l.record())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Donor-WWTP overflow and its reduction against scenario 1.
    pub fn write_donor_reduction_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let base = self.ledger(1).map(|l| l.donor_overflow);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "donor_overflow_m3", "reduction_vs_s1_m3"])?;
        for l in &self.ledgers {
            let red = base.map(|b| (b - l.donor_overflow).to_string()).unwrap_or_default();
            w.write_record([l.scenario.to_string(), l.donor_overflow.to_string(), red])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_total_overflow_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "total_overflow_m3"])?;
        for l in &self.ledgers {
            w.write_record([l.scenario.to_string(), l.total_overflow.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_station_overflow_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "station_overflow_m3"])?;
        for l in self
            .ledgers
            .iter()
            .filter(|l| STATION_TABLE_SCENARIOS.contains(&l.scenario))
        {
            w.write_record([l.scenario.to_string(), l.station_overflow.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `ledger.csv`, `donor_reduction.csv`,
    /// `total_overflow.csv`, `station_overflow.csv` and one
    /// `trace_s<id>.csv` per scenario into `dir`. Returns the file names.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<String>, SimError> {
        std::fs::create_dir_all(dir)?;
        let mut names = Vec::new();
        let mut put = |name: String, f: &dyn Fn(&mut Vec<u8>) -> Result<(), SimError>| -> Result<(), SimError> {
            let mut buf = Vec::new();
            f(&mut buf)?;
            std::fs::write(dir.join(&name), buf)?;
            names.push(name);
            Ok(())
        };
        put("ledger.csv".into(), &|b| self.write_ledger_csv(b))?;
        put("donor_reduction.csv".into(), &|b| {
            self.write_donor_reduction_csv(b)
        })?;
        put("total_overflow.csv".into(), &|b| {
            self.write_total_overflow_csv(b)
        })?;
        put("station_overflow.csv".into(), &|b| {
            self.write_station_overflow_csv(b)
        })?;
        for t in &self.traces {
            put(format!("trace_s{}.csv", t.scenario.id), &|b| t.write_csv(b))?;
        }
        Ok(names)
    }
}
