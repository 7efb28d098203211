use std::fs::File;
use std::path::Path;

use sewercast::sim::{
    mass_balance_check, run_scenario_suite, standard_block_storm, PumpState, ScenarioConfig, SimulationConfig,
    StochasticStormConfig, Storm, Trace,
};

use crate::error::CliError;
use crate::run_dir::RunDir;
use crate::{AuditArgs, SimulateArgs};

fn load_config(run: Option<&mut RunDir>, path: Option<&Path>) -> Result<SimulationConfig, CliError> {
    match path {
        Some(p) => {
            let cfg = SimulationConfig::load(p)?;
            if let Some(run) = run {
                run.input(p)?;
            }
            Ok(cfg)
        }
        None => Ok(SimulationConfig::default()),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "simulate")?;
    let mut cfg = load_config(Some(&mut run), a.config.as_deref())?;
    if let Some(step) = a.step {
        cfg.step_seconds = step;
    }
    let step = cfg.step_seconds;

    let storm = if let Some(path) = a.storm.as_ref().or(cfg.storm.as_ref()) {
        run.input(path)?;
        Storm::load(path)?
    } else if a.stochastic {
        Storm::stochastic(&StochasticStormConfig {
            seed: a.seed,
            steps: a.stochastic_steps,
            step_seconds: step,
            ..Default::default()
        })?
    } else {
        standard_block_storm(step)?
    };

    let scenarios: Vec<ScenarioConfig> = if a.suite {
        ScenarioConfig::all(step)?
    } else if !a.scenario.is_empty() {
        a.scenario
            .iter()
            .map(|&id| ScenarioConfig::standard(id, step))
            .collect::<Result<_, _>>()?
    } else if cfg.scenarios.is_some() {
        cfg.scenario_configs()?
    } else {
        return Err(CliError::Validation(
            "choose --suite, one or more --scenario, or list scenarios in --config".into(),
        ));
    };

    let result = run_scenario_suite(&cfg.system, &storm, Some(&scenarios))?;
    for name in result.write_all(run.path())? {
        run.adopt(&name)?;
    }
    run.write_with("storm.csv", |b| storm.write_csv(b))?;

    let mut failed = Vec::new();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "scenario",
            "steps",
            "max_residual",
            "worst_step",
            "violations",
            "passed",
        ])?;
        for t in &result.traces {
            let report = mass_balance_check(t);
            if !report.passed() {
                failed.push(t.scenario.id);
            }
            w.write_record([
                t.scenario.id.to_string(),
                t.steps.len().to_string(),
                format!("{:e}", report.max_residual),
                report.worst_step.map(|k| k.to_string()).unwrap_or_default(),
                report.violations.len().to_string(),
                report.passed().to_string(),
            ])?;
        }
        w.flush()?;
    }
    run.write("audit.csv", &buf)?;
    let dir = run.finish(a.stochastic.then_some(a.seed), &a)?;

    println!("scenario  tank_m3  icwt  donor_ovf_m3  station_ovf_m3  total_ovf_m3  transferred_m3");
    for l in &result.ledgers {
        println!(
            "{:>8} {:>8} {:>5} {:>13.1} {:>15.1} {:>13.1} {:>15.1}",
            l.scenario,
            l.tank_capacity,
            l.icwt_enabled,
            l.donor_overflow,
            l.station_overflow,
            l.total_overflow,
            l.transferred
        );
    }
    println!(
        "storm {:.1} mm over {} steps; max balance residual {:.2e}; written to {}",
        storm.depth(),
        storm.len(),
        result.max_balance_residual(),
        dir.display()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Audit(format!(
            "mass balance violated in scenario(s) {failed:?}"
        )))
    }
}

pub fn audit(a: AuditArgs) -> Result<(), CliError> {
    let mut cfg = load_config(None, a.config.as_deref())?;
    if let Some(step) = a.step {
        cfg.step_seconds = step;
    }
    let scenario = ScenarioConfig::standard(a.scenario, cfg.step_seconds)?;
    let initial_tank = cfg.system.tank(scenario.tank_capacity).initial;
    let initial_wet_well = PumpState::initial(&cfg.system.pump_station).volume;
    let file = File::open(&a.trace).map_err(|e| CliError::Other(format!("{}: {e}", a.trace.display())))?;
    let trace = Trace::read_csv(file, scenario, initial_tank, initial_wet_well)?;
    let report = mass_balance_check(&trace);
    println!(
        "{} steps, max relative residual {:.3e}{}",
        trace.steps.len(),
        report.max_residual,
        report.worst_step.map(|k| format!(" at step {k}")).unwrap_or_default()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Audit(format!(
            "mass balance violated at {} step(s), first at step {}",
            report.violations.len(),
            report.violations[0]
        )))
    }
}
