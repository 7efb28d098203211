use ndarray::s;
use sewercast::svr::{grid_search, GridSearchSpec, SmoConfig, SvrForecaster, SvrHyperparams};
use sewercast::timeseries::{prepare_dataset, PreparedDataset};

use crate::data::{load_frame, resolve_lags};
use crate::error::CliError;
use crate::run_dir::RunDir;
use crate::{DatasetArgs, FrameArgs, LagArgs, SvrGridArgs, SvrTrainArgs};

fn dataset(
    run: &mut RunDir,
    frame: &FrameArgs,
    lags: &LagArgs,
    dataset: &DatasetArgs,
) -> Result<PreparedDataset, CliError> {
    let (frame, _) = load_frame(run, frame)?;
    let sel = resolve_lags(run, &frame, lags, dataset.train_fraction)?;
    Ok(prepare_dataset(&frame, &sel, dataset.horizon, dataset.train_fraction)?)
}

/// First training row used when only the last `max_rows` are kept.
fn first_row(len: usize, max_rows: Option<usize>) -> Result<usize, CliError> {
    match max_rows {
        Some(0 | 1) => Err(CliError::Validation("--max-rows must be at least 2".into())),
        Some(m) => Ok(len.saturating_sub(m)),
        None => Ok(0),
    }
}

pub fn grid(a: SvrGridArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "svr-grid")?;
    let ds = dataset(&mut run, &a.frame, &a.lags, &a.dataset)?;
    let from = first_row(ds.train.len(), a.max_rows)?;
    let spec = GridSearchSpec {
        gammas: a.gamma.clone(),
        cs: a.c.clone(),
        epsilons: a.epsilon.clone(),
        validation_fraction: a.val_fraction,
        leads: a.leads.clone(),
    };
    let config = SmoConfig {
        tolerance: a.tolerance,
        ..Default::default()
    };
    let result = grid_search(
        &spec,
        ds.train.inputs.slice(s![from.., ..]),
        ds.train.targets.slice(s![from.., ..]),
        &config,
    )?;
    run.write_with("grid.csv", |b| result.write_csv(b))?;
    run.write_json("best.json", &result.best)?;
    let dir = run.finish(None, &a)?;
    println!(
        "best gamma={} C={} epsilon={} (validation RMSE {:.6}, scaled) over {} cells; written to {}",
        result.best.gamma,
        result.best.c,
        result.best.epsilon,
        result.best_rmse,
        result.cells.len(),
        dir.display()
    );
    Ok(())
}

pub fn train(a: SvrTrainArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "svr-train")?;
    let ds = dataset(&mut run, &a.frame, &a.lags, &a.dataset)?;
    let from = first_row(ds.train.len(), a.max_rows)?;
    let hyper = SvrHyperparams {
        gamma: a.gamma,
        c: a.c,
        epsilon: a.epsilon,
    };
    hyper.validate()?;
    let config = SmoConfig {
        tolerance: a.tolerance,
        ..Default::default()
    };
    let model = SvrForecaster::fit(
        ds.train.inputs.slice(s![from.., ..]),
        ds.train.targets.slice(s![from.., ..]),
        &hyper,
        &config,
    )?
    .with_data(ds.scaler, ds.train.lag_selection.clone());
    let json = model.to_json()? + "\n";
    run.write("svr.json", json.as_bytes())?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["lead_steps", "iterations", "kkt_violation", "support_vectors"])?;
        for (k, r) in model.reports.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                r.iterations.to_string(),
                format!("{:e}", r.violation),
                r.support_vectors.to_string(),
            ])?;
        }
        w.flush()?;
    }
    run.write("fit_report.csv", &buf)?;
    let dir = run.finish(None, &a)?;
    let svs: usize = model.reports.iter().map(|r| r.support_vectors).sum();
    println!(
        "{} lead models on {} windows, {} support vectors in total; written to {}",
        model.models.len(),
        ds.train.len() - from,
        svs,
        dir.display()
    );
    Ok(())
}
