use std::path::Path;

use ndarray::{Array2, Axis};
use sewercast::forecaster::Forecaster;
use sewercast::metrics::evaluate as score;
use sewercast::nn::{
    gradcheck as check_gradients, train as fit, Architecture, Checkpoint, Network, NetworkSpec, OptimizerConfig,
    OutputPeephole, Samples, TrainingConfig,
};
use sewercast::svr::SvrForecaster;
use sewercast::timeseries::{
    format_timestamp, input_row, make_windows, prepare_dataset, split_point, LagSelection, ScalerParams,
    SupervisedWindowSet, TimeSeriesFrame,
};

use crate::data::{load_frame, resolve_lags};
use crate::error::CliError;
use crate::run_dir::RunDir;
use crate::{EvaluateArgs, GradcheckArgs, ModelKind, Peephole, PredictArgs, TrainArgs};

/// A trained model with the data transform it was fitted under.
pub struct LoadedModel {
    pub forecaster: Box<dyn Forecaster>,
    pub scaler: ScalerParams,
    pub lags: LagSelection,
    pub train_fraction: Option<f64>,
}

/// Accepts a neural checkpoint or an SVR model file.
pub fn load_model(run: &mut RunDir, path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    run.input(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let missing = || CliError::Validation(format!("{}: model carries no scaler or lag selection", path.display()));
    if value.get("spec").is_some() {
        let cp = Checkpoint::from_json(&text)?;
        let network = cp.network()?;
        Ok(LoadedModel {
            scaler: cp.scaler.ok_or_else(missing)?,
            lags: cp.lags.clone().ok_or_else(missing)?,
            train_fraction: cp.train_fraction,
            forecaster: Box::new(network),
        })
    } else if value.get("models").is_some() {
        let svr = SvrForecaster::from_json(&text)?;
        Ok(LoadedModel {
            scaler: svr.scaler.ok_or_else(missing)?,
            lags: svr.lags.clone().ok_or_else(missing)?,
            train_fraction: None,
            forecaster: Box::new(svr),
        })
    } else {
        Err(CliError::Validation(format!(
            "{}: neither a network checkpoint nor an SVR model",
            path.display()
        )))
    }
}

fn test_windows(
    frame: &TimeSeriesFrame,
    model: &LoadedModel,
    train_fraction: f64,
) -> Result<SupervisedWindowSet, CliError> {
    let all = make_windows(frame, &model.lags, model.forecaster.horizon(), &model.scaler)?;
    let cut = split_point(all.len(), train_fraction)?;
    Ok(all.rows(cut, all.len()))
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "train")?;
    let (frame, _) = load_frame(&mut run, &a.frame)?;
    let lags = resolve_lags(&mut run, &frame, &a.lags, a.dataset.train_fraction)?;
    let ds = prepare_dataset(&frame, &lags, a.dataset.horizon, a.dataset.train_fraction)?;

    let architecture = match a.model {
        ModelKind::Ffnn => Architecture::Ffnn,
        ModelKind::Rnn => Architecture::Rnn,
        ModelKind::Lstm => Architecture::Lstm,
        ModelKind::Gru => Architecture::Gru,
    };
    let mut spec = NetworkSpec::for_lags(architecture, &lags, a.dataset.horizon, a.seed);
    spec.hidden_layers = a.hidden_layers;
    spec.hidden_size = a.hidden_size;
    spec.dropout_rate = a.dropout;
    spec.output_peephole = match a.peephole {
        Peephole::Previous => OutputPeephole::Previous,
        Peephole::Current => OutputPeephole::Current,
    };
    let config = TrainingConfig {
        optimizer: OptimizerConfig::from_name(&a.optimizer, a.learning_rate)?,
        epochs: a.epochs,
        batch_size: a.batch_size,
        shuffle_seed: a.shuffle.then_some(a.seed),
        clip_norm: a.clip_norm,
    };
    let model = fit(Network::new(spec)?, &config, Samples::from(&ds.train), None)?;
    let cp = Checkpoint::new(&model, &config).with_data(ds.scaler, lags, a.dataset.train_fraction);
    let json = cp.to_json()? + "\n";
    run.write("checkpoint.json", json.as_bytes())?;
    run.write_with("loss.csv", |b| model.history.write_csv(b))?;
    let dir = run.finish(Some(a.seed), &a)?;
    let last = model
        .history
        .last()
        .map(|e| format!("final train MSE {:.6}", e.train_mse))
        .unwrap_or_else(|| "no epochs run".into());
    println!(
        "{} {}x{} on {} windows, {} epochs, {last}; written to {}",
        architecture,
        a.hidden_layers,
        a.hidden_size,
        ds.train.len(),
        model.epochs_completed,
        dir.display()
    );
    Ok(())
}

/// Reports under a caller-chosen name.
struct Named<'a> {
    name: String,
    inner: &'a dyn Forecaster,
}

impl Forecaster for Named<'_> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn predict(&self, inputs: &Array2<f64>) -> Array2<f64> {
        self.inner.predict(inputs)
    }
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    if a.checkpoints.is_empty() && a.svr_models.is_empty() {
        return Err(CliError::Validation("give at least one --checkpoint or --svr".into()));
    }
    let mut run = RunDir::create(a.out.out.as_deref(), "evaluate")?;
    let (frame, _) = load_frame(&mut run, &a.frame)?;

    let mut loaded = Vec::new();
    for path in a.checkpoints.iter().chain(&a.svr_models) {
        let model = load_model(&mut run, path)?;
        let windows = test_windows(&frame, &model, model.train_fraction.unwrap_or(a.train_fraction))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        loaded.push((model, windows, stem));
    }
    let names: Vec<String> = loaded.iter().map(|(m, _, _)| m.forecaster.name()).collect();
    let named: Vec<Named> = loaded
        .iter()
        .zip(&names)
        .map(|((m, _, stem), name)| Named {
            // two models of one kind are told apart by file name
            name: if names.iter().filter(|n| *n == name).count() > 1 {
                format!("{name}:{stem}")
            } else {
                name.clone()
            },
            inner: m.forecaster.as_ref(),
        })
        .collect();
    let pairs: Vec<(&dyn Forecaster, &SupervisedWindowSet)> = named
        .iter()
        .zip(&loaded)
        .map(|(n, (_, w, _))| (n as &dyn Forecaster, w))
        .collect();
    let report = score(&pairs, &a.leads)?;
    run.write_with("report.csv", |b| report.write_csv(b))?;

    // observed and forecast levels per test row and lead, in meters
    for (n, (_, w, _)) in named.iter().zip(&loaded) {
        let pred = n.predict(&w.inputs);
        let range = w.scaler.level;
        let mut buf = Vec::new();
        {
            let mut out = csv::Writer::from_writer(&mut buf);
            out.write_record(["reference_time", "lead_steps", "observed_m", "predicted_m"])?;
            for (r, (obs, sim)) in w.targets.axis_iter(Axis(0)).zip(pred.axis_iter(Axis(0))).enumerate() {
                for &lead in &a.leads {
                    out.write_record([
                        format_timestamp(w.reference_time[r]),
                        lead.to_string(),
                        range.invert(obs[lead - 1]).to_string(),
                        range.invert(sim[lead - 1]).to_string(),
                    ])?;
                }
            }
            out.flush()?;
        }
        let file = format!(
            "predictions_{}.csv",
            n.name.to_lowercase().replace([':', '/', ' '], "_")
        );
        run.write(&file, &buf)?;
    }
    let dir = run.finish(None, &a)?;
    println!("lead  model            rmse_m     nse      r2");
    for c in &report.cells {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>4}  {:<14} {:>8} {:>7} {:>7}",
            c.lead_steps,
            c.model,
            f(c.rmse_m),
            f(c.nse),
            f(c.r2)
        );
    }
    println!("written to {}", dir.display());
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "predict")?;
    let model = load_model(&mut run, &a.model)?;
    let (frame, _) = load_frame(&mut run, &a.frame)?;
    let t = a.at.unwrap_or(frame.len() - 1);
    if t >= frame.len() {
        return Err(CliError::Validation(format!(
            "--at {t} is past the last row {}",
            frame.len() - 1
        )));
    }
    let row = input_row(&frame, &model.lags, &model.scaler, t)?;
    let x = Array2::from_shape_vec((1, row.len()), row).map_err(|e| CliError::Other(e.to_string()))?;
    if x.ncols() != model.forecaster.input_dim() {
        return Err(CliError::Validation(format!(
            "model expects {} inputs, lag selection yields {}",
            model.forecaster.input_dim(),
            x.ncols()
        )));
    }
    let y = model.forecaster.predict(&x);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numeric("forecast is not finite".into()));
    }
    let step = frame.step_seconds();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["lead_step", "lead_minutes", "timestamp", "level_m"])?;
        for (k, &v) in y.row(0).iter().enumerate() {
            let lead = k as i64 + 1;
            w.write_record([
                lead.to_string(),
                (lead * step / 60).to_string(),
                format_timestamp(frame.timestamp(t) + lead * step),
                model.scaler.level.invert(v).to_string(),
            ])?;
        }
        w.flush()?;
    }
    run.write("forecast.csv", &buf)?;
    let dir = run.finish(None, &a)?;
    println!(
        "{} forecast from {} ({} steps); written to {}",
        model.forecaster.name(),
        format_timestamp(frame.timestamp(t)),
        y.ncols(),
        dir.join("forecast.csv").display()
    );
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "gradcheck")?;
    let reports = check_gradients(a.instances, a.seed)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["variant", "tensor", "max_rel_error", "max_abs_error"])?;
        for r in &reports {
            for t in &r.tensors {
                w.write_record([
                    r.label.clone(),
                    t.name.clone(),
                    format!("{:e}", t.max_rel_error),
                    format!("{:e}", t.max_abs_error),
                ])?;
            }
        }
        w.flush()?;
    }
    run.write("gradcheck.csv", &buf)?;
    run.finish(Some(a.seed), &a)?;
    let mut worst: f64 = 0.0;
    for r in &reports {
        worst = worst.max(r.max_rel_error());
        println!("{:<16} max relative error {:.3e}", r.label, r.max_rel_error());
    }
    if worst > a.tolerance {
        return Err(CliError::Numeric(format!(
            "gradient check failed: max relative error {worst:e} > {:e}",
            a.tolerance
        )));
    }
    Ok(())
}
