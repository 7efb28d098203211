use serde::Serialize;
use sewercast::synthetic::{reservoir_series, ReservoirSeriesConfig};
use sewercast::timeseries::{
    autocorrelation, cross_correlation, format_timestamp, prepare_dataset, select_lags, split_point, ChannelStats,
    GapFill, LagConfig, LagSelection, LoadReport, TimeSeriesFrame,
};

use crate::error::CliError;
use crate::run_dir::RunDir;
use crate::{Fill, FrameArgs, IngestArgs, LagArgs, LagsArgs, SynthArgs, WindowsArgs};

pub fn load_frame(run: &mut RunDir, a: &FrameArgs) -> Result<(TimeSeriesFrame, LoadReport), CliError> {
    let fill = match a.fill {
        Fill::Reject => GapFill::Reject,
        Fill::Hold => GapFill::Hold,
    };
    let loaded = TimeSeriesFrame::load(&a.input, a.step, fill)?;
    run.input(&a.input)?;
    Ok(loaded)
}

/// Reads the lag file if one is given, else searches lags on the leading
/// `train_fraction` of rows so the test period plays no part.
pub fn resolve_lags(
    run: &mut RunDir,
    frame: &TimeSeriesFrame,
    a: &LagArgs,
    train_fraction: f64,
) -> Result<LagSelection, CliError> {
    if let Some(path) = &a.lags_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let sel: LagSelection =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        sel.validate()?;
        run.input(path)?;
        return Ok(sel);
    }
    let head = frame.slice(0, split_point(frame.len(), train_fraction)?)?;
    let config = LagConfig {
        threshold: a.threshold,
        max_lag: a.max_lag,
        top_k: a.top_k,
    };
    Ok(select_lags(&head, &config)?)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "synth")?;
    let cfg = ReservoirSeriesConfig {
        records: a.records,
        seed: a.seed,
        noise: a.noise,
        step_seconds: a.step,
        ..Default::default()
    };
    let frame = reservoir_series(&cfg)?;
    run.write_with("frame.csv", |b| frame.write_csv(b))?;
    let dir = run.finish(Some(a.seed), &cfg)?;
    println!("wrote {} records to {}", frame.len(), dir.join("frame.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    site_id: &'a str,
    rows_read: usize,
    rows_filled: usize,
    records: usize,
    step_seconds: i64,
    first: String,
    last: String,
    train_rows: usize,
    std_convention: &'static str,
}

fn stats_row(stage: &str, level: &ChannelStats, rain: &ChannelStats) -> Vec<String> {
    let mut r = vec![stage.to_string()];
    r.extend(
        [level.max, level.mean, level.std, rain.max, rain.mean, rain.std]
            .iter()
            .map(f64::to_string),
    );
    r
}

pub fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "ingest")?;
    let (frame, report) = load_frame(&mut run, &a.frame)?;
    let cut = split_point(frame.len(), a.train_fraction)?;

    let mut stats = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut stats);
        w.write_record([
            "stage",
            "level_max_m",
            "level_mean_m",
            "level_std_m",
            "rainfall_max_mm_s",
            "rainfall_mean_mm_s",
            "rainfall_std_mm_s",
        ])?;
        for (stage, from, to) in [
            ("training", 0, cut),
            ("testing", cut, frame.len()),
            ("all", 0, frame.len()),
        ] {
            let level = ChannelStats::of(&frame.level()[from..to])?;
            let rain = ChannelStats::of(&frame.rainfall()[from..to])?;
            w.write_record(stats_row(stage, &level, &rain))?;
        }
        w.flush()?;
    }
    run.write("stats.csv", &stats)?;
    run.write_with("frame.csv", |b| frame.write_csv(b))?;
    let summary = IngestSummary {
        site_id: frame.site_id(),
        rows_read: report.rows_read,
        rows_filled: report.rows_filled,
        records: frame.len(),
        step_seconds: frame.step_seconds(),
        first: format_timestamp(frame.start()),
        last: format_timestamp(frame.timestamp(frame.len() - 1)),
        train_rows: cut,
        std_convention: "population (divides by n)",
    };
    run.write_json("summary.json", &summary)?;
    let dir = run.finish(None, &a)?;
    println!(
        "{} records ({} read, {} filled), {} .. {}; written to {}",
        summary.records,
        summary.rows_read,
        summary.rows_filled,
        summary.first,
        summary.last,
        dir.display()
    );
    Ok(())
}

pub fn lags(a: LagsArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "lags")?;
    let (frame, _) = load_frame(&mut run, &a.frame)?;
    let sel = resolve_lags(&mut run, &frame, &a.lags, a.train_fraction)?;

    let head = frame.slice(0, split_point(frame.len(), a.train_fraction)?)?;
    let acf = autocorrelation(head.level(), a.lags.max_lag)?;
    let xcf = cross_correlation(head.level(), head.rainfall(), a.lags.max_lag)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "lag",
            "level_autocorrelation",
            "rainfall_level_correlation",
            "level_selected",
            "rainfall_selected",
        ])?;
        for lag in 0..=a.lags.max_lag {
            w.write_record([
                lag.to_string(),
                acf[lag].to_string(),
                xcf[lag].to_string(),
                u8::from(sel.level_lags.contains(&lag)).to_string(),
                u8::from(sel.rainfall_lags.contains(&lag)).to_string(),
            ])?;
        }
        w.flush()?;
    }
    run.write("correlations.csv", &buf)?;
    run.write_json("lags.json", &sel)?;
    let dir = run.finish(None, &a)?;
    println!(
        "level lags {:?}, rainfall lags {:?}; written to {}",
        sel.level_lags,
        sel.rainfall_lags,
        dir.display()
    );
    Ok(())
}

pub fn windows(a: WindowsArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(a.out.out.as_deref(), "windows")?;
    let (frame, _) = load_frame(&mut run, &a.frame)?;
    let sel = resolve_lags(&mut run, &frame, &a.lags, a.dataset.train_fraction)?;
    let ds = prepare_dataset(&frame, &sel, a.dataset.horizon, a.dataset.train_fraction)?;
    for (name, set) in [("train", &ds.train), ("test", &ds.test)] {
        set.write_dir(run.path().join(name))?;
        for file in ["inputs.csv", "targets.csv", "windows.json"] {
            run.adopt(&format!("{name}/{file}"))?;
        }
    }
    let dir = run.finish(None, &a)?;
    println!(
        "{} train and {} test windows ({} inputs, {} leads); written to {}",
        ds.train.len(),
        ds.test.len(),
        ds.train.input_dim(),
        ds.train.horizon,
        dir.display()
    );
    Ok(())
}
