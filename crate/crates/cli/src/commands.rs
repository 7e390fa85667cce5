use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use log::warn;
use modalgauge_core::embed_io::{load_task_with, write_atomic, LoadOptions};
use modalgauge_core::measures::{
    measure_suite, parse_selection, read_measures_csv, write_measures_csv, Bandwidth, MeasureName, MeasureOptions,
    MeasureReport,
};
use modalgauge_core::stats::{RegressionFit, MAX_EXACT_THRESHOLD};
use modalgauge_core::transfer::{
    build_gain_table, correlate_all, fit_transfer_model, joined_points, plot_data, predict_transfer, read_outcomes_csv,
    write_plot_csv, FitOptions, GainRecord, Target, TransferPrediction,
};
use serde::Serialize;

use crate::{Cli, Command, CorrelateArgs, FitArgs, Format, MeasureArgs, PlotDataArgs, PredictArgs, TableInputs};

pub enum Failure {
    /// Bad input or configuration; nothing useful was produced.
    Input(anyhow::Error),
    /// Output was written but some items failed.
    Partial(String),
}

impl Failure {
    pub fn input(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Measure(args) => measure(args, cli.seed),
        Command::Correlate(args) => correlate(args),
        Command::Fit(args) => fit(args),
        Command::Predict(args) => predict(args, cli.seed),
        Command::PlotData(args) => plot(args),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct ItemFailure {
    manifest: PathBuf,
    error: String,
}

impl ItemFailure {
    fn new(path: &Path, error: String) -> Self {
        let shown = path.display().to_string();
        let error = if error.contains(&shown) { error } else { format!("{shown}: {error}") };
        Self { manifest: path.to_path_buf(), error }
    }
}

/// Fails outright when nothing succeeded, otherwise logs each failure.
fn check_items(succeeded: usize, failures: &[ItemFailure]) -> anyhow::Result<()> {
    if succeeded == 0 {
        bail!("{}", failures[0].error);
    }
    for f in failures {
        warn!("{}", f.error);
    }
    Ok(())
}

fn parse_bandwidth(raw: &str) -> anyhow::Result<Bandwidth> {
    match raw.to_ascii_lowercase().as_str() {
        "scott" => Ok(Bandwidth::Scott),
        "silverman" => Ok(Bandwidth::Silverman),
        other => match other.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
            _ => bail!("--entropy-bandwidth must be scott, silverman or a positive number, got {raw:?}"),
        },
    }
}

fn summarize(failed: usize, total: usize, what: &str) -> Outcome {
    match failed {
        0 => Ok(()),
        _ => Err(Failure::Partial(format!("{failed} of {total} {what} failed"))),
    }
}

fn negative_iimm_note(task: &str, value: f64) {
    if value < 0.0 {
        eprintln!(
            "note: task {task}: IIMM {value:.6} is below 0; cosine similarity ranges over [-1, 1], so the nominal [0, 1] bound does not hold and the value is reported unclamped"
        );
    }
}

fn measure(args: &MeasureArgs, seed: u64) -> Outcome {
    let mut selection = parse_selection(&args.measures)?;
    if args.ch_standard && !selection.contains(&MeasureName::CalinskiHarabaszStandard) {
        selection.push(MeasureName::CalinskiHarabaszStandard);
    }
    if args.entropy_cap < 2 {
        return Err(anyhow!("--entropy-cap must be at least 2").into());
    }
    if args.silhouette_sample.is_some_and(|s| s < 2) {
        return Err(anyhow!("--silhouette-sample must be at least 2").into());
    }
    let opts = MeasureOptions {
        seed,
        silhouette_sample: args.silhouette_sample,
        entropy_bandwidth: parse_bandwidth(&args.entropy_bandwidth)?,
        entropy_sample_cap: args.entropy_cap,
    };
    let load = LoadOptions { norm_tolerance: args.norm_tolerance };

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for path in &args.manifests {
        let result = load_task_with(path, load)
            .map_err(|e| e.to_string())
            .and_then(|t| measure_suite(&t, &selection, &opts).map_err(|e| e.to_string()));
        match result {
            Ok(report) => reports.push(report),
            Err(error) => failures.push(ItemFailure::new(path, error)),
        }
    }
    check_items(reports.len(), &failures)?;

    let mut measure_errors = 0;
    for r in &reports {
        for (name, msg) in r.errors() {
            warn!("task {} ({}): {name}: {msg}", r.task_id, r.model_id);
            measure_errors += 1;
        }
        if let Some(v) = r.get(MeasureName::Iimm.as_str()) {
            negative_iimm_note(&r.task_id, v);
        }
    }

    let bytes = match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Output<'a> {
                reports: &'a [MeasureReport],
                failures: &'a [ItemFailure],
            }
            to_json(&Output { reports: &reports, failures: &failures })?
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_measures_csv(&reports, &mut buf)?;
            buf
        }
    };
    emit(args.out.as_deref(), &bytes)?;

    summarize(failures.len(), args.manifests.len(), "manifests")?;
    summarize(measure_errors, reports.len() * selection.len(), "measure evaluations")
}

fn read_measures(path: &Path) -> anyhow::Result<Vec<MeasureReport>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json =
        path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    if is_json {
        #[derive(serde::Deserialize)]
        struct Input {
            reports: Vec<MeasureReport>,
        }
        let parsed: Input = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
        Ok(parsed.reports)
    } else {
        read_measures_csv(text.as_bytes()).with_context(|| format!("{}", path.display()))
    }
}

struct Tables {
    measures: Vec<MeasureReport>,
    gains: Vec<GainRecord>,
}

fn load_tables(inputs: &TableInputs) -> anyhow::Result<Tables> {
    let mut measures = read_measures(&inputs.measures)?;
    let file = fs::File::open(&inputs.outcomes).with_context(|| format!("reading {}", inputs.outcomes.display()))?;
    let records = read_outcomes_csv(file).with_context(|| format!("{}", inputs.outcomes.display()))?;
    let mut gains = build_gain_table(&records).with_context(|| format!("{}", inputs.outcomes.display()))?;
    if let Some(model) = &inputs.model {
        measures.retain(|r| &r.model_id == model);
        gains.retain(|g| &g.model_id == model);
        if gains.is_empty() {
            bail!("no outcome records for model {model:?}");
        }
    }
    Ok(Tables { measures, gains })
}

fn single_model(gains: &[GainRecord]) -> anyhow::Result<()> {
    let models: BTreeSet<&str> = gains.iter().map(|g| g.model_id.as_str()).collect();
    if models.len() > 1 {
        let list: Vec<&str> = models.into_iter().collect();
        bail!("outcomes cover several models ({}); choose one with --model", list.join(", "));
    }
    Ok(())
}

fn correlate(args: &CorrelateArgs) -> Outcome {
    if args.exact_threshold > MAX_EXACT_THRESHOLD {
        return Err(anyhow!("--exact-threshold must be at most {MAX_EXACT_THRESHOLD}").into());
    }
    let tables = load_tables(&args.inputs)?;
    let target: Target = args.target.into();
    let models: BTreeSet<&str> = tables.gains.iter().map(|g| g.model_id.as_str()).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model_id", "measure", "rho", "p_value", "n", "method", "error"]).map_err(anyhow::Error::from)?;
    for model in models {
        let measures: Vec<MeasureReport> = tables.measures.iter().filter(|r| r.model_id == model).cloned().collect();
        let gains: Vec<GainRecord> = tables.gains.iter().filter(|g| g.model_id == model).cloned().collect();
        let (rows, warnings) = correlate_all(&measures, &gains, target, args.exact_threshold);
        for msg in warnings {
            warn!("{msg}");
        }
        for row in rows {
            let record = match &row.result {
                Ok(c) => [
                    model.to_string(),
                    row.measure.clone(),
                    c.rho.to_string(),
                    c.p_value.to_string(),
                    c.n.to_string(),
                    c.method.as_str().to_string(),
                    String::new(),
                ],
                Err(e) => {
                    warn!("model {model}, measure {}: {e}", row.measure);
                    [
                        model.to_string(),
                        row.measure.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.clone(),
                    ]
                }
            };
            w.write_record(&record).map_err(anyhow::Error::from)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    emit(args.out.as_deref(), &bytes)?;
    Ok(())
}

fn fit(args: &FitArgs) -> Outcome {
    let name: MeasureName = args.measure_name.parse()?;
    let tables = load_tables(&args.inputs)?;
    single_model(&tables.gains)?;
    let opts = FitOptions { confidence_level: args.confidence, x_threshold: args.max_x };
    let tf = fit_transfer_model(&tables.measures, &tables.gains, name.as_str(), args.target.into(), &opts)?;

    for msg in &tf.warnings {
        warn!("{msg}");
    }
    let target: Target = args.target.into();
    log::info!(
        "{} ~ {}: slope {:.6}, intercept {:.6}, R^2 {:.6}, n {}",
        target.as_str(),
        name,
        tf.fit.slope,
        tf.fit.intercept,
        tf.fit.r_squared,
        tf.fit.n
    );
    emit(args.out.as_deref(), &to_json(&tf.fit)?)?;
    Ok(())
}

fn read_fit(path: &Path) -> anyhow::Result<RegressionFit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: not a fit file", path.display()))
}

fn predict(args: &PredictArgs, seed: u64) -> Outcome {
    let fit = read_fit(&args.fit)?;
    let opts = MeasureOptions { seed, ..MeasureOptions::default() };
    let load = LoadOptions { norm_tolerance: args.norm_tolerance };

    let mut predictions: Vec<TransferPrediction> = Vec::new();
    let mut failures = Vec::new();
    for path in &args.manifests {
        let result = load_task_with(path, load)
            .map_err(|e| e.to_string())
            .and_then(|t| predict_transfer(&fit, &t, &opts).map_err(|e| e.to_string()));
        match result {
            Ok(p) => {
                for note in &p.notes {
                    if note.starts_with("extrapolation") {
                        warn!("task {}: {note}", p.task);
                    } else {
                        eprintln!("note: task {}: {note}", p.task);
                    }
                }
                predictions.push(p);
            }
            Err(error) => failures.push(ItemFailure::new(path, error)),
        }
    }
    check_items(predictions.len(), &failures)?;

    #[derive(Serialize)]
    struct Output<'a> {
        predictions: &'a [TransferPrediction],
        failures: &'a [ItemFailure],
    }
    emit(args.out.as_deref(), &to_json(&Output { predictions: &predictions, failures: &failures })?)?;
    summarize(failures.len(), args.manifests.len(), "manifests")
}

fn plot(args: &PlotDataArgs) -> Outcome {
    let fit = read_fit(&args.fit)?;
    let target: Target = match &fit.target {
        Some(t) => t.parse()?,
        None => Target::GainOverZse,
    };
    let tables = load_tables(&args.inputs)?;
    single_model(&tables.gains)?;
    let (mut points, warnings) = joined_points(&tables.measures, &tables.gains, &fit.measure_name, target);
    for msg in warnings {
        warn!("{msg}");
    }
    if let Some(limit) = fit.x_threshold {
        points.retain(|p| p.x <= limit);
    }
    let data = plot_data(&fit, &points)?;
    let mut buf = Vec::new();
    write_plot_csv(&data, &mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    Ok(())
}
