//! The `rssiloc` command line. See the README for the full reference.
//!
//! Exit status: 0 success, 1 usage error, 2 data error (unreadable or
//! malformed files, shape mismatches), 3 numeric failure during training.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rssiloc_core::dataset::split;
use rssiloc_core::metrics::{evaluate_with_threshold, DEFAULT_THRESHOLD_M};
use rssiloc_core::optim::train_with_clock;
use rssiloc_core::{Algorithm, AnchorConfig, Dataset, MlpModel, SplitSpec, TrainConfig};

use crate::artifacts::{Artifacts, OUT_DIR_ENV};
use crate::evalsuite::{self, RunOptions, SweepReport, TestSet, WallClock};
use crate::export::{self, Precision};
use crate::report::{self, TrainRecord};
use crate::testbed::Testbed;
use crate::{artifacts, dataset_csv, model_file, plot, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rssiloc", version, about = "RSSI fingerprint localization with small neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a survey: write the training pool and the unknown-position test rows.
    GenData(GenData),
    /// Train a localization network on a fingerprint CSV.
    Train(Train),
    /// Score a model on a fingerprint CSV.
    Eval(Eval),
    /// Locate one RSSI reading.
    Infer(Infer),
    /// Compare anchor configurations (LM and BR by default).
    Sweep(Sweep),
    /// Compare training algorithms on one configuration.
    Compare(Compare),
    /// Emit the model as self-contained C source plus conformance vectors.
    Export(Export),
    /// Draw SVG charts from a comparison, sweep or training report.
    Plot(Plot),
}

#[derive(Debug, Args)]
struct OutDir {
    /// Directory for output files.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TestbedArgs {
    /// Testbed configuration file (`key = value` lines).
    #[arg(long)]
    testbed: Option<PathBuf>,
    /// Samples per surveyed grid point (default 25).
    #[arg(long)]
    samples_per_point: Option<usize>,
    /// Samples per unknown position (default 15).
    #[arg(long)]
    samples_per_unknown: Option<usize>,
}

impl TestbedArgs {
    fn load(&self) -> Result<Testbed> {
        let mut tb = match &self.testbed {
            Some(path) => Testbed::load(path)?,
            None => Testbed::default(),
        };
        if let Some(n) = self.samples_per_point {
            tb.samples_per_point = n;
        }
        if let Some(n) = self.samples_per_unknown {
            tb.samples_per_unknown = n;
        }
        if tb.samples_per_point == 0 {
            return Err(Error::Usage("--samples-per-point must be at least 1".into()));
        }
        Ok(tb)
    }
}

fn config_name(s: &str) -> std::result::Result<AnchorConfig, String> {
    AnchorConfig::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = AnchorConfig::ALL.iter().map(|c| c.name()).collect();
        format!("unknown configuration {s:?}; valid names: {}", names.join(", "))
    })
}

fn algorithm_name(s: &str) -> std::result::Result<Algorithm, String> {
    Algorithm::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        format!("unknown algorithm {s:?}; valid names: {}", names.join(", "))
    })
}

fn layer_width(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("hidden layer width must be a positive integer, found {s:?}")),
    }
}

fn fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f <= 1.0 => Ok(f),
        _ => Err(format!("expected a fraction in (0, 1], found {s:?}")),
    }
}

#[derive(Debug, Args)]
struct GenData {
    /// Anchor configuration: two_a, two_b, three_a, three_b, four, five.
    #[arg(long, default_value = "four", value_parser = config_name)]
    config: AnchorConfig,
    /// Channel noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    testbed: TestbedArgs,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Debug, Args)]
struct Train {
    /// Fingerprint CSV to train on.
    #[arg(long)]
    data: PathBuf,
    /// Training algorithm: lm, br, rp, scg, gd.
    #[arg(long, default_value = "lm", value_parser = algorithm_name)]
    algo: Algorithm,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "12,12", value_parser = layer_width)]
    hidden: Vec<usize>,
    /// Seed for the split, weight initialization and validation carve.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Stop once the training MSE (normalized units) reaches this value.
    #[arg(long, default_value_t = 0.0)]
    goal: f64,
    /// Share of the file used for training; the rest is written as
    /// `test_split.csv`. 1 trains on every row.
    #[arg(long, default_value_t = 0.8, value_parser = fraction)]
    train_fraction: f64,
    /// Share of the training rows held out for early stopping
    /// (default 0.15, 0 for br).
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Learning rate for gd.
    #[arg(long)]
    learning_rate: Option<f64>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Debug, Args)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Distance threshold for the "errors below" share, meters.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct Infer {
    #[arg(long)]
    model: PathBuf,
    /// Readings in dBm, comma-separated, ascending anchor id.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    rssi: Vec<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Number of seeds per cell, starting at --first-seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "12,12", value_parser = layer_width)]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M)]
    threshold: f64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    testbed: TestbedArgs,
    #[command(flatten)]
    out: OutDir,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            hidden: self.hidden.clone(),
            max_epochs: self.max_epochs,
            threshold: self.threshold,
            jobs: self.jobs,
        }
    }

    fn seeds(&self) -> Result<Vec<u64>> {
        if self.seeds == 0 {
            return Err(Error::Usage("--seeds must be at least 1".into()));
        }
        Ok((self.first_seed..self.first_seed + self.seeds).collect())
    }
}

#[derive(Debug, Args)]
struct Sweep {
    /// Configurations to sweep (default: all six).
    #[arg(long, value_delimiter = ',', value_parser = config_name)]
    configs: Vec<AnchorConfig>,
    #[arg(long, value_delimiter = ',', default_value = "lm,br", value_parser = algorithm_name)]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct Compare {
    #[arg(long, default_value = "four", value_parser = config_name)]
    config: AnchorConfig,
    #[arg(long, value_delimiter = ',', default_value = "lm,br,rp,scg,gd", value_parser = algorithm_name)]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct Export {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    /// Base name of the emitted files.
    #[arg(long, default_value = "rssiloc_model")]
    name: String,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PlotSet {
    Known,
    Unknown,
}

#[derive(Debug, Args)]
struct Plot {
    /// A comparison/sweep JSON document or a training report.
    #[arg(long)]
    report: PathBuf,
    /// Wall-time sidecar; defaults to `<stem>.time.csv` next to the report.
    #[arg(long)]
    times: Option<PathBuf>,
    /// Test rows to chart.
    #[arg(long, value_enum, default_value = "unknown")]
    set: PlotSet,
    #[command(flatten)]
    out: OutDir,
}

/// What a successful command reports.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Summaries go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Infer(a) => infer(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Export(a) => export_model(a),
        Command::Plot(a) => plot_report(a),
    }
}

fn commit(staged: Artifacts, summary: String) -> Result<Outcome> {
    Ok(Outcome { summary, artifacts: staged.commit()? })
}

fn gen_data(a: GenData) -> Result<Outcome> {
    let tb = a.testbed.load()?;
    let (pool, unknown) = tb.generate(a.config, a.seed)?;
    let mut staged = Artifacts::new();
    staged.stage(a.out.out_dir.join("train_pool.csv"), dataset_csv::to_string(&pool));
    staged.stage(a.out.out_dir.join("unknown_test.csv"), dataset_csv::to_string(&unknown));
    let summary = format!(
        "Generated {} survey rows over {} reference points and {} unknown-position rows for configuration {} \
         ({} anchors), seed {}.\n",
        pool.len(),
        pool.point_count(),
        unknown.len(),
        a.config,
        a.config.anchor_count(),
        a.seed
    );
    commit(staged, summary)
}

fn train(a: Train) -> Result<Outcome> {
    let data = dataset_csv::load(&a.data)?;
    let (train_rows, test_rows): (Dataset, Option<Dataset>) = if a.train_fraction < 1.0 {
        let spec = SplitSpec { train_fraction: a.train_fraction, seed: a.seed, stratified: true };
        let (tr, te) = split(&data, &spec)?;
        (tr, Some(te))
    } else {
        (data, None)
    };
    let init = MlpModel::localization(train_rows.anchor_count(), &a.hidden, a.seed)?;
    let mut cfg = TrainConfig { max_epochs: a.max_epochs, goal_mse: a.goal, seed: a.seed, ..TrainConfig::new(a.algo) };
    if let Some(v) = a.validation_fraction {
        cfg.validation_fraction = v;
    }
    if let Some(lr) = a.learning_rate {
        cfg.params.gd.learning_rate = lr;
    }
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let (model, report) = train_with_clock(&init, &train_rows, &cfg, &WallClock::start())?;

    let record = TrainRecord { seed: a.seed, layers: model.layer_sizes().to_vec(), report };
    let dir = &a.out.out_dir;
    let mut staged = Artifacts::new();
    staged.stage(dir.join("model.mlp"), rssiloc_core::codec::encode(&model));
    staged.stage(dir.join("train_report.txt"), report::to_text(&record));
    staged.stage(dir.join("train_report.time"), report::wall_time_text(record.report.wall_time));
    let mut summary = format!(
        "Trained a {} network with {} on {} rows: {} epochs, stopped by {}, final training MSE {:.3e}.\n",
        layers_label(model.layer_sizes()),
        a.algo.name().to_uppercase(),
        train_rows.len(),
        record.report.epochs_run,
        record.report.stop_reason.name(),
        record.report.final_train_mse,
    );
    if let Some(test) = test_rows {
        let r = evaluate_with_threshold(&model, &test, DEFAULT_THRESHOLD_M)?;
        writeln!(summary, "Held-out rows: {}, average error {:.4} m.", test.len(), r.average_error).unwrap();
        staged.stage(dir.join("test_split.csv"), dataset_csv::to_string(&test));
    }
    commit(staged, summary)
}

fn layers_label(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

fn eval(a: Eval) -> Result<Outcome> {
    let model = model_file::load(&a.model)?;
    let data = dataset_csv::load(&a.data)?;
    let r = evaluate_with_threshold(&model, &data, a.threshold)?;
    let summary = format!(
        "rows = {}\naverage_error_m = {:.6}\nmax_error_m = {:.6}\npct_below_{}m = {:.2}\n",
        r.n, r.average_error, r.max_error, r.threshold, r.pct_below
    );
    Ok(Outcome { summary, artifacts: Vec::new() })
}

fn infer(a: Infer) -> Result<Outcome> {
    let model = model_file::load(&a.model)?;
    let p = model.forward(&a.rssi)?;
    Ok(Outcome { summary: format!("{:.4},{:.4}\n", p.x, p.y), artifacts: Vec::new() })
}

fn stage_run(staged: &mut Artifacts, dir: &Path, stem: &str, report: &SweepReport) {
    staged.stage(dir.join(format!("{stem}.csv")), report.to_csv());
    staged.stage(dir.join(format!("{stem}.json")), report.to_json());
    staged.stage(dir.join(format!("{stem}.time.csv")), report.times_csv());
}

fn median_table(report: &SweepReport) -> String {
    let mut groups: Vec<(AnchorConfig, Algorithm)> = report.cells.keys().map(|k| (k.config, k.algorithm)).collect();
    groups.dedup();
    let mut s = format!(
        "{:<8} {:<5} {:>12} {:>12} {:>10} {:>10}\n",
        "config", "algo", "known_avg_m", "unkn_avg_m", "unkn_max_m", "unkn_pct"
    );
    for (c, al) in groups {
        let m = |set, metric| report.median(c, al, set, metric).unwrap_or(f64::NAN);
        use evalsuite::Metric::*;
        writeln!(
            s,
            "{:<8} {:<5} {:>12.4} {:>12.4} {:>10.4} {:>10.2}",
            c.name(),
            al.name(),
            m(TestSet::Known, AverageError),
            m(TestSet::Unknown, AverageError),
            m(TestSet::Unknown, MaxError),
            m(TestSet::Unknown, PctBelow)
        )
        .unwrap();
    }
    s
}

fn sweep(a: Sweep) -> Result<Outcome> {
    let tb = a.run.testbed.load()?;
    let configs = if a.configs.is_empty() { AnchorConfig::ALL.to_vec() } else { a.configs };
    let report = evalsuite::anchor_sweep(&tb, &configs, &a.algos, &a.run.seeds()?, &a.run.options())?;
    let mut staged = Artifacts::new();
    stage_run(&mut staged, &a.run.out.out_dir, "sweep", &report);
    let summary = format!("Anchor sweep, medians over {} seed(s):\n{}", a.run.seeds, median_table(&report));
    commit(staged, summary)
}

fn compare(a: Compare) -> Result<Outcome> {
    let tb = a.run.testbed.load()?;
    let report = evalsuite::algorithm_comparison(&tb, a.config, &a.algos, &a.run.seeds()?, &a.run.options())?;
    let mut staged = Artifacts::new();
    stage_run(&mut staged, &a.run.out.out_dir, "comparison", &report);
    let summary = format!("Algorithm comparison, medians over {} seed(s):\n{}", a.run.seeds, median_table(&report));
    commit(staged, summary)
}

fn export_model(a: Export) -> Result<Outcome> {
    let model = model_file::load(&a.model)?;
    let bundle = export::export(&model, a.precision)?;
    let mut staged = Artifacts::new();
    staged.stage(a.out.out_dir.join(format!("{}.c", a.name)), bundle.source);
    staged
        .stage(a.out.out_dir.join(format!("{}_conformance.csv", a.name)), dataset_csv::to_string(&bundle.conformance));
    let summary = format!(
        "Exported a {} network in {} precision with {} conformance vectors (tolerance {:e} m).\n",
        layers_label(model.layer_sizes()),
        a.precision.name(),
        bundle.conformance.len(),
        a.precision.tolerance_m()
    );
    commit(staged, summary)
}

fn plot_report(a: Plot) -> Result<Outcome> {
    let text = artifacts::read_to_string(&a.report)?;
    let set = match a.set {
        PlotSet::Known => TestSet::Known,
        PlotSet::Unknown => TestSet::Unknown,
    };
    let plots = if text.trim_start().starts_with('{') || text.trim().is_empty() {
        let doc = evalsuite::parse_document(&text)?;
        let times_path = a.times.clone().or_else(|| {
            let stem = a.report.file_stem()?.to_str()?;
            let p = a.report.with_file_name(format!("{stem}.time.csv"));
            p.exists().then_some(p)
        });
        let times = match times_path {
            Some(p) => Some(evalsuite::parse_times(&artifacts::read_to_string(&p)?)?),
            None => None,
        };
        plot::plot_report(&doc, times.as_deref(), set)
    } else {
        plot::plot_training(&report::parse(&text)?)
    };
    let mut staged = Artifacts::new();
    for (name, svg) in &plots.charts {
        staged.stage(a.out.out_dir.join(name), svg.clone());
    }
    staged.stage(a.out.out_dir.join("plot_data.csv"), plots.data_csv);
    commit(staged, format!("Drew {} chart(s).\n", plots.charts.len()))
}
