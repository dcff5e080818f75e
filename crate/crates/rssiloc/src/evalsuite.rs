//! Algorithm comparisons and anchor-configuration sweeps.
//!
//! A run is a set of cells keyed by (configuration, algorithm, seed). The
//! seed drives everything in a cell: channel noise, the train/test split,
//! weight initialization and the validation carve. Cells are independent, so
//! they run on a worker pool and are collected into a map; the result does
//! not depend on scheduling.
//!
//! Training only ever sees the train split of the survey pool. The known
//! test split and the unknown-position rows are touched by evaluation alone.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rssiloc_core::dataset::split;
use rssiloc_core::metrics::{evaluate_with_threshold, DEFAULT_THRESHOLD_M};
use rssiloc_core::optim::{train_with_clock, Clock};
use rssiloc_core::{Algorithm, AnchorConfig, EvalReport, MlpModel, TrainConfig, TrainReport};

use crate::testbed::Testbed;
use crate::{Error, Result};

/// Monotonic wall clock for training runs.
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub hidden: Vec<usize>,
    pub max_epochs: usize,
    pub threshold: f64,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { hidden: vec![12, 12], max_epochs: 1000, threshold: DEFAULT_THRESHOLD_M, jobs: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub config: AnchorConfig,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl CellKey {
    fn rank(&self) -> (usize, usize, u64) {
        let c = AnchorConfig::ALL.iter().position(|&c| c == self.config).unwrap_or(usize::MAX);
        let a = Algorithm::ALL.iter().position(|&a| a == self.algorithm).unwrap_or(usize::MAX);
        (c, a, self.seed)
    }
}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// Held-out rows of the survey pool.
    pub known: EvalReport,
    /// Rows measured at positions never surveyed.
    pub unknown: EvalReport,
    pub train: TrainReport,
    pub model: MlpModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Comparison,
    Sweep,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub kind: ReportKind,
    pub threshold: f64,
    pub cells: BTreeMap<CellKey, Cell>,
}

/// Which rows a metric is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSet {
    Known,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AverageError,
    MaxError,
    PctBelow,
}

impl Metric {
    pub fn of(self, r: &EvalReport) -> f64 {
        match self {
            Metric::AverageError => r.average_error,
            Metric::MaxError => r.max_error,
            Metric::PctBelow => r.pct_below,
        }
    }
}

/// Median of a nonempty sample; the mean of the middle pair for even sizes.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { (values[mid - 1] + values[mid]) / 2.0 })
}

/// Trains and scores one cell.
pub fn run_cell(testbed: &Testbed, key: CellKey, opts: &RunOptions) -> Result<Cell> {
    let (pool, unknown) = testbed.generate(key.config, key.seed)?;
    let (train_rows, test_rows) = split(&pool, &testbed.split_spec(key.seed))?;
    let init = MlpModel::localization(key.config.anchor_count(), &opts.hidden, key.seed)?;
    let cfg = TrainConfig { max_epochs: opts.max_epochs, seed: key.seed, ..TrainConfig::new(key.algorithm) };
    let (model, train) = train_with_clock(&init, &train_rows, &cfg, &WallClock::start())?;
    let known = evaluate_with_threshold(&model, &test_rows, opts.threshold)?;
    let unknown = evaluate_with_threshold(&model, &unknown, opts.threshold)?;
    Ok(Cell { known, unknown, train, model })
}

pub fn run_cells(testbed: &Testbed, keys: &[CellKey], opts: &RunOptions, kind: ReportKind) -> Result<SweepReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        if jobs == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(CellKey, Cell)> = pool.install(|| {
        keys.par_iter().map(|&key| run_cell(testbed, key, opts).map(|cell| (key, cell))).collect::<Result<_>>()
    })?;
    Ok(SweepReport { kind, threshold: opts.threshold, cells: results.into_iter().collect() })
}

/// Every listed algorithm on one configuration (four anchors in the
/// reference comparison), same data and seed per row.
pub fn algorithm_comparison(
    testbed: &Testbed,
    config: AnchorConfig,
    algorithms: &[Algorithm],
    seeds: &[u64],
    opts: &RunOptions,
) -> Result<SweepReport> {
    let keys: Vec<CellKey> = seeds
        .iter()
        .flat_map(|&seed| algorithms.iter().map(move |&algorithm| CellKey { config, algorithm, seed }))
        .collect();
    run_cells(testbed, &keys, opts, ReportKind::Comparison)
}

/// Every listed configuration under every listed algorithm. The network
/// input width follows each configuration's anchor count.
pub fn anchor_sweep(
    testbed: &Testbed,
    configs: &[AnchorConfig],
    algorithms: &[Algorithm],
    seeds: &[u64],
    opts: &RunOptions,
) -> Result<SweepReport> {
    let mut keys = Vec::new();
    for &config in configs {
        for &algorithm in algorithms {
            keys.extend(seeds.iter().map(|&seed| CellKey { config, algorithm, seed }));
        }
    }
    run_cells(testbed, &keys, opts, ReportKind::Sweep)
}

/// One cell, flattened for CSV and JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub config: String,
    pub algorithm: String,
    pub seed: u64,
    pub known_n: usize,
    pub known_average_error_m: f64,
    pub known_max_error_m: f64,
    pub known_pct_below: f64,
    pub unknown_n: usize,
    pub unknown_average_error_m: f64,
    pub unknown_max_error_m: f64,
    pub unknown_pct_below: f64,
    pub epochs_run: usize,
    pub stop_reason: String,
    pub final_train_mse: f64,
    pub final_validation_mse: Option<f64>,
    pub effective_parameters: Option<f64>,
}

impl CellRecord {
    pub fn metric(&self, set: TestSet, metric: Metric) -> f64 {
        match (set, metric) {
            (TestSet::Known, Metric::AverageError) => self.known_average_error_m,
            (TestSet::Known, Metric::MaxError) => self.known_max_error_m,
            (TestSet::Known, Metric::PctBelow) => self.known_pct_below,
            (TestSet::Unknown, Metric::AverageError) => self.unknown_average_error_m,
            (TestSet::Unknown, Metric::MaxError) => self.unknown_max_error_m,
            (TestSet::Unknown, Metric::PctBelow) => self.unknown_pct_below,
        }
    }
}

/// The structured document read by the plot command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub kind: ReportKind,
    pub threshold_m: f64,
    pub cells: Vec<CellRecord>,
}

/// Wall-clock sidecar row, kept apart from the reproducible report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub config: String,
    pub algorithm: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl SweepReport {
    pub fn get(&self, config: AnchorConfig, algorithm: Algorithm, seed: u64) -> Option<&Cell> {
        self.cells.get(&CellKey { config, algorithm, seed })
    }

    pub fn values(&self, config: AnchorConfig, algorithm: Algorithm, set: TestSet, metric: Metric) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|(k, _)| k.config == config && k.algorithm == algorithm)
            .map(|(_, c)| metric.of(if set == TestSet::Known { &c.known } else { &c.unknown }))
            .collect()
    }

    /// Median over seeds.
    pub fn median(&self, config: AnchorConfig, algorithm: Algorithm, set: TestSet, metric: Metric) -> Option<f64> {
        median(&mut self.values(config, algorithm, set, metric))
    }

    pub fn records(&self) -> Vec<CellRecord> {
        self.cells
            .iter()
            .map(|(k, c)| CellRecord {
                config: k.config.name().into(),
                algorithm: k.algorithm.name().into(),
                seed: k.seed,
                known_n: c.known.n,
                known_average_error_m: c.known.average_error,
                known_max_error_m: c.known.max_error,
                known_pct_below: c.known.pct_below,
                unknown_n: c.unknown.n,
                unknown_average_error_m: c.unknown.average_error,
                unknown_max_error_m: c.unknown.max_error,
                unknown_pct_below: c.unknown.pct_below,
                epochs_run: c.train.epochs_run,
                stop_reason: c.train.stop_reason.name().into(),
                final_train_mse: c.train.final_train_mse,
                final_validation_mse: c.train.final_validation_mse,
                effective_parameters: c.train.effective_parameters,
            })
            .collect()
    }

    pub fn document(&self) -> ReportDocument {
        ReportDocument { kind: self.kind, threshold_m: self.threshold, cells: self.records() }
    }

    /// One row per cell.
    pub fn to_csv(&self) -> String {
        to_csv(&self.records())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn times_csv(&self) -> String {
        let rows: Vec<TimeRecord> = self
            .cells
            .iter()
            .map(|(k, c)| TimeRecord {
                config: k.config.name().into(),
                algorithm: k.algorithm.name().into(),
                seed: k.seed,
                wall_time_s: c.train.wall_time,
            })
            .collect();
        to_csv(&rows)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn parse_document(text: &str) -> Result<ReportDocument> {
    if text.trim().is_empty() {
        return Err(Error::Report("empty report".into()));
    }
    let doc: ReportDocument = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    if doc.cells.is_empty() {
        return Err(Error::Report("report has no cells".into()));
    }
    Ok(doc)
}

pub fn parse_times(text: &str) -> Result<Vec<TimeRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Report(format!("time sidecar: {e}")))
}
