//! Line-oriented training record.
//!
//! ```text
//! epoch,train_mse,val_mse
//! 1,3.1416e-2,3.3012e-2
//! 2,1.0121e-2,-
//! # summary
//! algorithm = lm
//! seed = 0
//! layers = 4-12-12-2
//! epochs_run = 2
//! stop_reason = early_stop
//! final_train_mse = 1.0121e-2
//! final_validation_mse = -
//! effective_parameters = -
//! ```
//!
//! `-` marks an absent value. Floats use the shortest exact decimal form.
//! Wall-clock time lives in a sidecar file (`wall_time_s = <seconds>`) so the
//! record itself is reproducible byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use rssiloc_core::optim::EpochLoss;
use rssiloc_core::{Algorithm, StopReason, TrainReport};

use crate::{artifacts, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub seed: u64,
    pub layers: Vec<usize>,
    pub report: TrainReport,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:e}"))
}

pub fn to_text(record: &TrainRecord) -> String {
    let r = &record.report;
    let mut s = String::from("epoch,train_mse,val_mse\n");
    for (i, e) in r.loss_trace.iter().enumerate() {
        writeln!(s, "{},{:e},{}", i + 1, e.train_mse, opt(e.validation_mse)).unwrap();
    }
    let layers: Vec<String> = record.layers.iter().map(usize::to_string).collect();
    s.push_str("# summary\n");
    writeln!(s, "algorithm = {}", r.algorithm).unwrap();
    writeln!(s, "seed = {}", record.seed).unwrap();
    writeln!(s, "layers = {}", layers.join("-")).unwrap();
    writeln!(s, "epochs_run = {}", r.epochs_run).unwrap();
    writeln!(s, "stop_reason = {}", r.stop_reason.name()).unwrap();
    writeln!(s, "final_train_mse = {:e}", r.final_train_mse).unwrap();
    writeln!(s, "final_validation_mse = {}", opt(r.final_validation_mse)).unwrap();
    writeln!(s, "effective_parameters = {}", opt(r.effective_parameters)).unwrap();
    s
}

pub fn wall_time_text(seconds: f64) -> String {
    format!("wall_time_s = {seconds:e}\n")
}

fn malformed(line: usize, what: &str) -> Error {
    Error::Report(format!("line {}: {what}", line + 1))
}

fn float(line: usize, v: &str) -> Result<f64> {
    v.parse().map_err(|_| malformed(line, &format!("{v:?} is not a number")))
}

fn opt_float(line: usize, v: &str) -> Result<Option<f64>> {
    if v == "-" {
        Ok(None)
    } else {
        float(line, v).map(Some)
    }
}

/// Reads a record back. `wall_time` comes out as zero; see [`parse_wall_time`].
pub fn parse(text: &str) -> Result<TrainRecord> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "epoch,train_mse,val_mse")) => {}
        Some((i, _)) => return Err(malformed(i, "expected the `epoch,train_mse,val_mse` header")),
        None => return Err(Error::Report("empty report".into())),
    }
    let mut trace = Vec::new();
    for (i, line) in lines.by_ref() {
        if line == "# summary" {
            break;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 || f[0].parse::<usize>().ok() != Some(trace.len() + 1) {
            return Err(malformed(i, "expected `epoch,train_mse,val_mse` with consecutive epochs"));
        }
        trace.push(EpochLoss { train_mse: float(i, f[1])?, validation_mse: opt_float(i, f[2])? });
    }

    let mut fields = std::collections::BTreeMap::new();
    for (i, line) in lines {
        let (k, v) = line.split_once(" = ").ok_or_else(|| malformed(i, "expected `key = value`"))?;
        fields.insert(k, (i, v));
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Report(format!("summary lacks `{k}`")));

    let (i, v) = get("algorithm")?;
    let algorithm = Algorithm::from_name(v).ok_or_else(|| malformed(i, "unknown algorithm"))?;
    let (i, v) = get("seed")?;
    let seed = v.parse().map_err(|_| malformed(i, "bad seed"))?;
    let (i, v) = get("layers")?;
    let layers = v.split('-').map(|w| w.parse().map_err(|_| malformed(i, "bad layer list"))).collect::<Result<_>>()?;
    let (i, v) = get("epochs_run")?;
    let epochs_run: usize = v.parse().map_err(|_| malformed(i, "bad epoch count"))?;
    if epochs_run != trace.len() {
        return Err(malformed(i, "epoch count disagrees with the trace"));
    }
    let (i, v) = get("stop_reason")?;
    let stop_reason = StopReason::from_name(v).ok_or_else(|| malformed(i, "unknown stop reason"))?;
    let (i, v) = get("final_train_mse")?;
    let final_train_mse = float(i, v)?;
    let (i, v) = get("final_validation_mse")?;
    let final_validation_mse = opt_float(i, v)?;
    let (i, v) = get("effective_parameters")?;
    let effective_parameters = opt_float(i, v)?;

    Ok(TrainRecord {
        seed,
        layers,
        report: TrainReport {
            algorithm,
            epochs_run,
            loss_trace: trace,
            final_train_mse,
            final_validation_mse,
            stop_reason,
            wall_time: 0.0,
            effective_parameters,
        },
    })
}

pub fn parse_wall_time(text: &str) -> Result<f64> {
    text.trim()
        .strip_prefix("wall_time_s = ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Report("expected `wall_time_s = <seconds>`".into()))
}

/// Loads a record and, when present, its `.time` sidecar.
pub fn load(path: &Path) -> Result<TrainRecord> {
    let mut record = parse(&artifacts::read_to_string(path)?)?;
    let sidecar = path.with_extension("time");
    if sidecar.exists() {
        record.report.wall_time = parse_wall_time(&artifacts::read_to_string(&sidecar)?)?;
    }
    Ok(record)
}
