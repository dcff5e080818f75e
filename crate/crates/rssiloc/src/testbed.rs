//! The synthetic testbed and its plain-text configuration file.
//!
//! One `key = value` per line; `#` starts a comment. Tuples are
//! whitespace-separated numbers, lists of tuples are separated by `;`.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `p0` | dBm at the reference distance | -45 |
//! | `d0` | reference distance, m | 1 |
//! | `path_loss_exponent` | n | 2.2 |
//! | `shadowing_sigma` | dB | 2 |
//! | `sensitivity_floor` | dBm | -96 |
//! | `max_range` | m | 40 |
//! | `grid.rows`, `grid.cols` | counts | 9, 11 |
//! | `grid.spacing` | m | 0.45 |
//! | `grid.origin` | `x y` | `0 0` |
//! | `grid.exclude` | `row col; …` or `none` | five corner-adjacent cells |
//! | `anchor.<1-5>` | `x y` | grid corners and center |
//! | `room` | `xmin ymin xmax ymax` | grid bounding box |
//! | `samples_per_point` | count | 25 |
//! | `unknown_points` | `x y; …` | seven cell centers |
//! | `samples_per_unknown` | count | 15 |
//! | `train_fraction` | (0, 1) | 0.8 |
//! | `stratified` | `true`/`false` | true |
//!
//! The channel seed is not part of the file: every run takes it from the
//! command line.

use std::fmt::Write as _;
use std::path::Path;

use rssiloc_core::channel::{generate_dataset, reproduction_unknown_points, Anchor, Room};
use rssiloc_core::{
    AnchorConfig, ChannelModel, Dataset, Deployment, Error as CoreError, GridSpec, Position, SplitSpec,
};

use crate::dataset_csv::exact;
use crate::{artifacts, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Testbed {
    /// All deployed anchors; a configuration selects a subset.
    pub anchors: Vec<Anchor>,
    pub room: Room,
    /// Channel parameters. The seed field is replaced per run.
    pub channel: ChannelModel,
    pub grid: GridSpec,
    pub samples_per_point: usize,
    pub unknown_points: Vec<Position>,
    pub samples_per_unknown: usize,
    /// Split of the survey pool into train and known-position test rows.
    /// The seed field is replaced per run.
    pub split: SplitSpec,
}

impl Default for Testbed {
    fn default() -> Self {
        let grid = GridSpec::reproduction();
        let dep = Deployment::reference(&grid, AnchorConfig::Five).expect("reference deployment is valid");
        Self {
            anchors: dep.anchors,
            room: dep.room,
            channel: ChannelModel::default(),
            grid,
            samples_per_point: 25,
            unknown_points: reproduction_unknown_points().to_vec(),
            samples_per_unknown: 15,
            split: SplitSpec::default(),
        }
    }
}

impl Testbed {
    pub fn deployment(&self, config: AnchorConfig) -> Result<Deployment> {
        Ok(Deployment::new(self.anchors.clone(), config, self.room)?)
    }

    pub fn channel(&self, seed: u64) -> ChannelModel {
        ChannelModel { seed, ..self.channel }
    }

    /// Survey pool and unknown-position rows for one configuration. Noise
    /// depends only on `seed`, so configurations share their draws.
    pub fn generate(&self, config: AnchorConfig, seed: u64) -> Result<(Dataset, Dataset)> {
        Ok(generate_dataset(
            &self.deployment(config)?,
            &self.channel(seed),
            &self.grid,
            self.samples_per_point,
            &self.unknown_points,
            self.samples_per_unknown,
        )?)
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec { seed, ..self.split }
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse(&artifacts::read_to_string(path)?)
    }

    /// Every key with its current value, in a form [`parse`] reads back.
    pub fn to_text(&self) -> String {
        let c = &self.channel;
        let mut s = String::new();
        let pairs = |pts: &mut dyn Iterator<Item = (String, String)>| {
            pts.map(|(a, b)| format!("{a} {b}")).collect::<Vec<_>>().join("; ")
        };
        for (k, v) in [
            ("p0", c.p0),
            ("d0", c.d0),
            ("path_loss_exponent", c.path_loss_exponent),
            ("shadowing_sigma", c.shadowing_sigma),
            ("sensitivity_floor", c.sensitivity_floor),
            ("max_range", c.max_range),
        ] {
            writeln!(s, "{k} = {}", exact(v)).unwrap();
        }
        writeln!(s, "grid.rows = {}", self.grid.rows).unwrap();
        writeln!(s, "grid.cols = {}", self.grid.cols).unwrap();
        writeln!(s, "grid.spacing = {}", exact(self.grid.spacing)).unwrap();
        writeln!(s, "grid.origin = {} {}", exact(self.grid.origin.x), exact(self.grid.origin.y)).unwrap();
        let excluded = if self.grid.excluded.is_empty() {
            "none".to_string()
        } else {
            pairs(&mut self.grid.excluded.iter().map(|&(r, c)| (r.to_string(), c.to_string())))
        };
        writeln!(s, "grid.exclude = {excluded}").unwrap();
        for a in &self.anchors {
            writeln!(s, "anchor.{} = {} {}", a.id, exact(a.position.x), exact(a.position.y)).unwrap();
        }
        let r = &self.room;
        writeln!(s, "room = {} {} {} {}", exact(r.min.x), exact(r.min.y), exact(r.max.x), exact(r.max.y)).unwrap();
        writeln!(s, "samples_per_point = {}", self.samples_per_point).unwrap();
        writeln!(s, "unknown_points = {}", pairs(&mut self.unknown_points.iter().map(|p| (exact(p.x), exact(p.y)))))
            .unwrap();
        writeln!(s, "samples_per_unknown = {}", self.samples_per_unknown).unwrap();
        writeln!(s, "train_fraction = {}", exact(self.split.train_fraction)).unwrap();
        writeln!(s, "stratified = {}", self.split.stratified).unwrap();
        s
    }
}

fn numbers(line: u64, value: &str, arity: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = value
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("{t:?} is not a number") }))
        .collect::<Result<_>>()?;
    if v.len() != arity {
        return Err(Error::Parse { line, message: format!("expected {arity} numbers, found {}", v.len()) });
    }
    Ok(v)
}

fn tuples(line: u64, value: &str, arity: usize) -> Result<Vec<Vec<f64>>> {
    value.split(';').filter(|t| !t.trim().is_empty()).map(|t| numbers(line, t, arity)).collect()
}

fn count(line: u64, value: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::Parse { line, message: format!("{value:?} is not a count") })
}

/// Reads a testbed file. Keys left out keep their defaults; anchors and the
/// room follow the grid unless set explicitly.
pub fn parse(text: &str) -> Result<Testbed> {
    let mut tb = Testbed::default();
    let mut anchors: Vec<(u8, Position)> = Vec::new();
    let mut room = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, found {content:?}") })?;
        let scalar = || numbers(line, value, 1).map(|v| v[0]);
        let ch = &mut tb.channel;
        match key {
            "p0" => ch.p0 = scalar()?,
            "d0" => ch.d0 = scalar()?,
            "path_loss_exponent" => ch.path_loss_exponent = scalar()?,
            "shadowing_sigma" => ch.shadowing_sigma = scalar()?,
            "sensitivity_floor" => ch.sensitivity_floor = scalar()?,
            "max_range" => ch.max_range = scalar()?,
            "grid.rows" => tb.grid.rows = count(line, value)?,
            "grid.cols" => tb.grid.cols = count(line, value)?,
            "grid.spacing" => tb.grid.spacing = scalar()?,
            "grid.origin" => {
                let v = numbers(line, value, 2)?;
                tb.grid.origin = Position::new(v[0], v[1]);
            }
            "grid.exclude" => {
                tb.grid.excluded = if value == "none" {
                    Vec::new()
                } else {
                    value
                        .split(';')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| {
                            let rc: Vec<usize> = t.split_whitespace().map(|v| count(line, v)).collect::<Result<_>>()?;
                            match rc[..] {
                                [r, c] => Ok((r, c)),
                                _ => Err(Error::Parse { line, message: format!("expected `row col`, found {t:?}") }),
                            }
                        })
                        .collect::<Result<_>>()?
                }
            }
            "room" => {
                let v = numbers(line, value, 4)?;
                room = Some(Room { min: Position::new(v[0], v[1]), max: Position::new(v[2], v[3]) });
            }
            "samples_per_point" => tb.samples_per_point = count(line, value)?,
            "samples_per_unknown" => tb.samples_per_unknown = count(line, value)?,
            "unknown_points" => {
                tb.unknown_points = tuples(line, value, 2)?.into_iter().map(|v| Position::new(v[0], v[1])).collect()
            }
            "train_fraction" => tb.split.train_fraction = scalar()?,
            "stratified" => {
                tb.split.stratified = value
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("{value:?} is not true or false") })?
            }
            _ => match key.strip_prefix("anchor.").map(str::parse::<u8>) {
                Some(Ok(id @ 1..=5)) => {
                    let v = numbers(line, value, 2)?;
                    anchors.retain(|a| a.0 != id);
                    anchors.push((id, Position::new(v[0], v[1])));
                }
                _ => return Err(Error::Parse { line, message: format!("unknown key {key:?}") }),
            },
        }
    }

    let reference = Deployment::reference(&tb.grid, AnchorConfig::Five)?;
    tb.room = room.unwrap_or(reference.room);
    tb.anchors = reference.anchors;
    for (id, pos) in anchors {
        if let Some(a) = tb.anchors.iter_mut().find(|a| a.id == id) {
            a.position = pos;
        }
    }
    tb.channel.validate()?;
    if !(tb.split.train_fraction > 0.0 && tb.split.train_fraction < 1.0) {
        return Err(
            CoreError::InvalidConfig(format!("train_fraction {} is outside (0, 1)", tb.split.train_fraction)).into()
        );
    }
    Deployment::new(tb.anchors.clone(), AnchorConfig::Five, tb.room)?;
    Ok(tb)
}
