//! Fingerprint datasets: rows of `(R_1 … R_n, X, Y)`, the survey grid, the
//! train/test split and the normalization statistics.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::mlp::{MinMax, Position, RssiVector};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub rssi: RssiVector,
    pub target: Position,
}

impl Sample {
    pub fn new(rssi: RssiVector, target: Position) -> Self {
        Self { rssi, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    anchor_count: usize,
    rows: Vec<Sample>,
    point_count: usize,
    metadata: String,
}

fn target_key(p: &Position) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

impl Dataset {
    pub fn new(anchor_count: usize, rows: Vec<Sample>, metadata: impl Into<String>) -> Result<Self> {
        if anchor_count == 0 {
            return Err(Error::InvalidConfig("a dataset needs at least one anchor column".into()));
        }
        for row in &rows {
            if row.rssi.len() != anchor_count {
                return Err(Error::DimensionMismatch { expected: anchor_count, found: row.rssi.len() });
            }
            if !row.target.is_finite() {
                return Err(Error::NonFinite("dataset target".into()));
            }
        }
        let point_count = rows.iter().map(|r| target_key(&r.target)).collect::<BTreeSet<_>>().len();
        Ok(Self { anchor_count, rows, point_count, metadata: metadata.into() })
    }

    pub fn anchor_count(&self) -> usize {
        self.anchor_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    /// Distinct reference points among the targets.
    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn targets(&self) -> Vec<Position> {
        self.rows.iter().map(|r| r.target).collect()
    }

    /// Rows at `indices` (in the given order), keeping the metadata.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset::new(self.anchor_count, rows, self.metadata.clone()).expect("subset of a valid dataset")
    }

    /// Row indices grouped by reference point, groups in first-seen order.
    fn point_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut lookup = alloc::collections::BTreeMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            let g = *lookup.entry(target_key(&row.target)).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }
}

/// Rectangular survey grid. Row index advances along x, column index along y.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub origin: Position,
    /// `(row, col)` cells left out of the survey.
    pub excluded: Vec<(usize, usize)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rows: 9, cols: 11, spacing: 0.45, origin: Position::new(0.0, 0.0), excluded: Vec::new() }
    }
}

/// Cells dropped from the 9 × 11 grid so that 94 reference points remain.
/// They sit next to the corners, where the anchors are mounted.
pub const REPRODUCTION_EXCLUSIONS: [(usize, usize); 5] = [(0, 1), (1, 0), (0, 9), (8, 9), (7, 10)];

impl GridSpec {
    /// The 9 × 11 grid with [`REPRODUCTION_EXCLUSIONS`] removed (94 points).
    pub fn reproduction() -> Self {
        Self { excluded: REPRODUCTION_EXCLUSIONS.to_vec(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("grid needs at least one row and one column".into()));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidConfig("grid spacing must be positive".into()));
        }
        if !self.origin.is_finite() {
            return Err(Error::InvalidConfig("grid origin must be finite".into()));
        }
        if let Some(&(r, c)) = self.excluded.iter().find(|&&(r, c)| r >= self.rows || c >= self.cols) {
            return Err(Error::InvalidConfig(alloc::format!("excluded cell ({r}, {c}) is outside the grid")));
        }
        Ok(())
    }

    pub fn position(&self, row: usize, col: usize) -> Position {
        Position::new(self.origin.x + row as f64 * self.spacing, self.origin.y + col as f64 * self.spacing)
    }

    /// Far corner of the grid.
    pub fn extent(&self) -> Position {
        self.position(self.rows - 1, self.cols - 1)
    }

    /// Surveyed cells as `(row-major cell index, position)`, exclusions removed.
    pub fn indexed_points(&self) -> Result<Vec<(usize, Position)>> {
        self.validate()?;
        let excluded: BTreeSet<(usize, usize)> = self.excluded.iter().copied().collect();
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !excluded.contains(&(r, c)) {
                    out.push((r * self.cols + c, self.position(r, c)));
                }
            }
        }
        Ok(out)
    }
}

/// Row-major grid positions minus the excluded cells.
pub fn grid_points(spec: &GridSpec) -> Result<Vec<Position>> {
    Ok(spec.indexed_points()?.into_iter().map(|(_, p)| p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each reference point's rows separately so every point lands in
    /// both halves.
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

/// Partitions `data` into `(train, test)`. Rows keep their original relative
/// order inside each half.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "train fraction {} must lie strictly between 0 and 1",
            spec.train_fraction
        )));
    }
    if data.is_empty() {
        return Err(Error::DegenerateData("cannot split an empty dataset".into()));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut in_train = vec![false; data.len()];
    let groups = if spec.stratified { data.point_groups() } else { vec![(0..data.len()).collect()] };
    for mut group in groups {
        let n = group.len();
        let mut k = libm::round(spec.train_fraction * n as f64) as usize;
        if spec.stratified {
            if n < 2 {
                return Err(Error::DegenerateData(alloc::format!(
                    "reference point with {n} sample cannot appear in both splits"
                )));
            }
            k = k.clamp(1, n - 1);
        } else {
            k = k.min(n);
        }
        group.shuffle(&mut rng);
        for &i in &group[..k] {
            in_train[i] = true;
        }
    }
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| in_train[i]);
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

/// Per-channel `(min, max)` over the given rows: one entry per RSSI column,
/// then one each for x and y. A target axis with no spread is widened by one
/// meter on each side so the output map stays invertible.
pub fn normalization_stats(train: &Dataset) -> Result<(Vec<MinMax>, Vec<MinMax>)> {
    if train.is_empty() {
        return Err(Error::DegenerateData("normalization needs at least one row".into()));
    }
    let mut input = Vec::with_capacity(train.anchor_count());
    for ch in 0..train.anchor_count() {
        let (lo, hi) = min_max(train.rows().iter().map(|r| r.rssi[ch]));
        if hi <= lo {
            return Err(Error::DegenerateData(alloc::format!("input channel {} has zero range", ch + 1)));
        }
        input.push(MinMax { min: lo, max: hi });
    }
    let mut output = Vec::with_capacity(2);
    for axis in [0, 1] {
        let (lo, hi) = min_max(train.rows().iter().map(|r| if axis == 0 { r.target.x } else { r.target.y }));
        output.push(if hi > lo { MinMax { min: lo, max: hi } } else { MinMax { min: lo - 1.0, max: hi + 1.0 } });
    }
    Ok((input, output))
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
