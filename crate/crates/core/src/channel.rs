//! Synthetic testbed: five anchors around the survey grid, a log-distance
//! path-loss channel with Gaussian shadowing, and the beacon request/response
//! exchange that yields one RSSI reading per selected anchor.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{Dataset, GridSpec, Sample};
use crate::mlp::{Position, RssiVector};
use crate::{rng, Error, Result};

/// Subsets of the five anchors used as network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnchorConfig {
    TwoA,
    TwoB,
    ThreeA,
    ThreeB,
    Four,
    Five,
}

impl AnchorConfig {
    pub const ALL: [AnchorConfig; 6] = [
        AnchorConfig::TwoA,
        AnchorConfig::TwoB,
        AnchorConfig::ThreeA,
        AnchorConfig::ThreeB,
        AnchorConfig::Four,
        AnchorConfig::Five,
    ];

    /// Selected anchor ids, ascending.
    pub fn ids(self) -> &'static [u8] {
        match self {
            AnchorConfig::TwoA => &[2, 4],
            AnchorConfig::TwoB => &[1, 4],
            AnchorConfig::ThreeA => &[1, 2, 4],
            AnchorConfig::ThreeB => &[1, 3, 5],
            AnchorConfig::Four => &[1, 2, 4, 5],
            AnchorConfig::Five => &[1, 2, 3, 4, 5],
        }
    }

    pub fn anchor_count(self) -> usize {
        self.ids().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            AnchorConfig::TwoA => "two_a",
            AnchorConfig::TwoB => "two_b",
            AnchorConfig::ThreeA => "three_a",
            AnchorConfig::ThreeB => "three_b",
            AnchorConfig::Four => "four",
            AnchorConfig::Five => "five",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl core::fmt::Display for AnchorConfig {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub id: u8,
    pub position: Position,
}

/// Axis-aligned rectangle, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub min: Position,
    pub max: Position,
}

impl Room {
    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub anchors: Vec<Anchor>,
    pub selection: AnchorConfig,
    pub room: Room,
}

impl Deployment {
    /// Anchors 1-4 on the grid corners (counter-clockwise from the origin, so
    /// 1/3 and 2/4 are diagonal pairs) and anchor 5 at the grid center. The
    /// room is the grid's bounding box.
    pub fn reference(grid: &GridSpec, selection: AnchorConfig) -> Result<Self> {
        grid.validate()?;
        let (o, e) = (grid.origin, grid.extent());
        let anchors = [
            Position::new(o.x, o.y),
            Position::new(e.x, o.y),
            Position::new(e.x, e.y),
            Position::new(o.x, e.y),
            Position::new((o.x + e.x) / 2.0, (o.y + e.y) / 2.0),
        ]
        .into_iter()
        .zip(1u8..)
        .map(|(position, id)| Anchor { id, position })
        .collect();
        Self::new(anchors, selection, Room { min: o, max: e })
    }

    pub fn new(anchors: Vec<Anchor>, selection: AnchorConfig, room: Room) -> Result<Self> {
        for (i, a) in anchors.iter().enumerate() {
            if anchors[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidConfig(format!("anchor id {} appears twice", a.id)));
            }
            if !room.contains(&a.position) {
                return Err(Error::InvalidConfig(format!("anchor {} lies outside the room", a.id)));
            }
        }
        let dep = Self { anchors, selection, room };
        dep.selected()?;
        Ok(dep)
    }

    pub fn with_selection(&self, selection: AnchorConfig) -> Result<Self> {
        Self::new(self.anchors.clone(), selection, self.room)
    }

    pub fn anchor(&self, id: u8) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.id == id)
    }

    /// Selected anchors in ascending id order.
    pub fn selected(&self) -> Result<Vec<Anchor>> {
        self.selection
            .ids()
            .iter()
            .map(|&id| {
                self.anchor(id)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("selection {} needs anchor {id}", self.selection)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    /// RSSI at the reference distance, dBm.
    pub p0: f64,
    /// Reference distance, meters.
    pub d0: f64,
    pub path_loss_exponent: f64,
    /// Shadowing standard deviation, dB.
    pub shadowing_sigma: f64,
    /// Receiver sensitivity, dBm. Readings never fall below it.
    pub sensitivity_floor: f64,
    /// Beacons from farther away are lost, meters.
    pub max_range: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            p0: -45.0,
            d0: 1.0,
            path_loss_exponent: 2.2,
            shadowing_sigma: 2.0,
            sensitivity_floor: -96.0,
            max_range: 40.0,
            seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d0 > 0.0
            && self.path_loss_exponent > 0.0
            && self.shadowing_sigma >= 0.0
            && self.sensitivity_floor < self.p0
            && self.max_range > 0.0
            && [self.p0, self.d0, self.path_loss_exponent, self.shadowing_sigma, self.sensitivity_floor]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid channel model {self:?}")))
        }
    }

    /// `p0 - 10·n·log10(max(d, d0)/d0) + σ·noise`, floored at the receiver
    /// sensitivity.
    pub fn rssi_at(&self, distance: f64, noise_draw: f64) -> Result<f64> {
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(Error::OutOfRange(format!("distance {distance} m is not a valid range")));
        }
        if distance > self.max_range {
            return Err(Error::OutOfRange(format!(
                "distance {distance} m exceeds the {} m communication range",
                self.max_range
            )));
        }
        let ratio = if distance > self.d0 { distance / self.d0 } else { 1.0 };
        let mean = self.p0 - 10.0 * self.path_loss_exponent * libm::log10(ratio);
        Ok((mean + self.shadowing_sigma * noise_draw).max(self.sensitivity_floor))
    }
}

/// Which measurement campaign a reading belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Campaign {
    /// Grid reference points.
    Survey,
    /// Off-grid test positions.
    Unknown,
}

/// Addresses one measurement instance. Shadowing draws are a pure function
/// of `(channel seed, campaign, point, sample, anchor id)`, so datasets for
/// different anchor selections share noise on the anchors they have in
/// common.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleKey {
    pub campaign: Campaign,
    pub point: u32,
    pub sample: u32,
}

impl SampleKey {
    pub fn noise(&self, seed: u64, anchor_id: u8) -> f64 {
        let campaign = match self.campaign {
            Campaign::Survey => 0,
            Campaign::Unknown => 1,
        };
        rng::keyed_normal(seed, &[campaign, self.point as u64, self.sample as u64, anchor_id as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Message {
    /// Mobile node broadcasts a request for localization beacons.
    BeaconRequest,
    /// An anchor answers; the mobile node records the packet's RSSI.
    Beacon { anchor_id: u8, rssi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementInstance {
    pub mobile_position: Position,
    /// `(anchor id, dBm)` in ascending anchor order.
    pub readings: Vec<(u8, f64)>,
    pub exchange_log: Vec<Message>,
}

impl MeasurementInstance {
    pub fn rssi_vector(&self) -> RssiVector {
        RssiVector::new(self.readings.iter().map(|&(_, r)| r).collect()).expect("channel readings are finite")
    }
}

/// Runs one request/beacon exchange from `mobile`.
pub fn measure(
    dep: &Deployment,
    model: &ChannelModel,
    mobile: Position,
    key: SampleKey,
) -> Result<MeasurementInstance> {
    model.validate()?;
    if !dep.room.contains(&mobile) {
        return Err(Error::OutOfRange(format!("mobile position ({}, {}) is outside the room", mobile.x, mobile.y)));
    }
    let anchors = dep.selected()?;
    let mut log = Vec::with_capacity(anchors.len() + 1);
    log.push(Message::BeaconRequest);
    let mut readings = Vec::with_capacity(anchors.len());
    for a in anchors {
        let d = mobile.distance(&a.position);
        let rssi = model
            .rssi_at(d, key.noise(model.seed, a.id))
            .map_err(|e| Error::OutOfRange(format!("anchor {} unreachable: {e}", a.id)))?;
        log.push(Message::Beacon { anchor_id: a.id, rssi });
        readings.push((a.id, rssi));
    }
    Ok(MeasurementInstance { mobile_position: mobile, readings, exchange_log: log })
}

/// Measures every surveyed grid point `samples_per_point` times and every
/// unknown point `samples_per_unknown` times. Returns `(train_pool,
/// unknown_test)`.
pub fn generate_dataset(
    dep: &Deployment,
    model: &ChannelModel,
    grid: &GridSpec,
    samples_per_point: usize,
    unknown_points: &[Position],
    samples_per_unknown: usize,
) -> Result<(Dataset, Dataset)> {
    if samples_per_point == 0 {
        return Err(Error::InvalidConfig("samples per point must be at least 1".into()));
    }
    let n = dep.selection.anchor_count();
    let mut survey = Vec::new();
    for (cell, pos) in grid.indexed_points()? {
        for s in 0..samples_per_point {
            let key = SampleKey { campaign: Campaign::Survey, point: cell as u32, sample: s as u32 };
            survey.push(Sample::new(measure(dep, model, pos, key)?.rssi_vector(), pos));
        }
    }
    let mut unknown = Vec::new();
    for (i, &pos) in unknown_points.iter().enumerate() {
        for s in 0..samples_per_unknown {
            let key = SampleKey { campaign: Campaign::Unknown, point: i as u32, sample: s as u32 };
            unknown.push(Sample::new(measure(dep, model, pos, key)?.rssi_vector(), pos));
        }
    }
    let meta = format!("synthetic config={} seed={}", dep.selection, model.seed);
    Ok((
        Dataset::new(n, survey, format!("{meta} campaign=survey"))?,
        Dataset::new(n, unknown, format!("{meta} campaign=unknown"))?,
    ))
}

/// Seven off-grid test positions, each at the center of a grid cell.
pub fn reproduction_unknown_points() -> [Position; 7] {
    [
        Position::new(0.675, 1.125),
        Position::new(1.575, 0.675),
        Position::new(2.925, 1.575),
        Position::new(1.125, 2.475),
        Position::new(2.475, 2.925),
        Position::new(0.675, 3.825),
        Position::new(2.925, 3.825),
    ]
}
