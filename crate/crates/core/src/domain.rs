//! Placement records, the fixed feature encoding and dataset splitting.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One-hot slots (3 + 2 + 3 + 5) followed by the nine continuous inputs.
pub const FEATURE_DIM: usize = 22;

/// Slot names, in encoding order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "comp_size=80",
    "comp_size=180",
    "comp_size=500",
    "comp_type=R",
    "comp_type=C",
    "pad_size=44",
    "pad_size=102",
    "pad_size=280",
    "pad_gap=160",
    "pad_gap=260",
    "pad_gap=250",
    "pad_gap=450",
    "pad_gap=460",
    "vol_avg",
    "vol_diff",
    "paste_x1",
    "paste_y1",
    "paste_x2",
    "paste_y2",
    "pre_x",
    "pre_y",
    "pre_theta",
];

/// Index of the first placement slot (pre_x); pre_y and pre_theta follow.
pub const PLACEMENT_OFFSET: usize = 19;

/// Component body area class, in 1000 um^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentSize {
    Area80,
    Area180,
    Area500,
}

impl ComponentSize {
    pub const LEVELS: [ComponentSize; 3] = [Self::Area80, Self::Area180, Self::Area500];

    pub fn value(self) -> f64 {
        match self {
            Self::Area80 => 80.0,
            Self::Area180 => 180.0,
            Self::Area500 => 500.0,
        }
    }

    pub fn from_value(value: f64) -> Result<Self> {
        level_from_value(&Self::LEVELS, Self::value, value, "comp_size")
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentType {
    Resistor,
    Capacitor,
}

impl ComponentType {
    pub const LEVELS: [ComponentType; 2] = [Self::Resistor, Self::Capacitor];

    pub fn code(self) -> &'static str {
        match self {
            Self::Resistor => "R",
            Self::Capacitor => "C",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code.trim() {
            "R" | "r" => Ok(Self::Resistor),
            "C" | "c" => Ok(Self::Capacitor),
            _ => Err(Error::InvalidField {
                field: "comp_type",
                reason: "expected R or C",
            }),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Pad area class, in 1000 um^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PadSize {
    Area44,
    Area102,
    Area280,
}

impl PadSize {
    pub const LEVELS: [PadSize; 3] = [Self::Area44, Self::Area102, Self::Area280];

    pub fn value(self) -> f64 {
        match self {
            Self::Area44 => 44.0,
            Self::Area102 => 102.0,
            Self::Area280 => 280.0,
        }
    }

    pub fn from_value(value: f64) -> Result<Self> {
        level_from_value(&Self::LEVELS, Self::value, value, "pad_size")
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Gap between the two pads, in um. Level order is kept as listed for the
/// line (160, 260, 250, 450, 460), not sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PadGap {
    Gap160,
    Gap260,
    Gap250,
    Gap450,
    Gap460,
}

impl PadGap {
    pub const LEVELS: [PadGap; 5] = [
        Self::Gap160,
        Self::Gap260,
        Self::Gap250,
        Self::Gap450,
        Self::Gap460,
    ];

    pub fn value(self) -> f64 {
        match self {
            Self::Gap160 => 160.0,
            Self::Gap260 => 260.0,
            Self::Gap250 => 250.0,
            Self::Gap450 => 450.0,
            Self::Gap460 => 460.0,
        }
    }

    pub fn from_value(value: f64) -> Result<Self> {
        level_from_value(&Self::LEVELS, Self::value, value, "pad_gap")
    }

    fn index(self) -> usize {
        self as usize
    }
}

fn level_from_value<T: Copy>(
    levels: &[T],
    value_of: fn(T) -> f64,
    value: f64,
    field: &'static str,
) -> Result<T> {
    levels
        .iter()
        .copied()
        .find(|&level| value_of(level) == value)
        .ok_or(Error::UnknownLevel { field, value })
}

/// Standard chip packages used by the synthetic line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Package {
    P0402,
    P0603,
    P1005,
}

impl Package {
    pub const ALL: [Package; 3] = [Self::P1005, Self::P0603, Self::P0402];

    /// Body (length, width) in um.
    pub fn body(self) -> (f64, f64) {
        match self {
            Self::P0402 => (400.0, 200.0),
            Self::P0603 => (600.0, 300.0),
            Self::P1005 => (1000.0, 500.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::P0402 => "0402",
            Self::P0603 => "0603",
            Self::P1005 => "1005",
        }
    }
}

/// Component and pad design for one placement site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentDirectory {
    pub component_size: ComponentSize,
    pub component_type: ComponentType,
    pub pad_size: PadSize,
    pub pad_gap: PadGap,
    /// um
    pub pad_length: f64,
    /// um
    pub pad_width: f64,
}

impl ComponentDirectory {
    pub fn new(
        component_size: ComponentSize,
        component_type: ComponentType,
        pad_size: PadSize,
        pad_gap: PadGap,
        pad_length: f64,
        pad_width: f64,
    ) -> Result<Self> {
        let dir = Self {
            component_size,
            component_type,
            pad_size,
            pad_gap,
            pad_length,
            pad_width,
        };
        dir.validate()?;
        Ok(dir)
    }

    /// Default directory for a package: pad width equals the component
    /// width and pad length is the class area divided by that width.
    pub fn preset(component_type: ComponentType, package: Package) -> Self {
        let (_, width) = package.body();
        let (component_size, pad_size, pad_gap) = match (package, component_type) {
            (Package::P0402, _) => (ComponentSize::Area80, PadSize::Area44, PadGap::Gap160),
            (Package::P0603, ComponentType::Resistor) => {
                (ComponentSize::Area180, PadSize::Area102, PadGap::Gap260)
            }
            (Package::P0603, ComponentType::Capacitor) => {
                (ComponentSize::Area180, PadSize::Area102, PadGap::Gap250)
            }
            (Package::P1005, ComponentType::Resistor) => {
                (ComponentSize::Area500, PadSize::Area280, PadGap::Gap450)
            }
            (Package::P1005, ComponentType::Capacitor) => {
                (ComponentSize::Area500, PadSize::Area280, PadGap::Gap460)
            }
        };
        Self {
            component_size,
            component_type,
            pad_size,
            pad_gap,
            pad_length: pad_size.value() * 1000.0 / width,
            pad_width: width,
        }
    }

    /// The six line presets: R and C for each of 1005, 0603 and 0402.
    pub fn presets() -> [Self; 6] {
        let mut out = [Self::preset(ComponentType::Resistor, Package::P1005); 6];
        let mut k = 0;
        for package in Package::ALL {
            for kind in ComponentType::LEVELS {
                out[k] = Self::preset(kind, package);
                k += 1;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pad_length.is_finite() && self.pad_length > 0.0) {
            return Err(Error::InvalidField {
                field: "pad_length",
                reason: "must be positive and finite",
            });
        }
        if !(self.pad_width.is_finite() && self.pad_width > 0.0) {
            return Err(Error::InvalidField {
                field: "pad_width",
                reason: "must be positive and finite",
            });
        }
        let class_area = self.pad_size.value() * 1000.0;
        let area = self.pad_length * self.pad_width;
        if libm::fabs(area - class_area) > 0.01 * class_area {
            return Err(Error::InvalidField {
                field: "pad_length",
                reason: "pad_length x pad_width must match the pad size class within 1%",
            });
        }
        Ok(())
    }
}

/// Solder paste inspection summary for the two pads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PasteState {
    /// Mean printed volume ratio over both pads, %.
    pub volume_avg_pct: f64,
    /// Printed volume ratio difference between pads, %.
    pub volume_diff_pct: f64,
    pub paste_offset_x1: f64,
    pub paste_offset_y1: f64,
    pub paste_offset_x2: f64,
    pub paste_offset_y2: f64,
}

impl PasteState {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.volume_avg_pct,
            self.volume_diff_pct,
            self.paste_offset_x1,
            self.paste_offset_y1,
            self.paste_offset_x2,
            self.paste_offset_y2,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("paste state"));
        }
        if self.volume_avg_pct <= 0.0 {
            return Err(Error::InvalidField {
                field: "vol_avg",
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// Midpoint of the two paste deposits, (x, y) in um.
    pub fn centroid(&self) -> (f64, f64) {
        (
            (self.paste_offset_x1 + self.paste_offset_x2) / 2.0,
            (self.paste_offset_y1 + self.paste_offset_y2) / 2.0,
        )
    }
}

/// Pre-reflow placement offset from the pad center (the decision variables).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlacementSetting {
    pub pre_offset_x: f64,
    pub pre_offset_y: f64,
    /// degrees
    pub pre_offset_theta: f64,
}

impl PlacementSetting {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            pre_offset_x: x,
            pre_offset_y: y,
            pre_offset_theta: theta,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.pre_offset_x, self.pre_offset_y, self.pre_offset_theta]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostOffsets {
    pub post_x: f64,
    pub post_y: f64,
    /// degrees
    pub post_theta: f64,
}

impl PostOffsets {
    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::PostX => self.post_x,
            Target::PostY => self.post_y,
            Target::PostTheta => self.post_theta,
        }
    }
}

/// Prediction target (one regressor per target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    PostX,
    PostY,
    PostTheta,
}

impl Target {
    pub const ALL: [Target; 3] = [Self::PostX, Self::PostY, Self::PostTheta];

    pub fn name(self) -> &'static str {
        match self {
            Self::PostX => "post_x",
            Self::PostY => "post_y",
            Self::PostTheta => "post_theta",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::PostX | Self::PostY => "um",
            Self::PostTheta => "deg",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub directory: ComponentDirectory,
    pub paste: PasteState,
    pub placement: PlacementSetting,
    pub targets: Option<PostOffsets>,
}

impl PlacementRecord {
    pub fn is_labeled(&self) -> bool {
        self.targets.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        self.directory.validate()?;
        self.paste.validate()?;
        if !self.placement.is_finite() {
            return Err(Error::NonFinite("placement setting"));
        }
        if let Some(t) = &self.targets {
            if !(t.post_x.is_finite() && t.post_y.is_finite() && t.post_theta.is_finite()) {
                return Err(Error::NonFinite("post offsets"));
            }
        }
        Ok(())
    }

    pub fn target(&self, target: Target) -> Result<f64> {
        self.targets.map(|t| t.get(target)).ok_or(Error::Unlabeled)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Encodes a record as one-hot categoricals followed by the raw
/// continuous inputs (no scaling).
pub fn encode_features(record: &PlacementRecord) -> Result<FeatureVector> {
    record.validate()?;
    Ok(encode_parts(
        &record.directory,
        &record.paste,
        &record.placement,
    ))
}

/// Encoding without validation, for hot loops over a fixed context.
pub fn encode_parts(
    directory: &ComponentDirectory,
    paste: &PasteState,
    placement: &PlacementSetting,
) -> FeatureVector {
    let mut v = [0.0; FEATURE_DIM];
    v[directory.component_size.index()] = 1.0;
    v[3 + directory.component_type.index()] = 1.0;
    v[5 + directory.pad_size.index()] = 1.0;
    v[8 + directory.pad_gap.index()] = 1.0;
    v[13] = paste.volume_avg_pct;
    v[14] = paste.volume_diff_pct;
    v[15] = paste.paste_offset_x1;
    v[16] = paste.paste_offset_y1;
    v[17] = paste.paste_offset_x2;
    v[18] = paste.paste_offset_y2;
    v[PLACEMENT_OFFSET] = placement.pre_offset_x;
    v[PLACEMENT_OFFSET + 1] = placement.pre_offset_y;
    v[PLACEMENT_OFFSET + 2] = placement.pre_offset_theta;
    FeatureVector(v)
}

/// Encodes every record and pulls out the requested target column.
pub fn design_matrix(
    records: &[PlacementRecord],
    target: Target,
) -> Result<(Vec<[f64; FEATURE_DIM]>, Vec<f64>)> {
    let mut features = Vec::with_capacity(records.len());
    let mut targets = Vec::with_capacity(records.len());
    for record in records {
        features.push(encode_features(record)?.0);
        targets.push(record.target(target)?);
    }
    Ok((features, targets))
}

pub const MIN_SPLIT_RECORDS: usize = 10;

/// Indices into the source list for each part of a 70:10:20 split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Seeded shuffle, then a contiguous cut at 70% and 80%.
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < MIN_SPLIT_RECORDS {
            return Err(Error::TooFewRecords {
                required: MIN_SPLIT_RECORDS,
                actual: n,
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, rng::SPLIT_STREAM));
        let n_train = (7 * n + 5) / 10;
        let n_val = (n + 5) / 10;
        let test = order.split_off(n_train + n_val);
        let validation = order.split_off(n_train);
        Ok(Self {
            seed,
            train: order,
            validation,
            test,
        })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub indices: SplitIndices,
    pub train: Vec<PlacementRecord>,
    pub validation: Vec<PlacementRecord>,
    pub test: Vec<PlacementRecord>,
}

impl DatasetSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        self.indices.sizes()
    }
}

/// Splits labeled records 70:10:20 into train, validation and test.
pub fn split_dataset(records: &[PlacementRecord], seed: u64) -> Result<DatasetSplit> {
    if records.iter().any(|r| !r.is_labeled()) {
        return Err(Error::Unlabeled);
    }
    let indices = SplitIndices::new(records.len(), seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| records[i]).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: pick(&indices.train),
        validation: pick(&indices.validation),
        test: pick(&indices.test),
        indices,
    })
}
