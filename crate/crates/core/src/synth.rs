//! Synthetic placement line.
//!
//! Stands in for measured data with a parametric self-alignment oracle:
//! during reflow the part is pulled from its placed position toward the
//! paste centroid, more strongly when more solder is printed and less
//! strongly when the two deposits are unbalanced. Continuous inputs are
//! drawn from truncated normals fitted to the line's observed envelope.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    ComponentDirectory, PasteState, PlacementRecord, PlacementSetting, PostOffsets,
};
use crate::error::{Error, Result};
use crate::rng;

/// Upper clamp on the alignment strength.
pub const MAX_ALIGNMENT: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub align_base: f64,
    pub align_vol_gain: f64,
    pub align_diff_penalty: f64,
    /// um
    pub noise_sigma_xy: f64,
    /// degrees
    pub noise_sigma_theta: f64,
    pub seed: u64,
    /// Bypasses the volume model and uses this strength for every record.
    pub fixed_strength: Option<f64>,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            align_base: 0.7,
            align_vol_gain: 1.0,
            align_diff_penalty: 0.6,
            noise_sigma_xy: 10.0,
            noise_sigma_theta: 0.8,
            seed: 42,
            fixed_strength: None,
        }
    }
}

impl OracleParams {
    /// Turns off noise and the volume model; every part moves by `s`.
    pub fn noiseless_with_strength(s: f64) -> Self {
        Self {
            noise_sigma_xy: 0.0,
            noise_sigma_theta: 0.0,
            fixed_strength: Some(s),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.align_base,
            self.align_vol_gain,
            self.align_diff_penalty,
            self.noise_sigma_xy,
            self.noise_sigma_theta,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("oracle params"));
        }
        if self.noise_sigma_xy < 0.0 || self.noise_sigma_theta < 0.0 {
            return Err(Error::Config("oracle noise sigmas must be >= 0"));
        }
        if let Some(s) = self.fixed_strength {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config("oracle fixed_strength must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Fraction of the way the part travels toward the paste centroid.
    pub fn alignment_strength(&self, paste: &PasteState) -> f64 {
        if let Some(s) = self.fixed_strength {
            return s;
        }
        let s = self.align_base + self.align_vol_gain * (paste.volume_avg_pct / 100.0 - 1.0)
            - self.align_diff_penalty * libm::fabs(paste.volume_diff_pct) / 100.0;
        s.clamp(0.0, MAX_ALIGNMENT)
    }
}

/// Slope of the line through the two paste centers, degrees.
pub fn paste_slope_deg(paste: &PasteState) -> f64 {
    libm::atan2(
        paste.paste_offset_y1 - paste.paste_offset_y2,
        paste.paste_offset_x1 - paste.paste_offset_x2,
    )
    .to_degrees()
}

/// Ground-truth post-reflow offsets for a placement. Draws three standard
/// normals (x, y, theta) from `rng` whether or not noise is enabled.
pub fn simulate_reflow<R: Rng + ?Sized>(
    paste: &PasteState,
    placement: &PlacementSetting,
    params: &OracleParams,
    rng: &mut R,
) -> PostOffsets {
    let s = params.alignment_strength(paste);
    let (cx, cy) = paste.centroid();
    let zx: f64 = StandardNormal.sample(rng);
    let zy: f64 = StandardNormal.sample(rng);
    let zt: f64 = StandardNormal.sample(rng);
    PostOffsets {
        post_x: (1.0 - s) * placement.pre_offset_x + s * cx + params.noise_sigma_xy * zx,
        post_y: (1.0 - s) * placement.pre_offset_y + s * cy + params.noise_sigma_xy * zy,
        post_theta: (1.0 - s) * placement.pre_offset_theta
            + s * paste_slope_deg(paste)
            + params.noise_sigma_theta * zt,
    }
}

/// Truncated normal envelope for one continuous input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

const TRUNCATION_TRIES: usize = 100;

impl Envelope {
    pub const fn new(min: f64, max: f64, mean: f64, sd: f64) -> Self {
        Self { min, max, mean, sd }
    }

    fn validate(&self) -> Result<()> {
        if ![self.min, self.max, self.mean, self.sd]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("sampling envelope"));
        }
        if self.min > self.max || self.sd < 0.0 {
            return Err(Error::Config(
                "sampling envelope needs min <= max and sd >= 0",
            ));
        }
        Ok(())
    }

    /// Rejection sampling inside [min, max]; after 100 misses the last draw
    /// is clamped.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mean, self.sd).expect("validated sd");
        let mut x = self.mean;
        for _ in 0..TRUNCATION_TRIES {
            x = normal.sample(rng);
            if (self.min..=self.max).contains(&x) {
                return x;
            }
        }
        x.clamp(self.min, self.max)
    }
}

/// Sampling envelopes for the six paste and three placement inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousRanges {
    pub vol_avg: Envelope,
    pub vol_diff: Envelope,
    pub paste_x1: Envelope,
    pub paste_y1: Envelope,
    pub paste_x2: Envelope,
    pub paste_y2: Envelope,
    pub pre_x: Envelope,
    pub pre_y: Envelope,
    pub pre_theta: Envelope,
}

impl Default for ContinuousRanges {
    fn default() -> Self {
        Self {
            vol_avg: Envelope::new(46.32, 154.77, 95.25, 16.62),
            vol_diff: Envelope::new(-91.48, 96.40, 2.21, 27.85),
            paste_x1: Envelope::new(188.54, 698.81, 403.96, 159.05),
            paste_y1: Envelope::new(18.86, 316.63, 129.22, 64.60),
            paste_x2: Envelope::new(-412.58, -76.96, -216.29, 90.52),
            paste_y2: Envelope::new(8.13, 316.63, 130.00, 62.87),
            pre_x: Envelope::new(-37.15, 316.91, 123.16, 78.56),
            pre_y: Envelope::new(-97.88, 264.57, 61.38, 58.78),
            pre_theta: Envelope::new(-32.90, 24.78, -0.12, 2.98),
        }
    }
}

impl ContinuousRanges {
    fn all(&self) -> [&Envelope; 9] {
        [
            &self.vol_avg,
            &self.vol_diff,
            &self.paste_x1,
            &self.paste_y1,
            &self.paste_x2,
            &self.paste_y2,
            &self.pre_x,
            &self.pre_y,
            &self.pre_theta,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for env in self.all() {
            env.validate()?;
        }
        if self.vol_avg.min <= 0.0 {
            return Err(Error::Config("vol_avg envelope must be strictly positive"));
        }
        if self.paste_x1.min <= 0.0 {
            return Err(Error::Config(
                "paste_x1 envelope must be positive (pad 1 on +x)",
            ));
        }
        if self.paste_x2.max >= 0.0 {
            return Err(Error::Config(
                "paste_x2 envelope must be negative (pad 2 on -x)",
            ));
        }
        Ok(())
    }

    pub fn contains(&self, paste: &PasteState, placement: &PlacementSetting) -> bool {
        let values = [
            paste.volume_avg_pct,
            paste.volume_diff_pct,
            paste.paste_offset_x1,
            paste.paste_offset_y1,
            paste.paste_offset_x2,
            paste.paste_offset_y2,
            placement.pre_offset_x,
            placement.pre_offset_y,
            placement.pre_offset_theta,
        ];
        self.all()
            .iter()
            .zip(values)
            .all(|(env, v)| (env.min..=env.max).contains(&v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub records_per_type: usize,
    pub directories: Vec<ComponentDirectory>,
    pub ranges: ContinuousRanges,
    pub oracle: OracleParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            records_per_type: 660,
            directories: ComponentDirectory::presets().to_vec(),
            ranges: ContinuousRanges::default(),
            oracle: OracleParams::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.directories.is_empty() {
            return Err(Error::Config(
                "at least one component directory is required",
            ));
        }
        for dir in &self.directories {
            dir.validate()?;
        }
        self.ranges.validate()?;
        self.oracle.validate()
    }
}

/// Draws one unlabeled record for `directory`.
pub fn sample_context<R: Rng + ?Sized>(
    directory: &ComponentDirectory,
    ranges: &ContinuousRanges,
    rng: &mut R,
) -> PlacementRecord {
    let paste = PasteState {
        volume_avg_pct: ranges.vol_avg.sample(rng),
        volume_diff_pct: ranges.vol_diff.sample(rng),
        paste_offset_x1: ranges.paste_x1.sample(rng),
        paste_offset_y1: ranges.paste_y1.sample(rng),
        paste_offset_x2: ranges.paste_x2.sample(rng),
        paste_offset_y2: ranges.paste_y2.sample(rng),
    };
    let placement = PlacementSetting::new(
        ranges.pre_x.sample(rng),
        ranges.pre_y.sample(rng),
        ranges.pre_theta.sample(rng),
    );
    PlacementRecord {
        directory: *directory,
        paste,
        placement,
        targets: None,
    }
}

/// `records_per_type` labeled records per directory, ordered by directory
/// then index. Each directory draws from its own stream.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Vec<PlacementRecord>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.records_per_type * config.directories.len());
    for (k, directory) in config.directories.iter().enumerate() {
        let mut rng = rng::stream(config.oracle.seed, rng::SYNTH_STREAM_BASE + k as u64);
        for _ in 0..config.records_per_type {
            let mut record = sample_context(directory, &config.ranges, &mut rng);
            record.targets = Some(simulate_reflow(
                &record.paste,
                &record.placement,
                &config.oracle,
                &mut rng,
            ));
            out.push(record);
        }
    }
    Ok(out)
}
