//! The constrained placement problem.
//!
//! For a frozen component directory and paste state, choose the placement
//! offset chi = (x, y, theta) that minimizes the predicted post-reflow
//! distance from the pad center,
//!
//! ```text
//! min  sqrt((R_x - F_x(chi))^2 + (R_y - F_y(chi))^2)
//! s.t. |F_theta(chi)| <= tau_theta,  |F_x(chi)| <= tau_x,  |F_y(chi)| <= tau_y
//!      L_d <= chi_d <= U_d
//! ```
//!
//! where the box spans from the pad center to the paste centroid (x, y) and
//! from zero rotation to the slope of the line through the two deposits.

use serde::{Deserialize, Serialize};

use crate::domain::{encode_parts, ComponentDirectory, PasteState, PlacementSetting, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::model::Predictor;

/// Pad-center reference point (x, y, theta).
pub const REFERENCE: [f64; 3] = [0.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// degrees
    pub tau_theta: f64,
    /// um
    pub tau_x: f64,
    /// um
    pub tau_y: f64,
}

impl Thresholds {
    pub const DEFAULT_TAU_THETA: f64 = 2.0;
    pub const PAD_FRACTION: f64 = 0.20;

    /// 2 degrees, and 20% of the pad length / width.
    pub fn for_directory(directory: &ComponentDirectory) -> Self {
        Self {
            tau_theta: Self::DEFAULT_TAU_THETA,
            tau_x: Self::PAD_FRACTION * directory.pad_length,
            tau_y: Self::PAD_FRACTION * directory.pad_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_theta", self.tau_theta),
            ("tau_x", self.tau_x),
            ("tau_y", self.tau_y),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidField {
                    field: name,
                    reason: "thresholds must be positive and finite",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Bounds {
    /// Orders each (a, b) pair as (min, max).
    pub fn from_pairs(pairs: [(f64, f64); 3]) -> Self {
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        for (d, (a, b)) in pairs.into_iter().enumerate() {
            lower[d] = a.min(b);
            upper[d] = a.max(b);
        }
        Self { lower, upper }
    }

    pub fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn widths(&self) -> [f64; 3] {
        [self.width(0), self.width(1), self.width(2)]
    }

    pub fn contains(&self, chi: &PlacementSetting) -> bool {
        let v = chi.to_array();
        (0..3).all(|d| self.lower[d] <= v[d] && v[d] <= self.upper[d])
    }

    /// Distance inside the box per coordinate (negative when outside).
    pub fn slacks(&self, chi: &PlacementSetting) -> [f64; 3] {
        let v = chi.to_array();
        core::array::from_fn(|d| (v[d] - self.lower[d]).min(self.upper[d] - v[d]))
    }

    pub fn project(&self, chi: &PlacementSetting) -> PlacementSetting {
        let v = chi.to_array();
        PlacementSetting::from_array(core::array::from_fn(|d| {
            v[d].clamp(self.lower[d], self.upper[d])
        }))
    }

    pub fn validate(&self) -> Result<()> {
        for d in 0..3 {
            if !(self.lower[d].is_finite() && self.upper[d].is_finite()) {
                return Err(Error::NonFinite("bounds"));
            }
            if self.lower[d] > self.upper[d] {
                return Err(Error::Config("bounds need lower <= upper"));
            }
        }
        Ok(())
    }
}

/// Raw (reference, target) pairs before ordering. The theta target is the
/// paste slope `atan((y1 - y2) / (x1 - x2))` in degrees, or the reference
/// itself when the two deposits share an x coordinate.
pub fn raw_bound_pairs(paste: &PasteState) -> [(f64, f64); 3] {
    let (cx, cy) = paste.centroid();
    let dx = paste.paste_offset_x1 - paste.paste_offset_x2;
    let slope = if dx == 0.0 {
        REFERENCE[2]
    } else {
        libm::atan((paste.paste_offset_y1 - paste.paste_offset_y2) / dx).to_degrees()
    };
    [
        (REFERENCE[0], cx),
        (REFERENCE[1], cy),
        (REFERENCE[2], slope),
    ]
}

/// Search box between the pad center and the paste centroid / slope.
pub fn compute_bounds(paste: &PasteState) -> Bounds {
    Bounds::from_pairs(raw_bound_pairs(paste))
}

/// Which constraint a slack belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    BoundX,
    BoundY,
    BoundTheta,
    PostX,
    PostY,
    PostTheta,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Self::BoundX => "bound_x",
            Self::BoundY => "bound_y",
            Self::BoundTheta => "bound_theta",
            Self::PostX => "post_x",
            Self::PostY => "post_y",
            Self::PostTheta => "post_theta",
        }
    }
}

/// Constraint verdict for one candidate. Predictor constraints are only
/// evaluated for in-box candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub in_bounds: bool,
    pub bound_slack: [f64; 3],
    /// Predicted (post_x, post_y, post_theta), when evaluated.
    pub prediction: Option<[f64; 3]>,
    /// tau_x - |F_x|
    pub slack_x: Option<f64>,
    /// tau_y - |F_y|
    pub slack_y: Option<f64>,
    /// tau_theta - |F_theta|
    pub slack_theta: Option<f64>,
}

impl Feasibility {
    /// The most violated (or tightest) constraint.
    pub fn worst(&self) -> (Constraint, f64) {
        let mut worst = (Constraint::BoundX, self.bound_slack[0]);
        let candidates = [
            (Constraint::BoundY, Some(self.bound_slack[1])),
            (Constraint::BoundTheta, Some(self.bound_slack[2])),
            (Constraint::PostX, self.slack_x),
            (Constraint::PostY, self.slack_y),
            (Constraint::PostTheta, self.slack_theta),
        ];
        for (c, s) in candidates {
            if let Some(s) = s {
                if s < worst.1 {
                    worst = (c, s);
                }
            }
        }
        worst
    }
}

/// A candidate with its verdict and, when in the box, its objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub chi: PlacementSetting,
    pub feasibility: Feasibility,
    pub objective: Option<f64>,
}

pub struct NlpProblem<'m> {
    pub directory: ComponentDirectory,
    pub paste: PasteState,
    /// F_x, F_y, F_theta
    pub predictors: [&'m dyn Predictor; 3],
    pub thresholds: Thresholds,
    pub bounds: Bounds,
    pub reference: [f64; 3],
}

impl<'m> NlpProblem<'m> {
    /// Builds the problem with default thresholds and computed bounds.
    pub fn new(
        directory: ComponentDirectory,
        paste: PasteState,
        predictors: [&'m dyn Predictor; 3],
    ) -> Result<Self> {
        directory.validate()?;
        paste.validate()?;
        for p in predictors {
            if p.input_dim() != FEATURE_DIM {
                return Err(Error::DimensionMismatch {
                    expected: FEATURE_DIM,
                    actual: p.input_dim(),
                });
            }
        }
        Ok(Self {
            directory,
            paste,
            predictors,
            thresholds: Thresholds::for_directory(&directory),
            bounds: compute_bounds(&paste),
            reference: REFERENCE,
        })
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Result<Self> {
        thresholds.validate()?;
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        bounds.validate()?;
        self.bounds = bounds;
        Ok(self)
    }

    /// Predicted (post_x, post_y, post_theta) for a placement.
    pub fn predict(&self, chi: &PlacementSetting) -> Result<[f64; 3]> {
        let x = encode_parts(&self.directory, &self.paste, chi);
        Ok([
            self.predictors[0].predict(x.as_slice())?,
            self.predictors[1].predict(x.as_slice())?,
            self.predictors[2].predict(x.as_slice())?,
        ])
    }

    fn distance(&self, prediction: &[f64; 3]) -> f64 {
        libm::hypot(
            self.reference[0] - prediction[0],
            self.reference[1] - prediction[1],
        )
    }

    /// Predicted post-reflow distance from the reference, um.
    pub fn objective(&self, chi: &PlacementSetting) -> Result<f64> {
        Ok(self.distance(&self.predict(chi)?))
    }

    fn verdict(&self, chi: &PlacementSetting, prediction: Option<[f64; 3]>) -> Feasibility {
        let bound_slack = self.bounds.slacks(chi);
        let in_bounds = self.bounds.contains(chi);
        let t = &self.thresholds;
        let slacks = prediction.map(|p| {
            (
                t.tau_x - libm::fabs(p[0]),
                t.tau_y - libm::fabs(p[1]),
                t.tau_theta - libm::fabs(p[2]),
            )
        });
        let feasible =
            in_bounds && slacks.is_some_and(|(sx, sy, st)| sx >= 0.0 && sy >= 0.0 && st >= 0.0);
        Feasibility {
            feasible,
            in_bounds,
            bound_slack,
            prediction,
            slack_x: slacks.map(|s| s.0),
            slack_y: slacks.map(|s| s.1),
            slack_theta: slacks.map(|s| s.2),
        }
    }

    /// Bounds are checked first; predictors are only queried for in-box
    /// candidates.
    pub fn feasible(&self, chi: &PlacementSetting) -> Result<Feasibility> {
        Ok(self.evaluate(chi)?.feasibility)
    }

    pub fn evaluate(&self, chi: &PlacementSetting) -> Result<Evaluation> {
        if !chi.is_finite() {
            return Err(Error::NonFinite("placement setting"));
        }
        let prediction = if self.bounds.contains(chi) {
            Some(self.predict(chi)?)
        } else {
            None
        };
        Ok(Evaluation {
            chi: *chi,
            feasibility: self.verdict(chi, prediction),
            objective: prediction.map(|p| self.distance(&p)),
        })
    }
}
