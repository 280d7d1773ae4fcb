//! Predict-then-optimize toolkit for passive chip placement on SMT lines.
//!
//! The crate is `no_std` (with `alloc`) so the numerical pieces can be
//! embedded anywhere; file formats, the CLI and other IO live in the
//! `smtplace` companion crate.
//!
//! Pipeline:
//! 1. [`domain`] records and the 22-slot feature encoding,
//! 2. [`synth`] synthetic placement data with a parametric self-alignment oracle,
//! 3. [`svr`] and [`forest`] regressors, one per post-reflow target,
//! 4. [`eval`] metrics and the train/validation/test benchmark,
//! 5. [`nlp`] the constrained placement problem over trained predictors,
//! 6. [`es`] a (mu, lambda) evolution strategy that solves it.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod domain;
pub mod error;
pub mod es;
pub mod eval;
pub mod forest;
pub mod model;
pub mod nlp;
pub mod rng;
pub mod svr;
pub mod synth;

pub use domain::{
    encode_features, split_dataset, ComponentDirectory, ComponentSize, ComponentType, DatasetSplit,
    FeatureVector, PadGap, PadSize, PasteState, PlacementRecord, PlacementSetting, PostOffsets,
    Target, FEATURE_DIM,
};
pub use error::{Error, Result};
pub use es::{optimize, EsConfig, EsOutcome, GenerationStats, Solution};
pub use eval::{r_squared, rmse, run_benchmark, EvalReport};
pub use forest::{Forest, ForestConfig, TreeNode};
pub use model::{ModelKind, Predictor, RegressionModel};
pub use nlp::{Bounds, Feasibility, NlpProblem, Thresholds};
pub use svr::{SvrConfig, SvrModel};
pub use synth::{GeneratorConfig, OracleParams};
