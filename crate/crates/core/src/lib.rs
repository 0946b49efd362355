//! Categorical clustering with randomized rounding of cluster centers.
//!
//! SoftModes generalizes k-modes: each center attribute is resampled from a
//! rounded version of the cluster's category frequencies. Plurality rounding
//! recovers k-modes, the identity samples proportionally, and `Soft(t)`
//! interpolates between the two.
//!
//! ```
//! use softmodes::{generate_ccm, run_softmodes, CcmSpec, ClusteringConfig, RoundingSpec};
//!
//! let ds = generate_ccm(&CcmSpec::new(400, 60, 3, 0.1, 0.0, 1)).unwrap();
//! let config = ClusteringConfig::new(3).rounding(RoundingSpec::soft(3.0).unwrap()).seed(5);
//! let result = run_softmodes(&ds, &config).unwrap();
//! assert_eq!(result.assignment.len(), 400);
//! ```

pub mod dataset;
pub mod engine;
mod error;
pub mod evaluation;
pub mod generators;
pub mod harness;
pub mod rng;
pub mod rounding;
pub mod seeding;

pub use dataset::{
    load_csv, one_hot, save_assignments, save_csv, AttributeDomain, CategoricalDataset, Category,
    CsvOptions, LabelColumn, OneHotMatrix,
};
pub use engine::{
    hamming, objective, run_lloyd, run_softmodes, Center, ClusteringConfig, ClusteringResult,
    LloydResult, Parallelism, SoftModes, TraceRecord,
};
pub use error::{Error, Result};
pub use evaluation::{accuracy, confusion, ConfusionMatrix};
pub use generators::{generate_bbm, generate_ccm, max_noise_accuracy, BbmSpec, CcmSpec};
pub use harness::{run_experiment, ExperimentSpec, ResultTable};
pub use rounding::{round, RoundingSpec, SimplexPoint};
pub use seeding::SeedingSpec;
