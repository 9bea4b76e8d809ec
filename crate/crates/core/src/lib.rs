//! Statistics and generative modeling of transmission line outage patterns
//! at the fast protection time scale.
//!
//! The crate is `no_std` with `alloc`. File formats, IO and the command line
//! live in the companion `protpat` crate. Enabling the `parallel` feature
//! runs ensembles and evaluation repetitions on rayon; results are identical
//! to the sequential path because every index draws from its own substream.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod distance;
mod error;
pub mod evaluation;
pub mod generator;
pub mod ingest;
pub mod network;
pub mod pattern;
pub mod rng;
mod transport;
pub mod zipf;

pub use distance::{
    empirical_distribution, is_connected_graphical, neighbors, sequence_distance, wasserstein,
    PatternDistribution, SequenceGraph, TransportPlan,
};
pub use error::Error;
pub use evaluation::{evaluate_model, permutation_test, EvaluationReport, PermutationTestResult};
pub use generator::{
    calibrate_p_one_plus, generate_ensemble, generate_pattern, measure_p_one_plus_generated,
    Calibration, CalibrationStep, GeneratedPattern, GeneratorConfig, InitialDistribution,
};
pub use ingest::{group_into_generations, BusPair, GenerationGroup, Minute, OutageRecord};
pub use network::{attachable_lines, Attachable, BusId, Line, LineId, Network};
pub use pattern::{
    degree_sequence, estimate_p_circuits, line_count, n_one_plus, p_one_plus_observed,
    size_histogram, split_into_patterns, DegreeSequence, Pattern, Ratio, SizeHistogram,
};
pub use zipf::{zeta, ZipfModel};

pub type Result<T, E = Error> = core::result::Result<T, E>;
