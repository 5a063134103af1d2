//! Feature attribution for tabular data and black-box models through
//! correlation impact ratios.
//!
//! The pipeline picks a small row sample whose feature-to-output geometry
//! matches the full data ([`envmatch`]), then scores each feature on that
//! sample: a between/total sum-of-squares ratio for independent features
//! ([`pcir`]) and a normalized conditional mutual information for dependent
//! ones ([`mcir`], built on [`infotheory`]). [`pipeline::explain`] runs the
//! whole thing and produces an [`report::ExplanationReport`].

pub mod dataset;
pub mod dimdist;
pub mod envmatch;
pub mod infotheory;
pub mod mcir;
pub mod model;
pub mod pcir;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod synthgen;

pub use dataset::{Dataset, FeatureColumn, FeatureKind, OutputVector};
pub use model::{evaluate_model, ModelHandle, RatioModel};
pub use pipeline::{explain, DependenceMode, ExplainConfig, ExplainError, Explanation};
pub use report::ExplanationReport;
