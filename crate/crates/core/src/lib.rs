//! Toolkit for generalized zero-shot (GZSL) facial age estimation benchmarks.
//!
//! The crate covers the full benchmark pipeline on top of plain annotation
//! manifests:
//!
//! - [`ingest`]: parse annotation manifests into canonical records, classify
//!   ages into minor/adult/elder groups, filter face-detection failures, and
//!   bin age histograms.
//! - [`splitter`]: build subject-age-exclusive folder assignments with the
//!   greedy demand-scoring pass, correction sweep, and adult-only fill, or the
//!   seeded age-only assignment for manifests without subject identities.
//! - [`audit`]: verify a split against the benchmark invariants and produce
//!   filtering and split-statistics reports.
//! - [`metrics`]: seen/unseen MAE, harmonic mean, cross-dataset aggregation,
//!   and supervised-vs-GZSL degradation accounting.
//! - [`heads`]: pure numerical kernels for the nine evaluated prediction
//!   heads (soft labels, losses, rank encodings, age decoding) over the
//!   0..=101 age grid.
//!
//! The `gzsl-age` binary exposes the pipeline as CLI subcommands; see the
//! crate README for usage.

pub mod audit;
pub mod heads;
pub mod ingest;
pub mod metrics;
pub mod selftest;
pub mod splitter;

pub(crate) mod rng;

pub use audit::{filter_report, split_stats, verify, FilterReport, SplitStats, Violation};
pub use ingest::{
    classify_age, filter_no_face, histogram, parse_manifest, serialize_manifest, AgeGroup,
    AgeGroupConfig, AnnotationRecord, DatasetManifest, FilterStats,
};
pub use metrics::{
    aggregate, degradation, evaluate, harmonic_mean, mae, selection_objective, AggregateReport,
    DegradationReport, EvalResult, EvalSplit, MetricTriple, PredictionSet,
};
pub use splitter::{
    compute_targets, profile_subjects, score_candidate, split_with_ids, split_without_ids,
    CandidateAssignment, Folder, RunningCounts, SplitFractions, SplitManifest, SplitSummary,
    SubjectProfile, TargetCounts,
};
