//! Per-object time-to-contact (TTC) tooling.
//!
//! The crate turns tracking data into motion-in-depth (MiD, `η`) and TTC
//! ground truth, simulates pinhole scenes whose TTC is known exactly, and
//! scores TTC predictions with object-level MiD metrics and binary risk
//! accuracy.
//!
//! Modules map onto the pipeline:
//!
//! - [`types`]: validated domain types shared by everything else.
//! - [`ttc`]: the ground-truth math and [`ttc::annotate_sequence`].
//! - [`ingest`]: KITTI tracking labels, the JSON scene format, annotation,
//!   prediction and dense-map files.
//! - [`sim`]: deterministic pinhole scene simulator with exact ground truth.
//! - [`eval`]: MiD loss, oMiD / oMiD⁺, risk accuracy, matching and reports.
//! - [`cli`]: the `ottc` command line front end.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod eval;
pub mod ingest;
pub mod sim;
pub mod ttc;
pub mod types;

pub use eval::{evaluate, EvalConfig, MatchMode, MetricsReport, MissingPolicy};
pub use ttc::{annotate_sequence, GtMethod};
pub use types::{
    bbox_center, AnnotationMethod, BBox, CameraIntrinsics, DenseMiDMap, Dimensions, Frame,
    InvariantError, Location, MiDAnnotation, ObjectInstance, PredictionKey, PredictionRecord,
    RiskLabel, Tau, TrackedSequence,
};
