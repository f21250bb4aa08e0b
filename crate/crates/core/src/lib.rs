//! Evaluation of three binary classifiers on unlabeled data.
//!
//! The only input is the decision sketch: counts of the eight voting
//! patterns a trio of classifiers can produce on an item. From it the crate
//! computes majority-voting estimates, the exact two-point solution of the
//! independent model (or the failure mode that rules it out), residuals and
//! distances to the correlation-free containing variety, and agreement
//! diagnostics. A forward model goes the other way, from a chosen ground
//! truth to frequencies and labeled streams.
//!
//! ```
//! use trio_eval::{independent_evaluate, DecisionSketch, Rational};
//!
//! // aaa, aab, aba, abb, baa, bab, bba, bbb
//! let sketch = DecisionSketch::from_counts([156, 49, 72, 33, 36, 49, 36, 69]).unwrap();
//! let ev = independent_evaluate::<Rational>(&sketch).unwrap();
//! let points = ev.points().unwrap();
//! assert_eq!(points[1].prevalence.to_string(), "3/5");
//! ```

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evaluators;
pub mod forward;
pub mod harness;
pub mod numerics;
pub mod report;
pub mod sketch;
pub mod variety;

pub use error::{Error, Result};
pub use evaluators::{
    decode, independent_evaluate, mv_evaluate, sister_point, DecodeHint, EvaluationOutcome, FailureKind,
    FailureMode, IndependentEvaluation, MvEstimate,
};
pub use forward::{
    correlated_trio_frequencies, independent_frequencies, materialize_stream, minimal_stream_size, minimal_test_size,
    sample_stream, CorrelationSet, EvaluationPoint, TruthFile,
};
pub use numerics::{Mode, Rational, Scalar, SeededRng};
pub use sketch::{DecisionEvent, DecisionSketch, FrequencyVector, Label, LabeledStream, SketchStatistics};
pub use variety::{project, residuals, ProjectionSettings, VarietyProjection, VarietyResiduals};
