//! Computational toolkit for transient nearest-neighbor random walks on the
//! nonnegative integers.
//!
//! The walk starts at zero, always steps up from the origin, and from site
//! `i >= 1` steps up with probability `1/2 + p_i` for a drift sequence
//! `p_i ∈ [0, 1/2)` chosen from one of several parametric families. The crate
//! provides:
//!
//! - [`model`]: the drift families and the step-odds ratios `U_i` they induce,
//! - [`analytics`]: exact and asymptotic evaluation of the escape series
//!   `D(m,n)`, hitting/escape probabilities, local-time and upcrossing laws,
//! - [`simulator`]: reproducible path simulation with certified escape
//!   barriers, so total local times can be sampled in finite time,
//! - [`statlab`]: goodness-of-fit and trace diagnostics tying simulator output
//!   back to the analytic laws.

pub mod analytics;
pub mod model;
pub mod numeric;
pub mod simulator;
pub mod special;
pub mod statlab;

pub use analytics::{
    AnalyticsError, ClassificationVerdict, SeriesResult, TruncationPolicy, Verdict,
};
pub use model::{Family, ModelError, StepModel};
pub use simulator::{EscapeCertificate, LocalTimeSample, PathSummary, SimError, SimOptions};
pub use statlab::{Decision, FitReport, LilTrace, StatError};
