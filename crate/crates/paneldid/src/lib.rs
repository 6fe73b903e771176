//! Dynamic treatment effects in staggered-adoption panels.
//!
//! The crate has three layers:
//!
//! - a panel data model with relative-event-time construction and
//!   high-dimensional fixed-effects residualization ([`panel`], [`demean`]),
//!   backed by a dense least-squares kernel with cluster-robust variance
//!   estimation ([`regress`]);
//! - three dynamic-treatment-effect estimators ([`estimators`]): the two-way
//!   fixed-effects event study, the cohort interaction-weighted estimator,
//!   and the split-sample delayed/anticipated-effects estimator;
//! - a closed-form Hotelling competition model of religious-market entry and
//!   armed-group support ([`hotelling`]), plus a synthetic-panel generator
//!   and Monte Carlo harness ([`simgen`]) that validates the estimators
//!   against known ground truth.
//!
//! Every operation is a pure function of its inputs; all randomness flows
//! from explicit 64-bit seeds. See the `examples/` directory for one
//! runnable program per capability, and [`cli`] for the command-line
//! front end.

pub mod cli;
pub mod demean;
pub mod error;
pub mod estimators;
pub mod hotelling;
pub mod panel;
pub mod regress;
pub mod simgen;

pub use error::{Error, Result};
pub use estimators::{
    compare_estimators, interaction_weighted, tw_split_sample, twfe_event_study, CohortWeights,
    EstimateRow, EstimateTable,
};
pub use panel::{
    relative_time, EndpointPolicy, EventTimeDesign, FeFactor, FixedEffectSpec, PanelDataset,
    PanelRow,
};
pub use simgen::{dgp_from_model, generate_panel, monte_carlo, DgpSpec, GroundTruth, McReport};
