//! Credal sets over the trajectories of a finite quantum system.
//!
//! A system with `m` configuration labels observed on `n` grid times has a
//! finite trajectory space of `m^n` paths. The Born rule and the quantum
//! typicality rule become linear constraints over probability vectors on
//! that space, and every lower/upper probability is the optimum of a small
//! linear program.

#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod credal;
pub mod events;
pub mod measure;
pub mod quantum;
pub mod report;
pub mod scenarios;
pub mod simplex;
pub mod typicality;

pub use credal::{
    born_constraints, born_product_witness, feasibility, huber_check, lower_upper,
    qtr_constraints, qtr_variant_constraints, BoundsResult, ConstraintSet, CredalError,
    FeasibilityCertificate, LinearConstraint, QtrVariant, RuleTag,
};
pub use events::{parse_event, parse_expr, sset_event, Event, EventExpr, EventOp, TrajectorySpace};
pub use measure::{event_probability, TrajectoryMeasure};
pub use quantum::{QuantumError, QuantumSystem, Region, SSet, SSetState};
pub use typicality::{Branch, BranchStats, TypicalityReport, Verdict};
