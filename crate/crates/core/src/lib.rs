//! Two-stage CPU scheduling for sense-react DAG applications.
//!
//! The toolkit splits scheduling into a coarse core-allocation stage and a
//! fine-grained per-core stage, tracks node compute times online, and
//! validates schedules in a deterministic discrete-event simulator:
//!
//! - [`model`]: application DAGs, subchains, chains, compute-time models,
//!   objectives, and the built-in workload presets.
//! - [`analytics`]: closed-form subchain period and chain latency /
//!   throughput / response-time models plus the scalar objective.
//! - [`stage1`]: subchain-to-core allocation by exact search over the
//!   restricted feasible set, with an equation-level constraint checker.
//! - [`stage2`]: per-subchain parallelism selection and per-core fractional
//!   schedules (log-space convex descent plus exact rounding), assembled
//!   into a [`stage2::GlobalSchedule`].
//! - [`estimator`]: sliding-window tail estimation of node compute times
//!   with multimodal handling and streaming-rate observation.
//! - [`sim`]: cyclic-executive simulation with priority stealing, adaptive
//!   re-solving, metric measurement, and baseline comparisons.

pub mod analytics;
pub mod error;
pub mod estimator;
pub mod model;
pub mod sim;
pub mod stage1;
pub mod stage2;

pub use error::{Error, Result};
