//! Carbon-aware trip planning for battery-electric trucks.
//!
//! Given a directed highway graph, a deadline and a battery, the planner
//! picks a route, a speed for every road segment and up to `N` charging
//! stops (where to stop, how long to wait, how long to charge) so that the
//! CO₂ attributed to the electricity drawn from the grid is minimal.
//!
//! The crate is organised around a stage-expanded view of the trip: the
//! route is cut at the charging stops into `N + 1` stages, and the time and
//! energy budgets of consecutive stages are linked by two coupling
//! constraints per stage. [`dual`] relaxes those constraints with prices and
//! runs a projected subgradient ascent on the resulting dual function; each
//! dual evaluation splits into one-dimensional speed problems, small
//! four-variable charging problems and two shortest-path passes.
//! [`oracle`] is an independent brute-force solver used to check it.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `greenhaul` crate.
//!
//! Units are fixed throughout: hours, kilometres, kWh, kg CO₂.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod charging;
pub mod dual;
pub mod energy;
pub mod error;
pub mod network;
pub mod oracle;
pub mod plan;
pub mod pwl;
pub mod scenario;

pub use error::{Error, Result};
pub use network::{
    validate_instance, DualVector, EdgeId, Instance, NodeId, ObjectiveMode, Params, RoadSegment,
    StationData, TransportGraph, ValidationReport, Violation,
};
pub use plan::{evaluate, Plan, Residuals, Stage, Stop, Summary};
