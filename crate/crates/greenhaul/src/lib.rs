//! File formats, experiment harnesses and the command-line front end for
//! [`greenhaul_core`].
//!
//! * [`format`]: JSON instance and plan documents, intensity trace files.
//! * [`report`]: CSV summaries and iteration logs.
//! * [`experiments`]: solving helpers, the fixed-path baselines and the
//!   reservation and deadline sweeps.

pub mod error;
pub mod experiments;
pub mod format;
pub mod report;

pub use error::{Error, Result};
pub use greenhaul_core as core;
