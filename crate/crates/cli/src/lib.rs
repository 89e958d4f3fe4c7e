//! Command line and HTTP front ends for `healthgrid-core`.
//!
//! Both surfaces accept the same [`RunRequest`] and [`SweepRequest`]
//! documents and produce the same `Metrics`, so a run submitted over HTTP
//! can be replayed from the command line and vice versa.

pub mod cli;
pub mod error;
pub mod jobs;
pub mod report;
pub mod request;
pub mod service;

pub use error::{AppError, ErrorKind};
pub use jobs::{JobKind, JobRecord, JobResult, JobStatus, JobStore};
pub use request::{PreparedRun, PreparedSweep, RunRequest, ScenarioRef, SweepRequest};
pub use service::{router, AppState, ServiceConfig};
