//! Local annotation service for corpus audits.
//!
//! A [`ProjectStore`] keeps one directory per audit project and an
//! append-only annotation log; [`router`] exposes it over HTTP+JSON for the
//! annotation UI and scripts. The service is meant for a single desk: it
//! binds to localhost and trusts rater ids as given.

pub mod api;
pub mod error;
pub mod store;

pub use api::{router, serve, MANIFEST_HEADER};
pub use error::{Result, ServiceError};
pub use store::{
    Ack, Clock, CreateProject, ExportManifest, ItemView, LogEntry, Manifest, Progress, ProjectStore, RaterProgress,
    Submission, SystemClock,
};
