//! HTTP front end and on-disk persistence for composition workspaces.

pub mod api;
pub mod error;
pub mod storage;

pub use api::{router, AppState};
pub use error::{ApiError, ErrorBody};
pub use storage::Storage;
