//! Composition of new applications out of existing ones.
//!
//! Source applications are described declaratively ([`model`]), turned into
//! semantic annotations ([`store`]), and composed through selection
//! ([`selection`]), extraction into a composed application ([`workspace`])
//! and relative positioning ([`layout`]). [`session`] provides the command
//! grammar used for scripts and saved sessions.

pub mod layout;
pub mod model;
pub mod selection;
pub mod session;
pub mod store;
pub mod workspace;

pub use model::{parse_application, serialize_application, Application};
pub use selection::Selection;
pub use session::{Command, Session};
pub use store::{build_store, Store};
pub use workspace::Workspace;
