//! Debug server: exposes one transformation session per connection as a
//! stream of JSON requests, responses and `dataPackage` events.

pub mod protocol;
pub mod transport;

pub use protocol::{DebugServer, WireError, PROTOCOL_VERSION};
pub use transport::{serve, serve_connection, SessionFactory};
