//! Streams rendered stereo frames to browser viewers over a websocket and
//! applies their input to a single simulated rig.

pub mod protocol;
mod server;
mod session;

pub use server::{router, serve, serve_listener, ServerConfig, ServerError, ServerState};
pub use session::{apply_inputs, heading, Controls, Session, SessionConfig, DEFAULT_SPEED, PITCH_LIMIT};
