//! Rateless cooperative transfer toolkit.
//!
//! - [`lt`]: LT encoding and peeling decoding over robust soliton degrees.
//! - [`wire`]: byte layouts of data packets and control messages.
//! - [`channel`]: simulated lossy, rate-limited links and a UDP loopback transport.
//! - [`coop`]: server / assistant / requester session simulation and an ARQ baseline.
//! - [`incentive`]: Stackelberg reward and service-time equilibrium.
//! - [`harness`]: experiment drivers producing CSV.

pub mod lt;
pub mod wire;
pub mod channel;
pub mod exec;
pub mod harness;
pub mod incentive;
pub mod coop;
