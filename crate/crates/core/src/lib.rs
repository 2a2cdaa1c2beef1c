//! Feedback coding for the symmetric M-user Gaussian interference channel.
//!
//! The crate computes achievable symmetric rates of a time-varying,
//! Hadamard-modulated feedback code and simulates the code end to end.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod covariance;
pub mod error;
pub mod gaussian;
pub mod hadamard;
pub mod polynomial;
pub mod rates;

pub use channel::{transmit, ChannelParams, NoiseSource};
pub use codec::{decode, encode_init, encode_step, ifs_map, run_session, CodeSchedule, DecodedInterval, SessionConfig, SessionResult};
pub use covariance::{eigencheck, recurse, transient_schedule, CovarianceState, TransientSchedule};
pub use error::{Error, Result};
pub use hadamard::{build_hadamard, column_rotation, modulation_vector, HadamardMatrix};
pub use rates::RateSolution;
