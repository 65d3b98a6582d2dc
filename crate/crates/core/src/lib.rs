//! Asynchronous coagent policy-gradient networks for recommendation over an
//! unreliable edge network.
//!
//! * [`letor`]: LETOR parsing, normalization and slate construction.
//! * [`coagent`]: the shared-parameter coagent layer, vote aggregation and
//!   the REINFORCE update over execution records.
//! * [`sim`]: bandit and RL simulators with Bernoulli edge dropout.
//! * [`baseline`]: the coordinate-descent comparator.
//! * [`oracle`]: exact-enumeration gradients for tiny environments.
//! * [`harness`]: seeded multi-trial experiments, CSV and SVG output.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod baseline;
pub mod coagent;
mod error;
pub mod harness;
pub mod letor;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
