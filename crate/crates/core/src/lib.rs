//! Two-orbit retrial queue with a smart (join-the-shorter-orbit) stream and
//! dedicated streams: stability classification, exact tail asymptotics,
//! closed-form approximations and numerical oracles.

pub mod approx;
pub mod censored;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod reference;
pub mod sim;
pub mod stability;
pub mod tail;

pub use error::{Error, Result};
pub use model::{transition_blocks, DerivedRates, RegionLabel, SystemParams, TransitionBlock};
