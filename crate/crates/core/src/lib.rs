//! Joint subcarrier and power allocation for OFDMA systems.

pub mod assignment;
pub mod error;
pub mod exact;
pub mod model;
pub mod reductions;
pub mod transport;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{
    rates, utility, OfdmaInstance, PowerAllocation, RateVector, SolvedAllocation,
    SubcarrierAssignment, UtilityKind, Violation,
};

#[cfg(test)]
mod testing;
