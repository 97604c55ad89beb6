//! Normalized delivery time (NDT) of decentralized coded caching in a fog radio
//! access network: a cloud server, `Kt` cache-equipped edge nodes (ENs) on
//! rate-limited fronthaul links, and `Kr` cache-equipped users.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`model`]: problem instances, fragment keys, demand vectors, NDT breakdowns.
//! * [`formulas`]: exact per-stage and aggregate NDTs of the five-stage delivery
//!   scheme for two ENs, plus the special-case expressions used as cross-checks.
//! * [`bounds`]: the cut-set lower bounds for any `Kt`, backed by the exact
//!   two-variable LP solver in [`lp`].
//! * [`placement`] and [`delivery`]: a bit-level simulator of random placement and
//!   coded delivery that decodes every user's file and counts transmitted bits.
//!
//! IO, sweeps, and the command line live in the companion `fran` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod bits;
pub mod bounds;
pub mod delivery;
mod error;
pub mod formulas;
pub mod lp;
pub mod model;
mod num;
pub mod placement;

pub use bits::BitSet;
pub use bounds::{LowerBoundResult, PipelinedBound};
pub use delivery::DeliveryReport;
pub use error::{Error, Result};
pub use model::{
    enumerate_fragment_keys, validate_config, DemandVector, FragmentKey, NdtBreakdown, NdtPair, Scheme, Stage,
    StageNdt, SystemConfig, Transmission,
};
