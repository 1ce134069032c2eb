//! Covert and wiretap secret-key generation over binary-input two-user
//! multiple access channels.
//!
//! * [`prob`]: finite distributions, divergences, mutual information and exact
//!   laws of i.i.d. sums.
//! * [`channel`] and [`covert`]: channel pairs, the low-weight covert input
//!   process and its small-`alpha` expansions.
//! * [`regions`]: inner and outer key-rate regions and their envelopes.
//! * [`sim`]: random codebooks, exact and Monte Carlo metrics, and
//!   finite-length bounds.

pub mod channel;
pub mod covert;
pub mod error;
pub mod prob;
pub mod regions;
pub mod sim;

pub use channel::{validate, BinaryMacPair, ChannelFile, ValidationReport};
pub use covert::{AlphaSchedule, ConstantAlpha, CovertConfig, DefaultSchedule, Rho, Subset};
pub use error::{Error, Result};
pub use prob::{DiscreteDist, JointDist};
pub use regions::{RatePair, RegionBoundary, RegionKind};
