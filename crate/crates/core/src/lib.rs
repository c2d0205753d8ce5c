//! Simulation and analysis of growing weighted networks.
//!
//! The topology grows by preferential attachment with node entry (`growth`);
//! link weights then follow independent multiplicative shocks (`weights`).
//! `dist` and `stats` provide the densities, fitters and test statistics used
//! to check the model's predictions, `calibration` scores parameter grids
//! against a reference network and `io` handles ingestion and file formats.

pub mod calibration;
pub mod dist;
pub mod error;
pub mod growth;
pub mod io;
pub mod rng;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use growth::{generate, GrowthConfig, GrowthState, MultiGraph};
pub use weights::{WeightModel, WeightedPanel};

/// Version of the on-disk table formats written by [`io`].
pub const FORMAT_VERSION: u32 = 1;
