//! Robust wireless sensor placement for cyber-physical power grids.
//!
//! The crate models a power grid (physical layer) and a wireless sensor
//! network laid over it (cyber layer), scores candidate sensor placements
//! by anomaly-detection coverage and network algebraic connectivity, and
//! searches the placement space with a discrete graph-diffusion model
//! trained by reward-weighted policy gradients.
//!
//! | module | purpose |
//! |--------|---------|
//! | [`grid`] | bus/branch cases, linear nodal solve, outage scenarios |
//! | [`cyber`] | MDS layout, path loss, SNR, link activation |
//! | [`spectral`] | Laplacians, Fiedler value, Cheeger constant |
//! | [`detect`] | power-change detectors and detection scores |
//! | [`placement`] | placement graphs, refinement, penalty reward |
//! | [`diffusion`] | categorical forward noising and denoising posterior |
//! | [`denoiser`] | graph-transformer denoiser with exact gradients |
//! | [`trainer`] | trajectories, experience buffer, policy-gradient training |
//! | [`baselines`] | greedy and random placement strategies |
//! | [`config`] / [`cli`] | experiment configuration and harness commands |

pub mod error;
pub mod pairs;

pub mod baselines;
pub mod cli;
pub mod config;
pub mod cyber;
pub mod denoiser;
pub mod detect;
pub mod diffusion;
pub mod grid;
pub mod placement;
pub mod problem;
pub mod seed;
pub mod spectral;
pub mod trainer;

pub use error::{Error, Result};
