//! Cyber layer: node embedding, log-normal shadowing path loss, SNR and
//! link activation.

mod mds;
mod pathloss;

pub use mds::mds_embed;
pub use pathloss::{CyberLayer, PathLossParams, Shadowing};
