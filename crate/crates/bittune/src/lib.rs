//! File formats, the tuning pipeline and sampled validation around
//! `bittune_core`.

pub mod corpus;
pub mod error;
pub mod files;
pub mod lp;
pub mod pipeline;
pub mod ranges;

pub use error::Error;
