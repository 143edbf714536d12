//! Bit-level precision tuning of small imperative programs.
//!
//! Programs are labelled, given interval ranges, turned into linear
//! constraint systems over the number of significant bits of every value,
//! and solved exactly. See the `bittune` crate for the command line.
#![no_std]

extern crate alloc;

pub mod constraints;
pub mod frontend;
pub mod policy;
pub mod range;
pub mod rational;
pub mod solver;
pub mod tuner;
pub mod ufp;
pub mod validator;
