//! Label-model learning: pairwise moments, triplet systems, sign recovery and
//! the backward map to canonical parameters.

mod learn;
mod moments;
mod triplets;

pub use learn::*;
pub use moments::*;
pub use triplets::*;
