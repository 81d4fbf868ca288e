//! Geometric and optimization core for reconstructing two interacting hands
//! over a video sequence.

pub mod collision;
pub mod config;
pub mod encoder;
pub mod hand_model;
pub mod metrics;
pub mod obj;
pub mod objectives;
pub mod refiner;
pub mod sequence;
mod topology;

pub use topology::BadEdge;
