//! Sampled-data fixed-time consensus for linear multi-agent systems over
//! directed graphs, with a spacecraft formation-flying application.
//!
//! Each agent runs identical linear dynamics and, at a shrinking sequence
//! of sampling instants whose sum equals a pre-specified settling time,
//! applies the minimum-energy control that steers its state to the average
//! of itself and its in-neighbors. Over any directed communication graph
//! with a spanning tree the agents agree by the settling time, and the
//! whole closed loop admits an exact discrete-map description that this
//! crate uses as its primary verification oracle.
//!
//! Modules:
//! - [`numlin`]: dense matrices, matrix exponential, solves, rank.
//! - [`graph`]: topology, Laplacian, averaging matrix, consensus weights.
//! - [`protocol`]: sampling schedule, interval gramian, costates, controls.
//! - [`sim`]: closed-loop runner, metrics, closed-form oracles.
//! - [`hill`]: orbital relative motion and the hexagon formation scenario.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! aliases below fix the common concrete choices.

mod error;
mod real;

pub mod graph;
pub mod hill;
pub mod numlin;
pub mod protocol;
pub mod sim;

pub use error::{Error, Result};
pub use real::Real;

pub type Matrix64 = numlin::Matrix<f64>;
pub type Vector64 = numlin::Vector<f64>;
pub type Matrix32 = numlin::Matrix<f32>;
pub type Vector32 = numlin::Vector<f32>;
