//! Strategy synthesis for grid worlds where a robot must reach a goal while
//! avoiding a randomly moving opponent it can only partially observe.
//!
//! The pipeline encodes a [`gridworld::Scenario`] as a world POMDP, abstracts
//! it into a two-player stochastic game whose adversary resolves the robot's
//! uncertainty, solves the game for the best reach-avoid probability, and
//! certifies the resulting strategy on the POMDP.

pub mod gridworld;
pub mod model;
pub mod worldmodel;
pub mod solver;
pub mod abstraction;
pub mod evaluation;
pub mod export;
pub mod error;
pub mod pipeline;
pub mod bench;

pub use error::Error;
