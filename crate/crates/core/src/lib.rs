//! Goal inference for grid-world item-creating tasks.
//!
//! An agent walks an open grid collecting parts, one per part type and in a
//! fixed type order, to build a goal product. Given a partial path, the
//! [`inference`] module computes a posterior over candidate goals under two
//! Boltzmann-rational models: full inverse planning and the plan
//! predictability oriented model. [`simulate`] generates stimuli on which
//! the two models disagree and synthetic participant responses, and
//! [`analysis`] reproduces the correlation-based comparison pipeline.

pub mod analysis;
pub mod format;
pub mod gridworld;
pub mod inference;
pub mod plans;
pub mod simulate;
pub mod svg;

pub use gridworld::{Grid, PartInstance, PartKind, Path, Position};
pub use inference::{GoalPosterior, ModelConfig, ModelKind, Normalization, Task};
pub use plans::{GoalProduct, Observation, Plan, Requirement};
