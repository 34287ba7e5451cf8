//! Simulation of a spin-stabilised satellite with a passive ring nutation
//! damper.
//!
//! The state is the body-frame angular momentum `h` together with the slug
//! rate `β̇`. `|h|` is a Casimir of the dynamics: friction drains kinetic
//! energy while the momentum vector stays on its sphere.

pub mod analysis;
pub mod dynamics;
pub mod experiments;
pub mod integrators;
pub mod validation;

pub use dynamics::{DamperParams, DynamicsError, Model, State, Vec3};
