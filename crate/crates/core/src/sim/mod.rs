//! Deterministic fixed-timestep simulation kernel: worlds, entities, the
//! exact clock and seeded randomness.
//!
//! A [`World`] is confined to one execution context. `advance_frame` takes
//! `&mut self`, so no request can observe or mutate the world while a frame
//! is running.

mod clock;
mod entity;
mod hash;
mod world;

pub use clock::{Rational, SimClock};
pub use entity::{Board, Entity, EntityId, EntityKind, Fruit, Pickup, Walker, WalkerIntent};
pub use hash::{fnv1a, serialize_entities, Fnv1a};
pub use world::{SceneBuilder, SceneRegistry, SimError, World, WorldStatus};
