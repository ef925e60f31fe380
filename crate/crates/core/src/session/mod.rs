//! Sessions and the World Time Manager.
//!
//! [`Scheduler`] is the generic pending/future loop; [`Simulation`] is the
//! frame host that executes protocol requests against worlds and sessions;
//! [`Engine`] pairs the two for a front end.

mod engine;
mod factory;
mod host;
mod scheduler;

pub use engine::Engine;
pub use factory::{Session, SessionBuilder, SessionFactory};
pub use host::{Outgoing, Simulation, SimulationStats, Work};
pub use scheduler::{
    AgentId, Backpressure, Executed, FrameHost, FrameReport, Scheduler, TickState,
    DEFAULT_FRAME_BUDGET, DEFAULT_QUEUE_LIMIT,
};
