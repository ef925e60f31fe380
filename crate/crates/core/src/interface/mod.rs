//! Avatars (actuators and sensors) and tasks: the contract an environment
//! author implements. Registration is explicit; names, bounds and shapes are
//! given at avatar construction.

mod avatar;
mod task;

pub use avatar::{
    clamp_tensor, Actuator, Avatar, Bounds, InterfaceError, ReadHook, Sensor, SensorContext,
    WriteHook,
};
pub use task::{EpisodeState, Task};
