//! A deterministic agent–environment server: a fixed-timestep simulation
//! kernel served to remote learning agents over a length-prefixed binary
//! protocol, with headless rendering and two reference tasks.
//!
//! The simulation, interface and renderer layers are generic over the scalar
//! type ([`scalar::Real`]); the aliases below fix it to `f64`, which is what
//! the server uses.

pub mod bench;
pub mod client;
pub mod envs;
pub mod interface;
pub mod render;
pub mod scalar;
pub mod session;
pub mod sim;
pub mod transport;
pub mod wire;

pub type World = sim::World<f64>;
pub type SceneRegistry = sim::SceneRegistry<f64>;
pub type Avatar = interface::Avatar<f64>;
pub type Simulation = session::Simulation<f64>;
pub type Engine = session::Engine<f64>;
pub type CameraConfig = render::CameraConfig<f64>;
