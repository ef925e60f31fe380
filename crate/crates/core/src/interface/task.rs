use crate::scalar::Real;
use crate::session::TickState;
use crate::sim::World;
use crate::wire::{EpisodeStateTag, Settings};

use super::avatar::{Avatar, InterfaceError};

/// Per-agent episode bookkeeping maintained by the session.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub tag: EpisodeStateTag,
    pub steps: u64,
    pub last_reward: f64,
}

impl Default for EpisodeState {
    fn default() -> Self {
        EpisodeState { tag: EpisodeStateTag::Running, steps: 0, last_reward: 0.0 }
    }
}

/// An agent's operating conditions: episode start, reward, termination and
/// how time advances around its steps.
pub trait Task<S: Real>: Send {
    /// Applies agent-supplied settings (from join or reset). Unknown keys are
    /// an error.
    fn configure(&mut self, settings: &Settings) -> Result<(), InterfaceError> {
        match settings.keys().next() {
            Some(key) => Err(InterfaceError::setting(key, "unknown setting")),
            None => Ok(()),
        }
    }

    /// Begins a new episode. May spawn or reposition the avatar's entity.
    fn start_episode(
        &mut self,
        world: &mut World<S>,
        avatar: &mut Avatar<S>,
    ) -> Result<(), InterfaceError>;

    /// Advancement preference after a step's actions are applied.
    fn tick_preference(&self) -> TickState {
        TickState::MustTick
    }

    /// Whether a step may complete in the current state. Tasks whose steps
    /// span several frames return false until the world has come to rest.
    fn is_settled(&self, _world: &World<S>, _avatar: &Avatar<S>) -> bool {
        true
    }

    /// Scalar reward for the step that just completed. Called exactly once
    /// per completed step.
    fn reward(&mut self, world: &World<S>, avatar: &Avatar<S>) -> f64;

    fn episode_state(&self, world: &World<S>, avatar: &Avatar<S>) -> EpisodeStateTag;

    /// Called when the agent leaves; removes anything the task spawned for it.
    fn leave(&mut self, _world: &mut World<S>, _avatar: &mut Avatar<S>) {}
}
