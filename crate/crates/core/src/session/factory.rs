use std::collections::BTreeMap;

use crate::envs::{block_settle, seek_avoid};
use crate::interface::{Avatar, EpisodeState, InterfaceError, Task};
use crate::scalar::Real;
use crate::sim::World;
use crate::wire::Settings;

use super::scheduler::AgentId;

/// Builds the task and avatar for an agent joining a world of one scene.
pub type SessionBuilder<S> =
    fn(&World<S>, &Settings) -> Result<(Box<dyn Task<S>>, Avatar<S>), InterfaceError>;

/// One agent's binding of task and avatar inside a world.
pub struct Session<S> {
    pub agent: AgentId,
    pub world: String,
    pub task: Box<dyn Task<S>>,
    pub avatar: Avatar<S>,
    /// `None` before the first episode starts and after a world reset.
    pub episode: Option<EpisodeState>,
    /// Set when another agent reset the world under this session; the next
    /// step reports `INTERRUPTED` once.
    pub interrupted: bool,
}

/// Maps scene ids to session builders.
pub struct SessionFactory<S> {
    builders: BTreeMap<String, SessionBuilder<S>>,
}

impl<S: Real> Default for SessionFactory<S> {
    fn default() -> Self {
        let mut f = SessionFactory { builders: BTreeMap::new() };
        f.register(seek_avoid::SCENE_ID, seek_avoid::new_session::<S>);
        f.register(block_settle::SCENE_ID, block_settle::new_session::<S>);
        f
    }
}

impl<S: Real> SessionFactory<S> {
    pub fn register(&mut self, scene_id: &str, builder: SessionBuilder<S>) {
        self.builders.insert(scene_id.to_owned(), builder);
    }

    pub fn create(
        &self,
        agent: AgentId,
        world: &World<S>,
        settings: &Settings,
    ) -> Result<Session<S>, InterfaceError> {
        let builder = self
            .builders
            .get(world.scene_id())
            .ok_or_else(|| InterfaceError::setting("scene", "no session builder for scene"))?;
        let (task, avatar) = builder(world, settings)?;
        Ok(Session {
            agent,
            world: world.name().to_owned(),
            task,
            avatar,
            episode: None,
            interrupted: false,
        })
    }
}
