use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::envs;
use crate::scalar::{Pose, Real};
use crate::wire::Settings;

use super::clock::SimClock;
use super::entity::{Entity, EntityId, EntityKind};
use super::hash::{serialize_entities, Fnv1a};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid world settings: unknown scene {0:?}")]
    UnknownScene(String),
    #[error("invalid world settings: {key}: {reason}")]
    InvalidSetting { key: String, reason: String },
    #[error("world {0:?} has been destroyed")]
    Destroyed(String),
}

impl SimError {
    pub fn setting(key: &str, reason: impl Into<String>) -> SimError {
        SimError::InvalidSetting { key: key.to_owned(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldStatus {
    Active,
    Destroyed,
}

/// Populates a freshly cleared world. Builders may draw randomness only from
/// the world's generator.
pub type SceneBuilder<S> = fn(&mut World<S>, &Settings) -> Result<(), SimError>;

/// Named scene builders available to `create_world`.
pub struct SceneRegistry<S> {
    builders: BTreeMap<String, SceneBuilder<S>>,
}

impl<S: Real> Default for SceneRegistry<S> {
    /// Registry holding the two bundled scenes.
    fn default() -> Self {
        let mut r = SceneRegistry::empty();
        r.register(envs::seek_avoid::SCENE_ID, envs::seek_avoid::build_scene::<S>);
        r.register(envs::block_settle::SCENE_ID, envs::block_settle::build_scene::<S>);
        r
    }
}

impl<S: Real> SceneRegistry<S> {
    pub fn empty() -> SceneRegistry<S> {
        SceneRegistry { builders: BTreeMap::new() }
    }

    pub fn register(&mut self, scene_id: &str, builder: SceneBuilder<S>) {
        self.builders.insert(scene_id.to_owned(), builder);
    }

    pub fn scene_ids(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn contains(&self, scene_id: &str) -> bool {
        self.builders.contains_key(scene_id)
    }

    /// Builds a world at frame 0 whose randomness comes only from `seed`.
    pub fn create_world(
        &self,
        name: &str,
        scene_id: &str,
        seed: u64,
        settings: &Settings,
    ) -> Result<World<S>, SimError> {
        let builder = *self
            .builders
            .get(scene_id)
            .ok_or_else(|| SimError::UnknownScene(scene_id.to_owned()))?;
        let mut world = World {
            name: name.to_owned(),
            scene_id: scene_id.to_owned(),
            seed,
            settings: settings.clone(),
            builder,
            clock: SimClock::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            entities: Vec::new(),
            next_id: 0,
            status: WorldStatus::Active,
            in_frame: false,
        };
        builder(&mut world, settings)?;
        Ok(world)
    }
}

/// A seeded, deterministic simulation instance. Entities are stored and
/// updated in insertion order.
#[derive(Debug, Clone)]
pub struct World<S> {
    name: String,
    scene_id: String,
    seed: u64,
    settings: Settings,
    builder: SceneBuilder<S>,
    clock: SimClock,
    rng: ChaCha8Rng,
    entities: Vec<Entity<S>>,
    next_id: EntityId,
    status: WorldStatus,
    in_frame: bool,
}

impl<S: Real> World<S> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn frame_index(&self) -> u64 {
        self.clock.frame_index()
    }

    pub fn status(&self) -> WorldStatus {
        self.status
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn entities(&self) -> &[Entity<S>] {
        &self.entities
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity<S>> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn entity_mut(&mut self, id: EntityId) -> Option<&mut Entity<S>> {
        debug_assert!(!self.in_frame, "world mutated during advance_frame");
        self.entities.iter_mut().find(|e| e.id == id)
    }

    pub fn spawn(&mut self, pose: Pose<S>, kind: EntityKind<S>) -> EntityId {
        debug_assert!(!self.in_frame, "world mutated during advance_frame");
        let id = self.next_id;
        self.next_id += 1;
        self.entities.push(Entity { id, pose, kind });
        id
    }

    pub fn despawn_where(&mut self, mut pred: impl FnMut(&Entity<S>) -> bool) {
        debug_assert!(!self.in_frame, "world mutated during advance_frame");
        self.entities.retain(|e| !pred(e));
    }

    fn ensure_active(&self) -> Result<(), SimError> {
        match self.status {
            WorldStatus::Active => Ok(()),
            WorldStatus::Destroyed => Err(SimError::Destroyed(self.name.clone())),
        }
    }

    /// Runs every entity's per-frame update once, in entity order, then
    /// advances the clock. Returns the new frame index.
    pub fn advance_frame(&mut self) -> Result<u64, SimError> {
        self.ensure_active()?;
        assert!(!self.in_frame, "advance_frame re-entered");
        self.in_frame = true;
        let dt = self.clock.step_seconds_as::<S>();
        for i in 0..self.entities.len() {
            match self.entities[i].kind {
                EntityKind::Walker(_) => envs::seek_avoid::walker_frame(&mut self.entities, i, dt),
                EntityKind::Board(_) => {
                    if let EntityKind::Board(b) = &mut self.entities[i].kind {
                        envs::block_settle::board_frame(b);
                    }
                }
                EntityKind::Pickup(_) => {}
            }
        }
        self.entities
            .retain(|e| !matches!(&e.kind, EntityKind::Pickup(p) if p.consumed));
        self.in_frame = false;
        Ok(self.clock.tick())
    }

    /// Restores the state of a fresh `create_world` with the same scene,
    /// seed and settings. The original seed is reused.
    pub fn reset(&mut self) -> Result<(), SimError> {
        self.ensure_active()?;
        self.clock.rewind();
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.entities.clear();
        self.next_id = 0;
        let settings = self.settings.clone();
        (self.builder)(self, &settings)
    }

    pub fn destroy(&mut self) {
        self.status = WorldStatus::Destroyed;
    }

    /// Canonical little-endian serialization of all entity state.
    pub fn canonical_state(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 * self.entities.len() + 8);
        serialize_entities(&self.entities, &mut out);
        out
    }

    /// FNV-1a 64 of [`World::canonical_state`].
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&self.canonical_state());
        h.finish()
    }
}
