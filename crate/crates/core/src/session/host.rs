use std::collections::{BTreeMap, BTreeSet};

use crate::interface::{EpisodeState, InterfaceError};
use crate::scalar::Real;
use crate::sim::{SceneRegistry, World};
use crate::wire::{Body, EpisodeStateTag, ErrorCode, Message, Settings, Tensor, Uid};

use super::factory::{Session, SessionFactory};
use super::scheduler::{AgentId, Executed, FrameHost, TickState};

/// One unit of work in an agent's queue. `ticket` is the per-connection
/// arrival index the reply must be written at.
#[derive(Debug, Clone, PartialEq)]
pub enum Work {
    Request { ticket: u64, message: Message },
    /// A step whose actions are applied, waiting for the world to settle.
    Resume { ticket: u64, sequence: u64, observe: Vec<Uid> },
    /// The connection is gone: leave silently.
    Disconnect,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outgoing {
    Reply { agent: AgentId, ticket: u64, message: Message },
    /// All replies for the agent have been emitted.
    Closed { agent: AgentId },
}

type Reply = Result<Body, (ErrorCode, String)>;

fn invalid(e: impl ToString) -> (ErrorCode, String) {
    (ErrorCode::InvalidArgument, e.to_string())
}

fn precondition(msg: impl Into<String>) -> (ErrorCode, String) {
    (ErrorCode::FailedPrecondition, msg.into())
}

const NOT_JOINED: &str = "agent has not joined a world";

/// A world and the creation parameters it was resolved from.
struct WorldEntry<S> {
    world: World<S>,
    scene_id: String,
    seed: u64,
    scene_settings: Settings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationStats {
    pub frames: u64,
    pub steps_completed: u64,
}

/// Executes protocol requests against the world registry and sessions. This
/// is the frame host the scheduler drives; it is confined to one thread.
pub struct Simulation<S> {
    scenes: SceneRegistry<S>,
    factory: SessionFactory<S>,
    worlds: BTreeMap<String, WorldEntry<S>>,
    sessions: BTreeMap<AgentId, Session<S>>,
    outbox: Vec<Outgoing>,
    default_scene: String,
    default_seed: u64,
    allow_create: bool,
    generated_names: u64,
    stats: SimulationStats,
}

impl<S: Real> Default for Simulation<S> {
    fn default() -> Self {
        Simulation::new(SceneRegistry::default(), SessionFactory::default())
    }
}

impl<S: Real> Simulation<S> {
    pub fn new(scenes: SceneRegistry<S>, factory: SessionFactory<S>) -> Simulation<S> {
        Simulation {
            scenes,
            factory,
            worlds: BTreeMap::new(),
            sessions: BTreeMap::new(),
            outbox: Vec::new(),
            default_scene: crate::envs::seek_avoid::SCENE_ID.to_owned(),
            default_seed: 0,
            allow_create: true,
            generated_names: 0,
            stats: SimulationStats::default(),
        }
    }

    /// Scene and seed used when a CreateWorld request omits them.
    pub fn set_defaults(&mut self, scene: &str, seed: u64) {
        self.default_scene = scene.to_owned();
        self.default_seed = seed;
    }

    pub fn set_allow_create(&mut self, allow: bool) {
        self.allow_create = allow;
    }

    pub fn stats(&self) -> SimulationStats {
        self.stats
    }

    pub fn world(&self, name: &str) -> Option<&World<S>> {
        self.worlds.get(name).map(|e| &e.world)
    }

    pub fn world_names(&self) -> impl Iterator<Item = &str> {
        self.worlds.keys().map(String::as_str)
    }

    pub fn session(&self, agent: AgentId) -> Option<&Session<S>> {
        self.sessions.get(&agent)
    }

    pub fn take_outgoing(&mut self) -> Vec<Outgoing> {
        std::mem::take(&mut self.outbox)
    }

    pub(crate) fn push(&mut self, out: Outgoing) {
        self.outbox.push(out);
    }

    /// Creates (or idempotently re-creates) a named world.
    pub fn create_world(
        &mut self,
        name: &str,
        scene_id: &str,
        seed: u64,
        scene_settings: &Settings,
    ) -> Result<String, (ErrorCode, String)> {
        if let Some(e) = self.worlds.get(name) {
            if e.scene_id == scene_id && e.seed == seed && &e.scene_settings == scene_settings {
                return Ok(name.to_owned());
            }
            return Err(invalid(format!("world {name:?} exists with different settings")));
        }
        let world = self
            .scenes
            .create_world(name, scene_id, seed, scene_settings)
            .map_err(invalid)?;
        self.worlds.insert(
            name.to_owned(),
            WorldEntry {
                world,
                scene_id: scene_id.to_owned(),
                seed,
                scene_settings: scene_settings.clone(),
            },
        );
        Ok(name.to_owned())
    }

    fn create_from_settings(&mut self, mut settings: Settings) -> Reply {
        if !self.allow_create {
            return Err(precondition("world creation is disabled on this server"));
        }
        let scene = match settings.remove("scene") {
            None => self.default_scene.clone(),
            Some(t) => t
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| invalid("invalid world settings: scene must be a string scalar"))?,
        };
        let seed = match settings.remove("seed") {
            None => self.default_seed,
            Some(t) => t
                .as_integer()
                .and_then(|s| u64::try_from(s).ok())
                .ok_or_else(|| invalid("invalid world settings: seed must be a non-negative integer scalar"))?,
        };
        let name = match settings.remove("world_name") {
            Some(t) => t
                .as_str()
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .ok_or_else(|| invalid("invalid world settings: world_name must be a non-empty string"))?,
            None => loop {
                self.generated_names += 1;
                let n = format!("world-{}", self.generated_names);
                if !self.worlds.contains_key(&n) {
                    break n;
                }
            },
        };
        let world_name = self.create_world(&name, &scene, seed, &settings)?;
        Ok(Body::CreateWorldResponse { world_name })
    }

    fn join(&mut self, agent: AgentId, world_name: &str, settings: &Settings) -> Reply {
        if let Some(s) = self.sessions.get(&agent) {
            return Err(precondition(format!("agent already joined world {:?}", s.world)));
        }
        let entry = self
            .worlds
            .get_mut(world_name)
            .ok_or_else(|| (ErrorCode::NotFound, format!("no world named {world_name:?}")))?;
        let mut session = self.factory.create(agent, &entry.world, settings).map_err(invalid)?;
        session
            .task
            .start_episode(&mut entry.world, &mut session.avatar)
            .map_err(invalid)?;
        session.episode = Some(EpisodeState::default());
        let specs = session.avatar.spec_set();
        self.sessions.insert(agent, session);
        Ok(Body::JoinWorldResponse { specs })
    }

    fn parts(&mut self, agent: AgentId) -> Result<(&mut Session<S>, &mut World<S>), (ErrorCode, String)> {
        let session = self.sessions.get_mut(&agent).ok_or_else(|| precondition(NOT_JOINED))?;
        let entry = self
            .worlds
            .get_mut(&session.world)
            .ok_or_else(|| (ErrorCode::Internal, "session world missing".to_owned()))?;
        Ok((session, &mut entry.world))
    }

    fn observe(session: &Session<S>, world: &World<S>, uids: &[Uid]) -> Result<BTreeMap<Uid, Tensor>, (ErrorCode, String)> {
        let episode = session.episode.clone().unwrap_or_default();
        session
            .avatar
            .read_observations(world, &episode, uids)
            .map_err(|e| match e {
                InterfaceError::UnknownSensor(_) => invalid(e),
                other => (ErrorCode::Internal, other.to_string()),
            })
    }

    fn step(
        &mut self,
        agent: AgentId,
        ticket: u64,
        sequence: u64,
        actions: &BTreeMap<Uid, Tensor>,
        observe: Vec<Uid>,
    ) -> Result<Executed<Work>, (ErrorCode, String)> {
        let (session, world) = self.parts(agent)?;
        if session.interrupted {
            session.interrupted = false;
            self.push_reply(agent, ticket, sequence, Body::StepResponse {
                state: EpisodeStateTag::Interrupted,
                observations: BTreeMap::new(),
            });
            return Ok(Executed::done(TickState::MustNotTick));
        }
        let episode = session
            .episode
            .as_ref()
            .filter(|e| !e.tag.is_terminal())
            .ok_or_else(|| precondition("episode not running"))?;
        let sensor_count = session.avatar.sensors().len() as Uid;
        if let Some(bad) = observe.iter().find(|u| !(1..=sensor_count).contains(*u)) {
            return Err(invalid(InterfaceError::UnknownSensor(*bad)));
        }
        if actions.is_empty() {
            let state = episode.tag;
            let observations = Self::observe(session, world, &observe)?;
            self.push_reply(agent, ticket, sequence, Body::StepResponse { state, observations });
            return Ok(Executed::done(TickState::MustNotTick));
        }
        session.avatar.apply_actions(world, actions).map_err(invalid)?;
        let tick = session.task.tick_preference();
        Ok(Executed::resume(tick, Work::Resume { ticket, sequence, observe }))
    }

    fn resume(&mut self, agent: AgentId, ticket: u64, sequence: u64, observe: Vec<Uid>) -> Result<Executed<Work>, (ErrorCode, String)> {
        let (session, world) = self.parts(agent)?;
        if !session.task.is_settled(world, &session.avatar) {
            return Ok(Executed::resume(TickState::MustTick, Work::Resume { ticket, sequence, observe }));
        }
        let reward = session.task.reward(world, &session.avatar);
        let state = session.task.episode_state(world, &session.avatar);
        let episode = session.episode.get_or_insert_with(EpisodeState::default);
        episode.steps += 1;
        episode.last_reward = reward;
        episode.tag = state;
        let observations = Self::observe(session, world, &observe)?;
        self.stats.steps_completed += 1;
        self.push_reply(agent, ticket, sequence, Body::StepResponse { state, observations });
        Ok(Executed::done(TickState::MustNotTick))
    }

    fn reset(&mut self, agent: AgentId, settings: &Settings) -> Reply {
        let (session, world) = self.parts(agent)?;
        session.task.configure(settings).map_err(invalid)?;
        session.task.start_episode(world, &mut session.avatar).map_err(invalid)?;
        session.episode = Some(EpisodeState::default());
        session.interrupted = false;
        Ok(Body::ResetResponse { specs: session.avatar.spec_set() })
    }

    fn reset_world(&mut self, agent: AgentId) -> Reply {
        let name = self.sessions.get(&agent).ok_or_else(|| precondition(NOT_JOINED))?.world.clone();
        let entry = self.worlds.get_mut(&name).expect("joined world exists");
        entry.world.reset().map_err(|e| (ErrorCode::Internal, e.to_string()))?;
        for s in self.sessions.values_mut().filter(|s| s.world == name) {
            s.avatar.set_entity(None);
            s.episode = None;
            s.interrupted = s.agent != agent;
        }
        Ok(Body::ResetWorldResponse)
    }

    fn leave(&mut self, agent: AgentId) -> Reply {
        let mut session = self.sessions.remove(&agent).ok_or_else(|| precondition(NOT_JOINED))?;
        if let Some(entry) = self.worlds.get_mut(&session.world) {
            session.task.leave(&mut entry.world, &mut session.avatar);
        }
        Ok(Body::LeaveWorldResponse)
    }

    fn destroy(&mut self, world_name: &str) -> Reply {
        if !self.worlds.contains_key(world_name) {
            return Err((ErrorCode::NotFound, format!("no world named {world_name:?}")));
        }
        if self.sessions.values().any(|s| s.world == world_name) {
            return Err(precondition(format!("world {world_name:?} still has joined agents")));
        }
        let mut entry = self.worlds.remove(world_name).expect("checked above");
        entry.world.destroy();
        Ok(Body::DestroyWorldResponse)
    }

    fn push_reply(&mut self, agent: AgentId, ticket: u64, sequence: u64, body: Body) {
        self.outbox.push(Outgoing::Reply { agent, ticket, message: Message::new(sequence, body) });
    }

    fn execute_message(&mut self, agent: AgentId, ticket: u64, message: Message) -> Executed<Work> {
        let seq = message.sequence;
        let immediate = |r: Reply, tick: TickState| (r, tick);
        let (reply, tick) = match message.body {
            Body::CreateWorldRequest { settings } => immediate(self.create_from_settings(settings), TickState::MustNotTick),
            Body::JoinWorldRequest { world_name, settings } => {
                immediate(self.join(agent, &world_name, &settings), TickState::MustNotTick)
            }
            Body::StepRequest { actions, requested_observations } => {
                match self.step(agent, ticket, seq, &actions, requested_observations) {
                    Ok(executed) => return executed,
                    Err(e) => (Err(e), TickState::MustNotTick),
                }
            }
            Body::ResetRequest { settings } => immediate(self.reset(agent, &settings), TickState::MayTick),
            Body::ResetWorldRequest => immediate(self.reset_world(agent), TickState::MustNotTick),
            Body::LeaveWorldRequest => immediate(self.leave(agent), TickState::MustNotTick),
            Body::DestroyWorldRequest { world_name } => immediate(self.destroy(&world_name), TickState::MustNotTick),
            other => (Err(invalid(format!("message kind 0x{:02X} is not a request", other.tag()))), TickState::MustNotTick),
        };
        let tick = if reply.is_ok() { tick } else { TickState::MustNotTick };
        let body = reply.unwrap_or_else(|(code, msg)| Body::error(code, msg));
        self.push_reply(agent, ticket, seq, body);
        Executed::done(tick)
    }
}

impl<S: Real> FrameHost for Simulation<S> {
    type Request = Work;

    fn execute(&mut self, agent: AgentId, work: Work) -> Executed<Work> {
        match work {
            Work::Request { ticket, message } => self.execute_message(agent, ticket, message),
            Work::Resume { ticket, sequence, observe } => match self.resume(agent, ticket, sequence, observe) {
                Ok(executed) => executed,
                Err((code, msg)) => {
                    self.push_reply(agent, ticket, sequence, Body::error(code, msg));
                    Executed::done(TickState::MustNotTick)
                }
            },
            Work::Disconnect => {
                let _ = self.leave(agent);
                self.outbox.push(Outgoing::Closed { agent });
                Executed::done(TickState::MustNotTick)
            }
        }
    }

    /// Advances each world that a ticking agent is joined to, once.
    fn advance(&mut self, ticked: &[AgentId]) {
        let worlds: BTreeSet<&str> = ticked
            .iter()
            .filter_map(|a| self.sessions.get(a))
            .map(|s| s.world.as_str())
            .collect();
        for name in worlds {
            if let Some(entry) = self.worlds.get_mut(name) {
                if entry.world.advance_frame().is_ok() {
                    self.stats.frames += 1;
                }
            }
        }
    }
}
