use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

/// Identifies one agent connection.
pub type AgentId = u64;

pub const DEFAULT_QUEUE_LIMIT: usize = 128;
pub const DEFAULT_FRAME_BUDGET: usize = 64;

/// A request's simulation-advancement preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TickState {
    /// A frame must run before this agent's next request.
    MustTick,
    /// No frame may run before this agent's next request.
    MustNotTick,
    /// Either; a frame runs only if the agent's per-frame budget is spent.
    MayTick,
}

/// Result of executing one queued item.
#[derive(Debug)]
pub struct Executed<R> {
    pub tick: TickState,
    /// Work to resume after the next frame, ahead of the agent's other
    /// requests.
    pub continuation: Option<R>,
}

impl<R> Executed<R> {
    pub fn done(tick: TickState) -> Executed<R> {
        Executed { tick, continuation: None }
    }

    pub fn resume(tick: TickState, continuation: R) -> Executed<R> {
        Executed { tick, continuation: Some(continuation) }
    }
}

/// What the scheduler drives: request execution and frame advancement.
pub trait FrameHost {
    type Request;

    fn execute(&mut self, agent: AgentId, request: Self::Request) -> Executed<Self::Request>;

    /// Runs one frame. `ticked` lists, in ascending order, the agents whose
    /// requests demanded it.
    fn advance(&mut self, ticked: &[AgentId]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("request queue for agent {agent} is full ({limit} requests)")]
pub struct Backpressure {
    pub agent: AgentId,
    pub limit: usize,
}

/// Outcome of one frame cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameReport {
    pub executed: usize,
    pub advanced: bool,
    pub ticked: Vec<AgentId>,
}

/// The World Time Manager: per-agent FIFO queues interleaved with frames
/// using the pending/future rule.
///
/// Each cycle visits agents with queued work in ascending id. An agent's
/// requests run one after another until one returns `MustTick` (or a
/// `MayTick` arrives after the agent's budget is spent); the rest of its
/// queue then waits for the next cycle. After the visit one frame advances if
/// any agent ticked.
#[derive(Debug)]
pub struct Scheduler<R> {
    queues: BTreeMap<AgentId, VecDeque<R>>,
    queue_limit: usize,
    frame_budget: usize,
}

impl<R> Default for Scheduler<R> {
    fn default() -> Self {
        Scheduler::new(DEFAULT_QUEUE_LIMIT, DEFAULT_FRAME_BUDGET)
    }
}

impl<R> Scheduler<R> {
    pub fn new(queue_limit: usize, frame_budget: usize) -> Scheduler<R> {
        assert!(frame_budget >= 1, "frame budget must allow one request");
        Scheduler { queues: BTreeMap::new(), queue_limit, frame_budget }
    }

    pub fn queue_limit(&self) -> usize {
        self.queue_limit
    }

    pub fn frame_budget(&self) -> usize {
        self.frame_budget
    }

    pub fn queued(&self, agent: AgentId) -> usize {
        self.queues.get(&agent).map_or(0, VecDeque::len)
    }

    pub fn is_idle(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }

    /// Appends to the agent's queue, failing without change when it already
    /// holds `queue_limit` items.
    pub fn schedule(&mut self, agent: AgentId, request: R) -> Result<(), Backpressure> {
        let q = self.queues.entry(agent).or_default();
        if q.len() >= self.queue_limit {
            return Err(Backpressure { agent, limit: self.queue_limit });
        }
        q.push_back(request);
        Ok(())
    }

    /// Appends regardless of the limit. Used for connection teardown, which
    /// must not be refused.
    pub fn schedule_unbounded(&mut self, agent: AgentId, request: R) {
        self.queues.entry(agent).or_default().push_back(request);
    }

    /// Runs one cycle against `host`.
    pub fn run_frame_cycle<H: FrameHost<Request = R>>(&mut self, host: &mut H) -> FrameReport {
        let mut report = FrameReport::default();
        let pending: Vec<AgentId> = self
            .queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&a, _)| a)
            .collect();
        for agent in pending {
            let mut executed = 0;
            while let Some(request) = self.queues.get_mut(&agent).and_then(VecDeque::pop_front) {
                let out = host.execute(agent, request);
                executed += 1;
                if let Some(c) = out.continuation {
                    self.queues.entry(agent).or_default().push_front(c);
                }
                let tick = match out.tick {
                    TickState::MayTick if executed >= self.frame_budget => true,
                    TickState::MustTick => true,
                    TickState::MayTick | TickState::MustNotTick => false,
                };
                if tick {
                    report.ticked.push(agent);
                    break;
                }
            }
            report.executed += executed;
        }
        self.queues.retain(|_, q| !q.is_empty());
        if !report.ticked.is_empty() {
            host.advance(&report.ticked);
            report.advanced = true;
        }
        report
    }
}
