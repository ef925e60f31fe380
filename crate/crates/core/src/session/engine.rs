use std::collections::BTreeMap;

use crate::scalar::Real;
use crate::wire::{Body, ErrorCode, Message};

use super::host::{Outgoing, Simulation, Work};
use super::scheduler::{AgentId, FrameReport, Scheduler};

/// A simulation and its scheduler, plus per-agent reply tickets. Transport
/// front ends feed decoded messages in and route [`Outgoing`] items back to
/// connections; tests drive it directly.
pub struct Engine<S> {
    pub sim: Simulation<S>,
    scheduler: Scheduler<Work>,
    tickets: BTreeMap<AgentId, u64>,
}

impl<S: Real> Default for Engine<S> {
    fn default() -> Self {
        Engine::new(Simulation::default(), Scheduler::default())
    }
}

impl<S: Real> Engine<S> {
    pub fn new(sim: Simulation<S>, scheduler: Scheduler<Work>) -> Engine<S> {
        Engine { sim, scheduler, tickets: BTreeMap::new() }
    }

    pub fn scheduler(&self) -> &Scheduler<Work> {
        &self.scheduler
    }

    pub fn is_idle(&self) -> bool {
        self.scheduler.is_idle()
    }

    fn next_ticket(&mut self, agent: AgentId) -> u64 {
        let t = self.tickets.entry(agent).or_insert(0);
        let ticket = *t;
        *t += 1;
        ticket
    }

    /// Queues a decoded message. Rejections (backpressure, response kinds)
    /// are answered immediately under the message's ticket; a response kind
    /// also ends the connection. Returns the ticket.
    pub fn submit(&mut self, agent: AgentId, message: Message) -> u64 {
        let ticket = self.next_ticket(agent);
        if !message.body.is_request() {
            let reply = Body::error(
                ErrorCode::InvalidArgument,
                format!("protocol violation: message kind 0x{:02X} is not a request", message.body.tag()),
            );
            self.sim.push(Outgoing::Reply { agent, ticket, message: Message::new(message.sequence, reply) });
            self.disconnect(agent);
            return ticket;
        }
        let sequence = message.sequence;
        if let Err(full) = self.scheduler.schedule(agent, Work::Request { ticket, message }) {
            let reply = Body::error(ErrorCode::ResourceExhausted, full.to_string());
            self.sim.push(Outgoing::Reply { agent, ticket, message: Message::new(sequence, reply) });
        }
        ticket
    }

    /// Answers an undecodable frame and closes the connection after earlier
    /// requests are answered.
    pub fn reject(&mut self, agent: AgentId, sequence: u64, reason: &str) -> u64 {
        let ticket = self.next_ticket(agent);
        let reply = Body::error(ErrorCode::InvalidArgument, format!("protocol violation: {reason}"));
        self.sim.push(Outgoing::Reply { agent, ticket, message: Message::new(sequence, reply) });
        self.disconnect(agent);
        ticket
    }

    /// Leaves the agent's world once its queued work has run, then emits
    /// [`Outgoing::Closed`].
    pub fn disconnect(&mut self, agent: AgentId) {
        self.scheduler.schedule_unbounded(agent, Work::Disconnect);
    }

    pub fn run_frame_cycle(&mut self) -> FrameReport {
        self.scheduler.run_frame_cycle(&mut self.sim)
    }

    pub fn run_until_idle(&mut self) -> Vec<FrameReport> {
        let mut reports = Vec::new();
        while !self.scheduler.is_idle() {
            reports.push(self.run_frame_cycle());
        }
        reports
    }

    pub fn take_outgoing(&mut self) -> Vec<Outgoing> {
        let out = self.sim.take_outgoing();
        for o in &out {
            if let Outgoing::Closed { agent } = o {
                self.tickets.remove(agent);
            }
        }
        out
    }

    /// Submits one request, runs until idle and returns its reply. Other
    /// pending outgoing items are discarded.
    pub fn call(&mut self, agent: AgentId, sequence: u64, body: Body) -> Message {
        let ticket = self.submit(agent, Message::new(sequence, body));
        self.run_until_idle();
        let mut found = None;
        for out in self.take_outgoing() {
            if let Outgoing::Reply { agent: a, ticket: t, message } = out {
                if a == agent && t == ticket {
                    found = Some(message);
                }
            }
        }
        found.expect("every request is answered")
    }
}
