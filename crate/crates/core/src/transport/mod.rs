//! TCP front end. One accept thread, one reader and one writer thread per
//! connection, and a single simulation thread that owns every world and
//! session. Readers only decode and forward; writers emit replies in
//! request-arrival order.

mod connection;

use std::collections::BTreeMap;
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::session::{AgentId, Engine, Outgoing, Scheduler, Simulation};
use crate::wire::{Body, ErrorCode, Message, Settings};

use connection::{spawn_connection, WriterMsg};

pub const DEFAULT_ADDRESS: &str = "[::]:10000";
/// Name of the world created at startup when a scene is configured.
pub const DEFAULT_WORLD: &str = "default";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub address: String,
    pub max_connections: usize,
    pub queue_limit: usize,
    pub frame_budget: usize,
    pub allow_create: bool,
    /// Largest accepted request frame.
    pub max_frame_bytes: usize,
    /// When set, a world named [`DEFAULT_WORLD`] with this scene is created
    /// at startup, and CreateWorld requests default to it.
    pub scene: Option<String>,
    pub seed: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            address: DEFAULT_ADDRESS.to_owned(),
            max_connections: 64,
            queue_limit: crate::session::DEFAULT_QUEUE_LIMIT,
            frame_budget: crate::session::DEFAULT_FRAME_BUDGET,
            allow_create: true,
            max_frame_bytes: 64 << 20,
            scene: None,
            seed: 0,
        }
    }
}

impl ServerConfig {
    pub fn with_address(address: impl Into<String>) -> ServerConfig {
        ServerConfig { address: address.into(), ..ServerConfig::default() }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("invalid listen address {0:?}: expected HOST:PORT")]
    InvalidAddress(String),
    #[error("cannot bind {address}: {source}")]
    Bind { address: String, source: io::Error },
    #[error("cannot create startup world: {0}")]
    Scene(String),
    #[error("cannot start server thread: {0}")]
    Thread(io::Error),
}

pub(crate) enum Inbound {
    Connect { agent: AgentId, writer: Sender<WriterMsg> },
    Request { agent: AgentId, message: Message },
    Reject { agent: AgentId, sequence: u64, reason: String },
    Disconnect { agent: AgentId },
    Shutdown,
}

/// Open connections: stream clone (to unblock its reader on shutdown) and
/// the writer thread.
pub(crate) type Registry = Arc<Mutex<BTreeMap<AgentId, (TcpStream, Option<JoinHandle<()>>)>>>;

pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    inbound: Sender<Inbound>,
    registry: Registry,
    accept: Option<JoinHandle<()>>,
    sim: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Loopback address reaching this server, for clients on the same host.
    pub fn connect_addr(&self) -> SocketAddr {
        let mut a = self.local_addr;
        if a.ip().is_unspecified() {
            a.set_ip(match a {
                SocketAddr::V4(_) => std::net::Ipv4Addr::LOCALHOST.into(),
                SocketAddr::V6(_) => std::net::Ipv6Addr::LOCALHOST.into(),
            });
        }
        a
    }

    /// Stops accepting, answers everything already received, then closes
    /// every connection.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    /// Blocks until the server stops (it only stops via `shutdown` from
    /// another handle owner, so in practice this runs forever).
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.inbound.send(Inbound::Shutdown);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        if let Some(h) = self.sim.take() {
            let _ = h.join();
        }
        let entries: Vec<_> = std::mem::take(&mut *self.registry.lock().expect("registry lock"))
            .into_values()
            .collect();
        for (stream, writer) in entries {
            let _ = stream.shutdown(std::net::Shutdown::Read);
            if let Some(w) = writer {
                let _ = w.join();
            }
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.sim.is_some() {
            self.stop_and_join();
        }
    }
}

fn resolve(address: &str) -> Result<SocketAddr, ServeError> {
    address
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| ServeError::InvalidAddress(address.to_owned()))
}

/// Binds and starts the server.
pub fn serve(cfg: ServerConfig) -> Result<ServerHandle, ServeError> {
    let address = resolve(&cfg.address)?;
    let listener = TcpListener::bind(address)
        .map_err(|source| ServeError::Bind { address: cfg.address.clone(), source })?;
    let local_addr = listener.local_addr().map_err(|source| ServeError::Bind { address: cfg.address.clone(), source })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| ServeError::Bind { address: cfg.address.clone(), source })?;

    let mut sim = Simulation::default();
    sim.set_allow_create(cfg.allow_create);
    if let Some(scene) = &cfg.scene {
        sim.set_defaults(scene, cfg.seed);
        sim.create_world(DEFAULT_WORLD, scene, cfg.seed, &Settings::new())
            .map_err(|(_, msg)| ServeError::Scene(msg))?;
    }
    let engine = Engine::new(sim, Scheduler::new(cfg.queue_limit, cfg.frame_budget));

    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let registry: Registry = Arc::default();

    let sim = thread::Builder::new()
        .name("simulation".into())
        .spawn(move || simulation_loop(engine, rx))
        .map_err(ServeError::Thread)?;

    let accept = {
        let (stop, tx, registry) = (stop.clone(), tx.clone(), registry.clone());
        let cfg = cfg.clone();
        thread::Builder::new()
            .name("accept".into())
            .spawn(move || accept_loop(listener, cfg, stop, tx, registry))
            .map_err(ServeError::Thread)?
    };
    log::info!("listening on {local_addr}");
    Ok(ServerHandle { local_addr, stop, inbound: tx, registry, accept: Some(accept), sim: Some(sim) })
}

fn accept_loop(listener: TcpListener, cfg: ServerConfig, stop: Arc<AtomicBool>, tx: Sender<Inbound>, registry: Registry) {
    let mut next_agent: AgentId = 1;
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let open = registry.lock().expect("registry lock").len();
                if open >= cfg.max_connections {
                    log::warn!("refusing {peer}: {open} connections open");
                    refuse(stream, cfg.max_connections);
                    continue;
                }
                let agent = next_agent;
                next_agent += 1;
                log::info!("agent {agent} connected from {peer}");
                if let Err(e) = spawn_connection(agent, stream, cfg.max_frame_bytes, tx.clone(), registry.clone()) {
                    log::error!("agent {agent}: cannot start connection: {e}");
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(5));
            }
        }
    }
}

fn refuse(mut stream: TcpStream, limit: usize) {
    let _ = stream.set_nonblocking(false);
    let msg = Message::new(0, Body::error(ErrorCode::ResourceExhausted, format!("server accepts at most {limit} connections")));
    let _ = crate::wire::write_message(&mut stream, &msg);
}

fn simulation_loop(mut engine: Engine<f64>, rx: Receiver<Inbound>) {
    let mut writers: BTreeMap<AgentId, Sender<WriterMsg>> = BTreeMap::new();
    let mut stopping = false;
    loop {
        if engine.is_idle() {
            if stopping {
                break;
            }
            match rx.recv() {
                Ok(msg) => stopping |= handle(&mut engine, &mut writers, msg),
                Err(_) => break,
            }
        }
        while let Ok(msg) = rx.try_recv() {
            stopping |= handle(&mut engine, &mut writers, msg);
        }
        if !engine.is_idle() {
            engine.run_frame_cycle();
        }
        route(&mut engine, &mut writers);
    }
    for (_, w) in writers {
        let _ = w.send(WriterMsg::Close);
    }
}

fn handle(engine: &mut Engine<f64>, writers: &mut BTreeMap<AgentId, Sender<WriterMsg>>, msg: Inbound) -> bool {
    match msg {
        Inbound::Connect { agent, writer } => {
            writers.insert(agent, writer);
        }
        Inbound::Request { agent, message } => {
            engine.submit(agent, message);
        }
        Inbound::Reject { agent, sequence, reason } => {
            log::warn!("agent {agent}: protocol violation: {reason}");
            engine.reject(agent, sequence, &reason);
        }
        Inbound::Disconnect { agent } => engine.disconnect(agent),
        Inbound::Shutdown => return true,
    }
    false
}

fn route(engine: &mut Engine<f64>, writers: &mut BTreeMap<AgentId, Sender<WriterMsg>>) {
    for out in engine.take_outgoing() {
        match out {
            Outgoing::Reply { agent, ticket, message } => {
                if let Some(w) = writers.get(&agent) {
                    let _ = w.send(WriterMsg::Reply(ticket, message));
                }
            }
            Outgoing::Closed { agent } => {
                log::info!("agent {agent} disconnected");
                if let Some(w) = writers.remove(&agent) {
                    let _ = w.send(WriterMsg::Close);
                }
            }
        }
    }
}
