use std::collections::BTreeMap;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread;

use crate::session::AgentId;
use crate::wire::{decode_payload, encode_message, peek_sequence, read_frame, Message};

use super::{Inbound, Registry};

pub(crate) enum WriterMsg {
    /// Reply to be written at position `ticket` of the request order.
    Reply(u64, Message),
    /// No further replies will come; flush and close.
    Close,
}

pub(crate) fn spawn_connection(
    agent: AgentId,
    stream: TcpStream,
    max_frame: usize,
    inbound: Sender<Inbound>,
    registry: Registry,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let (wtx, wrx) = mpsc::channel();
    let read_half = stream.try_clone()?;
    let keep = stream.try_clone()?;

    // The writer must be registered before the simulation can answer.
    let mut reg = registry.lock().expect("registry lock");
    let writer = {
        let registry = registry.clone();
        thread::Builder::new()
            .name(format!("agent-{agent}-writer"))
            .spawn(move || {
                write_loop(agent, stream, wrx);
                registry.lock().expect("registry lock").remove(&agent);
            })?
    };
    reg.insert(agent, (keep, Some(writer)));
    drop(reg);

    if inbound.send(Inbound::Connect { agent, writer: wtx.clone() }).is_err() {
        let _ = wtx.send(WriterMsg::Close);
        return Ok(());
    }
    thread::Builder::new()
        .name(format!("agent-{agent}-reader"))
        .spawn(move || read_loop(agent, read_half, max_frame, inbound))?;
    Ok(())
}

fn read_loop(agent: AgentId, stream: TcpStream, max_frame: usize, inbound: Sender<Inbound>) {
    let mut reader = BufReader::new(stream);
    loop {
        let event = match read_frame(&mut reader, max_frame) {
            Ok(Some(payload)) => match decode_payload(&payload) {
                Ok(message) => {
                    let violation = !message.body.is_request();
                    if inbound.send(Inbound::Request { agent, message }).is_err() || violation {
                        return;
                    }
                    continue;
                }
                Err(e) => Inbound::Reject {
                    agent,
                    sequence: peek_sequence(&payload).unwrap_or(0),
                    reason: e.to_string(),
                },
            },
            Ok(None) => Inbound::Disconnect { agent },
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                Inbound::Reject { agent, sequence: 0, reason: e.to_string() }
            }
            Err(e) => {
                log::debug!("agent {agent}: read failed: {e}");
                Inbound::Disconnect { agent }
            }
        };
        let _ = inbound.send(event);
        return;
    }
}

/// Emits replies strictly in ticket order, buffering any that complete
/// early.
fn write_loop(agent: AgentId, stream: TcpStream, rx: Receiver<WriterMsg>) {
    let mut out = BufWriter::new(stream);
    let mut held: BTreeMap<u64, Message> = BTreeMap::new();
    let mut next = 0u64;
    let mut healthy = true;
    let mut closing = false;
    while !closing {
        let Ok(first) = rx.recv() else { break };
        let mut batch = vec![first];
        batch.extend(rx.try_iter());
        for msg in batch {
            match msg {
                WriterMsg::Reply(ticket, m) => {
                    held.insert(ticket, m);
                }
                WriterMsg::Close => closing = true,
            }
        }
        while let Some(m) = held.remove(&next) {
            next += 1;
            if healthy {
                healthy = encode_message(&m)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
                    .and_then(|frame| out.write_all(&frame))
                    .is_ok();
            }
        }
        if healthy && out.flush().is_err() {
            healthy = false;
        }
    }
    if !held.is_empty() {
        log::warn!("agent {agent}: {} replies left unsent at close", held.len());
    }
    let _ = out.flush();
    let _ = out.get_ref().shutdown(std::net::Shutdown::Both);
}
