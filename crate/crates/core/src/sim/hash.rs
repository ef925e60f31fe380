//! 64-bit FNV-1a and the canonical entity-state serialization it runs over.

use crate::scalar::Real;

use super::entity::{Entity, EntityKind};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(FNV_OFFSET)
    }
}

impl Fnv1a {
    pub fn new() -> Fnv1a {
        Fnv1a::default()
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.write(bytes);
    h.finish()
}

/// Appends the canonical little-endian form of `entities` to `out`.
///
/// Layout: `u64` entity count, then per entity `u64 id`, `u8 kind`,
/// `f64 x`, `f64 y`, `f64 heading`, followed by the kind record. Scalars are
/// widened to `f64` regardless of the world's scalar type.
pub fn serialize_entities<S: Real>(entities: &[Entity<S>], out: &mut Vec<u8>) {
    let f = |out: &mut Vec<u8>, v: S| out.extend_from_slice(&v.as_f64().to_le_bytes());
    out.extend_from_slice(&(entities.len() as u64).to_le_bytes());
    for e in entities {
        out.extend_from_slice(&e.id.to_le_bytes());
        out.push(e.kind.tag());
        f(out, e.pose.position.x);
        f(out, e.pose.position.y);
        f(out, e.pose.heading);
        match &e.kind {
            EntityKind::Walker(w) => {
                f(out, w.intent.forward);
                f(out, w.intent.strafe);
                f(out, w.intent.turn);
                out.push(u8::from(w.intent.jump));
                f(out, w.velocity.x);
                f(out, w.velocity.y);
                f(out, w.acceleration.x);
                f(out, w.acceleration.y);
                out.extend_from_slice(&w.score.to_le_bytes());
                out.extend_from_slice(&w.apples.to_le_bytes());
                out.extend_from_slice(&w.lemons.to_le_bytes());
            }
            EntityKind::Pickup(p) => {
                out.push(p.fruit as u8);
                out.push(u8::from(p.consumed));
            }
            EntityKind::Board(b) => {
                out.extend_from_slice(&(b.heights.len() as u32).to_le_bytes());
                for h in &b.heights {
                    out.extend_from_slice(&h.to_le_bytes());
                }
                let opt = |v: Option<usize>| v.map_or(-1i64, |c| c as i64);
                out.extend_from_slice(&opt(b.ball).to_le_bytes());
                out.extend_from_slice(&opt(b.pending_column).to_le_bytes());
                out.extend_from_slice(&b.moves.to_le_bytes());
                out.push(u8::from(b.reached_end));
            }
        }
    }
}
