use crate::scalar::{Pose, Real, Vec2};

pub type EntityId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fruit {
    Apple,
    Lemon,
}

impl Fruit {
    pub fn reward(self) -> i64 {
        match self {
            Fruit::Apple => 1,
            Fruit::Lemon => -1,
        }
    }
}

/// Commanded motion, written by actuators and consumed on the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WalkerIntent<S> {
    pub forward: S,
    pub strafe: S,
    pub turn: S,
    pub jump: bool,
}

/// First-person agent body moving on a bounded square arena.
#[derive(Debug, Clone, PartialEq)]
pub struct Walker<S> {
    pub intent: WalkerIntent<S>,
    pub velocity: Vec2<S>,
    pub acceleration: Vec2<S>,
    pub score: i64,
    pub apples: u32,
    pub lemons: u32,
    pub arena_size: S,
    pub max_speed: S,
    pub turn_rate: S,
    pub pickup_radius: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pickup {
    pub fruit: Fruit,
    pub consumed: bool,
}

/// Column heights plus the rolling ball of the block-placing task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Board {
    pub heights: Vec<i32>,
    pub ball: Option<usize>,
    pub pending_column: Option<usize>,
    pub moves: u32,
    pub reached_end: bool,
}

impl Board {
    pub fn new(columns: usize) -> Board {
        Board {
            heights: vec![0; columns],
            ball: None,
            pending_column: None,
            moves: 0,
            reached_end: false,
        }
    }

    pub fn columns(&self) -> usize {
        self.heights.len()
    }

    /// The ball may advance from `c` when the next column is no taller.
    pub fn can_roll(&self, c: usize) -> bool {
        c + 1 < self.heights.len() && self.heights[c + 1] <= self.heights[c]
    }

    /// True when no placement is pending and the ball cannot move further.
    pub fn is_settled(&self) -> bool {
        self.pending_column.is_none() && self.ball.is_none_or(|c| !self.can_roll(c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntityKind<S> {
    Walker(Walker<S>),
    Pickup(Pickup),
    Board(Board),
}

impl<S> EntityKind<S> {
    pub(crate) fn tag(&self) -> u8 {
        match self {
            EntityKind::Walker(_) => 1,
            EntityKind::Pickup(_) => 2,
            EntityKind::Board(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity<S> {
    pub id: EntityId,
    pub pose: Pose<S>,
    pub kind: EntityKind<S>,
}

impl<S: Real> Entity<S> {
    pub fn walker(&self) -> Option<&Walker<S>> {
        match &self.kind {
            EntityKind::Walker(w) => Some(w),
            _ => None,
        }
    }

    pub fn walker_mut(&mut self) -> Option<&mut Walker<S>> {
        match &mut self.kind {
            EntityKind::Walker(w) => Some(w),
            _ => None,
        }
    }

    pub fn pickup(&self) -> Option<&Pickup> {
        match &self.kind {
            EntityKind::Pickup(p) => Some(p),
            _ => None,
        }
    }

    pub fn board(&self) -> Option<&Board> {
        match &self.kind {
            EntityKind::Board(b) => Some(b),
            _ => None,
        }
    }

    pub fn board_mut(&mut self) -> Option<&mut Board> {
        match &mut self.kind {
            EntityKind::Board(b) => Some(b),
            _ => None,
        }
    }

    /// Pickups still present in the world (not yet consumed).
    pub fn live_pickup(&self) -> Option<Fruit> {
        self.pickup().filter(|p| !p.consumed).map(|p| p.fruit)
    }
}
