//! Block Settle: each action stacks a block on a column, then a ball enters
//! at column 0 and rolls right one column per frame while the next column is
//! no taller than the current one. A step answers only once the ball rests.

use crate::interface::{Avatar, InterfaceError, Task};
use crate::scalar::{Pose, Real};
use crate::sim::{Board, EntityKind, SimError, World};
use crate::wire::{DType, EpisodeStateTag, Settings, Tensor};

use super::{int_setting, unknown_key};

pub const SCENE_ID: &str = "block_settle";
pub const DEFAULT_COLUMNS: usize = 8;
pub const MAX_COLUMNS: usize = 1024;
pub const MAX_ACTIONS: u64 = 20;

/// Accepts `columns` (integer, 2..=1024, default 8).
pub fn build_scene<S: Real>(world: &mut World<S>, settings: &Settings) -> Result<(), SimError> {
    if let Some(key) = unknown_key(settings, &["columns"]) {
        return Err(SimError::setting(key, "not a block_settle setting"));
    }
    let columns = match int_setting(settings, "columns").map_err(|r| SimError::setting("columns", r))? {
        None => DEFAULT_COLUMNS,
        Some(n) => usize::try_from(n)
            .ok()
            .filter(|n| (2..=MAX_COLUMNS).contains(n))
            .ok_or_else(|| SimError::setting("columns", format!("must be in 2..={MAX_COLUMNS}")))?,
    };
    world.spawn(Pose::default(), EntityKind::Board(Board::new(columns)));
    Ok(())
}

/// One frame of board dynamics: a pending placement lands and the ball
/// enters at column 0; otherwise the ball rolls one column if it can.
pub fn board_frame(b: &mut Board) {
    if let Some(c) = b.pending_column.take() {
        b.heights[c] += 1;
        b.ball = Some(0);
        b.moves = 0;
        return;
    }
    if let Some(c) = b.ball.filter(|&c| b.can_roll(c)) {
        b.ball = Some(c + 1);
        b.moves += 1;
        if c + 1 == b.columns() - 1 {
            b.reached_end = true;
        }
    }
}

fn board<S: Real>(world: &World<S>, entity: Option<crate::sim::EntityId>) -> Option<&Board> {
    world.entity(entity?)?.board()
}

#[derive(Debug, Default)]
pub struct BlockSettleTask {
    actions: u64,
}

impl<S: Real> Task<S> for BlockSettleTask {
    fn start_episode(&mut self, world: &mut World<S>, avatar: &mut Avatar<S>) -> Result<(), InterfaceError> {
        let id = world
            .entities()
            .iter()
            .find(|e| e.board().is_some())
            .map(|e| e.id)
            .ok_or_else(|| InterfaceError::setting("scene", "world has no board"))?;
        let b = world.entity_mut(id).and_then(|e| e.board_mut()).expect("found above");
        *b = Board::new(b.columns());
        avatar.set_entity(Some(id));
        self.actions = 0;
        Ok(())
    }

    fn is_settled(&self, world: &World<S>, avatar: &Avatar<S>) -> bool {
        board(world, avatar.entity()).is_none_or(Board::is_settled)
    }

    fn reward(&mut self, world: &World<S>, avatar: &Avatar<S>) -> f64 {
        self.actions += 1;
        match board(world, avatar.entity()) {
            Some(b) if b.reached_end => 1.0,
            _ => 0.0,
        }
    }

    fn episode_state(&self, world: &World<S>, avatar: &Avatar<S>) -> EpisodeStateTag {
        if board(world, avatar.entity()).is_some_and(|b| b.reached_end) {
            EpisodeStateTag::Terminated
        } else if self.actions >= MAX_ACTIONS {
            EpisodeStateTag::Interrupted
        } else {
            EpisodeStateTag::Running
        }
    }
}

/// Task and avatar for a Block Settle world. The COLUMN actuator uses strict
/// bounds, so an out-of-range column is an invalid argument rather than
/// being clamped.
pub fn new_session<S: Real>(
    world: &World<S>,
    settings: &Settings,
) -> Result<(Box<dyn Task<S>>, Avatar<S>), InterfaceError> {
    if let Some(key) = unknown_key(settings, &[]) {
        return Err(InterfaceError::setting(key, "unknown join setting"));
    }
    let columns = world
        .entities()
        .iter()
        .find_map(|e| e.board())
        .map(Board::columns)
        .ok_or_else(|| InterfaceError::setting("scene", "world has no board"))?;
    let mut avatar = Avatar::new().with_strict_bounds(true);
    avatar.register_actuator(
        "COLUMN",
        DType::I32,
        vec![],
        Some((0.0, (columns - 1) as f64)),
        Box::new(|world: &mut World<S>, entity, value: &Tensor| {
            let c = value.as_i32().map_or(0, |v| v[0]);
            if let Some(b) = entity.and_then(|id| world.entity_mut(id)).and_then(|e| e.board_mut()) {
                b.pending_column = usize::try_from(c).ok();
            }
        }),
    )?;
    avatar.register_sensor(
        "HEIGHTS",
        DType::I32,
        vec![columns as u32],
        Box::new(move |ctx| {
            let h = board(ctx.world, ctx.entity).map_or(vec![0; columns], |b| b.heights.clone());
            Tensor::from_i32(vec![columns as u32], h).expect("one height per column")
        }),
    )?;
    avatar.register_sensor(
        "BALL_COLUMN",
        DType::I32,
        vec![],
        Box::new(|ctx| {
            let c = board(ctx.world, ctx.entity).and_then(|b| b.ball).map_or(-1, |c| c as i32);
            Tensor::scalar_i32(c)
        }),
    )?;
    avatar.register_sensor(
        "REWARD",
        DType::F32,
        vec![],
        Box::new(|ctx| Tensor::scalar_f32(ctx.episode.last_reward as f32)),
    )?;
    Ok((Box::new(BlockSettleTask::default()), avatar))
}

/// Frames a placement consumes, computed directly from the roll rule:
/// one frame for the placement plus one per column the ball advances.
pub fn frames_for_placement(heights: &[i32], column: usize) -> (u64, bool) {
    let mut h = heights.to_vec();
    h[column] += 1;
    let mut ball = 0;
    while ball + 1 < h.len() && h[ball + 1] <= h[ball] {
        ball += 1;
    }
    (ball as u64 + 1, ball == h.len() - 1)
}
