//! Seek Avoid: a first-person walker collects apples and avoids lemons in a
//! square arena, against a fixed time limit.

use rand::Rng;

use crate::interface::{Avatar, InterfaceError, Task};
use crate::render::{camera_sensor, CameraConfig};
use crate::scalar::{Pose, Real, Vec2};
use crate::sim::{Entity, EntityId, EntityKind, Fruit, Pickup, SimError, Walker, World};
use crate::wire::{DType, EpisodeStateTag, Settings, Tensor};

use super::{int_setting, unknown_key};

pub const SCENE_ID: &str = "seek_avoid";

pub const ARENA_SIZE: f64 = 10.0;
pub const SPAWN_X: f64 = 5.0;
pub const SPAWN_Y: f64 = 5.0;
pub const APPLE_COUNT: usize = 10;
pub const LEMON_COUNT: usize = 5;
/// Pickups are placed this far inside the walls.
pub const PLACEMENT_MARGIN: f64 = 0.5;
/// Minimum distance between any two pickups, and between a pickup and spawn.
pub const MIN_SEPARATION: f64 = 1.0;
pub const PICKUP_RADIUS: f64 = 0.5;
pub const MAX_SPEED: f64 = 3.0;
pub const TURN_RATE: f64 = std::f64::consts::FRAC_PI_2;
/// 30 s at the default 30 Hz.
pub const EPISODE_FRAMES: u64 = 900;

const MAX_PLACEMENT_TRIES: usize = 100_000;

/// Populates a fresh world with the pickup layout drawn from its seed. The
/// scene takes no settings.
pub fn build_scene<S: Real>(world: &mut World<S>, settings: &Settings) -> Result<(), SimError> {
    if let Some(key) = unknown_key(settings, &[]) {
        return Err(SimError::setting(key, "not a seek_avoid setting"));
    }
    scatter_pickups(world);
    Ok(())
}

/// Replaces every pickup with a new layout drawn from the world generator.
/// Positions are uniform over the arena interior, rejecting draws that land
/// too close to spawn or an earlier pickup.
pub fn scatter_pickups<S: Real>(world: &mut World<S>) {
    world.despawn_where(|e| e.pickup().is_some());
    let spawn = Vec2::new(SPAWN_X, SPAWN_Y);
    let lo = PLACEMENT_MARGIN;
    let hi = ARENA_SIZE - PLACEMENT_MARGIN;
    let mut placed: Vec<Vec2<f64>> = Vec::new();
    let fruits = std::iter::repeat_n(Fruit::Apple, APPLE_COUNT)
        .chain(std::iter::repeat_n(Fruit::Lemon, LEMON_COUNT));
    for fruit in fruits {
        let mut tries = 0;
        let p = loop {
            tries += 1;
            assert!(tries < MAX_PLACEMENT_TRIES, "arena too small for pickup layout");
            let p = Vec2::new(world.rng().gen_range(lo..=hi), world.rng().gen_range(lo..=hi));
            if p.distance(spawn) >= MIN_SEPARATION
                && placed.iter().all(|q| p.distance(*q) >= MIN_SEPARATION)
            {
                break p;
            }
        };
        placed.push(p);
        world.spawn(
            Pose::new(S::lit(p.x), S::lit(p.y), S::zero()),
            EntityKind::Pickup(Pickup { fruit, consumed: false }),
        );
    }
}

fn fresh_walker<S: Real>() -> Walker<S> {
    Walker {
        intent: Default::default(),
        velocity: Vec2::zero(),
        acceleration: Vec2::zero(),
        score: 0,
        apples: 0,
        lemons: 0,
        arena_size: S::lit(ARENA_SIZE),
        max_speed: S::lit(MAX_SPEED),
        turn_rate: S::lit(TURN_RATE),
        pickup_radius: S::lit(PICKUP_RADIUS),
    }
}

pub fn spawn_pose<S: Real>() -> Pose<S> {
    Pose::new(S::lit(SPAWN_X), S::lit(SPAWN_Y), S::zero())
}

pub fn spawn_walker<S: Real>(world: &mut World<S>) -> EntityId {
    world.spawn(spawn_pose(), EntityKind::Walker(fresh_walker()))
}

fn wrap_angle<S: Real>(a: S) -> S {
    let (pi, tau) = (S::PI(), S::TAU());
    if a > pi {
        a - tau
    } else if a <= -pi {
        a + tau
    } else {
        a
    }
}

/// One frame of walker kinematics followed by pickup collection.
///
/// The commanded (forward, strafe) vector is limited to unit length, rotated
/// into the world by the new heading and scaled by the maximum speed.
/// Positive strafe points a quarter turn counter-clockwise of the heading.
pub fn walker_frame<S: Real>(entities: &mut [Entity<S>], index: usize, dt: S) {
    let (position, radius) = {
        let e = &mut entities[index];
        let EntityKind::Walker(w) = &mut e.kind else { return };
        let intent = w.intent;
        let heading = wrap_angle(e.pose.heading + intent.turn * w.turn_rate * dt);
        let mut local = Vec2::new(intent.forward, intent.strafe);
        let len = local.length();
        if len > S::one() {
            local = local.scale(S::one() / len);
        }
        let velocity = local.rotate(heading) * w.max_speed;
        let position = (e.pose.position + velocity * dt).clamp_box(S::zero(), w.arena_size);
        w.acceleration = (velocity - w.velocity).scale(S::one() / dt);
        w.velocity = velocity;
        e.pose = Pose { position, heading };
        (position, w.pickup_radius)
    };

    let mut gained = Vec::new();
    for e in entities.iter_mut() {
        if let EntityKind::Pickup(p) = &mut e.kind {
            if !p.consumed && e.pose.position.distance(position) <= radius {
                p.consumed = true;
                gained.push(p.fruit);
            }
        }
    }
    if let EntityKind::Walker(w) = &mut entities[index].kind {
        for fruit in gained {
            w.score += fruit.reward();
            match fruit {
                Fruit::Apple => w.apples += 1,
                Fruit::Lemon => w.lemons += 1,
            }
        }
    }
}

fn walker_of<'a, S: Real>(world: &'a World<S>, entity: Option<EntityId>) -> Option<&'a Walker<S>> {
    world.entity(entity?)?.walker()
}

/// Per-agent task state.
#[derive(Debug, Default)]
pub struct SeekAvoidTask {
    start_frame: u64,
    last_score: i64,
}

impl<S: Real> Task<S> for SeekAvoidTask {
    fn start_episode(&mut self, world: &mut World<S>, avatar: &mut Avatar<S>) -> Result<(), InterfaceError> {
        match avatar.entity().and_then(|id| world.entity_mut(id)) {
            Some(e) if e.walker().is_some() => {
                e.pose = spawn_pose();
                e.kind = EntityKind::Walker(fresh_walker());
            }
            _ => {
                let id = spawn_walker(world);
                avatar.set_entity(Some(id));
            }
        }
        scatter_pickups(world);
        self.start_frame = world.frame_index();
        self.last_score = 0;
        Ok(())
    }

    fn reward(&mut self, world: &World<S>, avatar: &Avatar<S>) -> f64 {
        let score = walker_of(world, avatar.entity()).map_or(self.last_score, |w| w.score);
        let r = score - self.last_score;
        self.last_score = score;
        r as f64
    }

    fn episode_state(&self, world: &World<S>, _avatar: &Avatar<S>) -> EpisodeStateTag {
        if world.entities().iter().all(|e| e.live_pickup() != Some(Fruit::Apple)) {
            EpisodeStateTag::Terminated
        } else if world.frame_index() - self.start_frame >= EPISODE_FRAMES {
            EpisodeStateTag::Interrupted
        } else {
            EpisodeStateTag::Running
        }
    }

    fn leave(&mut self, world: &mut World<S>, avatar: &mut Avatar<S>) {
        if let Some(id) = avatar.entity() {
            world.despawn_where(|e| e.id == id && e.walker().is_some());
        }
        avatar.set_entity(None);
    }
}

fn camera_from_settings<S: Real>(settings: &Settings) -> Result<CameraConfig<S>, InterfaceError> {
    let mut cfg = CameraConfig::default();
    for (key, slot) in [("camera_width", &mut cfg.width), ("camera_height", &mut cfg.height)] {
        if let Some(v) = int_setting(settings, key).map_err(|r| InterfaceError::setting(key, r))? {
            *slot = u32::try_from(v)
                .ok()
                .filter(|v| (1..=4096).contains(v))
                .ok_or_else(|| InterfaceError::setting(key, "must be in 1..=4096"))?;
        }
    }
    Ok(cfg)
}

fn axis_hook<S: Real>(set: fn(&mut Walker<S>, S)) -> crate::interface::WriteHook<S> {
    Box::new(move |world, entity, value: &Tensor| {
        let v = value.as_f32().map_or(0.0, |v| v[0]);
        if let Some(w) = entity.and_then(|id| world.entity_mut(id)).and_then(|e| e.walker_mut()) {
            set(w, S::lit(f64::from(v)));
        }
    })
}

/// Builds the task and avatar for an agent joining a Seek Avoid world. Join
/// settings may set `camera_width` and `camera_height`.
pub fn new_session<S: Real>(
    _world: &World<S>,
    settings: &Settings,
) -> Result<(Box<dyn Task<S>>, Avatar<S>), InterfaceError> {
    if let Some(key) = unknown_key(settings, &["camera_width", "camera_height"]) {
        return Err(InterfaceError::setting(key, "unknown join setting"));
    }
    let camera = camera_from_settings(settings)?;
    let mut avatar = Avatar::new();
    let unit = Some((-1.0, 1.0));
    avatar.register_actuator("MOVE_BACK_FORWARD", DType::F32, vec![], unit, axis_hook(|w, v| w.intent.forward = v))?;
    avatar.register_actuator("STRAFE_LEFT_RIGHT", DType::F32, vec![], unit, axis_hook(|w, v| w.intent.strafe = v))?;
    avatar.register_actuator("LOOK_LEFT_RIGHT", DType::F32, vec![], unit, axis_hook(|w, v| w.intent.turn = v))?;
    avatar.register_actuator(
        "JUMP",
        DType::Bool,
        vec![],
        None,
        Box::new(|world: &mut World<S>, entity, value: &Tensor| {
            let v = value.as_bool().is_some_and(|v| v[0]);
            if let Some(w) = entity.and_then(|id| world.entity_mut(id)).and_then(|e| e.walker_mut()) {
                w.intent.jump = v;
            }
        }),
    )?;

    avatar.register_sensor(
        "SCORE",
        DType::F32,
        vec![],
        Box::new(|ctx| {
            let score = walker_of(ctx.world, ctx.entity).map_or(0, |w| w.score);
            Tensor::scalar_f32(score as f32)
        }),
    )?;
    avatar.register_sensor(
        "ACCELERATION",
        DType::F32,
        vec![3],
        Box::new(|ctx| {
            let a = walker_of(ctx.world, ctx.entity).map_or(Vec2::zero(), |w| w.acceleration);
            Tensor::from_f32(vec![3], vec![a.x.as_f32(), a.y.as_f32(), 0.0]).expect("three elements")
        }),
    )?;
    camera_sensor(&mut avatar, "PIXELS", camera)?;
    avatar.register_sensor(
        "REWARD",
        DType::F32,
        vec![],
        Box::new(|ctx| Tensor::scalar_f32(ctx.episode.last_reward as f32)),
    )?;
    Ok((Box::new(SeekAvoidTask::default()), avatar))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::interface::EpisodeState;
    use crate::sim::SceneRegistry;

    fn world(seed: u64) -> World<f64> {
        SceneRegistry::default().create_world("w", SCENE_ID, seed, &Settings::new()).unwrap()
    }

    fn walker(w: &World<f64>, id: EntityId) -> &Walker<f64> {
        w.entity(id).unwrap().walker().unwrap()
    }

    #[test]
    fn layout_respects_separation() {
        for seed in 0..50 {
            let w = world(seed);
            let spots: Vec<_> = w.entities().iter().map(|e| e.pose.position).collect();
            assert_eq!(spots.len(), APPLE_COUNT + LEMON_COUNT);
            for (i, p) in spots.iter().enumerate() {
                assert!(p.distance(Vec2::new(5.0, 5.0)) >= 1.0);
                assert!((0.5..=9.5).contains(&p.x) && (0.5..=9.5).contains(&p.y));
                for q in &spots[i + 1..] {
                    assert!(p.distance(*q) >= 1.0);
                }
            }
        }
    }

    #[test]
    fn rejects_scene_settings() {
        let mut s = Settings::new();
        s.insert("columns".into(), Tensor::scalar_i64(3));
        assert!(SceneRegistry::<f64>::default().create_world("w", SCENE_ID, 0, &s).is_err());
    }

    #[test]
    fn one_frame_forward_moves_a_tenth() {
        let mut w = world(1);
        let id = spawn_walker(&mut w);
        w.entity_mut(id).unwrap().walker_mut().unwrap().intent.forward = 1.0;
        w.advance_frame().unwrap();
        let p = w.entity(id).unwrap().pose.position;
        // 3 m/s for 1/30 s
        assert!((p.x - 5.1).abs() < 1e-12 && (p.y - 5.0).abs() < 1e-12, "{p:?}");
        let a = walker(&w, id).acceleration;
        assert!((a.x - 90.0).abs() < 1e-9);
    }

    #[test]
    fn strafe_and_turn_directions() {
        let mut w = world(1);
        let id = spawn_walker(&mut w);
        w.entity_mut(id).unwrap().walker_mut().unwrap().intent.strafe = 1.0;
        w.advance_frame().unwrap();
        let p = w.entity(id).unwrap().pose.position;
        assert!((p.y - 5.1).abs() < 1e-12 && (p.x - 5.0).abs() < 1e-12);

        let e = w.entity_mut(id).unwrap();
        e.walker_mut().unwrap().intent = crate::sim::WalkerIntent { turn: 1.0, ..Default::default() };
        for _ in 0..30 {
            w.advance_frame().unwrap();
        }
        // a quarter turn per second
        let h = w.entity(id).unwrap().pose.heading;
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_speed_is_capped() {
        let mut w = world(1);
        let id = spawn_walker(&mut w);
        let wk = w.entity_mut(id).unwrap().walker_mut().unwrap();
        wk.intent.forward = 1.0;
        wk.intent.strafe = 1.0;
        w.advance_frame().unwrap();
        assert!((walker(&w, id).velocity.length() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn walls_clamp_position() {
        let mut w = world(1);
        let id = spawn_walker(&mut w);
        w.despawn_where(|e| e.pickup().is_some());
        w.entity_mut(id).unwrap().walker_mut().unwrap().intent.forward = -1.0;
        for _ in 0..100 {
            w.advance_frame().unwrap();
        }
        assert_eq!(w.entity(id).unwrap().pose.position.x, 0.0);
    }

    #[test]
    fn nearby_apple_is_collected() {
        let mut w = world(1);
        let id = spawn_walker(&mut w);
        w.despawn_where(|e| e.pickup().is_some());
        for i in 0..APPLE_COUNT {
            w.spawn(Pose::new(1.0, 1.0 + i as f64 * 0.6, 0.0), EntityKind::Pickup(Pickup { fruit: Fruit::Apple, consumed: false }));
        }
        w.spawn(Pose::new(5.3, 5.0, 0.0), EntityKind::Pickup(Pickup { fruit: Fruit::Apple, consumed: false }));
        let apples = |w: &World<f64>| w.entities().iter().filter(|e| e.live_pickup() == Some(Fruit::Apple)).count();
        assert_eq!(apples(&w), 11);
        w.entity_mut(id).unwrap().walker_mut().unwrap().intent.turn = -1.0;
        w.advance_frame().unwrap();
        assert_eq!(walker(&w, id).score, 1);
        assert_eq!(apples(&w), 10);
    }

    fn joined(seed: u64) -> (World<f64>, Box<dyn Task<f64>>, Avatar<f64>) {
        let mut w = world(seed);
        let (mut task, mut avatar) = new_session(&w, &Settings::new()).unwrap();
        task.start_episode(&mut w, &mut avatar).unwrap();
        (w, task, avatar)
    }

    #[test]
    fn avatar_spec_layout() {
        let (_, _, avatar) = joined(0);
        let spec = avatar.spec_set();
        let names: Vec<_> = spec.actuators.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["MOVE_BACK_FORWARD", "STRAFE_LEFT_RIGHT", "LOOK_LEFT_RIGHT", "JUMP"]);
        let sensors: Vec<_> = spec.sensors.iter().map(|s| (s.name.as_str(), s.uid)).collect();
        assert_eq!(sensors, [("SCORE", 1), ("ACCELERATION", 2), ("PIXELS", 3), ("REWARD", 4)]);
        assert_eq!(spec.sensor("PIXELS").unwrap().shape, vec![72, 96, 3]);
    }

    #[test]
    fn camera_settings_resize_pixels() {
        let w = world(0);
        let mut s = Settings::new();
        s.insert("camera_width".into(), Tensor::scalar_i32(32));
        s.insert("camera_height".into(), Tensor::scalar_i32(24));
        let (_, avatar) = new_session(&w, &s).unwrap();
        assert_eq!(avatar.spec_set().sensor("PIXELS").unwrap().shape, vec![24, 32, 3]);
        s.insert("camera_height".into(), Tensor::scalar_i32(0));
        assert!(new_session(&w, &s).is_err());
    }

    #[test]
    fn score_sensor_after_pickup() {
        let (mut w, mut task, avatar) = joined(3);
        let id = avatar.entity().unwrap();
        let apple = w.entities().iter().find(|e| e.live_pickup() == Some(Fruit::Apple)).unwrap().pose.position;
        w.entity_mut(id).unwrap().pose.position = apple + Vec2::new(0.3, 0.0);
        w.advance_frame().unwrap();
        assert_eq!(task.reward(&w, &avatar), 1.0);
        let obs = avatar.read_observations(&w, &EpisodeState::default(), &[1]).unwrap();
        assert_eq!(obs[&1], Tensor::scalar_f32(1.0));
    }

    #[test]
    fn idle_episode_hits_time_limit() {
        let (mut w, mut task, avatar) = joined(7);
        let zeros: BTreeMap<_, _> = (1..=3).map(|u| (u, Tensor::scalar_f32(0.0))).collect();
        for frame in 1..=EPISODE_FRAMES {
            avatar.apply_actions(&mut w, &zeros).unwrap();
            w.advance_frame().unwrap();
            let expected = if frame < EPISODE_FRAMES { EpisodeStateTag::Running } else { EpisodeStateTag::Interrupted };
            assert_eq!(task.episode_state(&w, &avatar), expected, "frame {frame}");
        }
        assert_eq!(task.reward(&w, &avatar), 0.0);
        assert_eq!(walker(&w, avatar.entity().unwrap()).score, 0);
    }

    #[test]
    fn clearing_apples_terminates() {
        let (mut w, task, avatar) = joined(7);
        w.despawn_where(|e| e.live_pickup() == Some(Fruit::Apple));
        assert_eq!(task.episode_state(&w, &avatar), EpisodeStateTag::Terminated);
    }

    #[test]
    fn restart_respawns_walker_in_place() {
        let (mut w, mut task, mut avatar) = joined(7);
        let id = avatar.entity().unwrap();
        w.entity_mut(id).unwrap().pose.position = Vec2::new(1.0, 1.0);
        task.start_episode(&mut w, &mut avatar).unwrap();
        assert_eq!(avatar.entity(), Some(id));
        assert_eq!(w.entity(id).unwrap().pose, spawn_pose());
        assert_eq!(w.entities().iter().filter(|e| e.walker().is_some()).count(), 1);
        task.leave(&mut w, &mut avatar);
        assert!(w.entities().iter().all(|e| e.walker().is_none()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn score_is_apples_minus_lemons(seed in 0u64..1000, actions in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..200)) {
                let (mut w, _, avatar) = joined(seed);
                let id = avatar.entity().unwrap();
                for (f, s, t) in actions {
                    let wk = w.entity_mut(id).unwrap().walker_mut().unwrap();
                    wk.intent.forward = f;
                    wk.intent.strafe = s;
                    wk.intent.turn = t;
                    w.advance_frame().unwrap();
                    let wk = walker(&w, id);
                    prop_assert_eq!(wk.score, i64::from(wk.apples) - i64::from(wk.lemons));
                    let p = w.entity(id).unwrap().pose.position;
                    prop_assert!((0.0..=10.0).contains(&p.x) && (0.0..=10.0).contains(&p.y));
                }
            }
        }
    }
}
