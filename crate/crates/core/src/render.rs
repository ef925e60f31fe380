//! Headless CPU renderer: a flat-shaded column raycaster producing
//! first-person RGB24 frames.
//!
//! Rows whose centre lies above the horizon are sky. Every other row is
//! floor, shaded by the distance at which that row's ray meets the ground.
//! Pickups are vertical billboards standing on the floor; where several
//! cover a pixel the nearest wins.

use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::interface::{Avatar, InterfaceError};
use crate::scalar::{Pose, Real, Vec2};
use crate::sim::{Fruit, World};
use crate::wire::{DType, Tensor, Uid};

pub const SKY: [u8; 3] = [135, 206, 235];
pub const FLOOR: [u8; 3] = [110, 140, 70];
pub const APPLE: [u8; 3] = [200, 30, 30];
pub const LEMON: [u8; 3] = [230, 220, 40];

/// Brightness multiplier at distance `d` metres is `1 / (1 + SHADE_FALLOFF·d)`.
pub const SHADE_FALLOFF: f64 = 0.15;
/// Billboard half-width and height in metres.
pub const PICKUP_HALF_WIDTH: f64 = 0.2;
pub const PICKUP_HEIGHT: f64 = 0.4;
/// Billboards closer than this are behind the image plane.
pub const NEAR_PLANE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig<S> {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, radians.
    pub fov: S,
    pub eye_height: S,
}

impl<S: Real> Default for CameraConfig<S> {
    fn default() -> Self {
        CameraConfig { width: 96, height: 72, fov: S::FRAC_PI_2(), eye_height: S::lit(0.5) }
    }
}

impl<S: Real> CameraConfig<S> {
    pub fn with_resolution(width: u32, height: u32) -> CameraConfig<S> {
        CameraConfig { width, height, ..CameraConfig::default() }
    }

    pub fn validate(&self) -> Result<(), InterfaceError> {
        if self.width == 0 || self.height == 0 {
            return Err(InterfaceError::setting("resolution", "width and height must be at least 1"));
        }
        if !(self.fov > S::zero() && self.fov < S::PI()) {
            return Err(InterfaceError::setting("fov", "must lie in (0, pi)"));
        }
        if !(self.eye_height > S::zero()) {
            return Err(InterfaceError::setting("eye_height", "must be positive"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> S {
        S::lit(f64::from(self.width) / 2.0) / (self.fov / S::lit(2.0)).tan()
    }

    pub fn shape(&self) -> Vec<u32> {
        vec![self.height, self.width, 3]
    }
}

/// Row-major RGB24, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl FrameBuffer {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn into_tensor(self) -> Tensor {
        Tensor::from_u8(vec![self.height, self.width, 3], self.pixels).expect("length is w*h*3")
    }

    pub fn hash(&self) -> u64 {
        crate::sim::fnv1a(&self.pixels)
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)
    }
}

fn shade<S: Real>(color: [u8; 3], distance: S) -> [u8; 3] {
    let k = S::one() / (S::one() + S::lit(SHADE_FALLOFF) * distance);
    color.map(|c| (S::lit(f64::from(c)) * k).round().to_u8().unwrap_or(0))
}

struct Billboard<S> {
    depth: S,
    lateral: S,
    color: [u8; 3],
}

/// Renders the view from `pose` into a fresh frame buffer.
pub fn render_camera<S: Real>(world: &World<S>, pose: Pose<S>, cfg: &CameraConfig<S>) -> FrameBuffer {
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let focal = cfg.focal();
    let half_h = S::lit(h as f64 / 2.0);
    let half_w = S::lit(w as f64 / 2.0);
    let forward = Vec2::from_angle(pose.heading);
    let right = Vec2::from_angle(pose.heading + S::FRAC_PI_2());

    let mut pixels = vec![0u8; w * h * 3];

    // sky and floor depend only on the row
    for row in 0..h {
        let p = S::lit(row as f64 + 0.5) - half_h;
        let color = if p <= S::zero() {
            SKY
        } else {
            shade(FLOOR, cfg.eye_height * focal / p)
        };
        for px in pixels[row * w * 3..(row + 1) * w * 3].chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
    }

    let near = S::lit(NEAR_PLANE);
    let mut boards: Vec<Billboard<S>> = world
        .entities()
        .iter()
        .filter_map(|e| {
            let color = match e.live_pickup()? {
                Fruit::Apple => APPLE,
                Fruit::Lemon => LEMON,
            };
            let rel = e.pose.position - pose.position;
            let depth = rel.dot(forward);
            (depth > near).then(|| Billboard { depth, lateral: rel.dot(right), color })
        })
        .collect();
    // far to near so nearer billboards overwrite; stable for equal depths
    boards.sort_by(|a, b| b.depth.partial_cmp(&a.depth).unwrap_or(std::cmp::Ordering::Equal));

    let half_width = S::lit(PICKUP_HALF_WIDTH);
    let top = S::lit(PICKUP_HEIGHT) - cfg.eye_height;
    for col in 0..w {
        // ray through the column centre: forward + right * slope
        let slope = (S::lit(col as f64 + 0.5) - half_w) / focal;
        for b in &boards {
            let hit_lateral = b.depth * slope;
            if (hit_lateral - b.lateral).abs() > half_width {
                continue;
            }
            let color = shade(b.color, b.depth);
            let y_top = -(focal * top / b.depth);
            let y_bottom = focal * cfg.eye_height / b.depth;
            for row in 0..h {
                let p = S::lit(row as f64 + 0.5) - half_h;
                if p >= y_top && p <= y_bottom {
                    let i = (row * w + col) * 3;
                    pixels[i..i + 3].copy_from_slice(&color);
                }
            }
        }
    }

    FrameBuffer { width: cfg.width, height: cfg.height, pixels }
}

/// Counts renders performed by one camera sensor.
#[derive(Debug, Clone, Default)]
pub struct RenderCounter(Arc<AtomicU64>);

impl RenderCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

/// Registers a `U8[height, width, 3]` sensor that renders from the avatar's
/// entity pose only when read.
pub fn camera_sensor<S: Real>(
    avatar: &mut Avatar<S>,
    name: &str,
    cfg: CameraConfig<S>,
) -> Result<(Uid, RenderCounter), InterfaceError> {
    cfg.validate()?;
    let counter = RenderCounter::default();
    let hook_counter = counter.clone();
    let uid = avatar.register_sensor(
        name,
        DType::U8,
        cfg.shape(),
        Box::new(move |ctx| {
            hook_counter.bump();
            let pose = ctx
                .entity
                .and_then(|id| ctx.world.entity(id))
                .map(|e| e.pose)
                .unwrap_or_default();
            render_camera(ctx.world, pose, &cfg).into_tensor()
        }),
    )?;
    Ok((uid, counter))
}
