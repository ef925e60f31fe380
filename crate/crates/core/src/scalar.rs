//! Scalar abstraction for simulation and rendering math.
//!
//! World state, kinematics and the raycaster are generic over [`Real`]; the
//! crate root exposes `f64` aliases used by the server.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable for world state: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from a constant. Panics only for values not
    /// representable at all, which never happens for the literals used here.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn as_f32(self) -> f32 {
        self.to_f32().unwrap_or(f32::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Clamp `x` into `[lo, hi]`.
pub fn clamp<S: Real>(x: S, lo: S, hi: S) -> S {
    x.max(lo).min(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Real> Vec2<S> {
    pub fn new(x: S, y: S) -> Vec2<S> {
        Vec2 { x, y }
    }

    pub fn zero() -> Vec2<S> {
        Vec2::new(S::zero(), S::zero())
    }

    /// Unit vector at `angle` radians from +x toward +y.
    pub fn from_angle(angle: S) -> Vec2<S> {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2<S>) -> S {
        self.x * o.x + self.y * o.y
    }

    pub fn length(self) -> S {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec2<S>) -> S {
        (self - o).length()
    }

    pub fn scale(self, k: S) -> Vec2<S> {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Rotate by `angle` radians (+x toward +y).
    pub fn rotate(self, angle: S) -> Vec2<S> {
        let (s, c) = angle.sin_cos();
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    pub fn clamp_box(self, lo: S, hi: S) -> Vec2<S> {
        Vec2::new(clamp(self.x, lo, hi), clamp(self.y, lo, hi))
    }
}

impl<S: Real> Add for Vec2<S> {
    type Output = Vec2<S>;
    fn add(self, o: Vec2<S>) -> Vec2<S> {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<S: Real> Sub for Vec2<S> {
    type Output = Vec2<S>;
    fn sub(self, o: Vec2<S>) -> Vec2<S> {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<S: Real> Neg for Vec2<S> {
    type Output = Vec2<S>;
    fn neg(self) -> Vec2<S> {
        Vec2::new(-self.x, -self.y)
    }
}

impl<S: Real> Mul<S> for Vec2<S> {
    type Output = Vec2<S>;
    fn mul(self, k: S) -> Vec2<S> {
        self.scale(k)
    }
}

/// Position plus heading; heading 0 faces +x, positive turns toward +y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose<S> {
    pub position: Vec2<S>,
    pub heading: S,
}

impl<S: Real> Pose<S> {
    pub fn new(x: S, y: S, heading: S) -> Pose<S> {
        Pose { position: Vec2::new(x, y), heading }
    }
}
