use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::Real;
use crate::sim::{EntityId, World};
use crate::wire::{
    element_count, ActuatorSpec, DType, SensorSpec, SpecSet, Tensor, TensorData, Uid,
};

use super::task::EpisodeState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterfaceError {
    #[error("{0:?} is already registered on this avatar")]
    DuplicateName(String),
    #[error("invalid bounds [{min}, {max}]")]
    InvalidBounds { min: f64, max: f64 },
    #[error("invalid shape {0:?}")]
    InvalidShape(Vec<u32>),
    #[error("invalid action: unknown actuator uid {0}")]
    UnknownActuator(Uid),
    #[error("invalid action for actuator {uid}: {reason}")]
    InvalidAction { uid: Uid, reason: String },
    #[error("invalid observation: unknown sensor uid {0}")]
    UnknownSensor(Uid),
    #[error("sensor {uid} produced {got_dtype}{got_shape:?}, spec says {dtype}{shape:?}")]
    SensorMismatch {
        uid: Uid,
        dtype: DType,
        shape: Vec<u32>,
        got_dtype: DType,
        got_shape: Vec<u32>,
    },
    #[error("invalid setting {key:?}: {reason}")]
    InvalidSetting { key: String, reason: String },
}

impl InterfaceError {
    pub fn setting(key: &str, reason: impl Into<String>) -> InterfaceError {
        InterfaceError::InvalidSetting { key: key.to_owned(), reason: reason.into() }
    }
}

/// Applies a validated value to world state. Receives the avatar's entity.
pub type WriteHook<S> = Box<dyn Fn(&mut World<S>, Option<EntityId>, &Tensor) + Send + Sync>;

/// Produces a snapshot; must not mutate anything.
pub type ReadHook<S> = Box<dyn Fn(&SensorContext<'_, S>) -> Tensor + Send + Sync>;

/// What a sensor read hook may look at.
pub struct SensorContext<'a, S> {
    pub world: &'a World<S>,
    pub entity: Option<EntityId>,
    pub episode: &'a EpisodeState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

pub struct Actuator<S> {
    pub uid: Uid,
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u32>,
    pub bounds: Option<Bounds>,
    write: WriteHook<S>,
}

impl<S> Actuator<S> {
    pub fn spec(&self) -> ActuatorSpec {
        let (min, max) = self.bounds.map_or((0.0, 0.0), |b| (b.min, b.max));
        ActuatorSpec {
            uid: self.uid,
            name: self.name.clone(),
            dtype: self.dtype,
            shape: self.shape.clone(),
            min,
            max,
            bounded: self.bounds.is_some(),
        }
    }

    /// Value written when an agent omits this actuator from a step: zero for
    /// numbers, false for booleans, clamped into bounds.
    pub fn default_value(&self) -> Tensor {
        let zero = Tensor::zeros(self.dtype, self.shape.clone()).expect("validated at registration");
        match self.bounds {
            Some(b) => clamp_tensor(&zero, b),
            None => zero,
        }
    }

    /// Checks dtype/shape and applies bounds: clamped normally, rejected when
    /// `strict`.
    fn validate(&self, value: &Tensor, strict: bool) -> Result<Tensor, InterfaceError> {
        if value.dtype() != self.dtype || value.shape() != self.shape.as_slice() {
            return Err(InterfaceError::InvalidAction {
                uid: self.uid,
                reason: format!(
                    "expected {}{:?}, got {}{:?}",
                    self.dtype,
                    self.shape,
                    value.dtype(),
                    value.shape()
                ),
            });
        }
        let Some(bounds) = self.bounds else {
            return Ok(value.clone());
        };
        if strict {
            let values = value.to_f64_vec().unwrap_or_default();
            if let Some(v) = values.iter().find(|v| !(bounds.min..=bounds.max).contains(*v)) {
                return Err(InterfaceError::InvalidAction {
                    uid: self.uid,
                    reason: format!("{v} outside [{}, {}]", bounds.min, bounds.max),
                });
            }
            return Ok(value.clone());
        }
        Ok(clamp_tensor(value, bounds))
    }
}

/// Element-wise `min(max(x, lo), hi)`; integer types clamp to the integer
/// range covered by the bounds.
pub fn clamp_tensor(t: &Tensor, b: Bounds) -> Tensor {
    let shape = t.shape().to_vec();
    let data = match t.data() {
        TensorData::F32(v) => {
            TensorData::F32(v.iter().map(|&x| (x as f64).max(b.min).min(b.max) as f32).collect())
        }
        TensorData::F64(v) => TensorData::F64(v.iter().map(|&x| x.max(b.min).min(b.max)).collect()),
        TensorData::I32(v) => TensorData::I32(
            v.iter()
                .map(|&x| (x as f64).max(b.min.ceil()).min(b.max.floor()) as i32)
                .collect(),
        ),
        TensorData::I64(v) => TensorData::I64(
            v.iter()
                .map(|&x| (x as f64).max(b.min.ceil()).min(b.max.floor()) as i64)
                .collect(),
        ),
        TensorData::U8(v) => TensorData::U8(
            v.iter()
                .map(|&x| f64::from(x).max(b.min.ceil()).min(b.max.floor()) as u8)
                .collect(),
        ),
        other => other.clone(),
    };
    Tensor::new(shape, data).expect("clamping preserves shape")
}

pub struct Sensor<S> {
    pub uid: Uid,
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u32>,
    read: ReadHook<S>,
}

impl<S> Sensor<S> {
    pub fn spec(&self) -> SensorSpec {
        SensorSpec {
            uid: self.uid,
            name: self.name.clone(),
            dtype: self.dtype,
            shape: self.shape.clone(),
        }
    }

    pub fn read(&self, ctx: &SensorContext<'_, S>) -> Result<Tensor, InterfaceError> {
        let t = (self.read)(ctx);
        if t.dtype() != self.dtype || t.shape() != self.shape.as_slice() {
            return Err(InterfaceError::SensorMismatch {
                uid: self.uid,
                dtype: self.dtype,
                shape: self.shape.clone(),
                got_dtype: t.dtype(),
                got_shape: t.shape().to_vec(),
            });
        }
        Ok(t)
    }
}

/// Controllable embodiment exposing actuators and sensors. Uids are dense
/// from 1 in registration order, separately for actuators and sensors.
pub struct Avatar<S> {
    entity: Option<EntityId>,
    actuators: Vec<Actuator<S>>,
    sensors: Vec<Sensor<S>>,
    strict_bounds: bool,
}

impl<S: Real> Default for Avatar<S> {
    fn default() -> Self {
        Avatar::new()
    }
}

impl<S: Real> Avatar<S> {
    pub fn new() -> Avatar<S> {
        Avatar { entity: None, actuators: Vec::new(), sensors: Vec::new(), strict_bounds: false }
    }

    /// Out-of-bounds actions become errors instead of being clamped.
    pub fn with_strict_bounds(mut self, strict: bool) -> Avatar<S> {
        self.strict_bounds = strict;
        self
    }

    pub fn strict_bounds(&self) -> bool {
        self.strict_bounds
    }

    pub fn entity(&self) -> Option<EntityId> {
        self.entity
    }

    pub fn set_entity(&mut self, entity: Option<EntityId>) {
        self.entity = entity;
    }

    pub fn actuators(&self) -> &[Actuator<S>] {
        &self.actuators
    }

    pub fn sensors(&self) -> &[Sensor<S>] {
        &self.sensors
    }

    pub fn actuator_uid(&self, name: &str) -> Option<Uid> {
        self.actuators.iter().find(|a| a.name == name).map(|a| a.uid)
    }

    pub fn sensor_uid(&self, name: &str) -> Option<Uid> {
        self.sensors.iter().find(|s| s.name == name).map(|s| s.uid)
    }

    fn check_shape(shape: &[u32]) -> Result<(), InterfaceError> {
        if shape.len() > u8::MAX as usize || element_count(shape).is_none() {
            return Err(InterfaceError::InvalidShape(shape.to_vec()));
        }
        Ok(())
    }

    pub fn register_actuator(
        &mut self,
        name: &str,
        dtype: DType,
        shape: Vec<u32>,
        bounds: Option<(f64, f64)>,
        write: WriteHook<S>,
    ) -> Result<Uid, InterfaceError> {
        if self.actuator_uid(name).is_some() {
            return Err(InterfaceError::DuplicateName(name.to_owned()));
        }
        Self::check_shape(&shape)?;
        let bounds = match bounds {
            Some((min, max)) if min <= max => Some(Bounds { min, max }),
            Some((min, max)) => return Err(InterfaceError::InvalidBounds { min, max }),
            None => None,
        };
        let uid = self.actuators.len() as Uid + 1;
        self.actuators.push(Actuator { uid, name: name.to_owned(), dtype, shape, bounds, write });
        Ok(uid)
    }

    pub fn register_sensor(
        &mut self,
        name: &str,
        dtype: DType,
        shape: Vec<u32>,
        read: ReadHook<S>,
    ) -> Result<Uid, InterfaceError> {
        if self.sensor_uid(name).is_some() {
            return Err(InterfaceError::DuplicateName(name.to_owned()));
        }
        Self::check_shape(&shape)?;
        let uid = self.sensors.len() as Uid + 1;
        self.sensors.push(Sensor { uid, name: name.to_owned(), dtype, shape, read });
        Ok(uid)
    }

    pub fn spec_set(&self) -> SpecSet {
        SpecSet {
            actuators: self.actuators.iter().map(Actuator::spec).collect(),
            sensors: self.sensors.iter().map(Sensor::spec).collect(),
        }
    }

    /// Validates every supplied action, then writes every actuator in
    /// registration order (defaults for omitted ones). Nothing is written if
    /// any action is invalid.
    pub fn apply_actions(
        &self,
        world: &mut World<S>,
        actions: &BTreeMap<Uid, Tensor>,
    ) -> Result<(), InterfaceError> {
        for uid in actions.keys() {
            if !(1..=self.actuators.len() as Uid).contains(uid) {
                return Err(InterfaceError::UnknownActuator(*uid));
            }
        }
        let values = self
            .actuators
            .iter()
            .map(|a| match actions.get(&a.uid) {
                Some(v) => a.validate(v, self.strict_bounds),
                None => Ok(a.default_value()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (a, v) in self.actuators.iter().zip(&values) {
            (a.write)(world, self.entity, v);
        }
        Ok(())
    }

    /// Snapshots the requested sensors. Duplicate uids collapse.
    pub fn read_observations(
        &self,
        world: &World<S>,
        episode: &EpisodeState,
        uids: &[Uid],
    ) -> Result<BTreeMap<Uid, Tensor>, InterfaceError> {
        if let Some(&bad) = uids.iter().find(|u| !(1..=self.sensors.len() as Uid).contains(u)) {
            return Err(InterfaceError::UnknownSensor(bad));
        }
        let ctx = SensorContext { world, entity: self.entity, episode };
        let mut out = BTreeMap::new();
        for &uid in uids {
            if out.contains_key(&uid) {
                continue;
            }
            out.insert(uid, self.sensors[uid as usize - 1].read(&ctx)?);
        }
        Ok(out)
    }
}
