//! Strategies shared by the property and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::collection::{btree_map, btree_set, vec};
use proptest::prelude::*;
use simserve::wire::{
    ActuatorSpec, Body, DType, EpisodeStateTag, Message, SensorSpec, Settings, SpecSet, Tensor, TensorData,
};

pub fn arb_dtype() -> impl Strategy<Value = DType> {
    proptest::sample::select(DType::ALL.to_vec())
}

fn arb_shape() -> impl Strategy<Value = Vec<u32>> {
    vec(0u32..4, 0..=3)
}

pub fn arb_tensor() -> impl Strategy<Value = Tensor> {
    (arb_shape(), arb_dtype())
        .prop_flat_map(|(shape, dtype)| {
            let n = shape.iter().product::<u32>() as usize;
            let data = match dtype {
                DType::F32 => vec(any::<f32>(), n).prop_map(TensorData::F32).boxed(),
                DType::F64 => vec(any::<f64>(), n).prop_map(TensorData::F64).boxed(),
                DType::I32 => vec(any::<i32>(), n).prop_map(TensorData::I32).boxed(),
                DType::I64 => vec(any::<i64>(), n).prop_map(TensorData::I64).boxed(),
                DType::U8 => vec(any::<u8>(), n).prop_map(TensorData::U8).boxed(),
                DType::Bool => vec(any::<bool>(), n).prop_map(TensorData::Bool).boxed(),
                DType::String => vec(".{0,6}", n).prop_map(TensorData::String).boxed(),
            };
            (Just(shape), data)
        })
        .prop_map(|(shape, data)| Tensor::new(shape, data).expect("consistent shape"))
}

fn arb_settings() -> impl Strategy<Value = Settings> {
    btree_map(".{0,8}", arb_tensor(), 0..4)
}

fn arb_uid_map() -> impl Strategy<Value = std::collections::BTreeMap<u32, Tensor>> {
    btree_map(any::<u32>(), arb_tensor(), 0..4)
}

fn arb_uids(max: usize) -> impl Strategy<Value = BTreeSet<u32>> {
    btree_set(any::<u32>(), 0..=max)
}

fn arb_actuator(uid: u32) -> impl Strategy<Value = ActuatorSpec> {
    (".{0,10}", arb_dtype(), arb_shape(), -1e9f64..1e9, 0f64..1e9, any::<bool>()).prop_map(
        move |(name, dtype, shape, min, width, bounded)| ActuatorSpec {
            uid,
            name,
            dtype,
            shape,
            min,
            max: min + width,
            bounded,
        },
    )
}

fn arb_sensor(uid: u32) -> impl Strategy<Value = SensorSpec> {
    (".{0,10}", arb_dtype(), arb_shape()).prop_map(move |(name, dtype, shape)| SensorSpec { uid, name, dtype, shape })
}

pub fn arb_specs() -> impl Strategy<Value = SpecSet> {
    (arb_uids(4), arb_uids(4)).prop_flat_map(|(a, s)| {
        let actuators: Vec<_> = a.into_iter().map(arb_actuator).collect();
        let sensors: Vec<_> = s.into_iter().map(arb_sensor).collect();
        (actuators, sensors).prop_map(|(actuators, sensors)| SpecSet { actuators, sensors })
    })
}

fn arb_state() -> impl Strategy<Value = EpisodeStateTag> {
    prop_oneof![
        Just(EpisodeStateTag::Running),
        Just(EpisodeStateTag::Terminated),
        Just(EpisodeStateTag::Interrupted)
    ]
}

pub fn arb_body() -> impl Strategy<Value = Body> {
    prop_oneof![
        arb_settings().prop_map(|settings| Body::CreateWorldRequest { settings }),
        ".{0,12}".prop_map(|world_name| Body::CreateWorldResponse { world_name }),
        (".{0,12}", arb_settings()).prop_map(|(world_name, settings)| Body::JoinWorldRequest { world_name, settings }),
        arb_specs().prop_map(|specs| Body::JoinWorldResponse { specs }),
        (arb_uid_map(), vec(any::<u32>(), 0..5))
            .prop_map(|(actions, requested_observations)| Body::StepRequest { actions, requested_observations }),
        (arb_state(), arb_uid_map()).prop_map(|(state, observations)| Body::StepResponse { state, observations }),
        arb_settings().prop_map(|settings| Body::ResetRequest { settings }),
        arb_specs().prop_map(|specs| Body::ResetResponse { specs }),
        Just(Body::ResetWorldRequest),
        Just(Body::ResetWorldResponse),
        Just(Body::LeaveWorldRequest),
        Just(Body::LeaveWorldResponse),
        ".{0,12}".prop_map(|world_name| Body::DestroyWorldRequest { world_name }),
        Just(Body::DestroyWorldResponse),
        (any::<u32>(), ".{0,20}").prop_map(|(code, message)| Body::Error { code, message }),
    ]
}

pub fn arb_message() -> impl Strategy<Value = Message> {
    (any::<u64>(), arb_body()).prop_map(|(sequence, body)| Message { sequence, body })
}
