use std::fmt;

use thiserror::Error;

/// Element type tag carried by every tensor on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    I32 = 3,
    I64 = 4,
    U8 = 5,
    Bool = 6,
    String = 7,
}

impl DType {
    pub const ALL: [DType; 7] = [
        DType::F32,
        DType::F64,
        DType::I32,
        DType::I64,
        DType::U8,
        DType::Bool,
        DType::String,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<DType> {
        Some(match tag {
            1 => DType::F32,
            2 => DType::F64,
            3 => DType::I32,
            4 => DType::I64,
            5 => DType::U8,
            6 => DType::Bool,
            7 => DType::String,
            _ => return None,
        })
    }

    /// Fixed byte width of one element, `None` for length-prefixed strings.
    pub fn element_size(self) -> Option<usize> {
        match self {
            DType::F32 | DType::I32 => Some(4),
            DType::F64 | DType::I64 => Some(8),
            DType::U8 | DType::Bool => Some(1),
            DType::String => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        !matches!(self, DType::String)
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::I32 => "i32",
            DType::I64 => "i64",
            DType::U8 => "u8",
            DType::Bool => "bool",
            DType::String => "string",
        };
        f.write_str(name)
    }
}

/// Row-major element storage, one variant per [`DType`].
#[derive(Debug, Clone)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    I32(Vec<i32>),
    I64(Vec<i64>),
    U8(Vec<u8>),
    Bool(Vec<bool>),
    String(Vec<String>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::I32(_) => DType::I32,
            TensorData::I64(_) => DType::I64,
            TensorData::U8(_) => DType::U8,
            TensorData::Bool(_) => DType::Bool,
            TensorData::String(_) => DType::String,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::I32(v) => v.len(),
            TensorData::I64(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::Bool(v) => v.len(),
            TensorData::String(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A zero-filled (false / empty string) buffer of `count` elements.
    pub fn zeros(dtype: DType, count: usize) -> TensorData {
        match dtype {
            DType::F32 => TensorData::F32(vec![0.0; count]),
            DType::F64 => TensorData::F64(vec![0.0; count]),
            DType::I32 => TensorData::I32(vec![0; count]),
            DType::I64 => TensorData::I64(vec![0; count]),
            DType::U8 => TensorData::U8(vec![0; count]),
            DType::Bool => TensorData::Bool(vec![false; count]),
            DType::String => TensorData::String(vec![String::new(); count]),
        }
    }
}

// Floats compare by bit pattern so that NaN payloads survive structural
// equality checks after a round-trip.
impl PartialEq for TensorData {
    fn eq(&self, other: &Self) -> bool {
        use TensorData::*;
        match (self, other) {
            (F32(a), F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (F64(a), F64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (I32(a), I32(b)) => a == b,
            (I64(a), I64(b)) => a == b,
            (U8(a), U8(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (String(a), String(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for TensorData {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("rank {0} exceeds the maximum of 255")]
    RankTooLarge(usize),
    #[error("shape {shape:?} holds {expected} elements but {actual} were supplied")]
    ElementCount {
        shape: Vec<u32>,
        expected: u64,
        actual: usize,
    },
    #[error("element count of shape {0:?} overflows")]
    Overflow(Vec<u32>),
}

/// Number of elements described by `shape`; the empty shape is a scalar.
pub fn element_count(shape: &[u32]) -> Option<u64> {
    shape
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(u64::from(d)))
}

/// Typed, shaped, row-major numeric payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    shape: Vec<u32>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<u32>, data: TensorData) -> Result<Tensor, ShapeError> {
        if shape.len() > u8::MAX as usize {
            return Err(ShapeError::RankTooLarge(shape.len()));
        }
        let expected = element_count(&shape).ok_or_else(|| ShapeError::Overflow(shape.clone()))?;
        if expected != data.len() as u64 {
            return Err(ShapeError::ElementCount {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(dtype: DType, shape: Vec<u32>) -> Result<Tensor, ShapeError> {
        let count = element_count(&shape).ok_or_else(|| ShapeError::Overflow(shape.clone()))?;
        let count = usize::try_from(count).map_err(|_| ShapeError::Overflow(shape.clone()))?;
        Tensor::new(shape, TensorData::zeros(dtype, count))
    }

    pub fn scalar_f32(v: f32) -> Tensor {
        Tensor { shape: vec![], data: TensorData::F32(vec![v]) }
    }

    pub fn scalar_f64(v: f64) -> Tensor {
        Tensor { shape: vec![], data: TensorData::F64(vec![v]) }
    }

    pub fn scalar_i32(v: i32) -> Tensor {
        Tensor { shape: vec![], data: TensorData::I32(vec![v]) }
    }

    pub fn scalar_i64(v: i64) -> Tensor {
        Tensor { shape: vec![], data: TensorData::I64(vec![v]) }
    }

    pub fn scalar_bool(v: bool) -> Tensor {
        Tensor { shape: vec![], data: TensorData::Bool(vec![v]) }
    }

    pub fn scalar_string(v: impl Into<String>) -> Tensor {
        Tensor { shape: vec![], data: TensorData::String(vec![v.into()]) }
    }

    pub fn from_f32(shape: Vec<u32>, values: Vec<f32>) -> Result<Tensor, ShapeError> {
        Tensor::new(shape, TensorData::F32(values))
    }

    pub fn from_i32(shape: Vec<u32>, values: Vec<i32>) -> Result<Tensor, ShapeError> {
        Tensor::new(shape, TensorData::I32(values))
    }

    pub fn from_u8(shape: Vec<u32>, values: Vec<u8>) -> Result<Tensor, ShapeError> {
        Tensor::new(shape, TensorData::U8(values))
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn shape(&self) -> &[u32] {
        &self.shape
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn element_count(&self) -> usize {
        self.data.len()
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.data {
            TensorData::U8(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i32(&self) -> Option<&[i32]> {
        match &self.data {
            TensorData::I32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<&[bool]> {
        match &self.data {
            TensorData::Bool(v) => Some(v),
            _ => None,
        }
    }

    /// The single string element of a scalar STRING tensor.
    pub fn as_str(&self) -> Option<&str> {
        match &self.data {
            TensorData::String(v) if v.len() == 1 => Some(&v[0]),
            _ => None,
        }
    }

    /// The single element of a numeric scalar as an integer, if it is one
    /// exactly.
    pub fn as_integer(&self) -> Option<i64> {
        if self.element_count() != 1 {
            return None;
        }
        match &self.data {
            TensorData::I32(v) => Some(i64::from(v[0])),
            TensorData::I64(v) => Some(v[0]),
            TensorData::U8(v) => Some(i64::from(v[0])),
            _ => None,
        }
    }

    /// Numeric elements widened to f64 (booleans map to 0/1).
    pub fn to_f64_vec(&self) -> Option<Vec<f64>> {
        Some(match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
            TensorData::I32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::I64(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::Bool(v) => v.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect(),
            TensorData::String(_) => return None,
        })
    }
}
