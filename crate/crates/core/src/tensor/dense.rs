use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense tensor of `f64` (last index fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for DenseTensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        DenseTensor::new(raw.shape, raw.data)
    }
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::InvalidShape("tensor needs at least one mode".into()));
        }
        if let Some(pos) = shape.iter().position(|&e| e == 0) {
            return Err(Error::InvalidShape(format!("extent of mode {pos} is zero")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} holds {expected} entries but {} were given",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut index = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&index));
            increment(&mut index, &shape);
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &extent)| {
                debug_assert!(i < extent);
                acc * extent + i
            })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Contracts every mode with one vector: `T ×₁ v₁ ×₂ v₂ ⋯ ×ₙ vₙ`.
    ///
    /// Modes are folded from the last one backwards, so each step is a
    /// matrix-vector product over contiguous memory.
    pub fn contract_all(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.shape.len() {
            return Err(Error::ArityMismatch {
                expected: self.shape.len(),
                found: vectors.len(),
            });
        }
        for (mode, (v, &extent)) in vectors.iter().zip(&self.shape).enumerate() {
            if v.len() != extent {
                return Err(Error::DimensionMismatch {
                    mode,
                    expected: extent,
                    found: v.len(),
                });
            }
        }
        let mut current = self.data.clone();
        for v in vectors.iter().rev() {
            let d = v.len();
            current = current
                .chunks_exact(d)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect();
        }
        Ok(current[0])
    }
}

fn increment(index: &mut [usize], shape: &[usize]) {
    for pos in (0..index.len()).rev() {
        index[pos] += 1;
        if index[pos] < shape[pos] {
            return;
        }
        index[pos] = 0;
    }
}
