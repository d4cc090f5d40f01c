//! Feature lifts `x ↦ [φ(x), 1]` and the diagonal selector algebra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One feature's lift. The last channel of every lifted vector is the bias 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureMap {
    /// `[x, 1]`
    Binary,
    /// `[x, x², …, x^k, 1]`
    #[serde(rename = "poly")]
    Polynomial { k: usize },
    /// `[sin(ωx), cos(ωx), …, sin(kωx), cos(kωx), 1]`.
    ///
    /// `φ(0) ≠ 0` here, so the off state `[0, …, 0, 1]` is a synthetic
    /// baseline rather than the lift of `x = 0`.
    Fourier {
        k: usize,
        #[serde(default = "default_omega")]
        omega: f64,
    },
}

fn default_omega() -> f64 {
    PI
}

impl FeatureMap {
    pub fn fourier(k: usize) -> Self {
        FeatureMap::Fourier { k, omega: PI }
    }

    /// Length of the lifted vector.
    pub fn dim(&self) -> usize {
        match *self {
            FeatureMap::Binary => 2,
            FeatureMap::Polynomial { k } => k + 1,
            FeatureMap::Fourier { k, .. } => 2 * k + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FeatureMap::Polynomial { k: 0 } | FeatureMap::Fourier { k: 0, .. } => {
                Err(Error::Config("feature map order k must be at least 1".into()))
            }
            FeatureMap::Fourier { omega, .. } if !omega.is_finite() => {
                Err(Error::Config(format!("fourier frequency {omega} is not finite")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        match *self {
            FeatureMap::Binary => out.push(x),
            FeatureMap::Polynomial { k } => {
                let mut p = 1.0;
                for _ in 0..k {
                    p *= x;
                    out.push(p);
                }
            }
            FeatureMap::Fourier { k, omega } => {
                for j in 1..=k {
                    let (s, c) = (j as f64 * omega * x).sin_cos();
                    out.push(s);
                    out.push(c);
                }
            }
        }
        out.push(1.0);
        out
    }
}

/// Parses `binary`, `poly:K`, `fourier:K` or `fourier:K:OMEGA`.
impl std::str::FromStr for FeatureMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let order = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad feature map order in {s:?}")))
        };
        let map = match parts.as_slice() {
            ["binary"] => FeatureMap::Binary,
            ["poly", k] => FeatureMap::Polynomial { k: order(k)? },
            ["fourier", k] => FeatureMap::fourier(order(k)?),
            ["fourier", k, w] => FeatureMap::Fourier {
                k: order(k)?,
                omega: w
                    .parse()
                    .map_err(|_| Error::Config(format!("bad fourier frequency in {s:?}")))?,
            },
            _ => return Err(Error::Config(format!("unknown feature map {s:?}"))),
        };
        map.validate()?;
        Ok(map)
    }
}

/// Per-feature lifts for an `n`-feature model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureMap>", into = "Vec<FeatureMap>")]
pub struct LiftSpec {
    maps: Vec<FeatureMap>,
}

impl TryFrom<Vec<FeatureMap>> for LiftSpec {
    type Error = Error;

    fn try_from(maps: Vec<FeatureMap>) -> Result<Self> {
        Self::new(maps)
    }
}

impl From<LiftSpec> for Vec<FeatureMap> {
    fn from(spec: LiftSpec) -> Self {
        spec.maps
    }
}

impl LiftSpec {
    pub fn new(maps: Vec<FeatureMap>) -> Result<Self> {
        for m in &maps {
            m.validate()?;
        }
        Ok(Self { maps })
    }

    pub fn uniform(map: FeatureMap, n: usize) -> Result<Self> {
        Self::new(vec![map; n])
    }

    pub fn binary(n: usize) -> Self {
        Self {
            maps: vec![FeatureMap::Binary; n],
        }
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[FeatureMap] {
        &self.maps
    }

    pub fn dims(&self) -> Vec<usize> {
        self.maps.iter().map(FeatureMap::dim).collect()
    }

    /// Lift of feature `i` at raw value `x`.
    pub fn lift(&self, i: usize, x: f64) -> Vec<f64> {
        self.maps[i].apply(x)
    }

    /// Lifts a whole instance.
    pub fn lift_all(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.maps.len() {
            return Err(Error::ArityMismatch {
                expected: self.maps.len(),
                found: x.len(),
            });
        }
        Ok(self.maps.iter().zip(x).map(|(m, &xi)| m.apply(xi)).collect())
    }

    /// Checks the lift dimensions against a model's physical legs.
    pub fn check_dims(&self, phys_dims: &[usize]) -> Result<()> {
        if phys_dims.len() != self.maps.len() {
            return Err(Error::ArityMismatch {
                expected: phys_dims.len(),
                found: self.maps.len(),
            });
        }
        for (mode, (m, &d)) in self.maps.iter().zip(phys_dims).enumerate() {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    mode,
                    expected: d,
                    found: m.dim(),
                });
            }
        }
        Ok(())
    }
}

/// `S(t) = Diag(t·I_{d−1}, 1)`, applied without materializing the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selector {
    pub t: f64,
}

impl Selector {
    pub const ON: Selector = Selector { t: 1.0 };
    pub const OFF: Selector = Selector { t: 0.0 };

    pub fn apply(self, v: &[f64]) -> Vec<f64> {
        selector_apply(self.t, v)
    }

    pub fn apply_in_place(self, v: &mut [f64]) {
        if let Some((_, data)) = v.split_last_mut() {
            data.iter_mut().for_each(|c| *c *= self.t);
        }
    }
}

/// Scales every data channel of `v` by `t`, keeps the bias channel.
pub fn selector_apply(t: f64, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    Selector { t }.apply_in_place(&mut out);
    out
}

/// `(S(1) − S(0))·v`: keeps the data channels and zeroes the bias.
pub fn signed_toggle(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    if let Some(bias) = out.last_mut() {
        *bias = 0.0;
    }
    out
}

/// The off state `[0, …, 0, 1]` of dimension `d`.
pub fn off_state(d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    out[d - 1] = 1.0;
    out
}
