//! Orthogonal aggregation: the mapping that packs every group's sum into
//! one aggregate.
//!
//! Each group g owns an integer attribute vector nu_g; the vectors are
//! pairwise orthogonal and share a squared norm mu. A client maps its
//! length-d payload up to length v*d by multiplying every scalar by its
//! group's attribute vector. Summing mapped payloads across all clients
//! and projecting back down with nu_g yields exactly mu times the sum of
//! group g's payloads, so one masked aggregate serves every group.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantizer::QuantSpec;
use crate::scalar::Real;

/// Attribute-vector generators live in this range so aggregated entries
/// stay far below the i64 capacity bound.
pub const MAX_GENERATOR: i64 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum OrthoError {
    #[error("generators (p, q) must not both be zero")]
    ZeroGenerators,
    #[error("generator {0} outside [-{MAX_GENERATOR}, {MAX_GENERATOR}]")]
    GeneratorOutOfRange(i64),
    #[error("group count must be at least 2, got {0}")]
    TooFewGroups(usize),
    #[error("scale must be in [1, {MAX_GENERATOR}], got {0}")]
    BadScale(i64),
    #[error("group index {0} out of range for {1} groups")]
    BadGroup(usize, usize),
    #[error("mapped vector length {0} is not a multiple of group count {1}")]
    BadMappedLength(usize, usize),
    #[error("integer overflow while mapping")]
    Overflow,
    #[error("aggregation integrity failure: {0} is not divisible by mu = {1}")]
    NotDivisible(i64, i64),
    #[error("empty or corrupted group: recovered count {0}")]
    BadCount(i64),
}

/// The published per-group attribute vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupScheme {
    /// Number of groups.
    pub v: usize,
    /// One attribute vector per group, each of length v.
    pub vectors: Vec<Vec<i64>>,
    /// Common squared norm of every attribute vector.
    pub mu: i64,
}

impl GroupScheme {
    /// Two-group scheme from Eq.-15-style generators: nu_0 = (p, q),
    /// nu_1 = (-q, p), mu = p^2 + q^2.
    pub fn two_groups(p: i64, q: i64) -> Result<Self, OrthoError> {
        if p == 0 && q == 0 {
            return Err(OrthoError::ZeroGenerators);
        }
        for g in [p, q] {
            if g.abs() > MAX_GENERATOR {
                return Err(OrthoError::GeneratorOutOfRange(g));
            }
        }
        Ok(Self {
            v: 2,
            vectors: vec![vec![p, q], vec![-q, p]],
            mu: p * p + q * q,
        })
    }

    /// v-group scheme: scaled standard basis, nu_g = c * e_g, mu = c^2.
    pub fn v_groups(v: usize, c: i64) -> Result<Self, OrthoError> {
        if v < 2 {
            return Err(OrthoError::TooFewGroups(v));
        }
        if !(1..=MAX_GENERATOR).contains(&c) {
            return Err(OrthoError::BadScale(c));
        }
        let vectors = (0..v)
            .map(|g| {
                let mut e = vec![0i64; v];
                e[g] = c;
                e
            })
            .collect();
        Ok(Self {
            v,
            vectors,
            mu: c * c,
        })
    }

    pub fn vector(&self, group: usize) -> Result<&[i64], OrthoError> {
        self.vectors
            .get(group)
            .map(Vec::as_slice)
            .ok_or(OrthoError::BadGroup(group, self.v))
    }

    /// Largest attribute-vector entry magnitude, used by the capacity check.
    pub fn max_entry(&self) -> i64 {
        self.vectors
            .iter()
            .flatten()
            .map(|e| e.abs())
            .max()
            .unwrap_or(0)
    }

    /// Verify pairwise orthogonality and the common squared norm. Anyone
    /// receiving the published scheme can audit it with this.
    pub fn audit(&self) -> bool {
        for (e, ve) in self.vectors.iter().enumerate() {
            for (f, vf) in self.vectors.iter().enumerate() {
                let dot: i64 = ve.iter().zip(vf).map(|(a, b)| a * b).sum();
                let expected = if e == f { self.mu } else { 0 };
                if dot != expected {
                    return false;
                }
            }
        }
        self.mu > 0
    }
}

/// Map a payload into its group's subspace: block l of the output is
/// payload[l] * nu.
pub fn map_up(nu: &[i64], payload: &[i64]) -> Result<Vec<i64>, OrthoError> {
    let mut out = Vec::with_capacity(payload.len() * nu.len());
    for &theta in payload {
        for &component in nu {
            out.push(theta.checked_mul(component).ok_or(OrthoError::Overflow)?);
        }
    }
    Ok(out)
}

/// Project an aggregated mapped vector back down: output l is the dot
/// product of block l with nu.
pub fn map_down(nu: &[i64], mapped: &[i64]) -> Result<Vec<i64>, OrthoError> {
    let v = nu.len();
    if v == 0 || mapped.len() % v != 0 {
        return Err(OrthoError::BadMappedLength(mapped.len(), v));
    }
    mapped
        .chunks_exact(v)
        .map(|block| {
            let mut acc: i128 = 0;
            for (&w, &component) in block.iter().zip(nu) {
                acc += w as i128 * component as i128;
            }
            i64::try_from(acc).map_err(|_| OrthoError::Overflow)
        })
        .collect()
}

/// Per-group recovery from the broadcast sums: the member count from the
/// attribute part and the de-quantized group average from the payload
/// part. Works entirely from public information plus the group's own
/// attribute vector.
///
/// Every projected entry is mu times an integer when the aggregate is
/// honest, so mu is divided out exactly in integer arithmetic before
/// de-quantizing; a remainder means the aggregate is corrupted. With the
/// integer division done first, a single-member group recovers its own
/// quantized payload bit for bit.
pub fn recover_group_stats<R: Real>(
    nu: &[i64],
    w_num: &[i64],
    w_vec: &[i64],
    mu: i64,
    spec: &QuantSpec<R>,
) -> Result<(i64, Vec<R>), OrthoError> {
    if nu.len() != w_num.len() {
        return Err(OrthoError::BadMappedLength(w_num.len(), nu.len()));
    }
    let mut dot: i128 = 0;
    for (&a, &b) in nu.iter().zip(w_num) {
        dot += a as i128 * b as i128;
    }
    let dot = i64::try_from(dot).map_err(|_| OrthoError::Overflow)?;
    if mu == 0 || dot % mu != 0 {
        return Err(OrthoError::NotDivisible(dot, mu));
    }
    let count = dot / mu;
    if count <= 0 {
        return Err(OrthoError::BadCount(count));
    }

    let projected = map_down(nu, w_vec)?;
    let count_r = R::from_i64(count).unwrap();
    let avg = projected
        .into_iter()
        .map(|s| {
            if s % mu != 0 {
                return Err(OrthoError::NotDivisible(s, mu));
            }
            Ok(spec.dequantize(s / mu) / count_r)
        })
        .collect::<Result<_, _>>()?;
    Ok((count, avg))
}

/// Convex blend of the group's own aggregate with the other group's,
/// weight gamma on the other group. gamma = 0 keeps aggregation fully
/// separate.
pub fn fuse_groups<R: Real>(avg_own: &[R], avg_other: &[R], gamma: R) -> Vec<R> {
    let keep = R::one() - gamma;
    avg_own
        .iter()
        .zip(avg_other)
        .map(|(&own, &other)| keep * own + gamma * other)
        .collect()
}
