//! h-bit scalar quantization.
//!
//! Reals in [-kappa, kappa] map to integers in [-L, L] with
//! L = 2^(h-1) - 1; de-quantization is the linear map q * kappa / L.
//! Because de-quantization is linear, it commutes with integer summation,
//! which is what lets aggregated sums be de-quantized in one step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum QuantError {
    #[error("cannot quantize non-finite value")]
    NonFinite,
    #[error("bit width h must be in [2, 64], got {0}")]
    BadBitWidth(u32),
    #[error("clipping range kappa must be positive and finite")]
    BadKappa,
}

/// Quantizer parameters shared by every party in a federation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec<R> {
    /// Bit width of the quantized integers.
    pub h: u32,
    /// Clipping range; inputs outside [-kappa, kappa] are clipped.
    pub kappa: R,
}

impl<R: Real> QuantSpec<R> {
    pub fn new(h: u32, kappa: R) -> Result<Self, QuantError> {
        if !(2..=64).contains(&h) {
            return Err(QuantError::BadBitWidth(h));
        }
        if !(kappa.is_finite() && kappa > R::zero()) {
            return Err(QuantError::BadKappa);
        }
        Ok(Self { h, kappa })
    }

    /// Largest representable level, L = 2^(h-1) - 1.
    pub fn levels(&self) -> i64 {
        if self.h == 64 {
            i64::MAX
        } else {
            (1i64 << (self.h - 1)) - 1
        }
    }

    /// Worst-case round-trip error for inputs inside the clipping range,
    /// kappa / (2 L).
    pub fn max_roundtrip_error(&self) -> R {
        self.kappa / R::from_i64(2 * self.levels()).unwrap()
    }

    /// Quantize one value. Out-of-range inputs are clipped to +-kappa;
    /// ties round half away from zero, so quantize(-p) == -quantize(p).
    pub fn quantize(&self, p: R) -> Result<i64, QuantError> {
        if !p.is_finite() {
            return Err(QuantError::NonFinite);
        }
        let levels = R::from_i64(self.levels()).unwrap();
        let clipped = if p.abs() > self.kappa {
            self.kappa
        } else {
            p.abs()
        };
        let magnitude = (clipped * levels / self.kappa).round();
        let q = magnitude.to_i64().expect("magnitude bounded by L");
        Ok(if p < R::zero() { -q } else { q })
    }

    /// Quantize a slice, also reporting how many inputs were clipped.
    pub fn quantize_all(&self, values: &[R]) -> Result<(Vec<i64>, u64), QuantError> {
        let mut clipped = 0u64;
        let mut out = Vec::with_capacity(values.len());
        for &p in values {
            if p.is_finite() && p.abs() > self.kappa {
                clipped += 1;
            }
            out.push(self.quantize(p)?);
        }
        Ok((out, clipped))
    }

    /// De-quantize. Accepts any integer, including aggregated sums far
    /// outside [-L, L]: the map is q * kappa / L.
    pub fn dequantize(&self, q: i64) -> R {
        R::from_i64(q).unwrap() * self.kappa / R::from_i64(self.levels()).unwrap()
    }
}
