//! Scalar abstraction for the real-valued side of the simulator.
//!
//! Model training, quantization and recovered group averages are generic
//! over [`Real`] so the same code runs in f32 or f64. The protocol side
//! (finite-field residues, mapped integer payloads) is deliberately not
//! generic: the field is integers modulo 2^64 and stays that way.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from f64 (used when sampling noise,
    /// which is always drawn in f64 so the random stream does not depend
    /// on the scalar type).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar used by the CLI and the default federation runs.
pub type DefaultReal = f64;
