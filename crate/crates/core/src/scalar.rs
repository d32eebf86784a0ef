//! Numeric abstraction shared by every model and solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the models are generic over (`f32`, `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts an integer count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// Lossy conversion back to `f64`, used for reporting and sampling.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Working tolerance for feasibility and optimality tests, scaled to the
    /// precision of the type (about 1.5e-9 for `f64`, 3.5e-5 for `f32`).
    fn tolerance() -> Self {
        Self::epsilon().sqrt() * Self::of(0.1)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}
