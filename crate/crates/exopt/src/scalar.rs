//! Scalar abstraction shared by every module.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the optimizers and the linkage solver run on.
pub trait Real:
    Float
    + FromPrimitive
    + NumCast
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal; panics only for unrepresentable values.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// IEEE total order, so sorting never panics on NaN.
    #[inline]
    fn total_order(&self, other: &Self) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl Real for f32 {}
impl Real for f64 {}
