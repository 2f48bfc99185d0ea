use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numeric kernels (`f32` or `f64`).
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from `f64`; every `Real` can represent an `f64` approximately.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
