//! Scalar abstraction for the math core.
//!
//! Geometry, physics and rasterization are generic over `Scalar` so the same
//! code runs at f32 or f64. The simulation stack is instantiated at f64
//! (see the crate-root aliases); f32 exists for the learning side and for
//! cross-checking.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + core::fmt::Debug + Default + Send + Sync + 'static
{
    /// Lift an f64 constant into this scalar type.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }

    /// Lossy view as f64, mostly for accumulation and reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
