//! Scalar abstraction: every numerical kernel in this crate is generic over
//! the floating-point type through [`Real`]. Concrete aliases for `f32`/`f64`
//! live at the crate root.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar usable by the mesh, assembly and solver kernels.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into `Self`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    /// Lossy conversion back to `f64` (used for reporting only).
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + serde::Serialize
        + serde::de::DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for `T::lit` that reads well in formulas.
pub fn lit<T: Real>(v: f64) -> T {
    T::lit(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_roundtrips_for_both_widths() {
        assert_eq!(lit::<f64>(0.25), 0.25);
        assert_eq!(lit::<f32>(0.25), 0.25_f32);
    }
}
