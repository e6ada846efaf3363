use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};

/// Floating-point type usable by the closed-form layers.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// Magnitude below which a coefficient or value counts as zero.
    #[inline]
    fn zero_tol() -> Self {
        Self::lit(1e-14).max(Self::epsilon() * Self::lit(16.0))
    }

    /// Relative residual scale for accepted polynomial roots.
    #[inline]
    fn residual_tol() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(1e5))
    }

    /// Distance below which two roots are merged into one of higher multiplicity.
    #[inline]
    fn cluster_tol() -> Self {
        Self::lit(1e-7).max(Self::epsilon().sqrt() * Self::lit(4.0))
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
}

/// Finiteness of both parts of a complex number.
#[inline]
pub fn finite<T: Scalar>(c: num_complex::Complex<T>) -> bool {
    c.re.is_finite() && c.im.is_finite()
}
