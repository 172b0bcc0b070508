use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use serde::{de::DeserializeOwned, Serialize};

/// Floating point scalar used by every geometric, transport and metric routine.
///
/// Implemented for `f32` and `f64`. The renderer and the metrics are written
/// against this trait only, so the precision of a whole pipeline is chosen by
/// the alias set at the crate root.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Offset used to step off surfaces when probing which body a point is in.
    fn geom_eps() -> Self;

    /// Uniform draw on `[0, 1)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {
    #[inline]
    fn geom_eps() -> Self {
        2e-4
    }

    #[inline]
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

impl Real for f64 {
    #[inline]
    fn geom_eps() -> Self {
        1e-7
    }

    #[inline]
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}
