use std::fmt::Debug;
use std::ops::Add;

use num_traits::Zero;

/// Scalar that can be accumulated and compared by the decoders.
///
/// Implemented for every `Copy` numeric type with an additive identity, which
/// covers the primitive integers, `f32`/`f64`, and `num_rational::Ratio`.
pub trait Score: Copy + PartialOrd + Zero + Add<Output = Self> + Debug + Send + Sync {}

impl<T> Score for T where T: Copy + PartialOrd + Zero + Add<Output = T> + Debug + Send + Sync {}
