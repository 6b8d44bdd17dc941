use std::fmt::Debug;

use num_traits::{NumAssign, NumCast, Signed};

/// Element type of query vectors.
///
/// Integer scalars keep every tree recurrence exact; `f64` is accepted for
/// real-valued queries. Implemented for every signed numeric type.
pub trait Scalar:
    Signed + NumAssign + NumCast + Copy + PartialOrd + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Signed + NumAssign + NumCast + Copy + PartialOrd + Debug + Send + Sync + 'static
{
}
