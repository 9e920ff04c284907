//! Exact dyadic geometry: points, dyadic and translated cubes, boxes and their unions.

mod boxes;
mod cube;
mod point;

pub use boxes::{AxisBox, BoxUnion, Interval, Membership};
pub(crate) use cube::bigint_vec;
pub use cube::{
    locate_cube, locate_translated, locate_translated_with, ClosureMode, DyadicCube, Shift,
    TiePolicy, TranslatedCube,
};
pub use point::{cmp_ratio_scalar, Point};

/// Default cap on the ambient dimension.
pub const DEFAULT_MAX_DIM: usize = 3;

pub fn check_dim(n: usize, cap: usize) -> crate::error::Result<()> {
    if n == 0 || n > cap {
        return Err(crate::error::Error::DimensionCap(n));
    }
    Ok(())
}
