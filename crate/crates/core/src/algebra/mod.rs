//! Discrete increment calculus on time grids.

mod grid;
mod holder;
mod increment;
mod norms;

pub use grid::TimeGrid;
pub use holder::{estimate_holder_exponent, HolderEstimate};
pub use increment::{
    matmul, trace_pair, twist, DoubleLaplaceIncrement2, DoubleLaplaceIncrement3, Increment1, Increment2,
    Increment3, LaplaceIncrement1, LaplaceIncrement2, LaplaceIncrement3, Shape,
};
pub(crate) use norms::euclid;
pub use norms::{holder_norm2, holder_norm3, lbeta_norm, lbeta_weights, HolderNorm};
