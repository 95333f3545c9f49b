//! Reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! Values live on a [`Tape`]; every operation on a [`Var`] appends a node
//! holding its output and a closure mapping the output gradient to input
//! gradients. Complex data is carried as pairs of real tensors.

mod conv;
pub mod gradcheck;
mod ops;
mod reduce;
mod tape;
mod tensor;

pub use conv::FirBank;
pub use ops::{BinaryOp, UnaryOp, ABS_FLOOR};
pub use reduce::ReduceOp;
pub use tape::{BackwardFn, Tape, Var};
pub use tensor::Tensor;
