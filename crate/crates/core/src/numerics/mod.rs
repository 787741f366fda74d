//! Dense tensors, tape-based reverse-mode differentiation, and the
//! semi-orthogonal projection used by factorized layers.

pub mod gradcheck;
pub mod param;
pub mod semi_orthogonal;
pub mod tape;
pub mod tensor;

pub use param::{Constraint, ParamId, ParamStore, Parameter};
pub use semi_orthogonal::{orthogonality_error, semi_orthogonal_step, OrthoScale};
pub use tape::{log_sum_exp, Elementwise, Tape, Value};
pub use tensor::Tensor;
