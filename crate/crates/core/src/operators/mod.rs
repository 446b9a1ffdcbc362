//! Operator classes: delay systems, complete-quadratic operators, the
//! flattening onto `L₂`, multiplier/kernel operators, derivative
//! constructions and spacing operators.

mod complete;
mod derivative;
mod free;
mod multkernel;
mod spacing;
mod system;

pub use complete::{
    make_free_operator, make_free_operator_with, z_inner, CompleteQuadOp, FlattenMode,
    OperatorShape,
};
pub use derivative::{
    derivative_op_multi, derivative_op_single, DerivativeOpMulti, DerivativeOpSingle,
};
pub use free::{
    adjoint_kernel, free_poly_1d, free_poly_2d, free_symmetric_kernel_family,
    free_symmetric_matrix, free_symmetric_poly_1d, BivariateSupport, VarAllocator, VarCounter,
};
pub use multkernel::{l2_inner_poly, MultKernelOp};
pub use spacing::{spacing_make, Spacing, SpacingParams};
pub use system::DelaySystem;
