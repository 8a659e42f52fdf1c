//! Null Frenet frames for curves in 3D index-2 charts, null helix synthesis
//! and verification, and second-order forms of submanifolds.

// Index loops read closer to the tensor formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod exprparse;
pub mod helix;
pub mod linalg;
pub mod nullframe;
pub mod ode;
pub mod semimetric;
pub mod stencil;
pub mod submanifold;
