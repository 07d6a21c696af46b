// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::assign_op_pattern)]

pub mod analysis;
pub mod autodiff;
pub mod expr;
pub mod geodesics;
pub mod metrics;
