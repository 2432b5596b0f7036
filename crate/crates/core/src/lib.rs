// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod modes;
pub mod ranging;
pub mod synth;
pub mod tfr;
pub mod warp;
