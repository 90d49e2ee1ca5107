#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod rectifying;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod scene;
pub mod submanifold;
pub mod tolerances;
pub mod warped;

pub use error::{GeoError, Result};
pub use tolerances::Tolerances;
