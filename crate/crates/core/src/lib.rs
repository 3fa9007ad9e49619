// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod array;
pub mod config;
pub mod direction;
pub mod doa;
pub mod drr;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod selftest;
pub mod sh;
pub mod sim;
pub mod sweep;
pub mod tf;
pub mod velocity;
pub mod wav;

pub use error::{Error, Result};
