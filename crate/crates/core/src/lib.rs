#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod scene;
pub mod enhance;
pub mod tonepip;
pub mod psycho;
pub mod service;
pub mod cli;
