#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod linalg;
pub mod quantizer;

pub use error::{Error, Result};
pub mod costmodel;
pub mod harness;
pub mod poweralloc;
pub mod precoder;
pub mod rates;
pub mod registry;
