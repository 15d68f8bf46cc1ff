#![no_std]
extern crate alloc;

pub mod error;
pub mod moments;
pub mod network;
pub mod spectral;
pub mod state;
pub mod tensor;

pub use error::{Error, Result};
