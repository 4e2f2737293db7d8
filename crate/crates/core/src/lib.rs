//! Symbolic-numeric verification of gradient Ricci soliton structures on
//! warped products.

mod error;

pub mod catalog;
pub mod dynamics;
pub mod expr;
pub mod geometry;
pub mod parallel;
pub mod report;
pub mod run;
pub mod sampling;
pub mod soliton;
pub mod verify;
pub mod warped;

pub use error::{Error, Result};
