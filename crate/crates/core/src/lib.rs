pub mod bench;
pub mod catalog;
pub mod cbo;
mod datetime;
pub mod error;
pub mod frontend;
pub mod guess;
pub mod ir;
pub mod plancache;
pub mod qrw;
pub mod session;

pub use error::{Error, Result};
