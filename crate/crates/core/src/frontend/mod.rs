//! SQL text to resolved query tree.

pub mod ast;
mod lexer;
pub mod parser;
pub mod render;
pub mod resolve;

pub use parser::parse;
pub use render::render;
pub use resolve::{parse_and_resolve, resolve};
