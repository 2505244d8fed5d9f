pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod mine;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod render;
pub mod rules;
pub mod rng;

pub use error::{Error, Result};
