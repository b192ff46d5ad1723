pub mod agreement;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod matrix;
pub mod ranker;
pub mod rng;
pub mod synthgen;
