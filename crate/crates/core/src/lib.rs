//! Generative language modeling of 3D chemical structures.

pub mod augment;
pub mod decimal;
pub mod element;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod residue;
pub mod sample;
pub mod structure;
pub mod synth;
pub mod tokenizer;
pub mod train;
pub mod transformer;

pub use error::{ChemError, Error, ParseError, Result};
