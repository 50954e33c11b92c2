//! Synthetic annotated corpora for fixtures and tests.

mod builder;
mod generate;

pub use builder::DocBuilder;
pub use generate::{generate, relation_specs, SynthConfig, SynthCorpus};

#[cfg(test)]
mod tests;
