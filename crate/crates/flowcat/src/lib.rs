//! Score documents, diagrams and the `flowcat` command line.

pub mod cli;
pub mod document;
pub mod fixtures;
pub mod render;
