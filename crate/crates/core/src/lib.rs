pub mod bracket;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod grammar;
pub mod meta;
pub mod similarity;
pub mod synth;
pub mod tree;
