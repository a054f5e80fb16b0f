pub mod graph;
pub mod dataset;
pub mod scm;
pub mod ci_tests;
pub mod discovery;
pub mod identification;
pub mod estimation;
pub mod sensitivity;
pub mod cli;
