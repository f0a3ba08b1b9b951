//! Configuration, output formats and the validation suite behind the
//! `h2o-stark` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod validate;
