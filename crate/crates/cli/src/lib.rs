//! Front end for the `constgen` command: spec parsing, command dispatch and
//! JSON or text reports.

pub mod app;
pub mod grammar;
pub mod report;
