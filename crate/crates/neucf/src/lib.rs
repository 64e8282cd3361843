//! Command-line tools, file formats and the live session service for the
//! `neucf-core` reaching simulator.

pub mod cli;
pub mod compare;
pub mod io;
pub mod output;
pub mod service;
pub mod session;
