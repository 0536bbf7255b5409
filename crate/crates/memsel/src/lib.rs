//! File formats, parallel trial execution and plotting for the `memsel`
//! command-line tool.

pub mod config;
pub mod io;
pub mod output;
pub mod plot;
pub mod report;
pub mod runner;
