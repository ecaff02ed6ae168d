//! Filesystem-backed session store served over HTTP and the command line.

pub mod api;
pub mod cli;
