//! Std companion to `fracseg-core`: a multithreaded FFM engine, image and
//! `.ffm` codecs, timing helpers and the `fracseg` command-line front-end.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod io;

pub use fracseg_core as core;
