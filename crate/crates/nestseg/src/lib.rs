//! File formats, pipeline glue, CLI support and the interactive HTTP
//! service around [`nestseg_core`].

pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod seqfile;
pub mod server;

pub use error::{Error, Result};
