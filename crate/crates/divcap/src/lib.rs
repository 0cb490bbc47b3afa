//! File formats, the generation pipeline, the annotation service and the
//! command-line front end of the caption-diversity toolkit.

pub use divcap_core as core;

pub mod backend;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod reports;
pub mod service;
