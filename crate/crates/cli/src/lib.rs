//! IO companion to the estimation core: play-by-play ingestion, artifact
//! file formats, simulator CSV emission, and the `qmi` command-line
//! front end.

pub mod commands;
pub mod formats;
pub mod ingest;
pub mod simcsv;
