pub mod config;
pub mod controller;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod schema_io;
pub mod store;
pub mod text;
pub mod trace;
