pub mod ingest;
pub mod methodology;
pub mod service;
pub mod timeseries;
pub mod waste;
