//! Cross-language permission-mapping extraction and app auditing.

pub mod appscan;
pub mod cfg;
pub mod cli;
pub mod config;
pub mod diag;
pub mod frontend;
pub mod linkage;
pub mod mapping;
pub mod pipeline;
