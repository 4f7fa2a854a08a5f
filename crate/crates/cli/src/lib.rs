pub mod config;
pub mod experiments;
pub mod export;
