pub mod api;
pub mod audit;
pub mod cli;
pub mod config;
pub mod service;
pub mod store;
