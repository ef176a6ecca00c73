//! Pipeline driver, character store and HTTP service.

pub mod edit;
pub mod pipeline;
pub mod server;
pub mod service;
pub mod store;
pub mod vectors;
