pub mod cli;
pub mod connectivity;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod space;
pub mod spectral;
pub mod superop;
