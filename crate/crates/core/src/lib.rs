pub mod discrete;
pub mod ensemble;
pub mod error;
pub mod kernel;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod linalg;
pub mod quantum;
pub mod belavkin;
pub mod cli;
pub mod validate;
