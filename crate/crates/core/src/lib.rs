//! Data quality index (DQI) workbench core: corpus handling, text
//! primitives, the seven quality components, traffic-light bands, guided
//! autofix and split tooling for premise/hypothesis corpora.

pub mod corpus;
pub mod engine;
pub mod stats;
pub mod textprims;
pub mod bands;
pub mod config;
pub mod autofix;
pub mod review;
pub mod splitkit;
pub mod viz;
