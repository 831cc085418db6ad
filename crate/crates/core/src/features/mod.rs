//! Feature engineering stages.

pub mod encode;
pub mod graph;
pub mod history;
pub mod registry;
pub mod time;
