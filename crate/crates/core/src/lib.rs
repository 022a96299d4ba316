pub mod config;
pub mod decomposition;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod planner;
pub mod scenes;
pub mod skeleton;
pub mod trajectory;
pub mod tsp;
pub mod viewpoints;

pub use error::{Error, Result};
