pub mod amp;
pub mod distill;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod nets;
pub mod pipeline;
pub mod ppo;
pub mod rewards;
pub mod terrain;

pub use error::{Error, Result};
