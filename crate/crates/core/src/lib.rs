pub mod demand;
pub mod dispatch;
pub mod error;
pub mod mdp;
pub mod network;
pub mod numeric;
pub mod sample;
pub mod scaleup;
pub mod valuation;

pub use error::{CoreError, Result};
