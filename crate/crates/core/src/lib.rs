pub mod aot;
pub mod baselines;
pub mod bench;
pub mod config;
pub mod error;
pub mod phy;
pub mod pi;
pub mod receiver;
pub mod rng;
pub mod schedule;
pub mod sic;

pub use config::SystemConfig;
pub use error::{Error, Result};
