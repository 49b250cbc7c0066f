pub mod analysis;
pub mod constants;
pub mod embed;
pub mod energy;
pub mod error;
pub mod io;
pub mod par;
pub mod potentials;
pub mod prufer;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
