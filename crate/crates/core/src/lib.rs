pub mod averaging;
pub mod error;
pub mod jets;
pub mod lyapschmidt;
pub mod ode;
pub mod oracles;
pub mod stability;
pub mod systems;
pub mod torus;

pub use error::{Error, Result};
