//! 2D butterfly factorization of the discrete Fourier transform, its
//! realization as a sparse-channel convolutional network, and tools to
//! train and evaluate that network.

pub mod encoding;
pub mod error;
pub mod imaging;
pub mod kernel_math;
mod linalg;
pub mod metrics;
pub mod net;
pub mod parallel;
pub mod reference;
pub mod train;

pub use error::{Error, Result};
pub use net::{ButterflyNet2D, NetConfig};
pub use reference::{Direction, Signal2D};
