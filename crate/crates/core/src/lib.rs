pub mod analysis;
pub mod error;
pub mod gaopt;
pub mod linsys;
pub mod partition;
pub mod synth;

pub use error::{Error, Result};
pub use linsys::{FrequencyGrid, SigmaCurve, StateSpace};
