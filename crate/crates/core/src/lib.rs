//! Robust instability radius analysis for discrete-time SISO systems.

pub mod casestudies;
pub mod cli;
pub mod config;
pub mod error;
pub mod nyquist;
pub mod poly;
pub mod rir;
pub mod transfer;

pub use config::Tolerances;
pub use error::{Error, ErrorClass, Result};
pub use poly::{Polynomial, RootCluster, RootSet};
pub use transfer::{ClassName, ClassTag, DerivativeSample, PeakGain, RationalTF};
