//! Motion-compensated Haar wavelet lifting for image sequences and CT volumes.
//!
//! One temporal (or slice-direction) decomposition step is computed per frame
//! pair. The prediction step subtracts a block-based motion-compensated
//! predictor; the update step scatters the highpass band back along the
//! inverted motion, weights each pixel by `1/(k+1)` for `k` contributing
//! blocks and, optionally, fills the unconnected pixels with Frequency
//! Selective Extrapolation. All steps use floor rounding so the transform is
//! exactly invertible on integers.

pub mod codec;
pub mod container;
mod error;
pub mod fixtures;
pub mod frame;
pub mod fse;
pub mod imc;
pub mod io;
pub mod lifting;
pub mod metrics;
pub mod motion;

pub use error::{Error, Result};
pub use frame::{
    floor_scale, ConnectivityMap, Frame, LiftConfig, MotionField, MotionVector, Sequence,
    UpdateField, UpdateMode,
};
pub use fse::FseParams;
pub use lifting::{SequenceBands, SubbandPair};
