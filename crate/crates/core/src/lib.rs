//! Indoor pathloss radio-map toolkit.
//!
//! Builds the engineered input channels of a radio-map predictor (material
//! planes, distance, frequency, antenna gain, free-space loss, wall-crossing
//! counts), preprocesses and augments them, evaluates predictions with micro
//! and macro RMSE, analyses dataset distribution shift, and runs a
//! forward-only shape stub of the encoder/neck/decoder model.
//!
//! Rasters on disk use the RMG1 container (see [`gridfile`]).

pub mod augment;
pub mod baseline;
pub mod error;
pub mod eval;
pub mod features;
pub mod gridfile;
pub mod modelstub;
pub mod raster;
pub mod rng;
pub mod shift;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use features::{ChannelKind, DistanceMode, FeatureStack, GeomTransform};
pub use types::{AntennaPattern, BuildingGrid, RadioMap, SampleMeta, SeenFlags, Split, TxConfig};
