//! Reconstruction and resolution enhancement for acoustic-resolution
//! photoacoustic microscopy volumes.

pub mod config;
pub mod deconv;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod metrics;
pub mod phantom;
pub mod saft;
pub mod spectrum;
pub mod volume;

pub use config::{DeconvConfig, DeconvMethod, SaftConfig, SaftVariant};
pub use error::{Error, Result};
pub use geometry::{AcquisitionGeometry, PsfModel};
pub use phantom::{Absorber, NoiseSpec, SceneSpec};
pub use spectrum::LateralSpectrum;
pub use volume::{map_projection, LateralImage, RfVolume};
