//! Resolution-enhancing deconvolution of lateral images and volumes.

mod axial;
mod dmb;
mod fista;
mod kernel;
mod mb;
mod rl;

pub use axial::{apply_axial_deconvolution, AxialMethod, AxialParams, DEFAULT_AXIAL_FWHM};
pub use dmb::{
    directional_decompose, dmb_deconvolve, dmb_deconvolve_scaled, dmb_slicewise_3d, DirectionalComponents,
    ScaledOutput,
};
pub use fista::{
    fista, fista_l1, objective, operator_norm, smooth_gradient, Convolution1d, FistaOptions, FistaResult, Identity,
    LinearOperator, SeparableConvolution2d,
};
pub use kernel::{
    convolve_axis, convolve_same, correlate_axis, correlate_same, gaussian_kernel, gaussian_smooth, ConvolutionDictionary,
};
pub use mb::{mb_2d, smooth};
pub use rl::{richardson_lucy, richardson_lucy_1d};

use crate::config::{DeconvConfig, DeconvMethod};
use crate::error::Result;
use crate::geometry::PsfModel;
use crate::volume::LateralImage;

/// Deconvolve a lateral image with the method selected in `cfg`.
pub fn deconvolve(img: &LateralImage, psf: &PsfModel, cfg: &DeconvConfig) -> Result<ScaledOutput> {
    match cfg.method {
        DeconvMethod::RichardsonLucy => Ok(ScaledOutput {
            reduced: None,
            full: richardson_lucy(img, psf, cfg.iterations)?,
        }),
        DeconvMethod::Mb2d => Ok(ScaledOutput { reduced: None, full: mb_2d(img, psf, cfg)? }),
        DeconvMethod::Dmb => dmb_deconvolve_scaled(img, psf, cfg),
    }
}
