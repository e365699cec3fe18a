//! Directional model-based deconvolution.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;

use super::axial::{apply_axial_deconvolution, AxialParams};
use super::fista::{fista, operator_norm, Convolution1d, FistaOptions};
use super::kernel::{correlate_axis, gaussian_kernel, ConvolutionDictionary};
use super::mb::smooth;
use crate::config::DeconvConfig;
use crate::error::Result;
use crate::geometry::{PsfModel, FWHM_PER_SIGMA};
use crate::interp::{resize, DirectionalFrame};
use crate::saft::build_windows;
use crate::spectrum::LateralSpectrum;
use crate::volume::{LateralImage, RfVolume};

/// Two complementary directional parts of an image. `parts[n]` holds the
/// wavenumbers around direction `angles[n]`; the parts are signed and sum to
/// the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalComponents {
    pub angles: [f64; 2],
    pub parts: [Array2<f64>; 2],
}

/// Split an image with two perpendicular angular windows rotated by `phase`.
pub fn directional_decompose(img: &LateralImage, phase: f64) -> DirectionalComponents {
    decompose_grid(img.pixels(), phase)
}

fn decompose_grid(data: &Array2<f64>, phase: f64) -> DirectionalComponents {
    let windows = build_windows(data.dim(), 2, phase);
    let spec = LateralSpectrum::of_grid(data);
    let part = |n: usize| {
        spec.weighted(&windows.windows[n])
            .expect("window matches spectrum")
            .inverse_real()
    };
    DirectionalComponents {
        angles: [windows.pass_angle(0), windows.pass_angle(1)],
        parts: [part(0), part(1)],
    }
}

/// Result of a deconvolution run with optional pre-scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledOutput {
    /// Output at the reduced scale, present when pre-scaling was applied.
    pub reduced: Option<LateralImage>,
    /// Output at the input scale.
    pub full: LateralImage,
}

/// Directional deconvolution: for each phase `phi_m = m pi / (2M)` the image
/// is split into two perpendicular parts, each part is deconvolved with the
/// 1D PSF along its wavenumber direction, smoothed, and the `2M` results are
/// summed and divided by `M`.
pub fn dmb_deconvolve(img: &LateralImage, psf: &PsfModel, cfg: &DeconvConfig) -> Result<LateralImage> {
    Ok(dmb_deconvolve_scaled(img, psf, cfg)?.full)
}

/// As [`dmb_deconvolve`], also returning the reduced-scale output when
/// `cfg.prescale < 1`. The image is shrunk bilinearly while the PSF keeps
/// its size in pixels, so features shrink relative to the PSF; the result is
/// scaled back afterwards.
pub fn dmb_deconvolve_scaled(img: &LateralImage, psf: &PsfModel, cfg: &DeconvConfig) -> Result<ScaledOutput> {
    psf.validate()?;
    cfg.validate()?;
    let (nx, ny) = img.dims();
    if cfg.prescale >= 1.0 {
        let out = dmb_grid(img.pixels(), img.dx, img.dy, psf, cfg);
        return Ok(ScaledOutput {
            reduced: None,
            full: LateralImage::from_clamped(out, img.dx, img.dy)?,
        });
    }
    let small_dims = (
        ((nx as f64 * cfg.prescale).round() as usize).max(1),
        ((ny as f64 * cfg.prescale).round() as usize).max(1),
    );
    let small = resize(img.pixels(), small_dims);
    let out = dmb_grid(&small, img.dx, img.dy, psf, cfg);
    let full = resize(&out, (nx, ny));
    Ok(ScaledOutput {
        reduced: Some(LateralImage::from_clamped(out, img.dx, img.dy)?),
        full: LateralImage::from_clamped(full, img.dx, img.dy)?,
    })
}

fn dmb_grid(data: &Array2<f64>, dx: f64, dy: f64, psf: &PsfModel, cfg: &DeconvConfig) -> Array2<f64> {
    let sigma = psf.fwhm_focus / FWHM_PER_SIGMA;
    // one sparsity weight for every branch
    let hty = correlate_axis(data, &gaussian_kernel(sigma / dx), 0);
    let lambda = cfg.lambda * hty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let phases = cfg.phases();
    let decompositions: Vec<DirectionalComponents> =
        phases.par_iter().map(|&phi| decompose_grid(data, phi)).collect();
    let branches: Vec<(usize, usize)> = (0..phases.len()).flat_map(|m| [(m, 0), (m, 1)]).collect();
    let results: Vec<Array2<f64>> = branches
        .par_iter()
        .map(|&(m, n)| {
            let comp = &decompositions[m];
            let restored = deconvolve_along(&comp.parts[n], comp.angles[n], dx, dy, sigma, lambda, cfg);
            smooth(&restored, cfg.smoothing_sigma_for(psf), dx, dy)
        })
        .collect();
    let mut total = Array2::zeros(data.dim());
    for r in &results {
        total += r;
    }
    total / phases.len() as f64
}

/// 1D sparse deconvolution of every line of `data` running along `angle`.
fn deconvolve_along(
    data: &Array2<f64>,
    angle: f64,
    dx: f64,
    dy: f64,
    sigma: f64,
    lambda: f64,
    cfg: &DeconvConfig,
) -> Array2<f64> {
    let frame = DirectionalFrame::new(angle, data.dim());
    let canvas = frame.to_canvas(data);
    let pitch = (dx * angle.cos()).hypot(dy * angle.sin());
    let dict = ConvolutionDictionary::from_kernel(gaussian_kernel(sigma / pitch)).expect("gaussian kernel");
    let len = canvas.len_of(Axis(0));
    let op = Convolution1d::new(&dict, len);
    let opts = FistaOptions {
        lambda,
        max_iterations: cfg.fista_iterations,
        tolerance: cfg.fista_tolerance,
        nonnegative: true,
        lipschitz: Some(operator_norm(&op).powi(2)),
    };
    let mut out = Array2::zeros(canvas.dim());
    let mut y = vec![0.0; len];
    for (src, mut dst) in canvas.lanes(Axis(0)).into_iter().zip(out.lanes_mut(Axis(0))) {
        if src.iter().all(|&v| v <= 0.0) {
            continue;
        }
        for (a, b) in y.iter_mut().zip(src.iter()) {
            *a = *b;
        }
        let x = fista(&op, &y, &opts).x;
        for (d, v) in dst.iter_mut().zip(x) {
            *d = v;
        }
    }
    frame.from_canvas(&out)
}

/// Directional deconvolution of every rectified lateral slice, optionally
/// followed by an axial pass. The output holds nonnegative amplitudes.
pub fn dmb_slicewise_3d(
    vol: &RfVolume,
    psf: &PsfModel,
    cfg: &DeconvConfig,
    axial: Option<&AxialParams>,
) -> Result<RfVolume> {
    let (nx, ny, nt) = vol.dims();
    let g = vol.geometry;
    let slices = (0..nt)
        .into_par_iter()
        .map(|it| {
            let slice = vol.slice_at(it).mapv(f64::abs);
            dmb_deconvolve(&LateralImage::new(slice, g.dx, g.dy)?, psf, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Array3::zeros((nx, ny, nt));
    for (it, s) in slices.iter().enumerate() {
        out.index_axis_mut(Axis(2), it).assign(s.pixels());
    }
    let lateral = RfVolume::new(g, out)?;
    match axial {
        Some(p) => apply_axial_deconvolution(&lateral, p),
        None => Ok(lateral),
    }
}
