//! Two-dimensional model-based deconvolution.

use ndarray::Array2;

use super::fista::{fista, FistaOptions, SeparableConvolution2d};
use super::kernel::{gaussian_kernel, gaussian_smooth, separable_blur_adjoint};
use crate::config::DeconvConfig;
use crate::error::Result;
use crate::geometry::{PsfModel, FWHM_PER_SIGMA};
use crate::volume::LateralImage;

/// Gaussian smoothing with a standard deviation in metres.
pub fn smooth(data: &Array2<f64>, sigma: f64, dx: f64, dy: f64) -> Array2<f64> {
    gaussian_smooth(data, sigma / dx, sigma / dy)
}

/// Sparse deconvolution against the separable 2D Gaussian PSF followed by
/// Gaussian smoothing. `cfg.lambda` is taken relative to `max |H^T y|`.
pub fn mb_2d(img: &LateralImage, psf: &PsfModel, cfg: &DeconvConfig) -> Result<LateralImage> {
    psf.validate()?;
    cfg.validate()?;
    let (nx, ny) = img.dims();
    let kx = gaussian_kernel(psf.fwhm_focus / FWHM_PER_SIGMA / img.dx);
    let ky = gaussian_kernel(psf.fwhm_focus / FWHM_PER_SIGMA / img.dy);
    let hty = separable_blur_adjoint(img.pixels(), &kx, &ky);
    let lambda = cfg.lambda * hty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let op = SeparableConvolution2d { kx: &kx, ky: &ky, nx, ny };
    let y: Vec<f64> = img.pixels().iter().copied().collect();
    let opts = FistaOptions {
        lambda,
        max_iterations: cfg.fista_iterations,
        tolerance: cfg.fista_tolerance,
        ..Default::default()
    };
    let x = fista(&op, &y, &opts).x;
    let x = Array2::from_shape_vec((nx, ny), x).expect("shape preserved");
    let out = smooth(&x, cfg.smoothing_sigma_for(psf), img.dx, img.dy);
    LateralImage::from_clamped(out, img.dx, img.dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{extract_profile, fwhm};

    fn blob(centres: &[(f64, f64)], sigma: f64, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            centres
                .iter()
                .map(|&(a, b)| (-((i as f64 - a).powi(2) + (j as f64 - b).powi(2)) / (2.0 * sigma * sigma)).exp())
                .sum()
        })
    }

    #[test]
    fn no_sparsity_and_delta_psf_smooths_only() {
        let px = blob(&[(10.0, 12.0)], 2.0, 25);
        let img = LateralImage::new(px.clone(), 20e-6, 20e-6).unwrap();
        let psf = PsfModel::new(1e-9, 0.44).unwrap();
        let cfg = DeconvConfig { lambda: 0.0, smoothing_sigma: Some(25e-6), ..Default::default() };
        let out = mb_2d(&img, &psf, &cfg).unwrap();
        let expected = smooth(&px, 25e-6, 20e-6, 20e-6);
        for (a, b) in out.pixels().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn narrows_a_blurred_point() {
        let psf = PsfModel::default();
        let sigma = psf.sigma_focus() / 20e-6;
        let img = LateralImage::new(blob(&[(30.0, 30.0)], sigma, 61), 20e-6, 20e-6).unwrap();
        let out = mb_2d(&img, &psf, &DeconvConfig::default()).unwrap();
        let w = |im: &LateralImage| fwhm(&extract_profile(im, (-400e-6, 0.0), (400e-6, 0.0)).unwrap()).unwrap();
        assert!(w(&out) < w(&img));
    }

    #[test]
    fn keeps_two_points_apart() {
        let psf = PsfModel::default();
        let sigma = psf.sigma_focus() / 10e-6;
        // separation of twice the FWHM: 13 px at 10 um pitch
        let img = LateralImage::new(blob(&[(30.0, 23.5), (30.0, 36.5)], sigma, 61), 10e-6, 10e-6).unwrap();
        let out = mb_2d(&img, &psf, &DeconvConfig::default()).unwrap();
        let row: Vec<f64> = (0..61).map(|j| out.pixels()[[30, j]]).collect();
        let maxima = (1..60).filter(|&j| row[j] > row[j - 1] && row[j] >= row[j + 1] && row[j] > 0.1 * out.peak()).count();
        assert_eq!(maxima, 2);
    }
}
