//! Richardson-Lucy deconvolution with a Gaussian PSF.

use ndarray::Array2;

use super::kernel::{convolve_reflect, convolve_reflect_adjoint, gaussian_kernel, map_lanes};
use crate::error::{Error, Result};
use crate::geometry::{PsfModel, FWHM_PER_SIGMA};
use crate::volume::LateralImage;

/// `O <- O * P^T (I / (P O))`, starting from `O = I`, with a 2D Gaussian PSF
/// of FWHM `psf.fwhm_focus`. Denominators are floored at `1e-12 * peak`.
/// Borders use symmetric extension, so constants are fixed points and the
/// total flux is conserved.
pub fn richardson_lucy(img: &LateralImage, psf: &PsfModel, iterations: usize) -> Result<LateralImage> {
    psf.validate()?;
    if iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    let kx = gaussian_kernel(psf.fwhm_focus / FWHM_PER_SIGMA / img.dx);
    let ky = gaussian_kernel(psf.fwhm_focus / FWHM_PER_SIGMA / img.dy);
    let out = rl_separable(img.pixels(), &kx, &ky, iterations)?;
    LateralImage::new(out, img.dx, img.dy)
}

pub(crate) fn rl_separable(data: &Array2<f64>, kx: &[f64], ky: &[f64], iterations: usize) -> Result<Array2<f64>> {
    if data.iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput);
    }
    let peak = data.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return Ok(data.clone());
    }
    let eps = 1e-12 * peak;
    let mut est = data.clone();
    for _ in 0..iterations {
        let blurred = blur(&est, kx, ky, false);
        let mut ratio = data.clone();
        ratio.zip_mut_with(&blurred, |r, &b| *r /= guarded(*r, b, eps));
        let corr = blur(&ratio, kx, ky, true);
        est.zip_mut_with(&corr, |e, &c| *e *= c);
    }
    Ok(est)
}

fn blur(data: &Array2<f64>, kx: &[f64], ky: &[f64], adjoint: bool) -> Array2<f64> {
    let pass = |d: &Array2<f64>, k: &[f64], axis: usize| {
        if adjoint {
            map_lanes(d, axis, |x, o| convolve_reflect_adjoint(x, k, o))
        } else {
            map_lanes(d, axis, |x, o| convolve_reflect(x, k, o))
        }
    };
    if adjoint {
        pass(&pass(data, ky, 1), kx, 0)
    } else {
        pass(&pass(data, kx, 0), ky, 1)
    }
}

/// Denominator of the update ratio. Small denominators are floored at `eps`
/// unless they already bound the data, which keeps exact fixed points exact.
fn guarded(data: f64, blurred: f64, eps: f64) -> f64 {
    if blurred > 0.0 && blurred >= data {
        blurred
    } else {
        blurred.max(eps)
    }
}

/// One-dimensional Richardson-Lucy with an explicit kernel.
pub fn richardson_lucy_1d(y: &[f64], kernel: &[f64], iterations: usize) -> Result<Vec<f64>> {
    if y.iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput);
    }
    let peak = y.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return Ok(y.to_vec());
    }
    let eps = 1e-12 * peak;
    let n = y.len();
    let mut est = y.to_vec();
    let mut blurred = vec![0.0; n];
    let mut ratio = vec![0.0; n];
    let mut corr = vec![0.0; n];
    for _ in 0..iterations {
        convolve_reflect(&est, kernel, &mut blurred);
        for ((r, &v), &b) in ratio.iter_mut().zip(y).zip(&blurred) {
            *r = v / guarded(v, b, eps);
        }
        convolve_reflect_adjoint(&ratio, kernel, &mut corr);
        est.iter_mut().zip(&corr).for_each(|(e, c)| *e *= c);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{extract_profile, fwhm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn delta_psf() -> PsfModel {
        PsfModel::new(1e-9, 0.44).unwrap()
    }

    #[test]
    fn delta_psf_is_exact_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let px = Array2::from_shape_fn((12, 9), |_| rng.random_range(0.0..1.0));
        let img = LateralImage::new(px, 20e-6, 20e-6).unwrap();
        assert_eq!(richardson_lucy(&img, &delta_psf(), 1).unwrap(), img);
    }

    #[test]
    fn constant_image_fixed_point() {
        let img = LateralImage::new(Array2::from_elem((40, 33), 2.0), 20e-6, 20e-6).unwrap();
        let out = richardson_lucy(&img, &PsfModel::default(), 10).unwrap();
        assert!(out.pixels().iter().all(|v| (v - 2.0).abs() < 1e-9));
    }

    #[test]
    fn sharpens_blurred_point() {
        let sigma = 6.0 / FWHM_PER_SIGMA;
        let px = Array2::from_shape_fn((61, 61), |(i, j)| {
            let r2 = (i as f64 - 30.0).powi(2) + (j as f64 - 30.0).powi(2);
            (-r2 / (2.0 * sigma * sigma)).exp()
        });
        let img = LateralImage::new(px, 1.0, 1.0).unwrap();
        let psf = PsfModel::new(6.0 * 0.7, 0.44).unwrap();
        let out = richardson_lucy(&img, &psf, 15).unwrap();
        let before = fwhm(&extract_profile(&img, (-20.0, 0.0), (20.0, 0.0)).unwrap()).unwrap();
        let after = fwhm(&extract_profile(&out, (-20.0, 0.0), (20.0, 0.0)).unwrap()).unwrap();
        assert!((before - 6.0).abs() < 0.1);
        assert!(after < 6.0 && after >= 1.0, "{after}");
    }

    #[test]
    fn nonnegative_and_flux_conserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let px = Array2::from_shape_fn((40, 40), |(i, j)| {
                if (10..30).contains(&i) && (10..30).contains(&j) {
                    rng.random_range(0.0..1.0)
                } else {
                    0.0
                }
            });
            let img = LateralImage::new(px, 20e-6, 20e-6).unwrap();
            let out = richardson_lucy(&img, &PsfModel::default(), 15).unwrap();
            assert!(out.pixels().iter().all(|&v| v >= 0.0));
            assert!((out.sum() / img.sum() - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn rejects_negative_data() {
        assert_eq!(richardson_lucy_1d(&[1.0, -0.5], &[1.0], 1), Err(Error::NegativeInput));
        let px = Array2::from_elem((2, 2), -1.0);
        assert_eq!(rl_separable(&px, &[1.0], &[1.0], 1), Err(Error::NegativeInput));
    }
}
