//! One-dimensional deconvolution along the time axis.

use ndarray::{Array3, Axis};
use rayon::prelude::*;

use super::fista::{fista, operator_norm, Convolution1d, FistaOptions};
use super::kernel::{convolve_same, correlate_same, gaussian_kernel, ConvolutionDictionary};
use super::rl::richardson_lucy_1d;
use crate::error::{Error, Result};
use crate::geometry::FWHM_PER_SIGMA;
use crate::volume::RfVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxialMethod {
    RichardsonLucy,
    Mb,
}

impl std::str::FromStr for AxialMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rl" => Ok(AxialMethod::RichardsonLucy),
            "mb" => Ok(AxialMethod::Mb),
            other => Err(Error::InvalidConfig(format!("invalid axial method '{other}'"))),
        }
    }
}

/// Default axial FWHM of the Gaussian surrogate for the axial PSF, metres.
pub const DEFAULT_AXIAL_FWHM: f64 = 35e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialParams {
    pub method: AxialMethod,
    /// Axial PSF FWHM in metres, converted to samples through `c dt`.
    pub fwhm: f64,
    /// Richardson-Lucy iterations.
    pub iterations: usize,
    /// Sparsity weight relative to `max |H^T y|` over the volume.
    pub lambda: f64,
    pub fista_iterations: usize,
    /// Smoothing after the sparse solve, metres. `None` uses `fwhm / 6`.
    pub smoothing_sigma: Option<f64>,
}

impl Default for AxialParams {
    fn default() -> Self {
        Self {
            method: AxialMethod::RichardsonLucy,
            fwhm: DEFAULT_AXIAL_FWHM,
            iterations: 15,
            lambda: 0.1,
            fista_iterations: 300,
            smoothing_sigma: None,
        }
    }
}

/// Runs the selected 1D solver on every A-line. The sparse solver keeps
/// the sign of bipolar data and projects onto `x >= 0` for nonnegative data.
pub fn apply_axial_deconvolution(vol: &RfVolume, params: &AxialParams) -> Result<RfVolume> {
    if !(params.fwhm > 0.0) || params.iterations == 0 || !(params.lambda >= 0.0) {
        return Err(Error::InvalidConfig("axial parameters out of range".into()));
    }
    let dz = vol.geometry.dz();
    let kernel = gaussian_kernel(params.fwhm / FWHM_PER_SIGMA / dz);
    let samples = vol.samples();
    let (_, _, nt) = vol.dims();
    let mut out = Array3::zeros(vol.dims());
    match params.method {
        AxialMethod::RichardsonLucy => {
            if samples.iter().any(|&v| v < 0.0) {
                return Err(Error::NegativeInput);
            }
            let lines: Vec<Vec<f64>> = samples
                .lanes(Axis(2))
                .into_iter()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|l| richardson_lucy_1d(&l.to_vec(), &kernel, params.iterations))
                .collect::<Result<_>>()?;
            write_lines(&mut out, &lines);
        }
        AxialMethod::Mb => {
            let nonnegative = samples.iter().all(|&v| v >= 0.0);
            let mut scratch = vec![0.0; nt];
            let mut max_hty = 0.0f64;
            for l in samples.lanes(Axis(2)) {
                correlate_same(&l.to_vec(), &kernel, &mut scratch);
                max_hty = scratch.iter().fold(max_hty, |m, v| m.max(v.abs()));
            }
            let dict = ConvolutionDictionary::from_kernel(kernel.clone())?;
            let op = Convolution1d::new(&dict, nt);
            let opts = FistaOptions {
                lambda: params.lambda * max_hty,
                max_iterations: params.fista_iterations,
                nonnegative,
                lipschitz: Some(operator_norm(&op).powi(2)),
                ..Default::default()
            };
            let smooth = gaussian_kernel(params.smoothing_sigma.unwrap_or(params.fwhm / 6.0) / dz);
            let lines: Vec<Vec<f64>> = samples
                .lanes(Axis(2))
                .into_iter()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|l| {
                    let x = fista(&op, &l.to_vec(), &opts).x;
                    let mut s = vec![0.0; nt];
                    convolve_same(&x, &smooth, &mut s);
                    s
                })
                .collect();
            write_lines(&mut out, &lines);
        }
    }
    vol.with_samples(out)
}

fn write_lines(out: &mut Array3<f64>, lines: &[Vec<f64>]) {
    for (mut lane, line) in out.lanes_mut(Axis(2)).into_iter().zip(lines) {
        for (d, v) in lane.iter_mut().zip(line) {
            *d = *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AcquisitionGeometry;
    use crate::metrics::{fwhm, Profile1D};

    fn plane_volume(sigma_px: f64) -> RfVolume {
        let s = Array3::from_shape_fn((3, 2, 60), |(_, _, k)| (-(k as f64 - 30.0).powi(2) / (2.0 * sigma_px * sigma_px)).exp());
        RfVolume::new(AcquisitionGeometry::default(), s).unwrap()
    }

    #[test]
    fn delta_kernel_identities() {
        let vol = plane_volume(3.0);
        let rl = AxialParams { fwhm: 1e-9, iterations: 1, ..Default::default() };
        assert_eq!(apply_axial_deconvolution(&vol, &rl).unwrap(), vol);
        let mb = AxialParams { method: AxialMethod::Mb, fwhm: 1e-9, lambda: 0.0, ..Default::default() };
        let out = apply_axial_deconvolution(&vol, &mb).unwrap();
        for (a, b) in out.samples().iter().zip(vol.samples().iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn sharpens_axially() {
        let dz = AcquisitionGeometry::default().dz();
        let sigma_px = DEFAULT_AXIAL_FWHM / FWHM_PER_SIGMA / dz;
        let vol = plane_volume(sigma_px);
        let width = |v: &RfVolume| {
            let line = v.samples().lanes(Axis(2)).into_iter().next().unwrap().to_vec();
            let positions = (0..line.len()).map(|k| k as f64 * dz).collect();
            fwhm(&Profile1D::new(positions, line).unwrap()).unwrap()
        };
        let before = width(&vol);
        for method in [AxialMethod::RichardsonLucy, AxialMethod::Mb] {
            let out = apply_axial_deconvolution(&vol, &AxialParams { method, ..Default::default() }).unwrap();
            assert!(width(&out) < before, "{method:?}");
        }
    }

    #[test]
    fn rl_rejects_bipolar_data() {
        let s = Array3::from_shape_fn((1, 1, 4), |(_, _, k)| k as f64 - 1.0);
        let vol = RfVolume::new(AcquisitionGeometry::default(), s).unwrap();
        assert_eq!(apply_axial_deconvolution(&vol, &AxialParams::default()), Err(Error::NegativeInput));
    }
}
