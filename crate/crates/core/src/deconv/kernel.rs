//! Gaussian kernels and zero-padded convolutions.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::geometry::FWHM_PER_SIGMA;

/// Unit-sum sampled Gaussian with radius `round(4 sigma)` pixels.
/// A vanishing `sigma` yields the discrete delta `[1]`.
pub fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).round().max(0.0) as isize;
    if radius == 0 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// `out = x * k` with zero padding and the kernel centred (odd length).
pub fn convolve_same(x: &[f64], k: &[f64], out: &mut [f64]) {
    let n = x.len();
    let r = (k.len() / 2) as isize;
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        let lo = (i as isize - r).max(0);
        let hi = (i as isize + r).min(n as isize - 1);
        for j in lo..=hi {
            // k index for offset i - j
            acc += k[(i as isize - j + r) as usize] * x[j as usize];
        }
        *o = acc;
    }
}

/// Adjoint of [`convolve_same`]: correlation with the same kernel.
pub fn correlate_same(x: &[f64], k: &[f64], out: &mut [f64]) {
    let n = x.len();
    let r = (k.len() / 2) as isize;
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        let lo = (i as isize - r).max(0);
        let hi = (i as isize + r).min(n as isize - 1);
        for j in lo..=hi {
            acc += k[(j - i as isize + r) as usize] * x[j as usize];
        }
        *o = acc;
    }
}

fn reflect(j: isize, n: isize) -> usize {
    let period = 2 * n;
    let m = j.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Convolution with half-sample symmetric extension at both ends.
pub fn convolve_reflect(x: &[f64], k: &[f64], out: &mut [f64]) {
    let n = x.len() as isize;
    let r = (k.len() / 2) as isize;
    for (i, o) in out.iter_mut().enumerate().take(x.len()) {
        let mut acc = 0.0;
        for (t, &kv) in k.iter().enumerate() {
            // offset i - j = t - r
            let j = i as isize - (t as isize - r);
            acc += kv * x[reflect(j, n)];
        }
        *o = acc;
    }
}

/// Adjoint of [`convolve_reflect`].
pub fn convolve_reflect_adjoint(y: &[f64], k: &[f64], out: &mut [f64]) {
    let n = y.len() as isize;
    let r = (k.len() / 2) as isize;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &yi) in y.iter().enumerate() {
        for (t, &kv) in k.iter().enumerate() {
            let j = i as isize - (t as isize - r);
            out[reflect(j, n)] += kv * yi;
        }
    }
}

/// Convolve every lane of `data` along `axis`.
pub fn convolve_axis(data: &Array2<f64>, k: &[f64], axis: usize) -> Array2<f64> {
    map_lanes(data, axis, |x, out| convolve_same(x, k, out))
}

/// Correlate every lane of `data` along `axis`.
pub fn correlate_axis(data: &Array2<f64>, k: &[f64], axis: usize) -> Array2<f64> {
    map_lanes(data, axis, |x, out| correlate_same(x, k, out))
}

pub(crate) fn map_lanes(data: &Array2<f64>, axis: usize, f: impl Fn(&[f64], &mut [f64])) -> Array2<f64> {
    if data.len_of(Axis(axis)) == 0 {
        return data.clone();
    }
    let mut out = Array2::zeros(data.dim());
    let n = data.len_of(Axis(axis));
    let mut buf = vec![0.0; n];
    let mut res = vec![0.0; n];
    for (src, mut dst) in data.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
        for (b, v) in buf.iter_mut().zip(src.iter()) {
            *b = *v;
        }
        f(&buf, &mut res);
        for (d, r) in dst.iter_mut().zip(&res) {
            *d = *r;
        }
    }
    out
}

/// Separable blur with kernels along axis 0 then axis 1.
pub fn separable_blur(data: &Array2<f64>, kx: &[f64], ky: &[f64]) -> Array2<f64> {
    convolve_axis(&convolve_axis(data, kx, 0), ky, 1)
}

/// Adjoint of [`separable_blur`].
pub fn separable_blur_adjoint(data: &Array2<f64>, kx: &[f64], ky: &[f64]) -> Array2<f64> {
    correlate_axis(&correlate_axis(data, ky, 1), kx, 0)
}

/// Gaussian smoothing with per-axis standard deviations in pixels.
pub fn gaussian_smooth(data: &Array2<f64>, sigma_x_px: f64, sigma_y_px: f64) -> Array2<f64> {
    separable_blur(data, &gaussian_kernel(sigma_x_px), &gaussian_kernel(sigma_y_px))
}

/// Nonnegative, unit-sum 1D blur kernel of odd length.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionDictionary {
    kernel: Vec<f64>,
}

impl ConvolutionDictionary {
    pub fn from_kernel(kernel: Vec<f64>) -> Result<Self> {
        if kernel.len() % 2 == 0 {
            return Err(Error::InvalidPsf("kernel length must be odd".into()));
        }
        if kernel.iter().any(|&k| !(k.is_finite() && k >= 0.0)) {
            return Err(Error::InvalidPsf("kernel entries must be finite and nonnegative".into()));
        }
        let sum: f64 = kernel.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPsf(format!("kernel must sum to one, sums to {sum}")));
        }
        Ok(Self { kernel })
    }

    /// Gaussian of the given FWHM sampled at `pitch`.
    pub fn gaussian(fwhm: f64, pitch: f64) -> Result<Self> {
        if !(fwhm > 0.0 && pitch > 0.0) {
            return Err(Error::InvalidPsf("FWHM and pitch must be positive".into()));
        }
        Self::from_kernel(gaussian_kernel(fwhm / FWHM_PER_SIGMA / pitch))
    }

    pub fn delta() -> Self {
        Self { kernel: vec![1.0] }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}
