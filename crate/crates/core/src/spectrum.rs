//! Centred 2D/3D discrete Fourier transforms over the lateral plane.
//!
//! Lateral spectra keep the DC bin at index `ceil((n - 1) / 2)` on each
//! lateral axis. The temporal axis of 3D spectra is left unshifted.

use ndarray::{Array2, Array3, ArrayBase, Axis, Data, DataMut, Dimension, RemoveAxis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::volume::LateralImage;

/// Centred index of the DC bin on an axis of length `n`.
pub fn dc_index(n: usize) -> usize {
    n / 2
}

fn fft_axis<S, D>(arr: &mut ArrayBase<S, D>, axis: Axis, inverse: bool, planner: &mut FftPlanner<f64>)
where
    S: DataMut<Elem = Complex64>,
    D: Dimension + RemoveAxis,
{
    let n = arr.len_of(axis);
    if n <= 1 {
        return;
    }
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for mut lane in arr.lanes_mut(axis) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b * scale;
        }
    }
}

/// Circular shift by `shift` positions along `axis`.
fn roll<S, D>(arr: &ArrayBase<S, D>, axis: Axis, shift: usize) -> ndarray::Array<Complex64, D>
where
    S: Data<Elem = Complex64>,
    D: Dimension + RemoveAxis,
{
    let n = arr.len_of(axis);
    let mut out = arr.to_owned();
    if n <= 1 || shift % n == 0 {
        return out;
    }
    for i in 0..n {
        let j = (i + shift) % n;
        out.index_axis_mut(axis, j).assign(&arr.index_axis(axis, i));
    }
    out
}

fn shift_lateral<D>(arr: ndarray::Array<Complex64, D>, forward: bool) -> ndarray::Array<Complex64, D>
where
    D: Dimension + RemoveAxis,
{
    let mut out = arr;
    for ax in 0..2 {
        let n = out.len_of(Axis(ax));
        let s = if forward { n / 2 } else { n - n / 2 };
        out = roll(&out, Axis(ax), s);
    }
    out
}

/// Forward 2D transform of a real lateral grid, DC centred.
pub fn fft2_centered(data: &Array2<f64>) -> Array2<Complex64> {
    let mut planner = FftPlanner::new();
    let mut c = data.mapv(|v| Complex64::new(v, 0.0));
    fft_axis(&mut c, Axis(0), false, &mut planner);
    fft_axis(&mut c, Axis(1), false, &mut planner);
    shift_lateral(c, true)
}

/// Inverse of [`fft2_centered`].
pub fn ifft2_centered(spec: &Array2<Complex64>) -> Array2<Complex64> {
    let mut planner = FftPlanner::new();
    let mut c = shift_lateral(spec.to_owned(), false);
    fft_axis(&mut c, Axis(0), true, &mut planner);
    fft_axis(&mut c, Axis(1), true, &mut planner);
    c
}

/// Forward 3D transform of `[x, y, t]` data, lateral DC centred.
pub fn fft3_centered(data: &Array3<f64>) -> Array3<Complex64> {
    let mut planner = FftPlanner::new();
    let mut c = data.mapv(|v| Complex64::new(v, 0.0));
    for ax in [2, 0, 1] {
        fft_axis(&mut c, Axis(ax), false, &mut planner);
    }
    shift_lateral(c, true)
}

/// Inverse of [`fft3_centered`].
pub fn ifft3_centered(spec: &Array3<Complex64>) -> Array3<Complex64> {
    let mut planner = FftPlanner::new();
    let mut c = shift_lateral(spec.to_owned(), false);
    for ax in [0, 1, 2] {
        fft_axis(&mut c, Axis(ax), true, &mut planner);
    }
    c
}

/// Complex lateral spectrum `K(u, v)` with a centred DC bin.
#[derive(Debug, Clone, PartialEq)]
pub struct LateralSpectrum {
    pub bins: Array2<Complex64>,
}

impl LateralSpectrum {
    pub fn of_grid(data: &Array2<f64>) -> Self {
        Self { bins: fft2_centered(data) }
    }

    pub fn of_image(img: &LateralImage) -> Self {
        Self::of_grid(img.pixels())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bins.dim()
    }

    pub fn dc(&self) -> Complex64 {
        let (nx, ny) = self.dims();
        self.bins[[dc_index(nx), dc_index(ny)]]
    }

    /// Bin-wise product with a real weight grid.
    pub fn weighted(&self, weights: &Array2<f64>) -> Result<Self> {
        if weights.dim() != self.dims() {
            return Err(Error::StackShapeMismatch);
        }
        Ok(Self {
            bins: &self.bins * &weights.mapv(|w| Complex64::new(w, 0.0)),
        })
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self) -> Array2<f64> {
        ifft2_centered(&self.bins).mapv(|c| c.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(nx: usize, ny: usize) -> Array2<f64> {
        Array2::from_shape_fn((nx, ny), |(i, j)| ((i * 7 + j * 13) % 17) as f64 - 3.0 + 0.1 * i as f64)
    }

    #[test]
    fn dc_at_centre_for_odd_and_even() {
        for (nx, ny) in [(5, 4), (8, 7), (1, 3)] {
            let data = Array2::from_elem((nx, ny), 2.0);
            let spec = LateralSpectrum::of_grid(&data);
            let (cx, cy) = (dc_index(nx), dc_index(ny));
            // ceil((n-1)/2)
            assert_eq!(cx, ((nx as f64 - 1.0) / 2.0).ceil() as usize);
            assert!((spec.bins[[cx, cy]].re - 2.0 * (nx * ny) as f64).abs() < 1e-9);
            let off: f64 = spec
                .bins
                .indexed_iter()
                .filter(|((i, j), _)| (*i, *j) != (cx, cy))
                .map(|(_, c)| c.norm())
                .sum();
            assert!(off < 1e-9);
        }
    }

    #[test]
    fn round_trip_2d() {
        for (nx, ny) in [(6, 5), (7, 7), (16, 9)] {
            let data = pattern(nx, ny);
            let back = LateralSpectrum::of_grid(&data).inverse_real();
            let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in data.iter().zip(back.iter()) {
                assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn round_trip_3d() {
        let data = Array3::from_shape_fn((5, 6, 4), |(i, j, k)| (i as f64 - j as f64) * 0.5 + (k * k) as f64);
        let back = ifft3_centered(&fft3_centered(&data));
        for (a, b) in data.iter().zip(back.iter()) {
            assert!((a - b.re).abs() < 1e-9 && b.im.abs() < 1e-9);
        }
    }
}
