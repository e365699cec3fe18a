//! Sampled volumes and lateral images.

use std::ops::Range;

use ndarray::{Array2, Array3, Axis, Zip};

use crate::error::{Error, Result};
use crate::geometry::{centered_coordinate, AcquisitionGeometry};

/// Pressure samples over `(x, y, t)`, addressed `[ix, iy, it]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfVolume {
    pub geometry: AcquisitionGeometry,
    samples: Array3<f64>,
}

impl RfVolume {
    pub fn new(geometry: AcquisitionGeometry, samples: Array3<f64>) -> Result<Self> {
        geometry.validate()?;
        if samples.is_empty() {
            return Err(Error::InvalidData("volume has no samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("volume contains non-finite samples".into()));
        }
        Ok(Self { geometry, samples })
    }

    pub fn zeros(geometry: AcquisitionGeometry, dims: (usize, usize, usize)) -> Result<Self> {
        Self::new(geometry, Array3::zeros(dims))
    }

    /// `(nx, ny, nt)`
    pub fn dims(&self) -> (usize, usize, usize) {
        self.samples.dim()
    }

    pub fn samples(&self) -> &Array3<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array3<f64> {
        self.samples
    }

    /// Replace the samples keeping the geometry; used by processing stages
    /// whose output is finite by construction.
    pub(crate) fn with_samples(&self, samples: Array3<f64>) -> Result<Self> {
        Self::new(self.geometry, samples)
    }

    /// Largest absolute sample.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Lateral slice at time index `it`.
    pub fn slice_at(&self, it: usize) -> Array2<f64> {
        self.samples.index_axis(Axis(2), it).to_owned()
    }
}

/// Nonnegative lateral amplitude image, addressed `[ix, iy]`.
///
/// When displayed, `ix` runs down the rows and `iy` across the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LateralImage {
    pub dx: f64,
    pub dy: f64,
    pixels: Array2<f64>,
}

impl LateralImage {
    pub fn new(pixels: Array2<f64>, dx: f64, dy: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(Error::InvalidData(format!("pixel pitch must be positive, got {dx} x {dy}")));
        }
        if pixels.is_empty() {
            return Err(Error::InvalidData("image has no pixels".into()));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("image contains non-finite pixels".into()));
        }
        if pixels.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeInput);
        }
        Ok(Self { dx, dy, pixels })
    }

    /// Build from signed data, clamping negative values to zero.
    pub fn from_clamped(mut pixels: Array2<f64>, dx: f64, dy: f64) -> Result<Self> {
        pixels.mapv_inplace(|v| v.max(0.0));
        Self::new(pixels, dx, dy)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }

    pub fn peak(&self) -> f64 {
        self.pixels.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    pub fn sum(&self) -> f64 {
        self.pixels.sum()
    }

    /// Centred physical coordinate `(x, y)` of a pixel.
    pub fn coordinate(&self, ix: f64, iy: f64) -> (f64, f64) {
        let (nx, ny) = self.dims();
        (centered_coordinate(ix, nx, self.dx), centered_coordinate(iy, ny, self.dy))
    }

    /// Copy scaled so the peak equals one. An all-zero image is returned unchanged.
    pub fn normalized(&self) -> LateralImage {
        let peak = self.peak();
        if peak == 0.0 {
            return self.clone();
        }
        LateralImage {
            dx: self.dx,
            dy: self.dy,
            pixels: self.pixels.mapv(|v| v / peak),
        }
    }
}

/// Maximum amplitude projection along `t` of the rectified samples.
///
/// `t_range` restricts the projection window; `None` projects the full record.
pub fn map_projection(vol: &RfVolume, t_range: Option<Range<usize>>) -> Result<LateralImage> {
    let (_, _, nt) = vol.dims();
    let range = t_range.unwrap_or(0..nt);
    if range.start >= range.end {
        return Err(Error::EmptyProjectionWindow);
    }
    if range.end > nt {
        return Err(Error::InvalidData(format!(
            "projection window {}..{} exceeds {nt} samples",
            range.start, range.end
        )));
    }
    let window = vol.samples.slice(ndarray::s![.., .., range]);
    let mut out = Array2::zeros((window.dim().0, window.dim().1));
    Zip::from(&mut out)
        .and(window.lanes(Axis(2)))
        .for_each(|o, line| *o = line.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    LateralImage::new(out, vol.geometry.dx, vol.geometry.dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn geom() -> AcquisitionGeometry {
        AcquisitionGeometry::default()
    }

    #[test]
    fn map_single_sample() {
        let mut s = Array3::zeros((4, 3, 5));
        s[[2, 1, 3]] = 0.7;
        let img = map_projection(&RfVolume::new(geom(), s).unwrap(), None).unwrap();
        let mut expected = Array2::zeros((4, 3));
        expected[[2, 1]] = 0.7;
        assert_eq!(img.pixels(), &expected);
    }

    #[test]
    fn map_rectifies() {
        let s = Array3::from_elem((3, 2, 4), -1.5);
        let img = map_projection(&RfVolume::new(geom(), s).unwrap(), None).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn map_two_columns() {
        let s = Array3::from_shape_vec((2, 1, 3), vec![1.0, 5.0, 2.0, -7.0, 0.0, 3.0]).unwrap();
        let img = map_projection(&RfVolume::new(geom(), s).unwrap(), None).unwrap();
        assert_eq!(img.pixels(), &array![[5.0], [7.0]]);
    }

    #[test]
    fn map_window() {
        let s = Array3::from_shape_vec((1, 1, 4), vec![9.0, 1.0, 2.0, 9.0]).unwrap();
        let vol = RfVolume::new(geom(), s).unwrap();
        assert_eq!(map_projection(&vol, Some(1..3)).unwrap().pixels()[[0, 0]], 2.0);
        assert_eq!(map_projection(&vol, Some(2..2)), Err(Error::EmptyProjectionWindow));
        assert!(map_projection(&vol, Some(2..9)).is_err());
    }

    #[test]
    fn constructors_check_invariants() {
        assert!(RfVolume::new(geom(), Array3::from_elem((1, 1, 1), f64::NAN)).is_err());
        assert!(LateralImage::new(array![[1.0, -0.1]], 1.0, 1.0).is_err());
        assert!(LateralImage::new(array![[1.0]], 0.0, 1.0).is_err());
        let img = LateralImage::from_clamped(array![[1.0, -0.1]], 1.0, 1.0).unwrap();
        assert_eq!(img.pixels(), &array![[1.0, 0.0]]);
    }

    #[test]
    fn map_invariant_under_time_permutation() {
        let mut s = Array3::zeros((3, 3, 6));
        for (i, v) in s.iter_mut().enumerate() {
            *v = ((i * 37 % 11) as f64 - 5.0) * 0.3;
        }
        let vol = RfVolume::new(geom(), s.clone()).unwrap();
        let mut rev = s.clone();
        rev.invert_axis(Axis(2));
        let vol_rev = RfVolume::new(geom(), rev.to_owned()).unwrap();
        assert_eq!(map_projection(&vol, None), map_projection(&vol_rev, None));
    }
}
