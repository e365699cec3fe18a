//! Acquisition geometry and the lateral beam model of a focused transducer.

use crate::error::{Error, Result};

/// Scan and transducer parameters shared by a whole volume.
///
/// Times follow the one-way photoacoustic convention: the sample at index
/// `it` originates from depth `z = c * (t0 + it * dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionGeometry {
    /// Focal length `z_f` in metres.
    pub focal_length: f64,
    pub numerical_aperture: f64,
    /// Speed of sound in m/s.
    pub sound_speed: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
    /// Transducer centre frequency in Hz. Metadata only.
    pub center_frequency: f64,
}

impl Default for AcquisitionGeometry {
    fn default() -> Self {
        let focal_length = 6.7e-3;
        let sound_speed = 1500.0;
        let dt = 4e-9;
        Self {
            focal_length,
            numerical_aperture: 0.44,
            sound_speed,
            dx: 20e-6,
            dy: 20e-6,
            dt,
            // Focal plane lands on sample 16.
            t0: focal_length / sound_speed - 16.0 * dt,
            center_frequency: 50e6,
        }
    }
}

impl AcquisitionGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("focal_length", self.focal_length),
            ("sound_speed", self.sound_speed),
            ("dx", self.dx),
            ("dy", self.dy),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        let na = self.numerical_aperture;
        if !(na > 0.0 && na < 1.0) {
            return Err(Error::InvalidGeometry(format!(
                "numerical aperture must lie in (0, 1), got {na}"
            )));
        }
        if !self.t0.is_finite() || !self.center_frequency.is_finite() {
            return Err(Error::InvalidGeometry("t0 and center frequency must be finite".into()));
        }
        Ok(())
    }

    /// Axial pitch `c * dt`.
    pub fn dz(&self) -> f64 {
        self.sound_speed * self.dt
    }

    /// Depth of a (possibly fractional) sample index.
    pub fn depth_at(&self, index: f64) -> f64 {
        self.sound_speed * (self.t0 + index * self.dt)
    }

    /// Fractional sample index of depth `z`. Out-of-range results are legal.
    pub fn axial_index_of(&self, z: f64) -> f64 {
        (z / self.sound_speed - self.t0) / self.dt
    }

    /// Out-of-focus distance `z - z_f` of a sample index.
    pub fn defocus_at(&self, index: f64) -> f64 {
        self.depth_at(index) - self.focal_length
    }

    /// `tan(asin(NA))`, the slope of the acceptance cone.
    pub fn cone_slope(&self) -> f64 {
        cone_slope(self.numerical_aperture)
    }
}

pub(crate) fn cone_slope(na: f64) -> f64 {
    na / (1.0 - na * na).sqrt()
}

/// Lateral coordinate (metres) of pixel `index` on an axis of `n` samples,
/// with the origin on the grid centre.
pub fn centered_coordinate(index: f64, n: usize, pitch: f64) -> f64 {
    (index - (n as f64 - 1.0) / 2.0) * pitch
}

/// Fractional pixel index of a centred lateral coordinate.
pub fn index_of_coordinate(coord: f64, n: usize, pitch: f64) -> f64 {
    coord / pitch + (n as f64 - 1.0) / 2.0
}

/// Gaussian lateral PSF of a focused transducer with cone-law defocus.
///
/// The half width at half maximum follows `max(fwhm_focus / 2, |z_off| tan(asin NA))`,
/// so the in-focus FWHM equals `fwhm_focus` and the defocused FWHM approaches
/// the cone diameter `2 |z_off| tan(asin NA)`. The lateral amplitude weight is
/// `exp(-2 d^2 / w^2)` with `w` the 1/e^2 beam radius derived from that half width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfModel {
    pub fwhm_focus: f64,
    pub numerical_aperture: f64,
}

impl Default for PsfModel {
    fn default() -> Self {
        Self {
            fwhm_focus: 65e-6,
            numerical_aperture: 0.44,
        }
    }
}

impl PsfModel {
    pub fn new(fwhm_focus: f64, numerical_aperture: f64) -> Result<Self> {
        let psf = Self {
            fwhm_focus,
            numerical_aperture,
        };
        psf.validate()?;
        Ok(psf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_focus.is_finite() && self.fwhm_focus > 0.0) {
            return Err(Error::InvalidPsf(format!(
                "fwhm_focus must be positive, got {}",
                self.fwhm_focus
            )));
        }
        let na = self.numerical_aperture;
        if !(na > 0.0 && na < 1.0) {
            return Err(Error::InvalidPsf(format!(
                "numerical aperture must lie in (0, 1), got {na}"
            )));
        }
        Ok(())
    }

    /// Half width at half maximum of the lateral profile at defocus `z_off`.
    pub fn half_width(&self, z_off: f64) -> f64 {
        (self.fwhm_focus / 2.0).max(z_off.abs() * cone_slope(self.numerical_aperture))
    }

    /// Lateral FWHM at defocus `z_off`.
    pub fn fwhm_at(&self, z_off: f64) -> f64 {
        2.0 * self.half_width(z_off)
    }

    /// 1/e^2 beam radius `w(z_off)`: the weight drops to `e^-2` at this offset.
    pub fn beam_radius(&self, z_off: f64) -> f64 {
        self.half_width(z_off) * (2.0 / std::f64::consts::LN_2).sqrt()
    }

    /// Lateral amplitude weight `exp(-2 d^2 / w(z_off)^2)`.
    pub fn lateral_weight(&self, d: f64, z_off: f64) -> f64 {
        let w = self.beam_radius(z_off);
        (-2.0 * d * d / (w * w)).exp()
    }

    /// Half width of the virtual-detector acceptance cone,
    /// `|z_off| tan(asin NA) + fwhm_focus / 2`.
    pub fn aperture_half_width(&self, z_off: f64) -> f64 {
        z_off.abs() * cone_slope(self.numerical_aperture) + self.fwhm_focus / 2.0
    }

    /// Standard deviation of the in-focus Gaussian PSF.
    pub fn sigma_focus(&self) -> f64 {
        self.fwhm_focus / FWHM_PER_SIGMA
    }
}

/// `2 sqrt(2 ln 2)`, the FWHM of a unit-sigma Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axial_index_examples() {
        let mut g = AcquisitionGeometry::default();
        let c = g.sound_speed;
        assert_eq!(g.axial_index_of(c * g.t0), 0.0);
        let z = c * (g.t0 + 10.0 * g.dt);
        assert!((g.axial_index_of(z) - 10.0).abs() < 1e-9);

        g.t0 = 4.0e-6;
        g.dt = 10e-9;
        // (6.7e-3 / 1500 - 4.0e-6) / 1e-8 = 46.666...
        let idx = g.axial_index_of(6.7e-3);
        assert!((idx - 46.666_666_666_666_67).abs() < 1e-6, "{idx}");
    }

    #[test]
    fn axial_index_inverts_depth() {
        let g = AcquisitionGeometry::default();
        for it in 0..200 {
            let back = g.axial_index_of(g.depth_at(it as f64));
            assert!((back - it as f64).abs() <= 1e-12 * (it as f64).max(1.0), "{it}: {back}");
        }
    }

    #[test]
    fn geometry_validation() {
        let mut g = AcquisitionGeometry::default();
        assert!(g.validate().is_ok());
        g.numerical_aperture = 1.0;
        assert!(g.validate().is_err());
        g.numerical_aperture = 0.44;
        g.dt = 0.0;
        assert!(g.validate().is_err());
        g.dt = 1e-9;
        g.sound_speed = -1.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn beam_law() {
        let psf = PsfModel::default();
        assert_eq!(psf.fwhm_at(0.0), 65e-6);
        let slope = 0.44 / (1.0f64 - 0.44 * 0.44).sqrt();
        assert!((psf.fwhm_at(0.6e-3) - 2.0 * 0.6e-3 * slope).abs() < 1e-15);
        for z in [-1e-3, -2e-4, 0.0, 3e-4, 9e-4] {
            assert_eq!(psf.beam_radius(z), psf.beam_radius(-z));
            assert!(psf.beam_radius(z) >= psf.beam_radius(0.0));
            // the weight at the 1/e^2 radius
            let w = psf.beam_radius(z);
            assert!((psf.lateral_weight(w, z) - (-2.0f64).exp()).abs() < 1e-12);
            // half maximum at the half width
            assert!((psf.lateral_weight(psf.half_width(z), z) - 0.5).abs() < 1e-12);
        }
        assert!(PsfModel::new(0.0, 0.44).is_err());
        assert!(PsfModel::new(65e-6, 1.2).is_err());
    }
}
