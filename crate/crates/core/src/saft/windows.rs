//! Angular k-space windows for directional merging and decomposition.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::config::direction_angles;
use crate::spectrum::dc_index;

/// One window per direction over the centred `(u, v)` wavenumber grid.
///
/// Window `n` passes wavenumbers pointing along `angles[n] + phase`
/// (measured from the `u` axis towards `v`) with a `cos^2` angular taper.
/// The windows sum to one at every bin and each equals `1/N'` at DC.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularWindowSet {
    pub angles: Vec<f64>,
    pub phase: f64,
    pub windows: Vec<Array2<f64>>,
}

impl AngularWindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.windows[0].dim()
    }

    /// Wavenumber direction passed by window `n`.
    pub fn pass_angle(&self, n: usize) -> f64 {
        self.angles[n] + self.phase
    }
}

/// Windows for `n_directions` evenly spaced angles `n * pi / N'`.
pub fn build_windows(dims: (usize, usize), n_directions: usize, phase: f64) -> AngularWindowSet {
    windows_for_angles(dims, &direction_angles(n_directions.max(1)), phase)
}

/// Windows for an explicit angle list; the taper width is set by its length.
pub fn windows_for_angles(dims: (usize, usize), angles: &[f64], phase: f64) -> AngularWindowSet {
    let n = angles.len().max(1);
    let nf = n as f64;
    let (nx, ny) = dims;
    let (cu, cv) = (dc_index(nx), dc_index(ny));
    let mut windows = vec![Array2::zeros(dims); angles.len()];
    let mut raw = vec![0.0; angles.len()];
    for iu in 0..nx {
        for iv in 0..ny {
            if iu == cu && iv == cv {
                for w in windows.iter_mut() {
                    w[[iu, iv]] = 1.0 / nf;
                }
                continue;
            }
            let du = iu as f64 - cu as f64;
            let dv = iv as f64 - cv as f64;
            // atan of the index ratio; dv == 0 yields +-pi/2
            let delta = (du / dv).atan();
            let mut total = 0.0;
            for (r, &theta) in raw.iter_mut().zip(angles) {
                let bar = (theta + delta).rem_euclid(PI) - PI / 2.0 + phase;
                *r = if bar.abs() <= PI / nf {
                    (bar * nf / 2.0).cos().powi(2)
                } else {
                    0.0
                };
                total += *r;
            }
            for (w, r) in windows.iter_mut().zip(&raw) {
                w[[iu, iv]] = if total > 0.0 { r / total } else { 1.0 / nf };
            }
        }
    }
    AngularWindowSet {
        angles: angles.to_vec(),
        phase,
        windows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_partition(set: &AngularWindowSet) {
        let (nx, ny) = set.dims();
        for iu in 0..nx {
            for iv in 0..ny {
                let s: f64 = set.windows.iter().map(|w| w[[iu, iv]]).sum();
                assert!((s - 1.0).abs() <= 1e-9, "sum {s} at ({iu},{iv})");
                for w in &set.windows {
                    assert!((0.0..=1.0).contains(&w[[iu, iv]]));
                }
            }
        }
    }

    #[test]
    fn single_direction_passes_everything() {
        let set = build_windows((9, 8), 1, 0.0);
        assert!(set.windows[0].iter().all(|&w| w == 1.0));
    }

    #[test]
    fn partition_and_dc() {
        for n in [1, 2, 3, 4, 16] {
            for phase in [0.0, 0.3] {
                let set = build_windows((12, 11), n, phase);
                assert_partition(&set);
                for w in &set.windows {
                    assert_eq!(w[[6, 5]], 1.0 / n as f64);
                }
            }
        }
    }

    #[test]
    fn two_windows_at_a_hand_evaluated_bin() {
        // Bin on the u axis: delta = atan(du / 0) = pi/2, so theta_bar_0 = 0.
        let set = build_windows((9, 9), 2, 0.0);
        let (w0, w1) = (set.windows[0][[7, 4]], set.windows[1][[7, 4]]);
        assert_eq!(w0, 1.0);
        assert!(w1 <= 1e-15);
        // Bin on the v axis belongs to the second window.
        assert_eq!(set.windows[1][[4, 7]], 1.0);
        // Diagonal bins split evenly.
        assert!((set.windows[0][[6, 6]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phase_rotates_pass_direction() {
        let set = build_windows((33, 33), 2, PI / 4.0);
        // wavenumber along 45 degrees from u towards v
        assert!((set.windows[0][[16 + 5, 16 + 5]] - 1.0).abs() < 1e-12);
        assert!((set.windows[1][[16 - 5, 16 + 5]] - 1.0).abs() < 1e-12);
        assert!((set.pass_angle(1) - 3.0 * PI / 4.0).abs() < 1e-15);
    }
}
