//! Directional 1D synthetic aperture focusing.

use ndarray::{Array3, Axis};
use rayon::prelude::*;

use super::delay::{coherence_from_sums, sir_weight, vpd_delay};
use crate::config::SaftConfig;
use crate::error::Result;
use crate::geometry::PsfModel;
use crate::volume::RfVolume;

struct Tap {
    shift: f64,
    weight: f64,
}

/// Per-depth tables of delay (in samples) and weight for each aperture step.
struct ApertureTable {
    max_step: usize,
    /// `taps[it][k + max_step]`, `None` outside the cone.
    taps: Vec<Vec<Option<Tap>>>,
}

fn aperture_table(vol: &RfVolume, step_len: f64, psf: &PsfModel, use_sir: bool) -> ApertureTable {
    let g = &vol.geometry;
    let (_, _, nt) = vol.dims();
    let max_half = (0..nt)
        .map(|it| psf.aperture_half_width(g.defocus_at(it as f64)))
        .fold(0.0f64, f64::max);
    let max_step = (max_half / step_len).floor() as usize;
    let taps = (0..nt)
        .map(|it| {
            let z = g.depth_at(it as f64);
            let z_off = z - g.focal_length;
            let half = psf.aperture_half_width(z_off);
            (-(max_step as isize)..=max_step as isize)
                .map(|k| {
                    let offset = k as f64 * step_len;
                    if offset.abs() > half {
                        return None;
                    }
                    let weight = if use_sir { sir_weight(offset, z_off, psf) } else { 1.0 };
                    Some(Tap {
                        shift: vpd_delay(offset, z, g) / g.dt,
                        weight,
                    })
                })
                .collect()
        })
        .collect();
    ApertureTable { max_step, taps }
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

/// Linear interpolation of an A-line at fractional index `f`, zero outside.
#[inline]
fn sample_at(line: &[f64], f: f64) -> f64 {
    let n = line.len();
    if !(f >= 0.0) || f > (n - 1) as f64 {
        return 0.0;
    }
    let i = f.floor() as usize;
    let a = f - i as f64;
    if a == 0.0 || i + 1 >= n {
        line[i]
    } else {
        line[i] * (1.0 - a) + line[i + 1] * a
    }
}

/// Delay-and-sum along the lateral direction `theta` (radians from the `ix`
/// axis towards `iy`), with SIR weighting and coherence-factor scaling as
/// configured.
///
/// Neighbours are taken at unit pixel steps along the direction and
/// interpolated bilinearly between A-lines; delays are applied with linear
/// interpolation in time. Positions off the grid are not part of the aperture.
pub fn saft_1d(vol: &RfVolume, theta: f64, psf: &PsfModel, cfg: &SaftConfig) -> Result<RfVolume> {
    cfg.validate()?;
    psf.validate()?;
    let g = &vol.geometry;
    let (nx, ny, nt) = vol.dims();
    let (cos, sin) = (snap(theta.cos()), snap(theta.sin()));
    let step_len = ((g.dx * cos).powi(2) + (g.dy * sin).powi(2)).sqrt();
    let table = aperture_table(vol, step_len, psf, cfg.use_sir);
    let kmax = table.max_step as isize;
    let src = vol.samples().as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let aline = |ix: usize, iy: usize| &src[(ix * ny + iy) * nt..(ix * ny + iy + 1) * nt];

    let mut out = Array3::zeros((nx, ny, nt));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(ix, mut plane)| {
            let mut sum = vec![0.0; nt];
            let mut sum_sq = vec![0.0; nt];
            let mut count = vec![0usize; nt];
            let mut lateral: Vec<(usize, usize, f64)> = Vec::with_capacity(4);
            for iy in 0..ny {
                sum.iter_mut().for_each(|v| *v = 0.0);
                sum_sq.iter_mut().for_each(|v| *v = 0.0);
                count.iter_mut().for_each(|v| *v = 0);
                for k in -kmax..=kmax {
                    let fx = ix as f64 + k as f64 * cos;
                    let fy = iy as f64 + k as f64 * sin;
                    if !lateral_taps(fx, fy, nx, ny, &mut lateral) {
                        continue;
                    }
                    let col = (k + kmax) as usize;
                    for it in 0..nt {
                        let Some(tap) = &table.taps[it][col] else { continue };
                        let f = it as f64 - tap.shift;
                        let mut v = 0.0;
                        for &(lx, ly, lw) in &lateral {
                            v += lw * sample_at(aline(lx, ly), f);
                        }
                        let c = tap.weight * v;
                        sum[it] += c;
                        sum_sq[it] += c * c;
                        count[it] += 1;
                    }
                }
                let mut dst = plane.index_axis_mut(Axis(0), iy);
                for it in 0..nt {
                    dst[it] = if cfg.use_cf {
                        sum[it] * coherence_from_sums(sum[it], sum_sq[it], count[it])
                    } else {
                        sum[it]
                    };
                }
            }
        });
    vol.with_samples(out)
}

/// Bilinear taps of a lateral position; false when it falls off the grid.
fn lateral_taps(fx: f64, fy: f64, nx: usize, ny: usize, taps: &mut Vec<(usize, usize, f64)>) -> bool {
    const EPS: f64 = 1e-9;
    if fx < -EPS || fy < -EPS || fx > (nx - 1) as f64 + EPS || fy > (ny - 1) as f64 + EPS {
        return false;
    }
    taps.clear();
    let fx = fx.clamp(0.0, (nx - 1) as f64);
    let fy = fy.clamp(0.0, (ny - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let ax = snap(fx - x0 as f64);
    let ay = snap(fy - y0 as f64);
    for (dx, wx) in [(0, 1.0 - ax), (1, ax)] {
        for (dy, wy) in [(0, 1.0 - ay), (1, ay)] {
            let w = wx * wy;
            if w > 0.0 {
                taps.push((x0 + dx, y0 + dy, w));
            }
        }
    }
    true
}
