//! Forward simulator for synthetic AR-PAM volumes.
//!
//! Each absorber reaches the A-line at scan position `(xs, ys)` as a bipolar
//! derivative-of-Gaussian pulse. Its arrival time follows the virtual point
//! detector geometry, `t = (z_f + sgn(z_off) * sqrt(d^2 + z_off^2)) / c`, with
//! `d` the lateral distance to the absorber, and its amplitude is scaled by
//! the lateral beam weight of [`PsfModel`].

use ndarray::{Array2, Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{centered_coordinate, AcquisitionGeometry, PsfModel};
use crate::volume::{LateralImage, RfVolume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Absorber {
    Point {
        x: f64,
        y: f64,
        z_off: f64,
        amplitude: f64,
    },
    /// A thin line at constant depth. `amplitude` is a linear density: the
    /// strength carried by each lateral pitch of line length.
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        z_off: f64,
        amplitude: f64,
    },
}

impl Absorber {
    fn z_off(&self) -> f64 {
        match *self {
            Absorber::Point { z_off, .. } | Absorber::Line { z_off, .. } => z_off,
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            Absorber::Point { amplitude, .. } | Absorber::Line { amplitude, .. } => amplitude,
        }
    }

    /// Lateral translation.
    pub fn shifted(&self, sx: f64, sy: f64) -> Absorber {
        match *self {
            Absorber::Point { x, y, z_off, amplitude } => Absorber::Point {
                x: x + sx,
                y: y + sy,
                z_off,
                amplitude,
            },
            Absorber::Line { x1, y1, x2, y2, z_off, amplitude } => Absorber::Line {
                x1: x1 + sx,
                y1: y1 + sy,
                x2: x2 + sx,
                y2: y2 + sy,
                z_off,
                amplitude,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneSpec {
    pub absorbers: Vec<Absorber>,
}

impl SceneSpec {
    pub fn new(absorbers: Vec<Absorber>) -> Self {
        Self { absorbers }
    }

    /// Parse the plain-text scene format:
    ///
    /// ```text
    /// # comment
    /// POINT x y zoff amp
    /// LINE x1 y1 x2 y2 zoff amp
    /// ```
    ///
    /// All lengths in metres.
    pub fn parse(text: &str) -> Result<Self> {
        let mut absorbers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let kind = fields.next().unwrap_or_default();
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(line_no, format!("invalid number '{f}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let absorber = match (kind.to_ascii_uppercase().as_str(), values.as_slice()) {
                ("POINT", &[x, y, z_off, amplitude]) => Absorber::Point { x, y, z_off, amplitude },
                ("LINE", &[x1, y1, x2, y2, z_off, amplitude]) => Absorber::Line {
                    x1,
                    y1,
                    x2,
                    y2,
                    z_off,
                    amplitude,
                },
                ("POINT", v) => {
                    return Err(Error::parse(line_no, format!("POINT takes 4 values, got {}", v.len())))
                }
                ("LINE", v) => {
                    return Err(Error::parse(line_no, format!("LINE takes 6 values, got {}", v.len())))
                }
                (other, _) => return Err(Error::parse(line_no, format!("unknown primitive '{other}'"))),
            };
            if absorber.amplitude() <= 0.0 {
                return Err(Error::parse(line_no, "amplitude must be positive"));
            }
            absorbers.push(absorber);
        }
        Ok(Self { absorbers })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.absorbers {
            match *a {
                Absorber::Point { x, y, z_off, amplitude } => {
                    out.push_str(&format!("POINT {x:e} {y:e} {z_off:e} {amplitude:e}\n"))
                }
                Absorber::Line { x1, y1, x2, y2, z_off, amplitude } => out.push_str(&format!(
                    "LINE {x1:e} {y1:e} {x2:e} {y2:e} {z_off:e} {amplitude:e}\n"
                )),
            }
        }
        out
    }

    pub fn union(&self, other: &SceneSpec) -> SceneSpec {
        let mut absorbers = self.absorbers.clone();
        absorbers.extend_from_slice(&other.absorbers);
        SceneSpec { absorbers }
    }

    pub fn shifted(&self, sx: f64, sy: f64) -> SceneSpec {
        SceneSpec {
            absorbers: self.absorbers.iter().map(|a| a.shifted(sx, sy)).collect(),
        }
    }
}

/// White Gaussian noise level given as peak-to-sigma ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// `f64::INFINITY` adds no noise.
    pub target_psnr: f64,
    pub seed: u64,
}

/// Bipolar pulse: first derivative of a Gaussian, peak +1 at `tau = -sigma`.
fn pulse(tau: f64, sigma: f64) -> f64 {
    let r = tau / sigma;
    -r * (0.5 - 0.5 * r * r).exp()
}

/// Pulse standard deviation: the two lobes sit `4 dt` apart.
fn pulse_sigma(geometry: &AcquisitionGeometry) -> f64 {
    2.0 * geometry.dt
}

struct Emitter {
    x: f64,
    y: f64,
    z_off: f64,
    amplitude: f64,
}

fn discretize(scene: &SceneSpec, pitch: f64) -> Vec<Emitter> {
    let mut out = Vec::new();
    for a in &scene.absorbers {
        match *a {
            Absorber::Point { x, y, z_off, amplitude } => out.push(Emitter { x, y, z_off, amplitude }),
            Absorber::Line { x1, y1, x2, y2, z_off, amplitude } => {
                let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
                let step = pitch / 4.0;
                let n = ((len / step).ceil() as usize).max(1);
                let ds = len / n as f64;
                let amp = if len > 0.0 { amplitude * ds / pitch } else { amplitude };
                for k in 0..n {
                    let f = (k as f64 + 0.5) / n as f64;
                    out.push(Emitter {
                        x: x1 + f * (x2 - x1),
                        y: y1 + f * (y2 - y1),
                        z_off,
                        amplitude: amp,
                    });
                }
            }
        }
    }
    out
}

fn check_extent(scene: &SceneSpec, geometry: &AcquisitionGeometry, dims: (usize, usize, usize)) -> Result<()> {
    let (nx, ny, nt) = dims;
    let half_x = (nx as f64 / 2.0) * geometry.dx;
    let half_y = (ny as f64 / 2.0) * geometry.dy;
    let inside_lateral = |x: f64, y: f64| x.abs() <= half_x && y.abs() <= half_y;
    for a in &scene.absorbers {
        let lateral_ok = match *a {
            Absorber::Point { x, y, .. } => inside_lateral(x, y),
            Absorber::Line { x1, y1, x2, y2, .. } => inside_lateral(x1, y1) && inside_lateral(x2, y2),
        };
        let it = geometry.axial_index_of(geometry.focal_length + a.z_off());
        if !lateral_ok || !(it >= 0.0 && it <= (nt - 1) as f64) {
            return Err(Error::AbsorberOutOfField);
        }
    }
    Ok(())
}

/// Synthesize the RF volume of `scene` on an `(nx, ny, nt)` grid.
pub fn simulate(
    scene: &SceneSpec,
    geometry: &AcquisitionGeometry,
    psf: &PsfModel,
    dims: (usize, usize, usize),
) -> Result<RfVolume> {
    geometry.validate()?;
    psf.validate()?;
    let (nx, ny, nt) = dims;
    if nx == 0 || ny == 0 || nt == 0 {
        return Err(Error::InvalidData("dimensions must be positive".into()));
    }
    check_extent(scene, geometry, dims)?;
    let emitters = discretize(scene, geometry.dx.min(geometry.dy));
    let sigma = pulse_sigma(geometry);
    let reach = (6.0 * sigma / geometry.dt).ceil() as isize;
    let c = geometry.sound_speed;

    let mut samples = Array3::zeros(dims);
    samples
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(ix, mut plane)| {
            let xs = centered_coordinate(ix as f64, nx, geometry.dx);
            for iy in 0..ny {
                let ys = centered_coordinate(iy as f64, ny, geometry.dy);
                let mut aline = plane.index_axis_mut(Axis(0), iy);
                for e in &emitters {
                    let d2 = (xs - e.x).powi(2) + (ys - e.y).powi(2);
                    let weight = e.amplitude * psf.lateral_weight(d2.sqrt(), e.z_off);
                    if weight < 1e-14 * e.amplitude {
                        continue;
                    }
                    let path = e.z_off.signum() * (d2 + e.z_off * e.z_off).sqrt();
                    let path = if e.z_off == 0.0 { 0.0 } else { path };
                    let arrival = (geometry.focal_length + path) / c;
                    let centre = (arrival - geometry.t0) / geometry.dt;
                    let lo = (centre.floor() as isize - reach).max(0);
                    let hi = (centre.ceil() as isize + reach).min(nt as isize - 1);
                    for it in lo..=hi {
                        let tau = (it as f64 - centre) * geometry.dt;
                        aline[it as usize] += weight * pulse(tau, sigma);
                    }
                }
            }
        });
    RfVolume::new(*geometry, samples)
}

fn noise_sigma(peak: f64, target_psnr: f64) -> f64 {
    peak / 10f64.powf(target_psnr / 20.0)
}

/// Add white Gaussian noise to every sample so that
/// `20 log10(peak / sigma) = target_psnr`.
pub fn add_noise(vol: &RfVolume, noise: &NoiseSpec) -> Result<RfVolume> {
    let peak = vol.peak();
    if peak == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if noise.target_psnr == f64::INFINITY {
        return Ok(vol.clone());
    }
    if noise.target_psnr.is_nan() {
        return Err(Error::InvalidConfig("target PSNR is NaN".into()));
    }
    let normal = Normal::new(0.0, noise_sigma(peak, noise.target_psnr))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut samples = vol.samples().clone();
    for v in samples.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    vol.with_samples(samples)
}

/// Noise injection on a 2D projection. The noisy image is rectified to stay
/// a valid amplitude image.
pub fn add_noise_map(img: &LateralImage, noise: &NoiseSpec) -> Result<LateralImage> {
    let peak = img.peak();
    if peak == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if noise.target_psnr == f64::INFINITY {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, noise_sigma(peak, noise.target_psnr))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let pixels: Array2<f64> = img.pixels().mapv(|v| (v + normal.sample(&mut rng)).abs());
    LateralImage::new(pixels, img.dx, img.dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_scene() {
        let text = "# wires\nPOINT 0 0 0 1.0\n\nline -1e-4 0 1e-4 0 3e-4 2 # trailing\n";
        let s = SceneSpec::parse(text).unwrap();
        assert_eq!(s.absorbers.len(), 2);
        assert_eq!(
            s.absorbers[0],
            Absorber::Point { x: 0.0, y: 0.0, z_off: 0.0, amplitude: 1.0 }
        );
        assert_eq!(SceneSpec::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = SceneSpec::parse("POINT 0 0 0 1\nPOINT 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(matches!(SceneSpec::parse("BLOB 1 2").unwrap_err(), Error::Parse { line: 1, .. }));
        assert!(SceneSpec::parse("POINT 0 0 0 -1").is_err());
        assert!(SceneSpec::parse("POINT 0 0 nan 1").is_err());
    }

    #[test]
    fn pulse_shape() {
        let s = 1.0;
        assert!((pulse(-s, s) - 1.0).abs() < 1e-15);
        assert!((pulse(s, s) + 1.0).abs() < 1e-15);
        assert_eq!(pulse(0.0, s), 0.0);
    }

    #[test]
    fn empty_scene_is_zero() {
        let g = AcquisitionGeometry::default();
        let v = simulate(&SceneSpec::default(), &g, &PsfModel::default(), (5, 4, 8)).unwrap();
        assert!(v.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn out_of_field() {
        let g = AcquisitionGeometry::default();
        let scene = SceneSpec::new(vec![Absorber::Point { x: 1.0, y: 0.0, z_off: 0.0, amplitude: 1.0 }]);
        assert_eq!(
            simulate(&scene, &g, &PsfModel::default(), (8, 8, 32)),
            Err(Error::AbsorberOutOfField)
        );
        let deep = SceneSpec::new(vec![Absorber::Point { x: 0.0, y: 0.0, z_off: 1e-3, amplitude: 1.0 }]);
        assert_eq!(
            simulate(&deep, &g, &PsfModel::default(), (8, 8, 32)),
            Err(Error::AbsorberOutOfField)
        );
    }

    #[test]
    fn noise_infinite_psnr_is_identity() {
        let g = AcquisitionGeometry::default();
        let scene = SceneSpec::new(vec![Absorber::Point { x: 0.0, y: 0.0, z_off: 0.0, amplitude: 1.0 }]);
        let v = simulate(&scene, &g, &PsfModel::default(), (5, 5, 32)).unwrap();
        let n = add_noise(&v, &NoiseSpec { target_psnr: f64::INFINITY, seed: 3 }).unwrap();
        assert_eq!(n, v);
        let zero = RfVolume::zeros(g, (2, 2, 2)).unwrap();
        assert_eq!(
            add_noise(&zero, &NoiseSpec { target_psnr: 20.0, seed: 1 }),
            Err(Error::ZeroSignal)
        );
    }

    #[test]
    fn noise_level_and_determinism() {
        let g = AcquisitionGeometry::default();
        let mut s = Array3::zeros((50, 50, 48));
        s[[0, 0, 0]] = 1.0;
        let v = RfVolume::new(g, s).unwrap();
        let spec = NoiseSpec { target_psnr: 20.0, seed: 42 };
        let a = add_noise(&v, &spec).unwrap();
        let b = add_noise(&v, &spec).unwrap();
        assert_eq!(a, b);
        let diff: Vec<f64> = a.samples().iter().zip(v.samples().iter()).map(|(x, y)| x - y).collect();
        let n = diff.len() as f64;
        assert!(n >= 1e5);
        let mean = diff.iter().sum::<f64>() / n;
        let sd = (diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 0.1).abs() <= 0.003, "{sd}");
        let c = add_noise(&v, &NoiseSpec { target_psnr: 20.0, seed: 43 }).unwrap();
        assert_ne!(a, c);
    }
}
