//! Image-quality measurements: line profiles, FWHM, SNR and two-line
//! resolvability.

use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::index_of_coordinate;
use crate::interp::bilinear;
use crate::volume::LateralImage;

/// Sampled values along a straight segment; positions are arc length in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    positions: Vec<f64>,
    values: Vec<f64>,
    pub start: (f64, f64),
    pub end: (f64, f64),
}

impl Profile1D {
    pub fn new(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if positions.len() != values.len() || positions.is_empty() {
            return Err(Error::InvalidData("profile needs matching, nonempty positions and values".into()));
        }
        if positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidData("profile positions must increase strictly".into()));
        }
        if values.iter().chain(&positions).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("profile contains non-finite values".into()));
        }
        let (a, b) = (positions[0], positions[positions.len() - 1]);
        Ok(Self { positions, values, start: (a, 0.0), end: (b, 0.0) })
    }

    /// Samples `f` on a uniform grid of `n` points with spacing `pitch`.
    pub fn from_fn(n: usize, pitch: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let positions: Vec<f64> = (0..n).map(|i| i as f64 * pitch).collect();
        let values = positions.iter().map(|&x| f(x)).collect();
        Self::new(positions, values)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn inside(img: &LateralImage, p: (f64, f64)) -> Option<(f64, f64)> {
    let (nx, ny) = img.dims();
    let fx = index_of_coordinate(p.0, nx, img.dx);
    let fy = index_of_coordinate(p.1, ny, img.dy);
    let tol = 1e-9;
    let ok = fx >= -tol && fy >= -tol && fx <= (nx - 1) as f64 + tol && fy <= (ny - 1) as f64 + tol;
    ok.then_some((fx, fy))
}

/// Bilinear profile from `p0` to `p1` (centred coordinates in metres) at a
/// pitch of half the finer pixel pitch.
pub fn extract_profile(img: &LateralImage, p0: (f64, f64), p1: (f64, f64)) -> Result<Profile1D> {
    let (Some(a), Some(b)) = (inside(img, p0), inside(img, p1)) else {
        return Err(Error::ProfileOutOfBounds);
    };
    let step = img.dx.min(img.dy) / 2.0;
    let length = (p1.0 - p0.0).hypot(p1.1 - p0.1);
    let n = (length / step).floor() as usize + 1;
    let (nx, ny) = img.dims();
    let clamp = |v: f64, n: usize| v.clamp(0.0, (n - 1) as f64);
    let mut positions = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let s = i as f64 * step;
        let f = if length > 0.0 { s / length } else { 0.0 };
        let fx = clamp(a.0 + f * (b.0 - a.0), nx);
        let fy = clamp(a.1 + f * (b.1 - a.1), ny);
        positions.push(s);
        values.push(bilinear(img.pixels(), fx, fy));
    }
    let mut p = Profile1D::new(positions, values)?;
    p.start = p0;
    p.end = p1;
    Ok(p)
}

/// Profile of length `2 * half_length` centred on `centre`, running along
/// `angle` (radians from the `x` axis towards `y`).
pub fn profile_through(img: &LateralImage, centre: (f64, f64), angle: f64, half_length: f64) -> Result<Profile1D> {
    let (s, c) = angle.sin_cos();
    extract_profile(
        img,
        (centre.0 - half_length * c, centre.1 - half_length * s),
        (centre.0 + half_length * c, centre.1 + half_length * s),
    )
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Full width at half maximum around the global maximum.
///
/// The peak height is refined with a three-point parabola; each half-maximum
/// crossing is located by linear interpolation.
pub fn fwhm(profile: &Profile1D) -> Result<f64> {
    let v = profile.values();
    let x = profile.positions();
    let n = v.len();
    let i = argmax(v);
    if i == 0 || i + 1 >= n || v[i] <= 0.0 {
        return Err(Error::PeakTruncated);
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let curv = a - 2.0 * b + c;
    let peak = if curv < 0.0 { b - (a - c).powi(2) / (8.0 * curv) } else { b };
    let half = peak / 2.0;
    let cross = |j: usize, k: usize| x[j] + (half - v[j]) / (v[k] - v[j]) * (x[k] - x[j]);
    let left = (0..i).rev().find(|&j| v[j] < half).map(|j| cross(j, j + 1));
    let right = (i + 1..n).find(|&j| v[j] < half).map(|j| cross(j - 1, j));
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        _ => Err(Error::PeakTruncated),
    }
}

/// Rectangular pixel region or a border frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Half-open index ranges `[ix0, ix1) x [iy0, iy1)`.
    Rect { ix0: usize, ix1: usize, iy0: usize, iy1: usize },
    /// Pixels within `thickness` of the image border.
    Frame { thickness: usize },
}

impl Region {
    /// Frame one tenth of the smaller image side thick (at least one pixel).
    pub fn default_background(dims: (usize, usize)) -> Region {
        Region::Frame { thickness: (dims.0.min(dims.1) / 10).max(1) }
    }

    pub fn mask(&self, dims: (usize, usize)) -> Result<Array2<bool>> {
        let (nx, ny) = dims;
        let mask = match *self {
            Region::Rect { ix0, ix1, iy0, iy1 } => {
                if ix0 >= ix1 || iy0 >= iy1 || ix1 > nx || iy1 > ny {
                    return Err(Error::InvalidRegion(format!(
                        "{ix0}:{ix1},{iy0}:{iy1} is empty or outside {nx}x{ny}"
                    )));
                }
                Array2::from_shape_fn(dims, |(i, j)| (ix0..ix1).contains(&i) && (iy0..iy1).contains(&j))
            }
            Region::Frame { thickness } => {
                if thickness == 0 {
                    return Err(Error::InvalidRegion("frame thickness must be positive".into()));
                }
                Array2::from_shape_fn(dims, |(i, j)| {
                    i < thickness || j < thickness || i + thickness >= nx || j + thickness >= ny
                })
            }
        };
        Ok(mask)
    }
}

impl FromStr for Region {
    type Err = Error;

    /// `ix0:ix1,iy0:iy1` or `frame:N`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRegion(format!("malformed region '{s}'"));
        let s = s.trim();
        if let Some(t) = s.strip_prefix("frame:") {
            let thickness = t.trim().parse().map_err(|_| bad())?;
            return Ok(Region::Frame { thickness });
        }
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let range = |r: &str| -> Result<(usize, usize)> {
            let (a, b) = r.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        };
        let (ix0, ix1) = range(xs)?;
        let (iy0, iy1) = range(ys)?;
        Ok(Region::Rect { ix0, ix1, iy0, iy1 })
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Rect { ix0, ix1, iy0, iy1 } => write!(f, "{ix0}:{ix1},{iy0}:{iy1}"),
            Region::Frame { thickness } => write!(f, "frame:{thickness}"),
        }
    }
}

/// `20 log10(max(signal) / std(background))` in dB.
pub fn snr_db(img: &LateralImage, signal: &Region, background: &Region) -> Result<f64> {
    let dims = img.dims();
    let sm = signal.mask(dims)?;
    let bm = background.mask(dims)?;
    if sm.iter().zip(bm.iter()).any(|(&a, &b)| a && b) {
        return Err(Error::InvalidRegion("signal and background regions overlap".into()));
    }
    let px = img.pixels();
    let peak = px
        .iter()
        .zip(sm.iter())
        .filter(|(_, &m)| m)
        .fold(f64::NEG_INFINITY, |m, (&v, _)| m.max(v));
    let bg: Vec<f64> = px.iter().zip(bm.iter()).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    let sd = std_dev(&bg);
    if !(sd > 0.0) || !(peak > 0.0) {
        return Err(Error::DegenerateBackground);
    }
    Ok(20.0 * (peak / sd).log10())
}

/// SNR with the signal taken over the whole image outside the default frame.
pub fn snr_db_default(img: &LateralImage) -> Result<f64> {
    let dims = img.dims();
    let Region::Frame { thickness: t } = Region::default_background(dims) else { unreachable!() };
    if 2 * t >= dims.0 || 2 * t >= dims.1 {
        return Err(Error::DegenerateBackground);
    }
    let signal = Region::Rect { ix0: t, ix1: dims.0 - t, iy0: t, iy1: dims.1 - t };
    snr_db(img, &signal, &Region::Frame { thickness: t })
}

/// Peak of `reference` over the standard deviation of `noisy - reference`, in dB.
pub fn psnr_db(reference: &[f64], noisy: &[f64]) -> Result<f64> {
    if reference.len() != noisy.len() || reference.is_empty() {
        return Err(Error::InvalidData("psnr needs equally sized, nonempty inputs".into()));
    }
    let peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff: Vec<f64> = noisy.iter().zip(reference).map(|(a, b)| a - b).collect();
    let sd = std_dev(&diff);
    if !(sd > 0.0) {
        return Err(Error::DegenerateBackground);
    }
    Ok(20.0 * (peak / sd).log10())
}

fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Two straight lines whose separation shrinks from the `*0` ends to the
/// `*1` ends. Points are centred coordinates in metres; `a(s)` and `b(s)`
/// at equal parameter `s` face each other across the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLineScene {
    pub a0: (f64, f64),
    pub a1: (f64, f64),
    pub b0: (f64, f64),
    pub b1: (f64, f64),
}

impl TwoLineScene {
    /// Lines symmetric about the axis through `centre` at `angle`, `length`
    /// long, separated by `wide` at one end and `narrow` at the other.
    pub fn symmetric(centre: (f64, f64), angle: f64, length: f64, wide: f64, narrow: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let along = |t: f64| (centre.0 + t * c, centre.1 + t * s);
        let across = |p: (f64, f64), d: f64| (p.0 - d * s, p.1 + d * c);
        let (p0, p1) = (along(-length / 2.0), along(length / 2.0));
        Self {
            a0: across(p0, -wide / 2.0),
            a1: across(p1, -narrow / 2.0),
            b0: across(p0, wide / 2.0),
            b1: across(p1, narrow / 2.0),
        }
    }

    fn at(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let lerp = |p: (f64, f64), q: (f64, f64)| (p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1));
        (lerp(self.a0, self.a1), lerp(self.b0, self.b1))
    }

    /// The part of both lines between fractions `s0` and `s1` of their length.
    pub fn segment(&self, s0: f64, s1: f64) -> Self {
        let (a0, b0) = self.at(s0);
        let (a1, b1) = self.at(s1);
        Self { a0, a1, b0, b1 }
    }

    pub fn separation_at(&self, s: f64) -> f64 {
        let (a, b) = self.at(s);
        (b.0 - a.0).hypot(b.1 - a.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolvability {
    /// Smallest separation (m) meeting the two-peak criterion.
    Resolved(f64),
    Unresolved,
}

impl Resolvability {
    pub fn separation(self) -> Option<f64> {
        match self {
            Resolvability::Resolved(d) => Some(d),
            Resolvability::Unresolved => None,
        }
    }
}

/// Peak-to-valley contrast `20 log10(min(p1, p2) / valley)` of a profile
/// expected to hold one peak on each side of `split` (a position).
/// `None` when either side has no positive maximum.
pub fn two_peak_contrast_db(profile: &Profile1D, split: f64) -> Option<f64> {
    let x = profile.positions();
    let v = profile.values();
    let k = x.iter().position(|&p| p >= split)?;
    if k == 0 || k >= v.len() {
        return None;
    }
    let i1 = argmax(&v[..k]);
    let i2 = k + argmax(&v[k..]);
    let (p1, p2) = (v[i1], v[i2]);
    if !(p1 > 0.0 && p2 > 0.0) {
        return None;
    }
    let valley = v[i1..=i2].iter().fold(f64::INFINITY, |m, &a| m.min(a));
    if valley <= 0.0 {
        return Some(f64::INFINITY);
    }
    Some(20.0 * (p1.min(p2) / valley).log10())
}

/// Contrast threshold of the two-peak criterion, in dB.
pub const RESOLVABILITY_DB: f64 = 6.0;

/// Scans profiles across the two lines from the widest separation towards the
/// narrowest and reports the smallest separation of the run of resolved
/// profiles that starts at the widest end.
pub fn min_resolvable_distance(img: &LateralImage, scene: &TwoLineScene) -> Result<Resolvability> {
    let step = img.dx.min(img.dy) / 2.0;
    let length = {
        let (a0, _) = scene.at(0.0);
        let (a1, _) = scene.at(1.0);
        (a1.0 - a0.0).hypot(a1.1 - a0.1)
    };
    let n = ((length / step).ceil() as usize).max(1);
    let mut best = None;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let (a, b) = scene.at(s);
        let sep = scene.separation_at(s);
        if sep <= 0.0 {
            break;
        }
        let u = ((b.0 - a.0) / sep, (b.1 - a.1) / sep);
        let ext = sep / 2.0;
        let p0 = (a.0 - ext * u.0, a.1 - ext * u.1);
        let p1 = (b.0 + ext * u.0, b.1 + ext * u.1);
        let profile = extract_profile(img, p0, p1)?;
        let resolved = two_peak_contrast_db(&profile, ext + sep / 2.0)
            .is_some_and(|db| db >= RESOLVABILITY_DB);
        if !resolved {
            break;
        }
        best = Some(sep);
    }
    Ok(best.map_or(Resolvability::Unresolved, Resolvability::Resolved))
}
