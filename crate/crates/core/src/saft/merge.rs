//! Merging of directional 1D SAFT results in k-space.

use ndarray::{Array3, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use super::synth::saft_1d;
use super::windows::{windows_for_angles, AngularWindowSet};
use crate::config::{SaftConfig, SaftVariant};
use crate::error::{Error, Result};
use crate::geometry::PsfModel;
use crate::spectrum::{fft3_centered, ifft3_centered};
use crate::volume::RfVolume;

/// Per-direction SAFT volumes together with their synthesis angles.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalStack {
    angles: Vec<f64>,
    volumes: Vec<RfVolume>,
}

impl DirectionalStack {
    pub fn new(angles: Vec<f64>, volumes: Vec<RfVolume>) -> Result<Self> {
        if volumes.is_empty() || angles.len() != volumes.len() {
            return Err(Error::StackShapeMismatch);
        }
        let first = &volumes[0];
        if volumes
            .iter()
            .any(|v| v.dims() != first.dims() || v.geometry != first.geometry)
        {
            return Err(Error::StackShapeMismatch);
        }
        let ordered = angles.windows(2).all(|w| w[0] < w[1]);
        let in_range = angles
            .iter()
            .all(|&a| (0.0..std::f64::consts::PI).contains(&a));
        if !ordered || !in_range {
            return Err(Error::InvalidConfig(
                "stack angles must increase strictly within [0, pi)".into(),
            ));
        }
        Ok(Self { angles, volumes })
    }

    /// Runs [`saft_1d`] along each angle, directions in parallel.
    pub fn synthesize(vol: &RfVolume, angles: &[f64], psf: &PsfModel, cfg: &SaftConfig) -> Result<Self> {
        let volumes = angles
            .par_iter()
            .map(|&theta| saft_1d(vol, theta, psf, cfg))
            .collect::<Result<Vec<_>>>()?;
        Self::new(angles.to_vec(), volumes)
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn volumes(&self) -> &[RfVolume] {
        &self.volumes
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.volumes[0].dims()
    }

    pub fn windows(&self) -> AngularWindowSet {
        let (nx, ny, _) = self.dims();
        windows_for_angles((nx, ny), &self.angles, 0.0)
    }

    /// Voxelwise mean of the members.
    pub fn mean(&self) -> RfVolume {
        let mut acc = Array3::zeros(self.dims());
        for v in &self.volumes {
            acc += v.samples();
        }
        acc /= self.len() as f64;
        RfVolume::new(self.volumes[0].geometry, acc).expect("mean of finite volumes")
    }
}

/// Multiply-accumulate `dst += spec * w(u, v)` with the window broadcast over the
/// temporal frequency axis.
fn accumulate_windowed(dst: &mut Array3<Complex64>, spec: &Array3<Complex64>, w: &ndarray::Array2<f64>) {
    Zip::from(dst.lanes_mut(Axis(2)))
        .and(spec.lanes(Axis(2)))
        .and(w)
        .for_each(|mut d, s, &w| {
            if w != 0.0 {
                for (d, s) in d.iter_mut().zip(s.iter()) {
                    *d += s * w;
                }
            }
        });
}

/// Windowed angular merge: `real(IFFT(sum_n K_n W_n))`.
pub fn merge_dsaft(stack: &DirectionalStack) -> Result<RfVolume> {
    if stack.len() == 1 {
        // a lone window passes every bin
        return Ok(stack.volumes[0].clone());
    }
    let windows = stack.windows();
    let mut acc = Array3::<Complex64>::zeros(stack.dims());
    for (v, w) in stack.volumes.iter().zip(&windows.windows) {
        let k = fft3_centered(v.samples());
        accumulate_windowed(&mut acc, &k, w);
    }
    let out = ifft3_centered(&acc).mapv(|c| c.re);
    stack.volumes[0].with_samples(out)
}

/// Merged Fourier-accumulation spectrum before the inverse transform.
pub fn fa_spectrum(stack: &DirectionalStack, cfg: &SaftConfig) -> Result<Array3<Complex64>> {
    cfg.validate()?;
    let dims = stack.dims();
    let n = stack.len() as f64;
    let windows = stack.windows();
    let mut numer = Array3::<Complex64>::zeros(dims);
    let mut denom = Array3::<f64>::zeros(dims);
    let gamma = cfg.gamma;
    for (v, w) in stack.volumes.iter().zip(&windows.windows) {
        let k = fft3_centered(v.samples());
        match cfg.variant {
            SaftVariant::FaSaftDir1 => accumulate_windowed(&mut numer, &k, w),
            _ => numer += &k,
        }
        Zip::from(&mut denom).and(&k).for_each(|d, k| {
            *d += if gamma == 0.0 { 1.0 } else { k.norm().powf(gamma) };
        });
    }
    if cfg.variant != SaftVariant::FaSaftDir1 {
        numer.mapv_inplace(|c| c / n);
    }
    let eps = cfg.epsilon_rel * denom.iter().fold(0.0f64, |m, &v| m.max(v));
    Zip::from(&mut numer).and(&denom).for_each(|k, &d| {
        let d = eps + d;
        *k = if d > 0.0 { *k / d } else { Complex64::new(0.0, 0.0) };
    });
    Ok(numer)
}

/// Fourier-accumulation merge, rescaled so its peak matches the peak of the
/// stack mean. Not linear in the stack.
pub fn merge_fasaft(stack: &DirectionalStack, cfg: &SaftConfig) -> Result<RfVolume> {
    let spec = fa_spectrum(stack, cfg)?;
    let mut out = ifft3_centered(&spec).mapv(|c| c.re);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = stack.mean().peak();
    if peak > 0.0 {
        out.mapv_inplace(|v| v * target / peak);
    }
    stack.volumes[0].with_samples(out)
}

/// Directional synthesis followed by the configured merge.
pub fn run_saft(vol: &RfVolume, psf: &PsfModel, cfg: &SaftConfig) -> Result<RfVolume> {
    cfg.validate()?;
    let stack = DirectionalStack::synthesize(vol, &cfg.angles(), psf, cfg)?;
    merge_stack(&stack, cfg)
}

/// Merge an already synthesized stack according to `cfg.variant`.
pub fn merge_stack(stack: &DirectionalStack, cfg: &SaftConfig) -> Result<RfVolume> {
    match cfg.variant {
        SaftVariant::Pure => Ok(stack.mean()),
        SaftVariant::DSaft => merge_dsaft(stack),
        SaftVariant::FaSaftDir0 | SaftVariant::FaSaftDir1 => merge_fasaft(stack, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::direction_angles;
    use crate::geometry::AcquisitionGeometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_volume(seed: u64, dims: (usize, usize, usize)) -> RfVolume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Array3::from_shape_fn(dims, |_| rng.random_range(-1.0..1.0));
        RfVolume::new(AcquisitionGeometry::default(), s).unwrap()
    }

    fn max_abs_diff(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn single_member_passes_through() {
        let v = random_volume(1, (7, 6, 5));
        let stack = DirectionalStack::new(vec![0.0], vec![v.clone()]).unwrap();
        let out = merge_dsaft(&stack).unwrap();
        assert!(max_abs_diff(out.samples(), v.samples()) <= 1e-9);
    }

    #[test]
    fn identical_members_pass_through() {
        let v = random_volume(2, (8, 9, 4));
        let stack = DirectionalStack::new(direction_angles(4), vec![v.clone(); 4]).unwrap();
        let out = merge_dsaft(&stack).unwrap();
        assert!(max_abs_diff(out.samples(), v.samples()) <= 1e-9);
    }

    #[test]
    fn mismatched_members_rejected() {
        let a = random_volume(3, (4, 4, 4));
        let b = random_volume(3, (4, 5, 4));
        assert_eq!(
            DirectionalStack::new(vec![0.0, 1.0], vec![a.clone(), b]).unwrap_err(),
            Error::StackShapeMismatch
        );
        assert!(DirectionalStack::new(vec![1.0, 0.0], vec![a.clone(), a]).is_err());
    }

    #[test]
    fn disjoint_sectors_select_bins() {
        // member 0 holds a wavenumber along u, member 1 along v
        let (nx, ny) = (16, 16);
        let plane = |ku: f64, kv: f64| {
            Array3::from_shape_fn((nx, ny, 1), |(i, j, _)| {
                (2.0 * std::f64::consts::PI * (ku * i as f64 + kv * j as f64) / 16.0).cos()
            })
        };
        let g = AcquisitionGeometry::default();
        let a = RfVolume::new(g, plane(3.0, 0.0)).unwrap();
        let b = RfVolume::new(g, plane(0.0, 3.0)).unwrap();
        let stack = DirectionalStack::new(direction_angles(2), vec![a.clone(), b.clone()]).unwrap();
        let out = merge_dsaft(&stack).unwrap();
        let both = a.samples() + b.samples();
        assert!(max_abs_diff(out.samples(), &both) <= 1e-9);
        // swapped members fall outside their windows entirely
        let stack = DirectionalStack::new(direction_angles(2), vec![b, a]).unwrap();
        let out = merge_dsaft(&stack).unwrap();
        assert!(out.peak() <= 1e-9);
    }

    #[test]
    fn gamma_zero_reduces_to_windowed_merge() {
        for seed in 0..3 {
            let vols: Vec<_> = (0..4).map(|k| random_volume(seed * 10 + k, (9, 8, 6))).collect();
            let stack = DirectionalStack::new(direction_angles(4), vols).unwrap();
            let cfg = SaftConfig { gamma: 0.0, epsilon_rel: 0.0, ..Default::default() };
            let fa = merge_fasaft(&stack, &cfg).unwrap();
            let ds = merge_dsaft(&stack).unwrap();
            let (pf, pd) = (fa.peak(), ds.peak());
            let dev = fa
                .samples()
                .iter()
                .zip(ds.samples())
                .fold(0.0f64, |m, (a, b)| m.max((a / pf - b / pd).abs()));
            assert!(dev <= 1e-6, "deviation {dev}");
        }
    }

    #[test]
    fn unit_magnitudes_give_half() {
        // two members with |K| = 1 at a single nonzero bin; gamma 1
        let g = AcquisitionGeometry::default();
        let mut s = Array3::zeros((1, 1, 1));
        s[[0, 0, 0]] = 1.0;
        let v = RfVolume::new(g, s).unwrap();
        let stack = DirectionalStack::new(direction_angles(2), vec![v.clone(), v]).unwrap();
        let cfg = SaftConfig { gamma: 1.0, epsilon_rel: 0.0, variant: SaftVariant::FaSaftDir0, ..Default::default() };
        let k = fa_spectrum(&stack, &cfg).unwrap();
        // numerator: mean of K = 1; D = 1/2
        assert!((k[[0, 0, 0]].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deterministic_run() {
        let v = random_volume(9, (6, 6, 12));
        let cfg = SaftConfig { n_directions: 4, ..Default::default() };
        let a = run_saft(&v, &PsfModel::default(), &cfg).unwrap();
        let b = run_saft(&v, &PsfModel::default(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_direction_variants_agree() {
        let v = random_volume(4, (6, 5, 10));
        let psf = PsfModel::default();
        let pure = SaftConfig { variant: SaftVariant::Pure, n_directions: 1, ..Default::default() };
        let ds = SaftConfig { variant: SaftVariant::DSaft, ..pure };
        let a = run_saft(&v, &psf, &pure).unwrap();
        let b = run_saft(&v, &psf, &ds).unwrap();
        assert!(max_abs_diff(a.samples(), b.samples()) <= 1e-9);
    }

    #[test]
    fn in_focus_pure_single_direction_is_identity() {
        let g = AcquisitionGeometry { dx: 50e-6, dy: 50e-6, t0: 6.7e-3 / 1500.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Array3::from_shape_fn((5, 4, 1), |_| rng.random_range(-1.0..1.0));
        let v = RfVolume::new(g, s).unwrap();
        let cfg = SaftConfig { variant: SaftVariant::Pure, n_directions: 1, ..Default::default() };
        assert_eq!(run_saft(&v, &PsfModel::default(), &cfg).unwrap(), v);
    }
}
