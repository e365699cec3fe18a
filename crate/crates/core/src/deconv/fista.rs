//! L1-regularized least squares by monotone FISTA.

use super::kernel::{convolve_same, correlate_same, ConvolutionDictionary};

/// Linear map between flat real vectors with an explicit adjoint.
pub trait LinearOperator {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    fn adjoint(&self, y: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn input_len(&self) -> usize {
        self.0
    }
    fn output_len(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// 1D zero-padded convolution of a length-`len` signal.
#[derive(Debug, Clone, Copy)]
pub struct Convolution1d<'a> {
    pub kernel: &'a [f64],
    pub len: usize,
}

impl<'a> Convolution1d<'a> {
    pub fn new(dict: &'a ConvolutionDictionary, len: usize) -> Self {
        Self { kernel: dict.kernel(), len }
    }
}

impl LinearOperator for Convolution1d<'_> {
    fn input_len(&self) -> usize {
        self.len
    }
    fn output_len(&self) -> usize {
        self.len
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        convolve_same(x, self.kernel, out);
    }
    fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        correlate_same(y, self.kernel, out);
    }
}

/// Separable blur of an `nx x ny` row-major image stored flat.
#[derive(Debug, Clone, Copy)]
pub struct SeparableConvolution2d<'a> {
    pub kx: &'a [f64],
    pub ky: &'a [f64],
    pub nx: usize,
    pub ny: usize,
}

impl SeparableConvolution2d<'_> {
    fn pass(&self, x: &[f64], out: &mut [f64], adjoint: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let op = |a: &[f64], k: &[f64], o: &mut [f64]| {
            if adjoint {
                correlate_same(a, k, o)
            } else {
                convolve_same(a, k, o)
            }
        };
        // along iy: contiguous rows
        let mut tmp = vec![0.0; nx * ny];
        for ix in 0..nx {
            op(&x[ix * ny..(ix + 1) * ny], self.ky, &mut tmp[ix * ny..(ix + 1) * ny]);
        }
        // along ix: strided columns
        let mut col = vec![0.0; nx];
        let mut res = vec![0.0; nx];
        for iy in 0..ny {
            for ix in 0..nx {
                col[ix] = tmp[ix * ny + iy];
            }
            op(&col, self.kx, &mut res);
            for ix in 0..nx {
                out[ix * ny + iy] = res[ix];
            }
        }
    }
}

impl LinearOperator for SeparableConvolution2d<'_> {
    fn input_len(&self) -> usize {
        self.nx * self.ny
    }
    fn output_len(&self) -> usize {
        self.nx * self.ny
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.pass(x, out, false);
    }
    fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        self.pass(y, out, true);
    }
}

/// Upper estimate of the largest singular value: 50 power iterations on
/// `H^T H` from a fixed start, inflated by 1%.
pub fn operator_norm<O: LinearOperator + ?Sized>(op: &O) -> f64 {
    let n = op.input_len();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mut hv = vec![0.0; op.output_len()];
    let mut w = vec![0.0; n];
    let mut sigma2 = 0.0;
    for _ in 0..50 {
        let norm = l2(&v);
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        op.apply(&v, &mut hv);
        op.adjoint(&hv, &mut w);
        sigma2 = l2(&w);
        std::mem::swap(&mut v, &mut w);
    }
    sigma2.sqrt() * 1.01
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `0.5 ||y - H x||^2 + lambda ||x||_1`
pub fn objective<O: LinearOperator + ?Sized>(op: &O, x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let mut hx = vec![0.0; op.output_len()];
    op.apply(x, &mut hx);
    objective_from(&hx, x, y, lambda)
}

fn objective_from(hx: &[f64], x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let fit: f64 = hx.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    0.5 * fit + lambda * x.iter().map(|a| a.abs()).sum::<f64>()
}

/// Gradient of the smooth part, `H^T (H x - y)`.
pub fn smooth_gradient<O: LinearOperator + ?Sized>(op: &O, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; op.output_len()];
    op.apply(x, &mut r);
    r.iter_mut().zip(y).for_each(|(a, b)| *a -= b);
    let mut g = vec![0.0; op.input_len()];
    op.adjoint(&r, &mut g);
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaOptions {
    /// Absolute sparsity weight.
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step changes the objective by less than this
    /// fraction.
    pub tolerance: f64,
    /// Project onto `x >= 0` after every shrinkage step.
    pub nonnegative: bool,
    /// Lipschitz constant of the gradient; estimated when `None`.
    pub lipschitz: Option<f64>,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iterations: 300,
            tolerance: 1e-8,
            nonnegative: true,
            lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaResult {
    pub x: Vec<f64>,
    /// Objective at the start point and after every iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Monotone FISTA from `x = 0`: a candidate that would raise the objective
/// is not accepted, though it still drives the momentum.
pub fn fista<O: LinearOperator + ?Sized>(op: &O, y: &[f64], opts: &FistaOptions) -> FistaResult {
    let n = op.input_len();
    let m = op.output_len();
    let lipschitz = opts.lipschitz.unwrap_or_else(|| operator_norm(op).powi(2));
    let mut x = vec![0.0; n];
    let zero_fit = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
    let mut objective = vec![zero_fit];
    if lipschitz <= 0.0 || n == 0 {
        return FistaResult { x, objective, iterations: 0 };
    }
    let step = 1.0 / lipschitz;
    let thresh = opts.lambda * step;
    let mut current = zero_fit;
    let mut point = x.clone();
    let mut z = vec![0.0; n];
    let mut hp = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut hz = vec![0.0; m];
    let mut t = 1.0f64;
    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        iterations += 1;
        op.apply(&point, &mut hp);
        hp.iter_mut().zip(y).for_each(|(a, b)| *a -= b);
        op.adjoint(&hp, &mut grad);
        for ((zi, pi), gi) in z.iter_mut().zip(&point).zip(&grad) {
            let v = pi - step * gi;
            let mut s = v.signum() * (v.abs() - thresh).max(0.0);
            if opts.nonnegative && s < 0.0 {
                s = 0.0;
            }
            *zi = s;
        }
        op.apply(&z, &mut hz);
        let fz = objective_from(&hz, &z, y, opts.lambda);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = fz <= current;
        let previous = current;
        if accepted {
            // point = z + (t-1)/t_next (z - x_old), with x_new = z
            for ((p, zi), xi) in point.iter_mut().zip(&z).zip(&x) {
                *p = zi + (t - 1.0) / t_next * (zi - xi);
            }
            x.copy_from_slice(&z);
            current = fz;
        } else {
            // point = x + t/t_next (z - x)
            for ((p, zi), xi) in point.iter_mut().zip(&z).zip(&x) {
                *p = xi + t / t_next * (zi - xi);
            }
        }
        t = t_next;
        objective.push(current);
        if accepted && (previous - current).abs() <= opts.tolerance * previous.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    FistaResult { x, objective, iterations }
}

/// 1D sparse deconvolution of `y` with the dictionary kernel; `lambda` is
/// absolute and the result is nonnegative. Runs exactly `iterations` steps.
pub fn fista_l1(y: &[f64], dict: &ConvolutionDictionary, lambda: f64, iterations: usize) -> Vec<f64> {
    let op = Convolution1d::new(dict, y.len());
    let opts = FistaOptions {
        lambda,
        max_iterations: iterations,
        tolerance: 0.0,
        ..Default::default()
    };
    fista(&op, y, &opts).x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn soft(v: f64, l: f64) -> f64 {
        v.signum() * (v.abs() - l).max(0.0)
    }

    #[test]
    fn identity_closed_form() {
        let d = ConvolutionDictionary::delta();
        assert!((fista_l1(&[1.0], &d, 0.4, 200)[0] - 0.6).abs() < 1e-6);
        assert_eq!(fista_l1(&[0.2], &d, 0.5, 200), vec![0.0]);
    }

    #[test]
    fn identity_matches_soft_threshold_signed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lambda = rng.random_range(0.0..1.0);
            let opts = FistaOptions { lambda, max_iterations: 200, tolerance: 0.0, nonnegative: false, ..Default::default() };
            let r = fista(&Identity(12), &y, &opts);
            for (x, v) in r.x.iter().zip(&y) {
                assert!((x - soft(*v, lambda)).abs() < 1e-6);
            }
        }
    }

    /// Best 2-sparse point on a lattice of step 1e-3 by exhaustive search.
    fn lattice_minimizer(y: &[f64], dict: &ConvolutionDictionary, lambda: f64) -> Vec<f64> {
        let op = Convolution1d::new(dict, 5);
        let grid: Vec<f64> = (-500..=1500).map(|i| i as f64 * 1e-3).collect();
        let mut best = (f64::INFINITY, vec![0.0; 5]);
        let mut x = vec![0.0; 5];
        let mut hx = vec![0.0; 5];
        for i in 0..5 {
            for j in i + 1..5 {
                for &a in &grid {
                    for &b in &grid {
                        x.iter_mut().for_each(|v| *v = 0.0);
                        x[i] = a;
                        x[j] = b;
                        op.apply(&x, &mut hx);
                        let f = objective_from(&hx, &x, y, lambda);
                        if f < best.0 {
                            best = (f, x.clone());
                        }
                    }
                }
            }
        }
        best.1
    }

    #[test]
    fn two_spike_lattice_oracle() {
        let dict = ConvolutionDictionary::from_kernel(vec![0.25, 0.5, 0.25]).unwrap();
        let truth = [1.0, 0.0, 0.0, 0.0, 0.7];
        let mut y = vec![0.0; 5];
        Convolution1d::new(&dict, 5).apply(&truth, &mut y);
        let oracle = lattice_minimizer(&y, &dict, 0.01);
        let opts = FistaOptions { lambda: 0.01, max_iterations: 5000, tolerance: 0.0, ..Default::default() };
        let got = fista(&Convolution1d::new(&dict, 5), &y, &opts).x;
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-3, "{got:?} vs {oracle:?}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let dict = ConvolutionDictionary::gaussian(3.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..1.0)).collect();
        let opts = FistaOptions { lambda: 0.05, ..Default::default() };
        let r = fista(&Convolution1d::new(&dict, 40), &y, &opts);
        for w in r.objective[1..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn least_squares_without_sparsity() {
        let dict = ConvolutionDictionary::from_kernel(vec![0.1, 0.8, 0.1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let op = Convolution1d::new(&dict, 32);
        let opts = FistaOptions { nonnegative: false, tolerance: 0.0, ..Default::default() };
        let x = fista(&op, &y, &opts).x;
        let mut hx = vec![0.0; 32];
        op.apply(&x, &mut hx);
        let res = l2(&hx.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(res <= 1e-4 * l2(&y));
    }

    #[test]
    fn norm_estimate_bounds_the_largest_singular_value() {
        for k in [vec![0.25, 0.5, 0.25], gaussian_row(2.0)] {
            let dict = ConvolutionDictionary::from_kernel(k).unwrap();
            let op = Convolution1d::new(&dict, 25);
            let est = operator_norm(&op);
            // long power iteration from a different start as the reference
            let mut v: Vec<f64> = (0..25).map(|i| ((i * 37) % 11) as f64 + 0.5).collect();
            let (mut hv, mut w) = (vec![0.0; 25], vec![0.0; 25]);
            let mut s2 = 0.0;
            for _ in 0..20_000 {
                let n = l2(&v);
                v.iter_mut().for_each(|a| *a /= n);
                op.apply(&v, &mut hv);
                op.adjoint(&hv, &mut w);
                s2 = l2(&w);
                std::mem::swap(&mut v, &mut w);
            }
            assert!(est >= s2.sqrt(), "{est} < {}", s2.sqrt());
        }
    }

    fn gaussian_row(sigma: f64) -> Vec<f64> {
        super::super::kernel::gaussian_kernel(sigma)
    }

    #[test]
    fn separable_adjoint() {
        let kx = gaussian_row(1.0);
        let ky = gaussian_row(1.7);
        let op = SeparableConvolution2d { kx: &kx, ky: &ky, nx: 7, ny: 9 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..63).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..63).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut hx, mut hty) = (vec![0.0; 63], vec![0.0; 63]);
        op.apply(&x, &mut hx);
        op.adjoint(&y, &mut hty);
        let a: f64 = hx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let b: f64 = x.iter().zip(&hty).map(|(a, b)| a * b).sum();
        assert!((a - b).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            x in proptest::collection::vec(-1.0f64..1.0, 16),
            y in proptest::collection::vec(-1.0f64..1.0, 16),
            sigma in 0.5f64..3.0,
        ) {
            let dict = ConvolutionDictionary::from_kernel(gaussian_row(sigma)).unwrap();
            let op = Convolution1d::new(&dict, 16);
            let g = smooth_gradient(&op, &x, &y);
            let h = 1e-5;
            let fd: Vec<f64> = (0..16).map(|i| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[i] += h;
                m[i] -= h;
                (objective(&op, &p, &y, 0.0) - objective(&op, &m, &y, 0.0)) / (2.0 * h)
            }).collect();
            let scale = l2(&g).max(1e-12);
            let err = l2(&g.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
            prop_assert!(err <= 1e-5 * scale);
        }
    }
}
